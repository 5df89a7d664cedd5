#include "felpa/lossmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "felpa/errors.hpp"

namespace felpa {
namespace {

double mse_objective(const std::vector<LossPoint>& points, double a, double b) {
  double acc = 0.0;
  for (const auto& pt : points) {
    const double r = pt.loss - a * std::pow(pt.n, -b);
    acc += r * r;
  }
  return acc / static_cast<double>(points.size());
}

// Closed-form fit of log(loss) = log(a) - b log(n).
void loglog_fit(const std::vector<LossPoint>& points, double& a, double& b) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(points.size());
  for (const auto& pt : points) {
    const double x = std::log(pt.n);
    const double y = std::log(pt.loss);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  a = std::exp(intercept);
  b = -slope;
}

}  // namespace

LossCurve fit_power_law(const std::vector<LossPoint>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("fit_power_law: need at least 2 points");
  double n_min = std::numeric_limits<double>::infinity();
  double n_max = -n_min;
  for (const auto& pt : points) {
    if (pt.n < 1.0) throw std::invalid_argument("fit_power_law: n must be >= 1");
    if (!(pt.loss > 0.0))
      throw std::invalid_argument("fit_power_law: losses must be positive");
    n_min = std::min(n_min, pt.n);
    n_max = std::max(n_max, pt.n);
  }
  if (n_min == n_max)
    throw std::invalid_argument("fit_power_law: need at least 2 distinct n");

  double a, b;
  loglog_fit(points, a, b);

  LossCurve curve;
  curve.refined = true;
  // Decreasing loss is the modeled regime; a nonpositive exponent from the
  // init cannot be refined into the (a>0, b>0) domain.
  if (!(b > 0.0) || !(a > 0.0)) {
    curve.a = std::max(a, std::numeric_limits<double>::min());
    curve.b = std::max(b, 1e-12);
    curve.refined = false;
    curve.residual = mse_objective(points, curve.a, curve.b);
    return curve;
  }

  const double init_obj = mse_objective(points, a, b);
  double obj = init_obj;
  bool diverged = false;
  for (int iter = 0; iter < 100; ++iter) {
    // Gauss-Newton normal equations for r_m = loss_m - a n^-b:
    //   dr/da = -n^-b,  dr/db = a n^-b ln n
    double jaa = 0, jab = 0, jbb = 0, ga = 0, gb = 0;
    for (const auto& pt : points) {
      const double f = std::pow(pt.n, -b);
      const double r = pt.loss - a * f;
      const double da = -f;
      const double db = a * f * std::log(pt.n);
      jaa += da * da;
      jab += da * db;
      jbb += db * db;
      ga += da * r;
      gb += db * r;
    }
    const double det = jaa * jbb - jab * jab;
    if (std::abs(det) < 1e-300) break;
    double step_a = -(jbb * ga - jab * gb) / det;
    double step_b = -(jaa * gb - jab * ga) / det;

    // Step halving keeps (a, b) positive and the objective nonincreasing.
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      const double na = a + scale * step_a;
      const double nb = b + scale * step_b;
      if (na > 0.0 && nb > 0.0) {
        const double nobj = mse_objective(points, na, nb);
        if (nobj <= obj) {
          a = na;
          b = nb;
          const double rel = (obj - nobj) / std::max(obj, 1e-300);
          obj = nobj;
          accepted = true;
          if (rel < 1e-14) iter = 100;  // converged
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) break;
    if (!std::isfinite(obj)) {
      diverged = true;
      break;
    }
  }

  if (diverged || !std::isfinite(obj) || obj > init_obj) {
    loglog_fit(points, a, b);  // fall back with a warning flag
    curve.refined = false;
    obj = init_obj;
  }
  curve.a = a;
  curve.b = b;
  curve.residual = obj;
  return curve;
}

double expected_loss(const LossCurve& curve, double n) {
  if (n < 1.0) throw std::domain_error("expected_loss: n must be >= 1");
  return curve.a * std::pow(n, -curve.b);
}

double data_deficit(double cap, double collected) {
  if (!(cap > 0.0)) throw std::domain_error("data_deficit: cap must be positive");
  if (collected < 0.0 || collected > cap)
    throw std::domain_error("data_deficit: collected must lie in [0, cap]");
  const double frac = (cap - collected) / cap;
  return frac * frac;
}

void BoundParams::validate() const {
  if (xi1 < 0.0) throw std::domain_error("xi1 must be nonnegative");
  if (!(xi2 > 0.0)) throw std::domain_error("xi2 must be positive");
  if (!(lipschitz > 0.0)) throw std::domain_error("lipschitz must be positive");
}

double convergence_bound(const BoundParams& params, double alpha, int t) {
  params.validate();
  if (alpha < 0.0) throw std::domain_error("alpha must be nonnegative");
  if (t < 0) throw std::domain_error("iteration must be nonnegative");
  const double contraction = 4.0 * params.xi2 * alpha;
  if (contraction >= 1.0) throw ContractionError(params.xi2, alpha);
  const double floor =
      2.0 * alpha * params.xi1 / ((1.0 - contraction) * params.lipschitz);
  return std::pow(contraction, static_cast<double>(t)) *
             (params.initial_gap + floor) +
         floor;
}

double min_samples(double cap, double xi2) {
  if (!(cap > 0.0)) throw std::domain_error("min_samples: cap must be positive");
  if (!(xi2 > 0.0)) throw std::domain_error("min_samples: xi2 must be positive");
  return std::max(0.0, cap - cap / (2.0 * std::sqrt(xi2)));
}

namespace {

XiEstimate clamp_estimate(double xi1, double xi2,
                          const std::vector<GradMoment>& obs) {
  if (xi1 < 0.0) {
    // Refit the slope through the origin.
    double sxy = 0, sxx = 0;
    for (const auto& o : obs) {
      sxy += o.full_sq_norm * o.per_sample_sq_norm;
      sxx += o.full_sq_norm * o.full_sq_norm;
    }
    xi1 = 0.0;
    xi2 = sxx > 0 ? sxy / sxx : 0.0;
  }
  if (!(xi2 > 0.0)) xi2 = std::numeric_limits<double>::min();
  XiEstimate est;
  est.xi1 = xi1;
  est.xi2 = xi2;
  double acc = 0.0;
  for (const auto& o : obs) {
    const double r = o.per_sample_sq_norm - (xi1 + xi2 * o.full_sq_norm);
    acc += r * r;
  }
  est.residual = acc / static_cast<double>(obs.size());
  return est;
}

}  // namespace

XiEstimate estimate_xi(const std::vector<GradMoment>& observations) {
  if (observations.size() < 2)
    throw std::invalid_argument("estimate_xi: need at least 2 observations");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(observations.size());
  for (const auto& o : observations) {
    sx += o.full_sq_norm;
    sy += o.per_sample_sq_norm;
    sxx += o.full_sq_norm * o.full_sq_norm;
    sxy += o.full_sq_norm * o.per_sample_sq_norm;
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-300 * std::max(1.0, sxx))
    throw std::invalid_argument(
        "estimate_xi: full-gradient norms all equal, slope unidentifiable");
  const double xi2 = (m * sxy - sx * sy) / denom;
  const double xi1 = (sy - xi2 * sx) / m;
  return clamp_estimate(xi1, xi2, observations);
}

XiEstimate estimate_xi_conservative(
    const std::vector<GradMoment>& observations, double coverage) {
  if (coverage <= 0.0 || coverage > 1.0)
    throw std::invalid_argument("coverage must lie in (0, 1]");
  XiEstimate est = estimate_xi(observations);
  std::vector<double> shifts;
  shifts.reserve(observations.size());
  for (const auto& o : observations)
    shifts.push_back(o.per_sample_sq_norm -
                     (est.xi1 + est.xi2 * o.full_sq_norm));
  std::sort(shifts.begin(), shifts.end());
  const auto idx = static_cast<std::size_t>(
      std::ceil(coverage * static_cast<double>(shifts.size())) - 1);
  const double shift = std::max(0.0, shifts[std::min(idx, shifts.size() - 1)]);
  return clamp_estimate(est.xi1 + shift, est.xi2, observations);
}

}  // namespace felpa

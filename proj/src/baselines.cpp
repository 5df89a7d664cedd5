#include "felpa/baselines.hpp"

#include <cmath>

#include "felpa/channel.hpp"
#include "felpa/projection.hpp"
#include "felpa/rng.hpp"

namespace felpa {

Eigen::VectorXd uniform_allocate(const AllocationProblem& prob) {
  prob.validate();
  return Eigen::VectorXd::Constant(
      prob.num_devices(),
      prob.power_budget_mw / static_cast<double>(prob.num_devices()));
}

double sum_rate(const Eigen::MatrixXd& gains, const Eigen::VectorXd& power_mw,
                double noise_mw) {
  return rates(gains, power_mw, noise_mw).sum();
}

namespace {

Eigen::VectorXd sum_rate_gradient(const Eigen::MatrixXd& gains,
                                  const Eigen::VectorXd& p, double noise_mw) {
  const int k_total = static_cast<int>(gains.rows());
  Eigen::VectorXd with_self = (gains * p) / noise_mw;
  Eigen::VectorXd without_self =
      with_self - gains.diagonal().cwiseProduct(p) / noise_mw;
  with_self.array() += 1.0;
  without_self.array() += 1.0;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(k_total);
  const double inv_ln2 = 1.0 / std::log(2.0);
  for (int k = 0; k < k_total; ++k) {
    for (int m = 0; m < k_total; ++m) {
      double term = gains(k, m) / with_self(k);
      if (m != k) term -= gains(k, m) / without_self(k);
      grad(m) += inv_ln2 * term / noise_mw;
    }
  }
  return grad;
}

Eigen::VectorXd ascend(const Eigen::MatrixXd& gains, double noise_mw,
                       double budget, Eigen::VectorXd p, double tol,
                       int max_iter) {
  double value = sum_rate(gains, p, noise_mw);
  double step = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd g = sum_rate_gradient(gains, p, noise_mw);
    bool moved = false;
    for (int bt = 0; bt < 50; ++bt) {
      const Eigen::VectorXd cand = project_budget(p + step * g, budget);
      const double cand_value = sum_rate(gains, cand, noise_mw);
      // Armijo on the ascent direction
      if (cand_value >= value + 1e-4 * g.dot(cand - p)) {
        const double residual = (cand - p).norm();
        p = cand;
        value = cand_value;
        moved = true;
        if (residual < tol) return p;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    step *= 2.0;
  }
  return p;
}

}  // namespace

SrmResult srm_allocate(const AllocationProblem& prob, int restarts, double tol,
                       std::uint64_t seed) {
  prob.validate();
  const double budget = prob.power_budget_mw;
  const int k_total = prob.num_devices();
  Rng rng = Rng(seed).derive("srm.restarts");

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(uniform_allocate(prob));
  for (int r = 1; r < std::max(1, restarts); ++r) {
    // Random point on the budget simplex via exponential spacings.
    Eigen::VectorXd draw(k_total);
    for (int k = 0; k < k_total; ++k) {
      double u = rng.uniform01();
      while (u <= 0.0) u = rng.uniform01();
      draw(k) = -std::log(u);
    }
    draw *= budget / draw.sum();
    starts.push_back(draw);
  }

  SrmResult best;
  best.sum_rate = -1.0;
  for (const auto& start : starts) {
    const Eigen::VectorXd p =
        ascend(prob.gains, prob.noise_mw, budget, start, tol, 2000);
    const double value = sum_rate(prob.gains, p, prob.noise_mw);
    if (value > best.sum_rate) {
      best.sum_rate = value;
      best.power = p;
    }
  }
  return best;
}

}  // namespace felpa

#include "felpa/mm_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "felpa/errors.hpp"
#include "felpa/projection.hpp"

namespace felpa {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kRegimeExit: return "regime_exit";
  }
  return "unknown";
}

void MmSettings::validate() const {
  if (!(outer_tol > 0) || !(inner_tol > 0))
    throw ConfigError("MM tolerances must be positive");
  if (max_outer < 1 || max_inner < 1)
    throw ConfigError("MM iteration caps must be >= 1");
  if (!(inner_penalty > 0)) throw ConfigError("inner penalty must be positive");
}

namespace {

// PHR augmented-Lagrangian term for an inequality c <= 0 with multiplier nu.
double al_term(double c, double nu, double mu) {
  const double m = std::max(0.0, nu + mu * c);
  return (m * m - nu * nu) / (2.0 * mu);
}

double al_slope(double c, double nu, double mu) {
  return std::max(0.0, nu + mu * c);
}

struct InnerObjective {
  const AllocationProblem& prob;
  const Eigen::VectorXd& p_t;
  std::vector<double> nu;  // per-node multipliers
  double kappa = 0.0;      // multiplier of the Phi~ <= D^2/2 cap
  double mu;
  double cap_level;        // D^2 / 2

  double value(const Eigen::VectorXd& p) const {
    const double phi = phi_surrogate(prob, p, p_t);
    double acc = phi;
    for (int i = 0; i < prob.num_nodes(); ++i)
      acc += al_term(node_surrogate(prob, i, p, p_t), nu[i], mu);
    if (prob.enforce_surrogate_cap)
      acc += al_term(phi - cap_level, kappa, mu);
    return acc;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const {
    const double psi = psi_surrogate(prob, p, p_t);
    Eigen::VectorXd grad_psi = grad_psi_surrogate(prob, p, p_t);
    double phi_weight = 2.0 * psi;
    if (prob.enforce_surrogate_cap) {
      const double slope = al_slope(psi * psi - cap_level, kappa, mu);
      phi_weight *= 1.0 + slope;
    }
    Eigen::VectorXd grad = phi_weight * grad_psi;
    for (int i = 0; i < prob.num_nodes(); ++i) {
      const double slope = al_slope(node_surrogate(prob, i, p, p_t), nu[i], mu);
      if (slope > 0.0)
        grad += slope * grad_node_surrogate(prob, i, p, p_t);
    }
    return grad;
  }

  double max_violation(const Eigen::VectorXd& p) const {
    double v = 0.0;
    for (int i = 0; i < prob.num_nodes(); ++i)
      v = std::max(v, node_surrogate(prob, i, p, p_t));
    if (prob.enforce_surrogate_cap)
      v = std::max(v, phi_surrogate(prob, p, p_t) - cap_level);
    return std::max(v, 0.0);
  }
};

// Monotone FISTA with backtracking on the smooth AL function; the iterates
// stay inside {p >= 0, sum p <= P}.
Eigen::VectorXd apg_minimize(const InnerObjective& obj,
                             const Eigen::VectorXd& start, double budget,
                             int max_steps, double tol, double init_step) {
  Eigen::VectorXd x = project_budget(start, budget);
  Eigen::VectorXd x_prev = x;
  Eigen::VectorXd y = x;
  double theta = 1.0;
  double step = init_step;
  double fx = obj.value(x);

  for (int k = 0; k < max_steps; ++k) {
    const Eigen::VectorXd g = obj.gradient(y);
    const double fy = obj.value(y);

    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = project_budget(y - step * g, budget);
      const Eigen::VectorXd d = x_new - y;
      const double quad = fy + g.dot(d) + d.squaredNorm() / (2.0 * step);
      if (obj.value(x_new) <= quad + 1e-15 * std::abs(quad)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow; best point so far stands

    // Monotone safeguard: fall back to a plain projected step from x.
    double f_new = obj.value(x_new);
    if (f_new > fx) {
      const Eigen::VectorXd gx = obj.gradient(x);
      Eigen::VectorXd cand = project_budget(x - step * gx, budget);
      double f_cand = obj.value(cand);
      double s = step;
      while (f_cand > fx && s > 1e-18) {
        s *= 0.5;
        cand = project_budget(x - s * gx, budget);
        f_cand = obj.value(cand);
      }
      if (f_cand <= fx) {
        x_new = cand;
        f_new = f_cand;
      } else {
        x_new = x;
        f_new = fx;
      }
      theta = 1.0;  // restart momentum
    }

    x_prev = x;
    x = x_new;
    fx = f_new;

    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    y = project_budget(x + ((theta - 1.0) / theta_next) * (x - x_prev), budget);
    theta = theta_next;

    // Projected-gradient residual at the working step length.
    const Eigen::VectorXd gx = obj.gradient(x);
    const double residual =
        (x - project_budget(x - step * gx, budget)).norm() / step;
    if (residual < tol) break;
    step *= 1.3;  // let the step length recover between backtracks
  }
  return x;
}

std::vector<int> active_devices(const AllocationProblem& prob) {
  std::vector<int> keep;
  for (int k = 0; k < prob.num_devices(); ++k)
    if (prob.gains(k, k) > 0.0) keep.push_back(k);
  return keep;
}

AllocationProblem restrict_problem(const AllocationProblem& prob,
                                   const std::vector<int>& keep) {
  AllocationProblem sub;
  const int m = static_cast<int>(keep.size());
  sub.gains.resize(m, m);
  sub.scale.resize(m);
  std::vector<int> new_index(prob.num_devices(), -1);
  for (int j = 0; j < m; ++j) new_index[keep[j]] = j;
  for (int a = 0; a < m; ++a) {
    sub.scale(a) = prob.scale(keep[a]);
    for (int b = 0; b < m; ++b) sub.gains(a, b) = prob.gains(keep[a], keep[b]);
  }
  sub.noise_mw = prob.noise_mw;
  sub.node_devices.resize(prob.num_nodes());
  for (int i = 0; i < prob.num_nodes(); ++i)
    for (int dev : prob.node_devices[i])
      if (new_index[dev] >= 0) sub.node_devices[i].push_back(new_index[dev]);
  sub.dataset_caps = prob.dataset_caps;
  sub.initial_samples = prob.initial_samples;
  sub.power_budget_mw = prob.power_budget_mw;
  sub.enforce_surrogate_cap = prob.enforce_surrogate_cap;
  return sub;
}

}  // namespace

Eigen::VectorXd solve_inner(const AllocationProblem& prob,
                            const Eigen::VectorXd& p_t,
                            const MmSettings& settings, double step_scale) {
  settings.validate();
  const double budget = prob.power_budget_mw;
  const double cap_level = 0.5 * prob.total_cap() * prob.total_cap();
  const double phi_at_pt = phi_surrogate(prob, p_t, p_t);

  InnerObjective obj{prob, p_t, std::vector<double>(prob.num_nodes(), 0.0),
                     0.0, settings.inner_penalty, cap_level};

  // Initial step from the gradient scale at the expansion point.
  const double g0 = obj.gradient(p_t).norm();
  double step = step_scale * (g0 > 0 ? std::min(1.0, budget / g0) : 1.0);

  Eigen::VectorXd p = p_t;
  const double feas_tol = 1e-9 * std::max(1.0, prob.total_cap());
  double prev_violation = std::numeric_limits<double>::infinity();
  const int multiplier_rounds = 25;
  for (int round = 0; round < multiplier_rounds; ++round) {
    p = apg_minimize(obj, p, budget, settings.max_inner, settings.inner_tol, step);
    const double violation = obj.max_violation(p);
    if (violation <= feas_tol) break;
    for (int i = 0; i < prob.num_nodes(); ++i)
      obj.nu[i] = al_slope(node_surrogate(prob, i, p, p_t), obj.nu[i], obj.mu);
    if (prob.enforce_surrogate_cap)
      obj.kappa =
          al_slope(phi_surrogate(prob, p, p_t) - cap_level, obj.kappa, obj.mu);
    if (violation > 0.25 * prev_violation) obj.mu = std::min(obj.mu * 4.0, 1e10);
    prev_violation = violation;
  }

  const double phi_new = phi_surrogate(prob, p, p_t);
  if (phi_new > phi_at_pt * (1.0 + 1e-12) + 1e-12)
    throw SolverError("inner subproblem failed sufficient decrease: " +
                      std::to_string(phi_new) + " > " +
                      std::to_string(phi_at_pt));
  return p;
}

AllocationResult solve_mm(const AllocationProblem& prob,
                          const MmSettings& settings) {
  prob.validate();
  settings.validate();
  const auto start_time = std::chrono::steady_clock::now();

  const std::vector<int> keep = active_devices(prob);
  if (keep.empty()) throw SolverError("all devices have zero direct gain");
  const bool reduced = static_cast<int>(keep.size()) < prob.num_devices();
  const AllocationProblem sub = reduced ? restrict_problem(prob, keep) : prob;

  const int k_total = prob.num_devices();
  const double per_device = prob.power_budget_mw / static_cast<double>(k_total);
  Eigen::VectorXd p =
      Eigen::VectorXd::Constant(static_cast<int>(keep.size()), per_device);

  AllocationResult result;
  result.objective_trace.push_back(phi_global(sub, p));
  result.status = SolveStatus::kMaxIter;

  const double phi_floor =
      1e-6 * prob.total_cap() * prob.total_cap();

  for (int t = 1; t <= settings.max_outer; ++t) {
    if (psi_global(sub, p) >= 0.0) {
      result.status = SolveStatus::kRegimeExit;  // sample target met
      break;
    }
    Eigen::VectorXd p_next;
    try {
      p_next = solve_inner(sub, p, settings);
    } catch (const SolverError&) {
      p_next = solve_inner(sub, p, settings, 0.5);  // one halved retry
    }
    const double phi_next = phi_global(sub, p_next);
    if (phi_next > result.objective_trace.back()) {
      // The surrogate step cannot improve Phi beyond this accuracy.
      result.status = SolveStatus::kConverged;
      break;
    }
    const double dp = (p_next - p).norm();
    p = p_next;
    result.objective_trace.push_back(phi_next);
    result.step_norm_trace.push_back(dp);
    result.iterations = t;
    if (dp <= settings.outer_tol || phi_next <= phi_floor) {
      result.status = SolveStatus::kConverged;
      break;
    }
  }

  if (reduced) {
    result.power = Eigen::VectorXd::Zero(k_total);
    for (std::size_t j = 0; j < keep.size(); ++j)
      result.power(keep[j]) = p(static_cast<int>(j));
  } else {
    result.power = p;
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
          .count();
  return result;
}

}  // namespace felpa

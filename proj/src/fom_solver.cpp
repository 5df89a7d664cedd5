#include "felpa/fom_solver.hpp"

#include <chrono>
#include <cmath>

#include "felpa/errors.hpp"
#include "felpa/projection.hpp"

namespace felpa {

void FomSettings::validate() const {
  if (!(step > 0)) throw ConfigError("fom step must be positive");
  if (!(penalty > 0)) throw ConfigError("fom penalty must be positive");
  if (!(tol > 0)) throw ConfigError("fom tolerance must be positive");
  if (max_iter < 1) throw ConfigError("fom max_iter must be >= 1");
}

Eigen::VectorXd FomState::concat(const AllocationProblem& prob) const {
  Eigen::VectorXd full(prob.num_devices());
  for (int i = 0; i < prob.num_nodes(); ++i) {
    const auto& devices = prob.node_devices[i];
    for (std::size_t j = 0; j < devices.size(); ++j)
      full(devices[j]) = node_power[i](static_cast<int>(j));
  }
  return full;
}

FomState init_state(const AllocationProblem& prob, const FomSettings& settings) {
  prob.validate();
  settings.validate();
  FomState state;
  const double per_device =
      settings.literal_uniform_init
          ? prob.power_budget_mw / static_cast<double>(prob.num_nodes())
          : prob.power_budget_mw / static_cast<double>(prob.num_devices());
  state.node_power.reserve(prob.num_nodes());
  for (int i = 0; i < prob.num_nodes(); ++i)
    state.node_power.push_back(Eigen::VectorXd::Constant(
        static_cast<int>(prob.node_devices[i].size()), per_device));
  state.node_candidate = state.node_power;
  state.lambda = Eigen::VectorXd::Ones(prob.num_nodes());
  state.beta = 1.0;
  state.theta = 1.0;
  state.iteration = 0;
  state.node_budget = update_budget_split(state, prob);
  return state;
}

Eigen::VectorXd update_budget_split(const FomState& state,
                                    const AllocationProblem& prob) {
  const int node_count = prob.num_nodes();
  double total = 0.0;
  for (const auto& p : state.node_power) total += p.sum();
  const double correction =
      (total - prob.power_budget_mw) / static_cast<double>(node_count);
  Eigen::VectorXd split(node_count);
  for (int i = 0; i < node_count; ++i)
    split(i) = state.node_power[i].sum() - correction;
  return split;
}

double update_beta(const FomState& state, const AllocationProblem& prob,
                   const FomSettings& settings,
                   const Eigen::VectorXd& p_next_full) {
  const double excess = p_next_full.sum() - prob.power_budget_mw;
  return std::max(
      state.beta + settings.penalty / static_cast<double>(prob.num_nodes()) * excess,
      0.0);
}

Eigen::VectorXd node_gradient(const AllocationProblem& prob, int node,
                              const FomState& state,
                              const FomSettings& settings) {
  const Eigen::VectorXd reference = state.concat(prob);
  const Eigen::VectorXd& p_i = state.node_power[node];
  const double phi = phi_node(prob, node, p_i, reference);
  Eigen::VectorXd grad = (phi + state.lambda(node)) *
                         grad_phi_node(prob, node, p_i, reference);
  const double budget_residual = p_i.sum() - state.node_budget(node);
  grad.array() += state.beta + settings.penalty * budget_residual;
  return grad;
}

NodeUpdate node_update(const FomState& state, const AllocationProblem& prob,
                       const FomSettings& settings, int node) {
  NodeUpdate out;
  const Eigen::VectorXd grad = node_gradient(prob, node, state, settings);
  out.candidate =
      (state.node_power[node] - settings.step * grad).cwiseMax(0.0);
  out.power = settings.momentum
                  ? ((1.0 - state.theta) * state.node_power[node] +
                     state.theta * out.candidate)
                  : out.candidate;
  // lambda reacts to the node surplus at the fresh power, still linearized
  // against the iteration snapshot.
  const Eigen::VectorXd reference = state.concat(prob);
  const double phi_new = phi_node(prob, node, out.power, reference);
  out.lambda = std::max(state.lambda(node) + settings.step * phi_new, 0.0);
  return out;
}

FomState step(const FomState& state, const AllocationProblem& prob,
              const FomSettings& settings) {
  const int node_count = prob.num_nodes();
  FomState next;
  next.node_power.resize(node_count);
  next.node_candidate.resize(node_count);
  next.lambda.resize(node_count);

  // All node updates read the same snapshot; order is irrelevant.
  for (int i = 0; i < node_count; ++i) {
    NodeUpdate upd = node_update(state, prob, settings, i);
    next.node_power[i] = std::move(upd.power);
    next.node_candidate[i] = std::move(upd.candidate);
    next.lambda(i) = upd.lambda;
  }

  const Eigen::VectorXd p_full = next.concat(prob);
  if (p_full.norm() > 1e6 * prob.power_budget_mw)
    throw SolverError("fom diverged: power iterate exceeded 1e6 * budget");

  next.beta = update_beta(state, prob, settings, p_full);
  const double th = state.theta;
  next.theta = 0.5 * (-th * th + std::sqrt(th * th * th * th + 4.0 * th * th));
  next.iteration = state.iteration + 1;
  next.node_budget = update_budget_split(next, prob);
  return next;
}

double mse_metric(const FomState& current, const FomState& previous) {
  double dp_sq = 0.0;
  for (std::size_t i = 0; i < current.node_power.size(); ++i)
    dp_sq += (current.node_power[i] - previous.node_power[i]).squaredNorm();
  const double d_budget = (current.node_budget - previous.node_budget).norm();
  const double d_lambda = (current.lambda - previous.lambda).norm();
  const double d_beta = std::abs(current.beta - previous.beta);
  return std::sqrt(dp_sq) + d_budget + d_lambda + d_beta;
}

AllocationResult solve_fom(const AllocationProblem& prob,
                           const FomSettings& settings,
                           std::vector<FomTraceRow>* trace) {
  prob.validate();
  settings.validate();
  const auto start_time = std::chrono::steady_clock::now();

  FomState state = init_state(prob, settings);
  AllocationResult result;
  result.objective_trace.push_back(phi_global(prob, state.concat(prob)));
  result.status = SolveStatus::kMaxIter;

  for (int t = 1; t <= settings.max_iter; ++t) {
    FomState next = step(state, prob, settings);

    double max_node_dp = 0.0;
    for (std::size_t i = 0; i < next.node_power.size(); ++i)
      max_node_dp = std::max(
          max_node_dp, (next.node_power[i] - state.node_power[i]).norm());
    const double mse = mse_metric(next, state);
    const Eigen::VectorXd p_full = next.concat(prob);
    const double phi = phi_global(prob, p_full);

    result.mse_trace.push_back(mse);
    result.objective_trace.push_back(phi);
    result.step_norm_trace.push_back(max_node_dp);
    if (trace)
      trace->push_back({t, mse, phi, next.beta, next.theta, p_full.sum()});

    state = std::move(next);
    result.iterations = t;
    if (max_node_dp <= settings.tol) {
      result.status = SolveStatus::kConverged;
      break;
    }
  }

  // The duals enforce the budget only asymptotically; the reported vector is
  // snapped onto the feasible set.
  result.power = project_budget(state.concat(prob), prob.power_budget_mw);
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
          .count();
  return result;
}

}  // namespace felpa

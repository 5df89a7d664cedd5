#pragma once

#include <Eigen/Dense>
#include <vector>

#include "felpa/mm_solver.hpp"
#include "felpa/problem.hpp"

namespace felpa {

struct FomSettings {
  double step = 1e-3;    // eta
  double penalty = 1.0;  // mu
  double tol = 1e-4;     // epsilon, stop on max_i ||p_i(t) - p_i(t-1)||
  int max_iter = 20000;
  bool momentum = true;
  // Algorithm-1's literal p_i = P/I per device (over-allocates when a node
  // owns several devices); default is the budget-feasible P/K per device.
  bool literal_uniform_init = false;
  void validate() const;
};

// Distributed iterate. Node updates read only the previous snapshot, so they
// may run in any order (or in parallel) with bit-identical results; the
// coordinator owns beta, theta and the budget split.
struct FomState {
  std::vector<Eigen::VectorXd> node_power;      // p_i
  std::vector<Eigen::VectorXd> node_candidate;  // z_i
  Eigen::VectorXd lambda;                       // per-node dual, >= 0
  double beta = 1.0;                            // shared dual, >= 0
  double theta = 1.0;                           // momentum scalar in (0, 1]
  Eigen::VectorXd node_budget;                  // P_i, sums to P
  int iteration = 0;

  Eigen::VectorXd concat(const AllocationProblem& prob) const;
};

FomState init_state(const AllocationProblem& prob, const FomSettings& settings);

// P_i = 1' p_i - (1' p - P) / I; the corrections sum out so sum_i P_i = P.
Eigen::VectorXd update_budget_split(const FomState& state,
                                    const AllocationProblem& prob);

// beta' = max(beta + (mu / I) ( 1' p_next - P ), 0).
double update_beta(const FomState& state, const AllocationProblem& prob,
                   const FomSettings& settings,
                   const Eigen::VectorXd& p_next_full);

// Gradient of the per-node augmented Lagrangian
//   L_i = phi_i^2 / 2 + lambda_i phi_i + beta (1'p_i - P_i)
//         + (mu/2) (1'p_i - P_i)^2
// with phi_i linearized against the current snapshot.
Eigen::VectorXd node_gradient(const AllocationProblem& prob, int node,
                              const FomState& state,
                              const FomSettings& settings);

struct NodeUpdate {
  Eigen::VectorXd candidate;  // z_i(t+1)
  Eigen::VectorXd power;      // p_i(t+1)
  double lambda;              // lambda_i(t+1)
};

// Pure per-node update from the snapshot; exposed so schedulers (and the
// scheduling-independence test) can run nodes in any order.
NodeUpdate node_update(const FomState& state, const AllocationProblem& prob,
                       const FomSettings& settings, int node);

// One synchronous iteration: all node updates from the snapshot, then the
// coordinator's beta / theta / budget-split refresh.
FomState step(const FomState& state, const AllocationProblem& prob,
              const FomSettings& settings);

// Stacked iterate-change metric: ||dp|| + ||dP_i|| + ||dlambda|| + |dbeta|.
double mse_metric(const FomState& current, const FomState& previous);

struct FomTraceRow {
  int t;
  double mse;
  double phi;
  double beta;
  double theta;
  double total_power;
};

AllocationResult solve_fom(const AllocationProblem& prob,
                           const FomSettings& settings,
                           std::vector<FomTraceRow>* trace = nullptr);

}  // namespace felpa

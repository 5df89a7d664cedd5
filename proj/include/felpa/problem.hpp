#pragma once

#include <Eigen/Dense>
#include <vector>

#include "felpa/channel.hpp"

namespace felpa {

// Everything needed to evaluate the sample-deficit objective and its
// surrogates for one fixed channel draw. Immutable after construction.
//
// Conventions: scale(k) = B*T/(V_k ln 2); the "inner" (unsquared) value is
//   psi(p) = sum_k scale_k * [ln T_k(p) - ln U_k(p)] + A - D
// with T_k(x) = 1 + sum_l G(k,l) x_l / noise and U_k the same sum without
// l = k. The optimization objective is Phi = psi^2. psi + D equals the total
// number of collected samples under the continuous relaxation.
struct AllocationProblem {
  Eigen::MatrixXd gains;
  double noise_mw = 0.0;
  Eigen::VectorXd scale;                       // c_k per device
  std::vector<std::vector<int>> node_devices;  // exact partition
  Eigen::VectorXd dataset_caps;                // D_i
  Eigen::VectorXd initial_samples;             // A_i
  double power_budget_mw = 0.0;
  // P4's surrogate cap constraint Phi~ <= D^2/2; switchable for ablation.
  bool enforce_surrogate_cap = true;

  int num_devices() const { return static_cast<int>(gains.rows()); }
  int num_nodes() const { return static_cast<int>(node_devices.size()); }
  double total_cap() const { return dataset_caps.sum(); }
  double total_initial() const { return initial_samples.sum(); }

  void validate() const;
  static AllocationProblem from_config(const NetworkConfig& cfg,
                                       const ChannelState& channels);

  // Nodes whose initial samples fall below the Corollary-1 admission level
  // A_i >= D_i - D_i/(2 sqrt(xi2)). A nonempty result is a warm-up flag, not
  // an error.
  std::vector<int> warmup_nodes(double xi2) const;
};

// ---- P3 objective ----
double psi_global(const AllocationProblem& prob, const Eigen::VectorXd& p);
double phi_global(const AllocationProblem& prob, const Eigen::VectorXd& p);
Eigen::VectorXd grad_psi_global(const AllocationProblem& prob,
                                const Eigen::VectorXd& p);
Eigen::VectorXd grad_phi_global(const AllocationProblem& prob,
                                const Eigen::VectorXd& p);

// Total collected samples under the continuous relaxation (= psi + D).
double collected_samples(const AllocationProblem& prob,
                         const Eigen::VectorXd& p);

// ---- MM surrogate around the expansion point p_star ----
double psi_surrogate(const AllocationProblem& prob, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& p_star);
double phi_surrogate(const AllocationProblem& prob, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& p_star);
Eigen::VectorXd grad_psi_surrogate(const AllocationProblem& prob,
                                   const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& p_star);
Eigen::VectorXd grad_phi_surrogate(const AllocationProblem& prob,
                                   const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& p_star);

// ---- per-node pieces ----
// Node slice of the surrogate inner value over the full power vector:
//   g_i(p | p_star) = sum_{k in K_i} scale_k [...] + A_i - D_i,
// the sample-surplus constraint of the convex subproblem. Summed over nodes
// it reproduces psi_surrogate.
double node_surrogate(const AllocationProblem& prob, int node,
                      const Eigen::VectorXd& p, const Eigen::VectorXd& p_star);
Eigen::VectorXd grad_node_surrogate(const AllocationProblem& prob, int node,
                                    const Eigen::VectorXd& p,
                                    const Eigen::VectorXd& p_star);

// Replaces node i's slice of `reference` with `p_node`.
Eigen::VectorXd embed_node(const AllocationProblem& prob, int node,
                           const Eigen::VectorXd& p_node,
                           const Eigen::VectorXd& reference);

// Sub-problem over a subset of nodes with a reduced budget; devices of the
// dropped nodes disappear. Used by the simulator's warm-up admission.
AllocationProblem restrict_nodes(const AllocationProblem& prob,
                                 const std::vector<int>& keep_nodes,
                                 double budget);

// Distributed relaxation: node i's surrogate sample surplus with every other
// node frozen at `reference` (and the expansion point also `reference`).
double phi_node(const AllocationProblem& prob, int node,
                const Eigen::VectorXd& p_node,
                const Eigen::VectorXd& reference);
// Gradient over node i's own devices only.
Eigen::VectorXd grad_phi_node(const AllocationProblem& prob, int node,
                              const Eigen::VectorXd& p_node,
                              const Eigen::VectorXd& reference);

}  // namespace felpa

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "felpa/channel.hpp"
#include "felpa/fom_solver.hpp"
#include "felpa/lossmodel.hpp"
#include "felpa/mm_solver.hpp"
#include "felpa/rng.hpp"

namespace felpa {

// Gaussian-mixture classification task with a multinomial logistic model.
// Smooth loss, cheap to train, and its learning curves follow the
// diminishing-return shape the power-law fit expects at desk scale.
struct SyntheticTask {
  int input_dim = 2;
  int class_count = 2;
  Eigen::MatrixXd class_means;  // class_count x input_dim
  double noise_scale = 1.0;
  std::uint64_t seed = 0;

  static SyntheticTask make(int input_dim, int class_count, double spread,
                            double noise_scale, std::uint64_t seed);
  // Flattened weight dimension: per class, input weights plus a bias.
  int weight_dim() const { return class_count * (input_dim + 1); }
};

struct Dataset {
  Eigen::MatrixXd x;  // n x input_dim
  Eigen::VectorXi y;  // n
  int size() const { return static_cast<int>(y.size()); }
  void append(const Dataset& extra);
  Dataset head(int n) const;  // first n rows (nesting)
};

Dataset sample_dataset(const SyntheticTask& task, int n, Rng rng);

double logistic_loss(const SyntheticTask& task, const Eigen::VectorXd& w,
                     const Dataset& data);
Eigen::VectorXd logistic_grad(const SyntheticTask& task,
                              const Eigen::VectorXd& w, const Dataset& data);
// Mean over samples of ||grad f(w | s)||^2; pairs with logistic_grad's
// squared norm for xi estimation.
double mean_per_sample_grad_sqnorm(const SyntheticTask& task,
                                   const Eigen::VectorXd& w,
                                   const Dataset& data);
// 1/L from the softmax Hessian bound L <= max_j |x~_j|^2 / 2.
double suggested_lr(const Dataset& data);

using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// `epochs` full-batch steps w <- w - lr * grad(w).
Eigen::VectorXd gradient_descent_epochs(const GradFn& grad, Eigen::VectorXd w,
                                        double lr, int epochs);

// One federated round of local training from the global model. Throws on an
// empty dataset.
Eigen::VectorXd local_sgd_round(const SyntheticTask& task,
                                const Eigen::VectorXd& w_global,
                                const Dataset& data, double lr, int epochs);

// w = sum_i alpha_i w_i with alpha >= 0 summing to one.
Eigen::VectorXd aggregate(const std::vector<Eigen::VectorXd>& locals,
                          const std::vector<double>& weights);

enum class AllocatorKind { kUniform, kSrm, kMm, kFom, kZero };
AllocatorKind allocator_from_string(const std::string& name);
std::string to_string(AllocatorKind kind);

struct SimOptions {
  AllocatorKind allocator = AllocatorKind::kFom;
  int rounds = 10;
  double local_lr = 0.0;  // 0 = derive from the data
  int local_epochs = 5;
  bool redraw_channels = false;  // block fading by default
  double admission_min_samples = 1.0;  // A_min
  int eval_size = 4000;
  MmSettings mm;
  FomSettings fom;
  int srm_restarts = 8;
  double srm_tol = 1e-9;
};

struct RoundRecord {
  int round = 0;
  std::vector<double> node_samples;  // |X_i| after this round's collection
  std::vector<double> node_loss;     // F_i(w) on the node's held-out set
  std::vector<double> alpha;         // aggregation weights used this round
  std::vector<double> device_rate;   // R_k under the allocated power
  Eigen::VectorXd power;             // allocated vector, mW
  double global_loss = 0.0;          // sum_i (D_i / D) F_i(w)
  double grad_full_sq = 0.0;         // ||grad F(w)||^2, pooled samples
  double grad_mean_sq = 0.0;         // mean ||grad f(w|s)||^2, pooled samples
  std::vector<int> warmup_nodes;     // excluded from allocation/training
};

struct TrainingTrace {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
  Eigen::VectorXd final_weights;
  double final_global_loss() const;
};

// Closed loop: allocate power, collect floored samples, append fresh draws to
// the node datasets, train locally, aggregate, log. Deterministic per seed.
TrainingTrace run_online(const NetworkConfig& cfg,
                         const std::vector<SyntheticTask>& node_tasks,
                         const SimOptions& opts, std::uint64_t seed);

struct CurvePoint {
  double n = 0.0;
  double loss = 0.0;
  bool converged = true;
};

struct CurveOptions {
  double lr = 0.0;  // 0 = derive from the data
  int max_epochs = 5000;
  double tol = 1e-6;   // loss change defining convergence ...
  int window = 50;     // ... measured over this many epochs
  int eval_size = 4000;
};

// Trains to convergence on nested datasets of the given strictly increasing
// sizes and records the held-out loss per size, ready for fit_power_law.
std::vector<CurvePoint> measure_loss_curve(const SyntheticTask& task,
                                           const std::vector<int>& sizes,
                                           const CurveOptions& opts,
                                           std::uint64_t seed);

std::vector<LossPoint> to_loss_points(const std::vector<CurvePoint>& points);

}  // namespace felpa

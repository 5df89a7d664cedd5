#include "felpa/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "felpa/baselines.hpp"
#include "felpa/errors.hpp"

namespace felpa {

SyntheticTask SyntheticTask::make(int input_dim, int class_count, double spread,
                                  double noise_scale, std::uint64_t seed) {
  if (input_dim < 1 || class_count < 2)
    throw ConfigError("task needs input_dim >= 1 and class_count >= 2");
  if (!(noise_scale > 0)) throw ConfigError("task noise_scale must be positive");
  SyntheticTask task;
  task.input_dim = input_dim;
  task.class_count = class_count;
  task.noise_scale = noise_scale;
  task.seed = seed;
  Rng rng = Rng(seed).derive("task.means");
  task.class_means.resize(class_count, input_dim);
  for (int c = 0; c < class_count; ++c)
    for (int d = 0; d < input_dim; ++d)
      task.class_means(c, d) = spread * rng.normal();
  return task;
}

void Dataset::append(const Dataset& extra) {
  if (extra.size() == 0) return;
  if (size() == 0) {
    *this = extra;
    return;
  }
  if (extra.x.cols() != x.cols())
    throw std::invalid_argument("dataset dimension mismatch");
  const int old_n = size();
  x.conservativeResize(old_n + extra.size(), Eigen::NoChange);
  y.conservativeResize(old_n + extra.size());
  x.bottomRows(extra.size()) = extra.x;
  y.tail(extra.size()) = extra.y;
}

Dataset Dataset::head(int n) const {
  if (n > size()) throw std::out_of_range("dataset head beyond size");
  Dataset out;
  out.x = x.topRows(n);
  out.y = y.head(n);
  return out;
}

Dataset sample_dataset(const SyntheticTask& task, int n, Rng rng) {
  Dataset data;
  data.x.resize(n, task.input_dim);
  data.y.resize(n);
  for (int j = 0; j < n; ++j) {
    const int label = std::min(
        task.class_count - 1,
        static_cast<int>(rng.uniform01() * task.class_count));
    data.y(j) = label;
    for (int d = 0; d < task.input_dim; ++d)
      data.x(j, d) = task.class_means(label, d) + task.noise_scale * rng.normal();
  }
  return data;
}

namespace {

// Row-major weight layout: class c occupies [c*(d+1), c*(d+1)+d], the last
// entry being the bias.
Eigen::VectorXd logits_for(const SyntheticTask& task, const Eigen::VectorXd& w,
                           const Eigen::VectorXd& sample) {
  const int d = task.input_dim;
  Eigen::VectorXd z(task.class_count);
  for (int c = 0; c < task.class_count; ++c) {
    const auto row = w.segment(c * (d + 1), d);
    z(c) = row.dot(sample) + w(c * (d + 1) + d);
  }
  return z;
}

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& z) {
  const double zmax = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - zmax).exp();
  return e / e.sum();
}

void check_weights(const SyntheticTask& task, const Eigen::VectorXd& w) {
  if (w.size() != task.weight_dim())
    throw std::invalid_argument("weight dimension mismatch");
}

}  // namespace

double logistic_loss(const SyntheticTask& task, const Eigen::VectorXd& w,
                     const Dataset& data) {
  check_weights(task, w);
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  double acc = 0.0;
  for (int j = 0; j < data.size(); ++j) {
    const Eigen::VectorXd z = logits_for(task, w, data.x.row(j).transpose());
    const double zmax = z.maxCoeff();
    const double lse = zmax + std::log((z.array() - zmax).exp().sum());
    acc += lse - z(data.y(j));
  }
  return acc / static_cast<double>(data.size());
}

Eigen::VectorXd logistic_grad(const SyntheticTask& task,
                              const Eigen::VectorXd& w, const Dataset& data) {
  check_weights(task, w);
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  const int d = task.input_dim;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size());
  for (int j = 0; j < data.size(); ++j) {
    const Eigen::VectorXd sample = data.x.row(j).transpose();
    Eigen::VectorXd probs = stable_softmax(logits_for(task, w, sample));
    probs(data.y(j)) -= 1.0;
    for (int c = 0; c < task.class_count; ++c) {
      grad.segment(c * (d + 1), d) += probs(c) * sample;
      grad(c * (d + 1) + d) += probs(c);
    }
  }
  return grad / static_cast<double>(data.size());
}

double mean_per_sample_grad_sqnorm(const SyntheticTask& task,
                                   const Eigen::VectorXd& w,
                                   const Dataset& data) {
  check_weights(task, w);
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  double acc = 0.0;
  for (int j = 0; j < data.size(); ++j) {
    const Eigen::VectorXd sample = data.x.row(j).transpose();
    Eigen::VectorXd probs = stable_softmax(logits_for(task, w, sample));
    probs(data.y(j)) -= 1.0;
    // ||(probs) kron [x;1]||^2 = ||probs||^2 * (||x||^2 + 1)
    acc += probs.squaredNorm() * (sample.squaredNorm() + 1.0);
  }
  return acc / static_cast<double>(data.size());
}

double suggested_lr(const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  double max_sq = 0.0;
  for (int j = 0; j < data.size(); ++j)
    max_sq = std::max(max_sq, data.x.row(j).squaredNorm() + 1.0);
  return 2.0 / max_sq;
}

Eigen::VectorXd gradient_descent_epochs(const GradFn& grad, Eigen::VectorXd w,
                                        double lr, int epochs) {
  for (int e = 0; e < epochs; ++e) w -= lr * grad(w);
  return w;
}

Eigen::VectorXd local_sgd_round(const SyntheticTask& task,
                                const Eigen::VectorXd& w_global,
                                const Dataset& data, double lr, int epochs) {
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  return gradient_descent_epochs(
      [&](const Eigen::VectorXd& w) { return logistic_grad(task, w, data); },
      w_global, lr, epochs);
}

Eigen::VectorXd aggregate(const std::vector<Eigen::VectorXd>& locals,
                          const std::vector<double>& weights) {
  if (locals.empty() || locals.size() != weights.size())
    throw std::invalid_argument("aggregate: size mismatch");
  double total = 0.0;
  for (double a : weights) {
    if (a < 0.0) throw std::invalid_argument("aggregate: negative weight");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("aggregate: weights must sum to one");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(locals.front().size());
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (locals[i].size() != w.size())
      throw std::invalid_argument("aggregate: weight dimension mismatch");
    w += weights[i] * locals[i];
  }
  return w;
}

AllocatorKind allocator_from_string(const std::string& name) {
  if (name == "uniform") return AllocatorKind::kUniform;
  if (name == "srm") return AllocatorKind::kSrm;
  if (name == "mm") return AllocatorKind::kMm;
  if (name == "fom") return AllocatorKind::kFom;
  throw ConfigError("unknown allocator: " + name);
}

std::string to_string(AllocatorKind kind) {
  switch (kind) {
    case AllocatorKind::kUniform: return "uniform";
    case AllocatorKind::kSrm: return "srm";
    case AllocatorKind::kMm: return "mm";
    case AllocatorKind::kFom: return "fom";
    case AllocatorKind::kZero: return "zero";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd dispatch_allocator(const AllocationProblem& prob,
                                   const SimOptions& opts, std::uint64_t seed) {
  switch (opts.allocator) {
    case AllocatorKind::kUniform: return uniform_allocate(prob);
    case AllocatorKind::kZero: return Eigen::VectorXd::Zero(prob.num_devices());
    case AllocatorKind::kSrm:
      return srm_allocate(prob, opts.srm_restarts, opts.srm_tol, seed).power;
    case AllocatorKind::kMm: return solve_mm(prob, opts.mm).power;
    case AllocatorKind::kFom: return solve_fom(prob, opts.fom).power;
  }
  throw ConfigError("unknown allocator kind");
}

}  // namespace

double TrainingTrace::final_global_loss() const {
  if (rounds.empty()) throw std::logic_error("empty trace");
  return rounds.back().global_loss;
}

TrainingTrace run_online(const NetworkConfig& cfg,
                         const std::vector<SyntheticTask>& node_tasks,
                         const SimOptions& opts, std::uint64_t seed) {
  cfg.validate();
  const int node_count = cfg.num_nodes;
  const int k_total = cfg.num_devices();
  if (static_cast<int>(node_tasks.size()) != node_count)
    throw ConfigError("one task per node required");
  const int wdim = node_tasks.front().weight_dim();
  for (const auto& task : node_tasks)
    if (task.weight_dim() != wdim)
      throw ConfigError("all node tasks must share the model shape");
  if (opts.rounds < 0) throw ConfigError("rounds must be nonnegative");

  const Rng root(seed);
  TrainingTrace trace;
  trace.seed = seed;

  std::vector<Dataset> datasets(node_count);
  std::vector<Dataset> eval_sets(node_count);
  for (int i = 0; i < node_count; ++i) {
    const int initial = static_cast<int>(std::llround(cfg.initial_samples[i]));
    datasets[i] = sample_dataset(node_tasks[i], initial,
                                 root.derive("data.init", i));
    eval_sets[i] = sample_dataset(node_tasks[i], opts.eval_size,
                                  root.derive("data.eval", i));
  }

  ChannelState channels = sample_channels(cfg, root.derive("channels", 0).seed());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(wdim);
  const double total_cap =
      std::accumulate(cfg.dataset_caps.begin(), cfg.dataset_caps.end(), 0.0);

  for (int t = 0; t < opts.rounds; ++t) {
    if (opts.redraw_channels && t > 0)
      channels = sample_channels(cfg, root.derive("channels", t).seed());

    RoundRecord rec;
    rec.round = t;

    // Admission control: only nodes past the warm-up sample level take part
    // in the allocation and the training step.
    std::vector<int> active;
    for (int i = 0; i < node_count; ++i) {
      if (datasets[i].size() >= std::max(opts.admission_min_samples, 1.0))
        active.push_back(i);
      else
        rec.warmup_nodes.push_back(i);
    }
    if (active.empty()) throw SolverError("no admissible node");

    AllocationProblem full = AllocationProblem::from_config(cfg, channels);
    for (int i = 0; i < node_count; ++i)
      full.initial_samples(i) =
          std::min(static_cast<double>(datasets[i].size()), full.dataset_caps(i));

    // Warm-up devices keep the uniform per-device share; the optimizer works
    // on the admitted nodes and the remaining budget. Their interference is
    // not visible to the sub-problem, only to the realized rates.
    const double share = cfg.power_budget_mw / static_cast<double>(k_total);
    Eigen::VectorXd power = Eigen::VectorXd::Zero(k_total);
    const std::uint64_t alloc_seed = root.derive("alloc", t).seed();
    if (static_cast<int>(active.size()) == node_count) {
      power = dispatch_allocator(full, opts, alloc_seed);
    } else {
      int warm_devices = 0;
      for (int i : rec.warmup_nodes) {
        for (int dev : cfg.node_devices[i]) {
          power(dev) = share;
          ++warm_devices;
        }
      }
      const double sub_budget =
          cfg.power_budget_mw - share * static_cast<double>(warm_devices);
      const AllocationProblem sub = restrict_nodes(full, active, sub_budget);
      const Eigen::VectorXd sub_power = dispatch_allocator(sub, opts, alloc_seed);
      int cursor = 0;
      for (int i : active)
        for (int dev : cfg.node_devices[i]) power(dev) = sub_power(cursor++);
    }
    rec.power = power;

    // Realized collection under the full-network interference.
    const Eigen::VectorXd rate_vec = rates(channels.gains, power, cfg.noise_mw);
    rec.device_rate.assign(rate_vec.data(), rate_vec.data() + rate_vec.size());
    for (int i = 0; i < node_count; ++i) {
      double fresh = 0.0;
      for (int dev : cfg.node_devices[i])
        fresh += std::floor(cfg.bandwidth_hz * cfg.tx_time_s * rate_vec(dev) /
                            cfg.bits_per_sample[dev]);
      const double room = cfg.dataset_caps[i] - datasets[i].size();
      const int add = static_cast<int>(std::min(fresh, std::max(room, 0.0)));
      if (add > 0)
        datasets[i].append(sample_dataset(node_tasks[i], add,
                                          root.derive("data.round", static_cast<std::uint64_t>(t) * node_count + i)));
      rec.node_samples.push_back(datasets[i].size());
    }

    // Gradient moments at the pre-update global model, pooled over every
    // collected sample; feeds the xi estimator.
    {
      Eigen::VectorXd pooled_grad = Eigen::VectorXd::Zero(wdim);
      double pooled_sq = 0.0;
      double pooled_n = 0.0;
      for (int i = 0; i < node_count; ++i) {
        if (datasets[i].size() == 0) continue;
        const double n_i = datasets[i].size();
        pooled_grad += n_i * logistic_grad(node_tasks[i], w, datasets[i]);
        pooled_sq += n_i * mean_per_sample_grad_sqnorm(node_tasks[i], w, datasets[i]);
        pooled_n += n_i;
      }
      rec.grad_full_sq = (pooled_grad / pooled_n).squaredNorm();
      rec.grad_mean_sq = pooled_sq / pooled_n;
    }

    // Local rounds and aggregation over the admitted nodes; weights are
    // cap-proportional, renormalized while any node is warming up.
    double active_cap = 0.0;
    for (int i : active) active_cap += cfg.dataset_caps[i];
    std::vector<Eigen::VectorXd> locals;
    std::vector<double> weights;
    rec.alpha.assign(node_count, 0.0);
    for (int i : active) {
      const double lr =
          opts.local_lr > 0 ? opts.local_lr : suggested_lr(datasets[i]);
      locals.push_back(
          local_sgd_round(node_tasks[i], w, datasets[i], lr, opts.local_epochs));
      const double alpha_i = cfg.dataset_caps[i] / active_cap;
      weights.push_back(alpha_i);
      rec.alpha[i] = alpha_i;
    }
    w = aggregate(locals, weights);

    rec.global_loss = 0.0;
    for (int i = 0; i < node_count; ++i) {
      const double loss_i = logistic_loss(node_tasks[i], w, eval_sets[i]);
      rec.node_loss.push_back(loss_i);
      rec.global_loss += cfg.dataset_caps[i] / total_cap * loss_i;
    }
    trace.rounds.push_back(std::move(rec));
  }

  trace.final_weights = w;
  return trace;
}

std::vector<CurvePoint> measure_loss_curve(const SyntheticTask& task,
                                           const std::vector<int>& sizes,
                                           const CurveOptions& opts,
                                           std::uint64_t seed) {
  if (sizes.size() < 1) throw std::invalid_argument("no sizes given");
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    if (sizes[m] < 1) throw std::invalid_argument("sizes must be >= 1");
    if (m > 0 && sizes[m] <= sizes[m - 1])
      throw std::invalid_argument("sizes must be strictly increasing");
  }

  const Rng root(seed);
  const Dataset pool = sample_dataset(task, sizes.back(), root.derive("curve.pool"));
  const Dataset eval =
      sample_dataset(task, opts.eval_size, root.derive("curve.eval"));

  std::vector<CurvePoint> out;
  out.reserve(sizes.size());
  for (int n : sizes) {
    const Dataset data = pool.head(n);
    const double lr = opts.lr > 0 ? opts.lr : suggested_lr(data);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(task.weight_dim());

    std::vector<double> history;
    history.reserve(opts.max_epochs + 1);
    history.push_back(logistic_loss(task, w, data));
    bool converged = false;
    for (int e = 1; e <= opts.max_epochs; ++e) {
      w -= lr * logistic_grad(task, w, data);
      history.push_back(logistic_loss(task, w, data));
      if (e >= opts.window &&
          std::abs(history[e] - history[e - opts.window]) < opts.tol) {
        converged = true;
        break;
      }
    }
    out.push_back({static_cast<double>(n), logistic_loss(task, w, eval), converged});
  }
  return out;
}

std::vector<LossPoint> to_loss_points(const std::vector<CurvePoint>& points) {
  std::vector<LossPoint> out;
  out.reserve(points.size());
  for (const auto& pt : points) out.push_back({pt.n, pt.loss});
  return out;
}

}  // namespace felpa

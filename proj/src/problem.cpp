#include "felpa/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "felpa/errors.hpp"

namespace felpa {
namespace {

void check_power(const Eigen::VectorXd& p, int k_total, const char* what) {
  if (p.size() != k_total)
    throw std::invalid_argument(std::string(what) + ": wrong power dimension");
  if ((p.array() < 0).any())
    throw std::domain_error(std::string(what) + ": negative transmit power");
}

// T_k(p) = 1 + sum_l G(k,l) p_l / noise and U_k(p) = T_k(p) - G(k,k) p_k / noise.
void row_sums(const AllocationProblem& prob, const Eigen::VectorXd& p,
              Eigen::VectorXd& with_self, Eigen::VectorXd& without_self) {
  with_self = (prob.gains * p) / prob.noise_mw;
  without_self = with_self - (prob.gains.diagonal().cwiseProduct(p)) / prob.noise_mw;
  with_self.array() += 1.0;
  without_self.array() += 1.0;
}

}  // namespace

void AllocationProblem::validate() const {
  const int k_total = num_devices();
  if (k_total == 0) throw ConfigError("empty gain matrix");
  if (gains.rows() != gains.cols()) throw ConfigError("gain matrix not square");
  if ((gains.array() < 0).any()) throw ConfigError("negative channel gain");
  if (!(noise_mw > 0)) throw ConfigError("noise power must be positive");
  if (scale.size() != k_total)
    throw ConfigError("scale must have one entry per device");
  if ((scale.array() <= 0).any()) throw ConfigError("scale entries must be positive");
  if (!(power_budget_mw > 0)) throw ConfigError("power budget must be positive");

  const int node_count = num_nodes();
  if (node_count == 0) throw ConfigError("no nodes");
  if (dataset_caps.size() != node_count || initial_samples.size() != node_count)
    throw ConfigError("per-node vectors must match node count");
  std::vector<int> seen(k_total, 0);
  for (const auto& group : node_devices)
    for (int dev : group) {
      if (dev < 0 || dev >= k_total) throw ConfigError("device index out of range");
      if (seen[dev]++) throw ConfigError("device in two node groups");
    }
  for (int s : seen)
    if (!s) throw ConfigError("device missing from partition");
  for (int i = 0; i < node_count; ++i) {
    if (initial_samples(i) < 0) throw ConfigError("negative initial samples");
    if (dataset_caps(i) < initial_samples(i))
      throw ConfigError("dataset cap below initial samples");
  }
}

AllocationProblem AllocationProblem::from_config(const NetworkConfig& cfg,
                                                 const ChannelState& channels) {
  cfg.validate();
  AllocationProblem prob;
  prob.gains = channels.gains;
  prob.noise_mw = cfg.noise_mw;
  const int k_total = cfg.num_devices();
  prob.scale.resize(k_total);
  for (int k = 0; k < k_total; ++k)
    prob.scale(k) =
        cfg.bandwidth_hz * cfg.tx_time_s / (cfg.bits_per_sample[k] * std::log(2.0));
  prob.node_devices = cfg.node_devices;
  prob.dataset_caps = Eigen::Map<const Eigen::VectorXd>(cfg.dataset_caps.data(),
                                                        cfg.num_nodes);
  prob.initial_samples = Eigen::Map<const Eigen::VectorXd>(
      cfg.initial_samples.data(), cfg.num_nodes);
  prob.power_budget_mw = cfg.power_budget_mw;
  prob.validate();
  return prob;
}

std::vector<int> AllocationProblem::warmup_nodes(double xi2) const {
  std::vector<int> flagged;
  for (int i = 0; i < num_nodes(); ++i) {
    const double threshold =
        dataset_caps(i) - dataset_caps(i) / (2.0 * std::sqrt(xi2));
    if (initial_samples(i) < threshold) flagged.push_back(i);
  }
  return flagged;
}

double psi_global(const AllocationProblem& prob, const Eigen::VectorXd& p) {
  check_power(p, prob.num_devices(), "psi_global");
  Eigen::VectorXd t, u;
  row_sums(prob, p, t, u);
  double acc = 0.0;
  for (int k = 0; k < prob.num_devices(); ++k)
    acc += prob.scale(k) * (std::log(t(k)) - std::log(u(k)));
  return acc + prob.total_initial() - prob.total_cap();
}

double phi_global(const AllocationProblem& prob, const Eigen::VectorXd& p) {
  const double v = psi_global(prob, p);
  return v * v;
}

Eigen::VectorXd grad_psi_global(const AllocationProblem& prob,
                                const Eigen::VectorXd& p) {
  check_power(p, prob.num_devices(), "grad_psi_global");
  const int k_total = prob.num_devices();
  Eigen::VectorXd t, u;
  row_sums(prob, p, t, u);
  // d psi / d p_m = sum_k c_k G(k,m)/noise * (1/T_k - [m != k]/U_k)
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(k_total);
  for (int k = 0; k < k_total; ++k) {
    const double ck = prob.scale(k) / prob.noise_mw;
    for (int m = 0; m < k_total; ++m) {
      double term = prob.gains(k, m) / t(k);
      if (m != k) term -= prob.gains(k, m) / u(k);
      grad(m) += ck * term;
    }
  }
  return grad;
}

Eigen::VectorXd grad_phi_global(const AllocationProblem& prob,
                                const Eigen::VectorXd& p) {
  return 2.0 * psi_global(prob, p) * grad_psi_global(prob, p);
}

double collected_samples(const AllocationProblem& prob,
                         const Eigen::VectorXd& p) {
  return psi_global(prob, p) + prob.total_cap();
}

double psi_surrogate(const AllocationProblem& prob, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& p_star) {
  double acc = 0.0;
  for (int i = 0; i < prob.num_nodes(); ++i)
    acc += node_surrogate(prob, i, p, p_star);
  return acc;
}

double phi_surrogate(const AllocationProblem& prob, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& p_star) {
  const double v = psi_surrogate(prob, p, p_star);
  return v * v;
}

Eigen::VectorXd grad_psi_surrogate(const AllocationProblem& prob,
                                   const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& p_star) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(prob.num_devices());
  for (int i = 0; i < prob.num_nodes(); ++i)
    grad += grad_node_surrogate(prob, i, p, p_star);
  return grad;
}

Eigen::VectorXd grad_phi_surrogate(const AllocationProblem& prob,
                                   const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& p_star) {
  return 2.0 * psi_surrogate(prob, p, p_star) * grad_psi_surrogate(prob, p, p_star);
}

double node_surrogate(const AllocationProblem& prob, int node,
                      const Eigen::VectorXd& p, const Eigen::VectorXd& p_star) {
  if (node < 0 || node >= prob.num_nodes()) throw std::out_of_range("node index");
  check_power(p, prob.num_devices(), "node_surrogate");
  check_power(p_star, prob.num_devices(), "node_surrogate expansion point");
  Eigen::VectorXd t, u;
  row_sums(prob, p, t, u);
  Eigen::VectorXd t_star, u_star;
  row_sums(prob, p_star, t_star, u_star);

  double acc = 0.0;
  for (int k : prob.node_devices[node]) {
    // ln T_k(p) is kept exact; the concave -ln U_k is linearized at p_star.
    acc += prob.scale(k) *
           (std::log(t(k)) - std::log(u_star(k)) + 1.0 - u(k) / u_star(k));
  }
  return acc + prob.initial_samples(node) - prob.dataset_caps(node);
}

Eigen::VectorXd grad_node_surrogate(const AllocationProblem& prob, int node,
                                    const Eigen::VectorXd& p,
                                    const Eigen::VectorXd& p_star) {
  if (node < 0 || node >= prob.num_nodes()) throw std::out_of_range("node index");
  const int k_total = prob.num_devices();
  Eigen::VectorXd t, u;
  row_sums(prob, p, t, u);
  Eigen::VectorXd t_star, u_star;
  row_sums(prob, p_star, t_star, u_star);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(k_total);
  for (int k : prob.node_devices[node]) {
    const double ck = prob.scale(k) / prob.noise_mw;
    for (int m = 0; m < k_total; ++m) {
      double term = prob.gains(k, m) / t(k);
      if (m != k) term -= prob.gains(k, m) / u_star(k);
      grad(m) += ck * term;
    }
  }
  return grad;
}

AllocationProblem restrict_nodes(const AllocationProblem& prob,
                                 const std::vector<int>& keep_nodes,
                                 double budget) {
  std::vector<int> devices;
  for (int i : keep_nodes) {
    if (i < 0 || i >= prob.num_nodes()) throw std::out_of_range("node index");
    for (int dev : prob.node_devices[i]) devices.push_back(dev);
  }
  const int m = static_cast<int>(devices.size());
  AllocationProblem sub;
  sub.gains.resize(m, m);
  sub.scale.resize(m);
  for (int a = 0; a < m; ++a) {
    sub.scale(a) = prob.scale(devices[a]);
    for (int b = 0; b < m; ++b)
      sub.gains(a, b) = prob.gains(devices[a], devices[b]);
  }
  sub.noise_mw = prob.noise_mw;
  sub.dataset_caps.resize(keep_nodes.size());
  sub.initial_samples.resize(keep_nodes.size());
  int offset = 0;
  for (std::size_t j = 0; j < keep_nodes.size(); ++j) {
    const int i = keep_nodes[j];
    std::vector<int> group(prob.node_devices[i].size());
    for (std::size_t d = 0; d < group.size(); ++d) group[d] = offset + static_cast<int>(d);
    offset += static_cast<int>(group.size());
    sub.node_devices.push_back(std::move(group));
    sub.dataset_caps(static_cast<int>(j)) = prob.dataset_caps(i);
    sub.initial_samples(static_cast<int>(j)) = prob.initial_samples(i);
  }
  sub.power_budget_mw = budget;
  sub.enforce_surrogate_cap = prob.enforce_surrogate_cap;
  return sub;
}

Eigen::VectorXd embed_node(const AllocationProblem& prob, int node,
                           const Eigen::VectorXd& p_node,
                           const Eigen::VectorXd& reference) {
  if (node < 0 || node >= prob.num_nodes()) throw std::out_of_range("node index");
  const auto& devices = prob.node_devices[node];
  if (p_node.size() != static_cast<int>(devices.size()))
    throw std::invalid_argument("embed_node: node power dimension mismatch");
  Eigen::VectorXd full = reference;
  for (std::size_t j = 0; j < devices.size(); ++j) full(devices[j]) = p_node(j);
  return full;
}

double phi_node(const AllocationProblem& prob, int node,
                const Eigen::VectorXd& p_node,
                const Eigen::VectorXd& reference) {
  const Eigen::VectorXd full = embed_node(prob, node, p_node, reference);
  return node_surrogate(prob, node, full, reference);
}

Eigen::VectorXd grad_phi_node(const AllocationProblem& prob, int node,
                              const Eigen::VectorXd& p_node,
                              const Eigen::VectorXd& reference) {
  const Eigen::VectorXd full = embed_node(prob, node, p_node, reference);
  const Eigen::VectorXd grad_full = grad_node_surrogate(prob, node, full, reference);
  const auto& devices = prob.node_devices[node];
  Eigen::VectorXd grad(devices.size());
  for (std::size_t j = 0; j < devices.size(); ++j) grad(j) = grad_full(devices[j]);
  return grad;
}

}  // namespace felpa

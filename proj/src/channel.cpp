#include "felpa/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "felpa/errors.hpp"
#include "felpa/rng.hpp"

namespace felpa {

int NetworkConfig::num_devices() const {
  std::size_t k = 0;
  for (const auto& group : node_devices) k += group.size();
  return static_cast<int>(k);
}

int NetworkConfig::node_of_device(int k) const {
  for (int i = 0; i < static_cast<int>(node_devices.size()); ++i) {
    for (int dev : node_devices[i]) {
      if (dev == k) return i;
    }
  }
  throw ConfigError("device " + std::to_string(k) + " not in any node group");
}

void NetworkConfig::validate() const {
  if (num_nodes <= 0) throw ConfigError("num_nodes must be positive");
  if (static_cast<int>(node_devices.size()) != num_nodes)
    throw ConfigError("node_devices size does not match num_nodes");
  if (num_antennas <= 0) throw ConfigError("num_antennas must be positive");
  if (power_budget_mw <= 0) throw ConfigError("power_budget_mw must be positive");
  if (bandwidth_hz <= 0) throw ConfigError("bandwidth_hz must be positive");
  if (tx_time_s <= 0) throw ConfigError("tx_time_s must be positive");
  if (noise_mw <= 0) throw ConfigError("noise_mw must be positive");

  const int k_total = num_devices();
  if (k_total == 0) throw ConfigError("no devices configured");

  // node_devices must be an exact partition of {0..K-1}
  std::vector<int> seen(k_total, 0);
  for (const auto& group : node_devices) {
    if (group.empty()) throw ConfigError("empty device group");
    for (int dev : group) {
      if (dev < 0 || dev >= k_total)
        throw ConfigError("device index out of range: " + std::to_string(dev));
      if (seen[dev]++)
        throw ConfigError("device appears twice: " + std::to_string(dev));
    }
  }

  if (static_cast<int>(bits_per_sample.size()) != k_total)
    throw ConfigError("bits_per_sample must have one entry per device");
  if (static_cast<int>(path_loss.size()) != k_total)
    throw ConfigError("path_loss must have one entry per device");
  for (double v : bits_per_sample)
    if (v <= 0) throw ConfigError("bits_per_sample entries must be positive");
  for (double r : path_loss)
    if (r <= 0) throw ConfigError("path_loss entries must be positive");

  if (static_cast<int>(dataset_caps.size()) != num_nodes)
    throw ConfigError("dataset_caps must have one entry per node");
  if (static_cast<int>(initial_samples.size()) != num_nodes)
    throw ConfigError("initial_samples must have one entry per node");
  for (int i = 0; i < num_nodes; ++i) {
    if (initial_samples[i] < 0)
      throw ConfigError("initial_samples must be nonnegative");
    if (dataset_caps[i] < initial_samples[i])
      throw ConfigError("dataset cap below initial samples at node " +
                        std::to_string(i));
  }
}

Eigen::MatrixXd composite_gains(const std::vector<Eigen::VectorXcd>& fading,
                                const std::vector<double>& path_loss) {
  const int k_total = static_cast<int>(fading.size());
  Eigen::MatrixXd gains(k_total, k_total);
  std::vector<double> norm_sq(k_total);
  for (int k = 0; k < k_total; ++k) norm_sq[k] = fading[k].squaredNorm();

  for (int k = 0; k < k_total; ++k) {
    gains(k, k) = path_loss[k] * norm_sq[k];
    for (int l = 0; l < k_total; ++l) {
      if (l == k) continue;
      if (norm_sq[k] == 0.0) {
        gains(k, l) = 0.0;  // dead receiver channel, removed from active set later
        continue;
      }
      const std::complex<double> inner = fading[k].dot(fading[l]);
      gains(k, l) = path_loss[l] * std::norm(inner) / norm_sq[k];
    }
  }
  return gains;
}

ChannelState sample_channels(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int k_total = cfg.num_devices();
  Rng root(seed);
  ChannelState state;
  state.fading.reserve(k_total);
  for (int k = 0; k < k_total; ++k) {
    Rng stream = root.derive("channel.fading", static_cast<std::uint64_t>(k));
    Eigen::VectorXcd h(cfg.num_antennas);
    for (int n = 0; n < cfg.num_antennas; ++n) h(n) = stream.cnormal(1.0);
    state.fading.push_back(std::move(h));
  }
  state.gains = composite_gains(state.fading, cfg.path_loss);
  return state;
}

double rate(const Eigen::MatrixXd& gains, const Eigen::VectorXd& power_mw,
            double noise_mw, int k) {
  if (noise_mw <= 0) throw std::domain_error("noise power must be positive");
  if ((power_mw.array() < 0).any())
    throw std::domain_error("negative transmit power");
  if (k < 0 || k >= gains.rows()) throw std::out_of_range("device index");

  double interference = 0.0;
  for (int l = 0; l < gains.cols(); ++l) {
    if (l != k) interference += gains(k, l) * power_mw(l);
  }
  const double sinr = gains(k, k) * power_mw(k) / (interference + noise_mw);
  return std::log2(1.0 + sinr);
}

Eigen::VectorXd rates(const Eigen::MatrixXd& gains,
                      const Eigen::VectorXd& power_mw, double noise_mw) {
  Eigen::VectorXd out(gains.rows());
  for (int k = 0; k < gains.rows(); ++k) out(k) = rate(gains, power_mw, noise_mw, k);
  return out;
}

double sample_count(const Eigen::MatrixXd& gains,
                    const Eigen::VectorXd& power_mw, double noise_mw,
                    const NetworkConfig& cfg, int node, SampleMode mode) {
  if (node < 0 || node >= cfg.num_nodes) throw std::out_of_range("node index");
  double total = cfg.initial_samples[node];
  for (int dev : cfg.node_devices[node]) {
    const double r = rate(gains, power_mw, noise_mw, dev);
    const double samples =
        cfg.bandwidth_hz * cfg.tx_time_s * r / cfg.bits_per_sample[dev];
    total += (mode == SampleMode::kFloored) ? std::floor(samples) : samples;
  }
  return total;
}

}  // namespace felpa

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace felpa {

// Static scenario description of the uplink: I edge nodes, each serving a
// disjoint set of devices, one shared receive array per node with N antennas,
// a global transmit power budget and the sample-accounting constants.
struct NetworkConfig {
  int num_nodes = 0;                           // I
  std::vector<std::vector<int>> node_devices;  // K_i, 0-based, exact partition
  int num_antennas = 0;                        // N
  double power_budget_mw = 0.0;                // P
  double bandwidth_hz = 0.0;                   // B
  double tx_time_s = 0.0;                      // T
  std::vector<double> bits_per_sample;         // V_k, bits, one per device
  double noise_mw = 0.0;                       // sigma^2, linear mW
  std::vector<double> path_loss;               // rho_k, linear scale
  std::vector<double> dataset_caps;            // D_i per node
  std::vector<double> initial_samples;         // A_i per node
  std::uint64_t rng_seed = 0;

  int num_devices() const;
  // Node index owning device k; requires a valid partition.
  int node_of_device(int k) const;
  // Throws ConfigError on any invariant violation (partition not exact,
  // nonpositive physical constants, A_i > D_i, ...).
  void validate() const;
};

// One fading draw. `fading[k]` is the unit-variance fast-fading vector of
// device k; `gains` is the K x K composite matrix with
//   G(k,k) = rho_k * |h_k|^2
//   G(k,l) = rho_l * |h_k^H h_l|^2 / |h_k|^2   for l != k.
struct ChannelState {
  std::vector<Eigen::VectorXcd> fading;
  Eigen::MatrixXd gains;
};

Eigen::MatrixXd composite_gains(const std::vector<Eigen::VectorXcd>& fading,
                                const std::vector<double>& path_loss);

// Draws i.i.d. CN(0, I) fading for every device and fills the gain matrix.
// Deterministic for a fixed seed.
ChannelState sample_channels(const NetworkConfig& cfg, std::uint64_t seed);

// Achievable rate of device k in bit/s/Hz; interference sums over every
// other device in the network.
double rate(const Eigen::MatrixXd& gains, const Eigen::VectorXd& power_mw,
            double noise_mw, int k);

Eigen::VectorXd rates(const Eigen::MatrixXd& gains,
                      const Eigen::VectorXd& power_mw, double noise_mw);

enum class SampleMode {
  kContinuous,  // relaxed form used inside the optimizers
  kFloored      // per-device floor, used by the federated simulator
};

// Collected samples at node `node`: sum over its devices of B*T*R_k/V_k
// (floored per device in kFloored mode) plus the node's initial samples.
double sample_count(const Eigen::MatrixXd& gains,
                    const Eigen::VectorXd& power_mw, double noise_mw,
                    const NetworkConfig& cfg, int node, SampleMode mode);

}  // namespace felpa

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "felpa/channel.hpp"
#include "felpa/fedsim.hpp"
#include "felpa/lossmodel.hpp"

namespace felpa {

// Fully resolved experiment description: network, allocator and solver
// settings, task parameters, round count, seed list, output directory. Loaded
// from a flat `key = value` file with `#` comments; unknown keys are
// rejected. The canonical serialization (sorted keys, resolved defaults) is
// hashed into every artifact header so runs are exactly reproducible.
struct Scenario {
  NetworkConfig network;
  bool mb_binary = false;

  AllocatorKind allocator = AllocatorKind::kFom;
  MmSettings mm;
  bool mm_surrogate_cap = true;  // applied to problems built from this scenario
  FomSettings fom;
  int srm_restarts = 8;
  double srm_tol = 1e-9;

  int task_input_dim = 8;
  int task_classes = 3;
  double task_spread = 3.0;
  double task_noise = 1.0;

  SimOptions sim_options() const;
  int sim_rounds = 10;
  double sim_local_lr = 0.0;
  int sim_local_epochs = 5;
  bool sim_redraw_channels = false;
  double sim_a_min = 1.0;
  int sim_eval_size = 4000;

  BoundParams bound{0.0, 0.25, 1.0, 1.0};
  double bound_alpha = 0.0;
  int bound_t_max = 100;

  std::vector<std::uint64_t> seeds;  // defaults to {network.rng_seed}
  std::string out_dir = "out";

  static Scenario load(const std::string& path);       // IoError / ConfigError
  static Scenario parse(std::istream& in, const std::string& origin);

  std::vector<SyntheticTask> node_tasks() const;  // one generator per node

  std::string resolved_text() const;  // canonical key = value dump
  std::uint64_t hash() const;         // FNV-1a of resolved_text()
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace felpa

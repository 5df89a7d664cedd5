#include "felpa/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "felpa/errors.hpp"
#include "felpa/units.hpp"

namespace felpa {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

const char* kKnownKeys[] = {
    "nodes", "devices_per_node", "antennas", "power_budget_mw", "bandwidth_hz",
    "tx_time_s", "bits_per_sample_mb", "mb_binary", "noise_dbm", "path_loss_db",
    "dataset_caps", "initial_samples", "seed", "seeds", "allocator", "out_dir",
    "mm.outer_tol", "mm.inner_tol", "mm.max_outer", "mm.max_inner",
    "mm.inner_penalty", "mm.surrogate_cap", "fom.step", "fom.penalty",
    "fom.tol", "fom.max_iter", "fom.momentum", "fom.literal_init",
    "srm.restarts", "srm.tol", "task.input_dim", "task.classes", "task.spread",
    "task.noise", "sim.rounds", "sim.local_lr", "sim.local_epochs",
    "sim.redraw_channels", "sim.a_min", "sim.eval_size", "bound.xi1",
    "bound.xi2", "bound.lipschitz", "bound.initial_gap", "bound.alpha",
    "bound.t_max"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

class KeyValues {
 public:
  KeyValues(std::istream& in, const std::string& origin) : origin_(origin) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin_ + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) ==
          std::end(kKnownKeys))
        throw ConfigError(origin_ + ":" + std::to_string(line_no) +
                          ": unknown key '" + key + "'");
      if (values_.count(key))
        throw ConfigError(origin_ + ":" + std::to_string(line_no) +
                          ": duplicate key '" + key + "'");
      values_[key] = value;
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double number(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_number(key, it->second);
  }

  int integer(const std::string& key, int fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    const int i = static_cast<int>(std::llround(v));
    if (static_cast<double>(i) != v)
      throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
    return i;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(origin_ + ": key '" + key + "' must be true/false");
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::uint64_t out = 0;
    const std::string& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError(origin_ + ": key '" + key + "' must be a 64-bit seed");
    return out;
  }

  std::vector<double> number_list(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return {};
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty())
        throw ConfigError(origin_ + ": empty list element in '" + key + "'");
      out.push_back(parse_number(key, item));
    }
    return out;
  }

 private:
  double parse_number(const std::string& key, const std::string& text) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key '" + key + "' has a malformed number '" +
                        text + "'");
    }
  }

  std::string origin_;
  std::map<std::string, std::string> values_;
};

// Scalar broadcast or exact-length list.
std::vector<double> per_entry(const KeyValues& kv, const std::string& key,
                              int count, double fallback) {
  std::vector<double> list = kv.number_list(key);
  if (list.empty()) return std::vector<double>(count, fallback);
  if (list.size() == 1) return std::vector<double>(count, list[0]);
  if (static_cast<int>(list.size()) != count)
    throw ConfigError("key '" + key + "' needs 1 or " + std::to_string(count) +
                      " entries, got " + std::to_string(list.size()));
  return list;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  return parse(in, path);
}

Scenario Scenario::parse(std::istream& in, const std::string& origin) {
  KeyValues kv(in, origin);
  Scenario sc;

  const int nodes = kv.integer("nodes", 2);
  std::vector<double> per_node = kv.number_list("devices_per_node");
  if (per_node.empty()) per_node = {2.0};
  if (per_node.size() == 1) per_node.assign(nodes, per_node[0]);
  if (static_cast<int>(per_node.size()) != nodes)
    throw ConfigError("devices_per_node needs 1 or " + std::to_string(nodes) +
                      " entries");
  sc.network.num_nodes = nodes;
  int device = 0;
  for (int i = 0; i < nodes; ++i) {
    const int count = static_cast<int>(per_node[i]);
    if (count < 1 || static_cast<double>(count) != per_node[i])
      throw ConfigError("devices_per_node entries must be positive integers");
    std::vector<int> group(count);
    for (int j = 0; j < count; ++j) group[j] = device++;
    sc.network.node_devices.push_back(std::move(group));
  }
  const int k_total = device;

  sc.network.num_antennas = kv.integer("antennas", 4);
  sc.network.power_budget_mw = kv.number("power_budget_mw", 50.0);
  sc.network.bandwidth_hz = kv.number("bandwidth_hz", 4e6);
  sc.network.tx_time_s = kv.number("tx_time_s", 200.0);
  sc.mb_binary = kv.boolean("mb_binary", false);
  const std::vector<double> v_mb =
      per_entry(kv, "bits_per_sample_mb", k_total, 0.7);
  sc.network.bits_per_sample.clear();
  for (double mb : v_mb)
    sc.network.bits_per_sample.push_back(mb_to_bits(mb, sc.mb_binary));
  sc.network.noise_mw = dbm_to_mw(kv.number("noise_dbm", -77.0));
  const std::vector<double> rho_db =
      per_entry(kv, "path_loss_db", k_total, -90.0);
  sc.network.path_loss.clear();
  for (double db : rho_db) sc.network.path_loss.push_back(db_to_linear(db));
  sc.network.dataset_caps = per_entry(kv, "dataset_caps", nodes, 400.0);
  sc.network.initial_samples = per_entry(kv, "initial_samples", nodes, 50.0);
  sc.network.rng_seed = kv.unsigned64("seed", 1);

  sc.allocator = allocator_from_string(kv.str("allocator", "fom"));
  sc.mm.outer_tol = kv.number("mm.outer_tol", 1e-6);
  sc.mm.inner_tol = kv.number("mm.inner_tol", 1e-7);
  sc.mm.max_outer = kv.integer("mm.max_outer", 100);
  sc.mm.max_inner = kv.integer("mm.max_inner", 5000);
  sc.mm.inner_penalty = kv.number("mm.inner_penalty", 10.0);
  sc.mm_surrogate_cap = kv.boolean("mm.surrogate_cap", true);
  sc.fom.step = kv.number("fom.step", 1e-3);
  sc.fom.penalty = kv.number("fom.penalty", 1.0);
  sc.fom.tol = kv.number("fom.tol", 1e-4);
  sc.fom.max_iter = kv.integer("fom.max_iter", 20000);
  sc.fom.momentum = kv.boolean("fom.momentum", true);
  sc.fom.literal_uniform_init = kv.boolean("fom.literal_init", false);
  sc.srm_restarts = kv.integer("srm.restarts", 8);
  sc.srm_tol = kv.number("srm.tol", 1e-9);

  sc.task_input_dim = kv.integer("task.input_dim", 8);
  sc.task_classes = kv.integer("task.classes", 3);
  sc.task_spread = kv.number("task.spread", 3.0);
  sc.task_noise = kv.number("task.noise", 1.0);

  sc.sim_rounds = kv.integer("sim.rounds", 10);
  sc.sim_local_lr = kv.number("sim.local_lr", 0.0);
  sc.sim_local_epochs = kv.integer("sim.local_epochs", 5);
  sc.sim_redraw_channels = kv.boolean("sim.redraw_channels", false);
  sc.sim_a_min = kv.number("sim.a_min", 1.0);
  sc.sim_eval_size = kv.integer("sim.eval_size", 4000);

  sc.bound.xi1 = kv.number("bound.xi1", 0.0);
  sc.bound.xi2 = kv.number("bound.xi2", 0.25);
  sc.bound.lipschitz = kv.number("bound.lipschitz", 1.0);
  sc.bound.initial_gap = kv.number("bound.initial_gap", 1.0);
  sc.bound_alpha = kv.number("bound.alpha", 0.0);
  sc.bound_t_max = kv.integer("bound.t_max", 100);

  if (kv.has("seeds")) {
    for (double s : kv.number_list("seeds")) {
      if (s < 0 || static_cast<double>(static_cast<std::uint64_t>(s)) != s)
        throw ConfigError("seeds must be nonnegative integers");
      sc.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (sc.seeds.empty()) throw ConfigError("seeds list is empty");
  } else {
    sc.seeds = {sc.network.rng_seed};
  }
  sc.out_dir = kv.str("out_dir", "out");

  sc.network.validate();
  return sc;
}

SimOptions Scenario::sim_options() const {
  SimOptions opts;
  opts.allocator = allocator;
  opts.rounds = sim_rounds;
  opts.local_lr = sim_local_lr;
  opts.local_epochs = sim_local_epochs;
  opts.redraw_channels = sim_redraw_channels;
  opts.admission_min_samples = sim_a_min;
  opts.eval_size = sim_eval_size;
  opts.mm = mm;
  opts.fom = fom;
  opts.srm_restarts = srm_restarts;
  opts.srm_tol = srm_tol;
  return opts;
}

std::vector<SyntheticTask> Scenario::node_tasks() const {
  std::vector<SyntheticTask> tasks;
  for (int i = 0; i < network.num_nodes; ++i)
    tasks.push_back(SyntheticTask::make(task_input_dim, task_classes,
                                        task_spread, task_noise,
                                        network.rng_seed * 1000003ULL + i));
  return tasks;
}

std::string Scenario::resolved_text() const {
  std::map<std::string, std::string> kv;
  kv["nodes"] = std::to_string(network.num_nodes);
  {
    std::string s;
    for (std::size_t i = 0; i < network.node_devices.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(network.node_devices[i].size());
    }
    kv["devices_per_node"] = s;
  }
  kv["antennas"] = std::to_string(network.num_antennas);
  kv["power_budget_mw"] = fmt(network.power_budget_mw);
  kv["bandwidth_hz"] = fmt(network.bandwidth_hz);
  kv["tx_time_s"] = fmt(network.tx_time_s);
  {
    std::string s;
    for (std::size_t i = 0; i < network.bits_per_sample.size(); ++i) {
      if (i) s += ",";
      s += fmt(network.bits_per_sample[i]);
    }
    kv["bits_per_sample"] = s;
  }
  kv["mb_binary"] = mb_binary ? "true" : "false";
  kv["noise_mw"] = fmt(network.noise_mw);
  {
    std::string s;
    for (std::size_t i = 0; i < network.path_loss.size(); ++i) {
      if (i) s += ",";
      s += fmt(network.path_loss[i]);
    }
    kv["path_loss"] = s;
  }
  {
    std::string caps, init;
    for (std::size_t i = 0; i < network.dataset_caps.size(); ++i) {
      if (i) {
        caps += ",";
        init += ",";
      }
      caps += fmt(network.dataset_caps[i]);
      init += fmt(network.initial_samples[i]);
    }
    kv["dataset_caps"] = caps;
    kv["initial_samples"] = init;
  }
  kv["seed"] = std::to_string(network.rng_seed);
  kv["allocator"] = to_string(allocator);
  kv["mm.outer_tol"] = fmt(mm.outer_tol);
  kv["mm.inner_tol"] = fmt(mm.inner_tol);
  kv["mm.max_outer"] = std::to_string(mm.max_outer);
  kv["mm.max_inner"] = std::to_string(mm.max_inner);
  kv["mm.inner_penalty"] = fmt(mm.inner_penalty);
  kv["mm.surrogate_cap"] = mm_surrogate_cap ? "true" : "false";
  kv["fom.step"] = fmt(fom.step);
  kv["fom.penalty"] = fmt(fom.penalty);
  kv["fom.tol"] = fmt(fom.tol);
  kv["fom.max_iter"] = std::to_string(fom.max_iter);
  kv["fom.momentum"] = fom.momentum ? "true" : "false";
  kv["fom.literal_init"] = fom.literal_uniform_init ? "true" : "false";
  kv["srm.restarts"] = std::to_string(srm_restarts);
  kv["srm.tol"] = fmt(srm_tol);
  kv["task.input_dim"] = std::to_string(task_input_dim);
  kv["task.classes"] = std::to_string(task_classes);
  kv["task.spread"] = fmt(task_spread);
  kv["task.noise"] = fmt(task_noise);
  kv["sim.rounds"] = std::to_string(sim_rounds);
  kv["sim.local_lr"] = fmt(sim_local_lr);
  kv["sim.local_epochs"] = std::to_string(sim_local_epochs);
  kv["sim.redraw_channels"] = sim_redraw_channels ? "true" : "false";
  kv["sim.a_min"] = fmt(sim_a_min);
  kv["sim.eval_size"] = std::to_string(sim_eval_size);
  kv["bound.xi1"] = fmt(bound.xi1);
  kv["bound.xi2"] = fmt(bound.xi2);
  kv["bound.lipschitz"] = fmt(bound.lipschitz);
  kv["bound.initial_gap"] = fmt(bound.initial_gap);
  kv["bound.alpha"] = fmt(bound_alpha);
  kv["bound.t_max"] = std::to_string(bound_t_max);
  {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(seeds[i]);
    }
    kv["seeds"] = s;
  }
  kv["out_dir"] = out_dir;

  std::string text;
  for (const auto& [key, value] : kv) text += key + " = " + value + "\n";
  return text;
}

std::uint64_t Scenario::hash() const { return fnv1a64(resolved_text()); }

}  // namespace felpa

#pragma once

// Flat key-value experiment configuration. Lines are `key = value`, `#`
// starts a comment, lists are comma-separated. Unknown keys are rejected.
// serialize_config() emits keys in a fixed order so configs round-trip
// stably. Keys are documented in docs/config.md.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "bootbench/datagen.hpp"
#include "bootbench/dyn_model.hpp"
#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/eval_ns.hpp"
#include "bootbench/text.hpp"

namespace bootbench {

struct ExperimentConfig {
  std::string environment = "ball_in_cup";
  std::vector<Method> methods = {Method::RandomPolicy, Method::RandomActions,
                                 Method::Rarph};
  std::vector<int> budgets = {5, 10, 15, 20};
  std::vector<int> horizons;  // empty means {1, 20, H}
  int repetitions = 10;
  int action_repeat = 10;  // R
  TrainConfig train;
  NsConfig ns;
  int ns_suite_size = 50;
  double policy_weight_range = kDefaultPolicyWeightRange;
  std::uint64_t master_seed = 0;
  std::string out_dir;  // empty: $BOOTSTRAP_BENCH_OUT or ./bootbench_out
  int jobs = 1;
  int histogram_bins = 30;

  std::vector<int> resolved_horizons(const EnvSpec& spec) const {
    if (!horizons.empty()) return horizons;
    return {1, 20, spec.horizon};
  }

  void validate(const EnvSpec& spec) const {
    if (methods.empty()) throw ConfigError("config: methods list is empty");
    if (budgets.empty()) throw ConfigError("config: budgets list is empty");
    for (int b : budgets)
      if (b < 1) throw ConfigError("config: budgets must be positive");
    for (int h : resolved_horizons(spec))
      if (h < 1 || h > spec.horizon)
        throw ConfigError("config: horizons must lie in [1, " +
                          std::to_string(spec.horizon) + "]");
    if (repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
    if (action_repeat < 1 || spec.horizon % action_repeat != 0)
      throw ConfigError("config: horizon not divisible by action_repeat");
    if (ns_suite_size < 1 ||
        ns_suite_size > ns.generations * ns.archive_add_per_gen)
      throw ConfigError("config: ns.suite_size exceeds final archive size");
    if (policy_weight_range <= 0.0)
      throw ConfigError("config: policy_weight_range must be > 0");
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
    if (histogram_bins < 1)
      throw ConfigError("config: histogram_bins must be >= 1");
    train.validate();
    ns.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      value + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" +
                      value + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key,
                               const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key +
                      "' expects an unsigned integer, got '" + value + "'");
  }
}

inline std::vector<int> parse_int_list(const std::string& key,
                                       const std::string& value) {
  std::vector<int> out;
  for (const auto& item : split_list(value))
    out.push_back(static_cast<int>(parse_int(key, item)));
  if (out.empty())
    throw ConfigError("config: key '" + key + "' expects a non-empty list");
  return out;
}

}  // namespace detail

inline void apply_config_line(ExperimentConfig& cfg, const std::string& key,
                              const std::string& value) {
  using detail::parse_int;
  using detail::parse_int_list;
  using detail::parse_real;
  using detail::parse_u64;
  if (key == "env") {
    (void)env_name_from_string(value);  // validates
    cfg.environment = value;
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& m : detail::split_list(value))
      cfg.methods.push_back(method_from_string(m));
    if (cfg.methods.empty())
      throw ConfigError("config: methods list is empty");
  } else if (key == "budgets") {
    cfg.budgets = parse_int_list(key, value);
  } else if (key == "horizons") {
    cfg.horizons = parse_int_list(key, value);
  } else if (key == "repetitions") {
    cfg.repetitions = static_cast<int>(parse_int(key, value));
  } else if (key == "action_repeat") {
    cfg.action_repeat = static_cast<int>(parse_int(key, value));
  } else if (key == "master_seed") {
    cfg.master_seed = parse_u64(key, value);
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "jobs") {
    cfg.jobs = static_cast<int>(parse_int(key, value));
  } else if (key == "histogram_bins") {
    cfg.histogram_bins = static_cast<int>(parse_int(key, value));
  } else if (key == "policy_weight_range") {
    cfg.policy_weight_range = parse_real(key, value);
  } else if (key == "train.epochs") {
    cfg.train.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "train.learning_rate") {
    cfg.train.learning_rate = parse_real(key, value);
  } else if (key == "train.ensemble_size") {
    cfg.train.ensemble_size = static_cast<int>(parse_int(key, value));
  } else if (key == "train.bootstrap_fraction") {
    cfg.train.bootstrap_fraction = parse_real(key, value);
  } else if (key == "train.hidden") {
    cfg.train.hidden = parse_int_list(key, value);
  } else if (key == "train.logvar_min") {
    cfg.train.logvar_min = parse_real(key, value);
  } else if (key == "train.logvar_max") {
    cfg.train.logvar_max = parse_real(key, value);
  } else if (key == "ns.population") {
    cfg.ns.population_size = static_cast<int>(parse_int(key, value));
  } else if (key == "ns.generations") {
    cfg.ns.generations = static_cast<int>(parse_int(key, value));
  } else if (key == "ns.k_nearest") {
    cfg.ns.k_nearest = static_cast<int>(parse_int(key, value));
  } else if (key == "ns.mutation_std") {
    cfg.ns.mutation_std = parse_real(key, value);
  } else if (key == "ns.archive_add") {
    cfg.ns.archive_add_per_gen = static_cast<int>(parse_int(key, value));
  } else if (key == "ns.suite_size") {
    cfg.ns_suite_size = static_cast<int>(parse_int(key, value));
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    apply_config_line(cfg, key, value);
  }
  return cfg;
}

namespace detail {

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace detail

// Canonical text form; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string s;
  s += "env = " + cfg.environment + "\n";
  s += "methods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    if (i) s += ",";
    s += to_string(cfg.methods[i]);
  }
  s += "\n";
  s += "budgets = " + detail::join_ints(cfg.budgets) + "\n";
  if (!cfg.horizons.empty())
    s += "horizons = " + detail::join_ints(cfg.horizons) + "\n";
  s += "repetitions = " + std::to_string(cfg.repetitions) + "\n";
  s += "action_repeat = " + std::to_string(cfg.action_repeat) + "\n";
  s += "master_seed = " + std::to_string(cfg.master_seed) + "\n";
  s += "jobs = " + std::to_string(cfg.jobs) + "\n";
  s += "histogram_bins = " + std::to_string(cfg.histogram_bins) + "\n";
  s += "policy_weight_range = " +
       format_double(cfg.policy_weight_range) + "\n";
  s += "train.epochs = " + std::to_string(cfg.train.epochs) + "\n";
  s += "train.batch_size = " + std::to_string(cfg.train.batch_size) + "\n";
  s += "train.learning_rate = " + format_double(cfg.train.learning_rate) + "\n";
  s += "train.ensemble_size = " + std::to_string(cfg.train.ensemble_size) + "\n";
  s += "train.bootstrap_fraction = " +
       format_double(cfg.train.bootstrap_fraction) + "\n";
  s += "train.hidden = " + detail::join_ints(cfg.train.hidden) + "\n";
  s += "train.logvar_min = " + format_double(cfg.train.logvar_min) + "\n";
  s += "train.logvar_max = " + format_double(cfg.train.logvar_max) + "\n";
  s += "ns.population = " + std::to_string(cfg.ns.population_size) + "\n";
  s += "ns.generations = " + std::to_string(cfg.ns.generations) + "\n";
  s += "ns.k_nearest = " + std::to_string(cfg.ns.k_nearest) + "\n";
  s += "ns.mutation_std = " + format_double(cfg.ns.mutation_std) + "\n";
  s += "ns.archive_add = " + std::to_string(cfg.ns.archive_add_per_gen) + "\n";
  s += "ns.suite_size = " + std::to_string(cfg.ns_suite_size) + "\n";
  if (!cfg.out_dir.empty()) s += "out_dir = " + cfg.out_dir + "\n";
  return s;
}

}  // namespace bootbench

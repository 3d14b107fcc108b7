#pragma once

// Experiment orchestration: seeding, the repetition x method x budget grid,
// cell persistence with crash-resume, errors.csv / table.csv / histogram
// artifacts, and the run manifest. Every cell derives its own seeds from the
// master seed up front, so results are byte-identical regardless of how many
// worker threads execute the grid.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bootbench/config.hpp"
#include "bootbench/datagen.hpp"
#include "bootbench/dyn_model.hpp"
#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/eval_ns.hpp"
#include "bootbench/io.hpp"
#include "bootbench/metrics.hpp"
#include "bootbench/parallel.hpp"
#include "bootbench/rng.hpp"
#include "bootbench/text.hpp"

namespace bootbench {

inline constexpr const char* kVersionTag = "0.1.0";

// --- seed derivation scheme -------------------------------------------------

inline std::uint64_t ns_build_seed(std::uint64_t master,
                                   const std::string& env) {
  return derive_seed(master, {fnv1a(env), fnv1a("ns_build")});
}

inline std::uint64_t ns_pick_seed(std::uint64_t master,
                                  const std::string& env) {
  return derive_seed(master, {fnv1a(env), fnv1a("ns_pick")});
}

inline std::uint64_t cell_seed(std::uint64_t master, const std::string& env,
                               Method method, int budget, int repetition) {
  return derive_seed(master,
                     {fnv1a(env), static_cast<std::uint64_t>(method),
                      static_cast<std::uint64_t>(budget),
                      static_cast<std::uint64_t>(repetition)});
}

inline std::uint64_t cell_gather_seed(std::uint64_t cell) {
  return derive_seed(cell, {fnv1a("gather")});
}

inline std::uint64_t cell_fit_seed(std::uint64_t cell) {
  return derive_seed(cell, {fnv1a("fit")});
}

// Hash of the science-relevant configuration (everything that changes
// results; out_dir and jobs excluded). Used to validate resumed cell files.
inline std::uint64_t science_config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig canon = cfg;
  canon.out_dir.clear();
  canon.jobs = 1;
  const std::string text = std::string(kVersionTag) + "\n" +
                           serialize_config(canon);
  return fnv1a(text);
}

// --- cell results -----------------------------------------------------------

struct CellKey {
  Method method = Method::RandomPolicy;
  int budget = 0;
  int repetition = 0;
};

struct CellResult {
  CellKey key;
  std::vector<int> horizons;
  int n_traj = 0;
  // horizon-major: entry for (horizon index hi, trajectory t) at hi*n_traj+t
  std::vector<double> errors;
  std::vector<double> errors_outcome;
  std::vector<std::uint8_t> diverged;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  bool resumed = false;
  bool failed = false;
  std::string error_message;
};

// Replays every suite policy on the model from the suite episode's start
// state and scores prediction error at each horizon. Horizons are evaluated
// as prefixes of one maximal-length model rollout. Suite episodes shorter
// than a horizon are compared over their actual length. A rollout that goes
// non-finite before the compared prefix ends contributes the capped error
// (workspace diameter x compared steps) and is flagged as diverged.
inline CellResult evaluate_model_on_suite(const EnvSpec& spec,
                                          const EnsembleModel& model,
                                          const std::vector<NsEntry>& suite,
                                          std::vector<int> horizons) {
  if (suite.empty()) throw UsageError("evaluate: empty suite");
  if (horizons.empty()) throw UsageError("evaluate: no horizons");
  std::sort(horizons.begin(), horizons.end());
  CellResult out;
  out.horizons = horizons;
  out.n_traj = static_cast<int>(suite.size());
  const std::size_t n_cells = horizons.size() * suite.size();
  out.errors.assign(n_cells, 0.0);
  out.errors_outcome.assign(n_cells, 0.0);
  out.diverged.assign(n_cells, 0);

  const double full_diameter = spec.workspace_diameter();
  double outcome_sq = 0.0;
  for (int d : spec.outcome_dims) {
    const double r = spec.state_high[d] - spec.state_low[d];
    outcome_sq += r * r;
  }
  const double outcome_diameter = std::sqrt(outcome_sq);

  for (std::size_t ti = 0; ti < suite.size(); ++ti) {
    const Episode& truth = suite[ti].episode;
    const int n_truth = static_cast<int>(truth.n_transitions());
    const int n_roll = std::min(horizons.back(), n_truth);
    const ModelRollout roll =
        rollout_model_partial(model, spec, suite[ti].policy,
                              truth.states.front(), n_roll);
    // Cumulative per-step distances over the valid prefix.
    const int n_valid = static_cast<int>(roll.states.size()) - 1;
    std::vector<double> cum_full(n_valid + 1, 0.0), cum_out(n_valid + 1, 0.0);
    for (int t = 1; t <= n_valid; ++t) {
      double sq = 0.0;
      for (int d = 0; d < spec.state_dim; ++d) {
        const double diff = roll.states[t][d] - truth.states[t][d];
        sq += diff * diff;
      }
      cum_full[t] = cum_full[t - 1] + std::sqrt(sq);
      double sqo = 0.0;
      for (int d : spec.outcome_dims) {
        const double diff = roll.states[t][d] - truth.states[t][d];
        sqo += diff * diff;
      }
      cum_out[t] = cum_out[t - 1] + std::sqrt(sqo);
    }
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      const int compared = std::min(horizons[hi], n_truth);
      const std::size_t slot = hi * suite.size() + ti;
      if (roll.diverged_at &&
          static_cast<int>(*roll.diverged_at) <= compared) {
        out.errors[slot] = full_diameter * compared;
        out.errors_outcome[slot] = outcome_diameter * compared;
        out.diverged[slot] = 1;
      } else {
        out.errors[slot] = cum_full[compared] / compared;
        out.errors_outcome[slot] = cum_out[compared] / compared;
      }
    }
  }
  return out;
}

// --- cell file persistence ---------------------------------------------------

namespace detail {

inline std::string cell_file_name(const std::string& env, const CellKey& key) {
  return "cell_" + env + "_" + to_string(key.method) + "_b" +
         std::to_string(key.budget) + "_r" + std::to_string(key.repetition) +
         ".csv";
}

}  // namespace detail

// Self-validating cell artifact: header identifies the cell, its seed and the
// science-config hash; a trailing checksum covers the data rows. Doubles are
// stored as hex floats so the round-trip is exact.
inline std::string cell_to_csv(const std::string& env, const CellResult& cell,
                               std::uint64_t config_hash) {
  std::string data;
  for (std::size_t hi = 0; hi < cell.horizons.size(); ++hi) {
    for (int t = 0; t < cell.n_traj; ++t) {
      const std::size_t slot = hi * cell.n_traj + t;
      data += std::to_string(cell.horizons[hi]) + "," + std::to_string(t) +
              "," + format_double(cell.errors[slot], "%a") + "," +
              format_double(cell.errors_outcome[slot], "%a") + "," +
              (cell.diverged[slot] ? "1" : "0") + "\n";
    }
  }
  std::string out;
  out += "# bootbench-cell v1\n";
  out += "# env," + env + "\n";
  out += "# method," + to_string(cell.key.method) + "\n";
  out += "# budget," + std::to_string(cell.key.budget) + "\n";
  out += "# repetition," + std::to_string(cell.key.repetition) + "\n";
  out += "# seed," + std::to_string(cell.seed) + "\n";
  out += "# confighash," + std::to_string(config_hash) + "\n";
  out += "# columns,horizon,trajectory_id,error,error_outcome,diverged\n";
  out += data;
  out += "# checksum," + std::to_string(fnv1a(data)) + "\n";
  return out;
}

// Parses and validates a cell file. Returns nullopt if the file does not
// match the expected cell identity/seed/config or fails its checksum.
inline std::optional<CellResult> parse_cell_csv(
    const std::string& text, const std::string& env, const CellKey& expect,
    std::uint64_t expect_seed, std::uint64_t config_hash,
    const std::vector<int>& horizons, int n_traj) {
  std::map<std::string, std::string> header;
  std::string data;
  std::string checksum_line;
  std::stringstream ss(text);
  std::string line;
  bool version_ok = false;
  while (std::getline(ss, line)) {
    if (line.rfind("# bootbench-cell v1", 0) == 0) {
      version_ok = true;
    } else if (line.rfind("# checksum,", 0) == 0) {
      checksum_line = line.substr(std::string("# checksum,").size());
    } else if (line.rfind("# ", 0) == 0) {
      const auto comma = line.find(',');
      if (comma != std::string::npos)
        header[line.substr(2, comma - 2)] = line.substr(comma + 1);
    } else if (!line.empty()) {
      data += line + "\n";
    }
  }
  if (!version_ok || checksum_line.empty()) return std::nullopt;
  if (header["env"] != env || header["method"] != to_string(expect.method) ||
      header["budget"] != std::to_string(expect.budget) ||
      header["repetition"] != std::to_string(expect.repetition) ||
      header["seed"] != std::to_string(expect_seed) ||
      header["confighash"] != std::to_string(config_hash))
    return std::nullopt;
  if (checksum_line != std::to_string(fnv1a(data))) return std::nullopt;

  CellResult cell;
  cell.key = expect;
  cell.seed = expect_seed;
  cell.resumed = true;
  cell.horizons = horizons;
  cell.n_traj = n_traj;
  const std::size_t n_slots = horizons.size() * static_cast<std::size_t>(n_traj);
  cell.errors.assign(n_slots, 0.0);
  cell.errors_outcome.assign(n_slots, 0.0);
  cell.diverged.assign(n_slots, 0);
  std::vector<bool> seen(n_slots, false);
  std::stringstream ds(data);
  while (std::getline(ds, line)) {
    std::stringstream ls(line);
    std::string h, t, e, eo, dv;
    if (!std::getline(ls, h, ',') || !std::getline(ls, t, ',') ||
        !std::getline(ls, e, ',') || !std::getline(ls, eo, ',') ||
        !std::getline(ls, dv, ','))
      return std::nullopt;
    const auto hit = std::find(horizons.begin(), horizons.end(), std::stoi(h));
    if (hit == horizons.end()) return std::nullopt;
    const std::size_t hi = static_cast<std::size_t>(hit - horizons.begin());
    const int traj = std::stoi(t);
    if (traj < 0 || traj >= n_traj) return std::nullopt;
    const std::size_t slot = hi * n_traj + traj;
    if (seen[slot]) return std::nullopt;
    seen[slot] = true;
    cell.errors[slot] = std::strtod(e.c_str(), nullptr);
    cell.errors_outcome[slot] = std::strtod(eo.c_str(), nullptr);
    cell.diverged[slot] = dv == "1" ? 1 : 0;
  }
  for (bool s : seen)
    if (!s) return std::nullopt;
  return cell;
}

// --- errors.csv and aggregation ----------------------------------------------

inline std::string errors_csv_header() {
  return "env,method,budget,horizon,repetition,trajectory_id,error,diverged,"
         "error_outcome\n";
}

inline void append_errors_rows(std::string& csv, const std::string& env,
                               const CellResult& cell) {
  for (std::size_t hi = 0; hi < cell.horizons.size(); ++hi) {
    for (int t = 0; t < cell.n_traj; ++t) {
      const std::size_t slot = hi * cell.n_traj + t;
      csv += env + "," + to_string(cell.key.method) + "," +
             std::to_string(cell.key.budget) + "," +
             std::to_string(cell.horizons[hi]) + "," +
             std::to_string(cell.key.repetition) + "," + std::to_string(t) +
             "," + format_double(cell.errors[slot], "%.17g") + "," +
             (cell.diverged[slot] ? "1" : "0") + "," +
             format_double(cell.errors_outcome[slot], "%.17g") + "\n";
    }
  }
}

struct ErrorsRow {
  std::string env;
  Method method = Method::RandomPolicy;
  int budget = 0;
  int horizon = 0;
  int repetition = 0;
  int trajectory_id = 0;
  double error = 0.0;
  bool diverged = false;
  double error_outcome = 0.0;
};

inline std::vector<ErrorsRow> parse_errors_csv(const std::string& text) {
  std::vector<ErrorsRow> rows;
  std::stringstream ss(text);
  std::string line;
  bool first = true;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("env,", 0) == 0) continue;  // header
    }
    std::stringstream ls(line);
    std::string f[9];
    for (int i = 0; i < 9; ++i)
      if (!std::getline(ls, f[i], ','))
        throw ConfigError("errors.csv: malformed line: " + line);
    ErrorsRow row;
    row.env = f[0];
    row.method = method_from_string(f[1]);
    row.budget = std::stoi(f[2]);
    row.horizon = std::stoi(f[3]);
    row.repetition = std::stoi(f[4]);
    row.trajectory_id = std::stoi(f[5]);
    row.error = std::strtod(f[6].c_str(), nullptr);
    row.diverged = f[7] == "1";
    row.error_outcome = std::strtod(f[8].c_str(), nullptr);
    rows.push_back(row);
  }
  return rows;
}

// Aggregates per-trajectory errors into one MetricsRecord per
// (env, method, budget, horizon) cell: repetition means, then mean and
// population std across repetitions.
inline std::vector<MetricsRecord> aggregate_errors(
    const std::vector<ErrorsRow>& rows) {
  std::map<std::tuple<std::string, int, int, int>,
           std::map<int, std::vector<double>>>
      groups;
  std::map<std::tuple<std::string, int, int, int>, long long> divergences;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.env, static_cast<int>(r.method),
                                     r.budget, r.horizon);
    groups[key][r.repetition].push_back(r.error);
    divergences[key] += r.diverged ? 1 : 0;
  }
  std::vector<MetricsRecord> records;
  for (const auto& [key, reps] : groups) {
    std::vector<std::vector<double>> per_rep;
    per_rep.reserve(reps.size());
    for (const auto& [rep, errs] : reps) per_rep.push_back(errs);
    const AggregateResult agg = aggregate(per_rep);
    MetricsRecord rec;
    rec.environment = std::get<0>(key);
    rec.method = static_cast<Method>(std::get<1>(key));
    rec.budget = std::get<2>(key);
    rec.horizon = std::get<3>(key);
    rec.mean_error = agg.mean;
    rec.std_error = agg.stddev;
    rec.n_repetitions = static_cast<int>(reps.size());
    rec.divergence_count = divergences[key];
    records.push_back(rec);
  }
  return records;
}

// --- run orchestration --------------------------------------------------------

inline std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env_root = std::getenv("BOOTSTRAP_BENCH_OUT"))
    return env_root;
  return "bootbench_out";
}

struct RunSummary {
  std::filesystem::path out_dir;
  int failed_cells = 0;
  double total_seconds = 0.0;
  nlohmann::json manifest;
};

// Histograms of the training-data distribution over the outcome-space state
// dimensions and the action dimensions, for the maximum-budget datasets of
// every method, pooled over repetitions. Datasets are re-gathered from the
// same derived seeds the grid cells use. Emits one CSV (raw counts plus a
// per-method density column) and one SVG per dimension under out_dir/hist/.
inline std::vector<std::string> write_histograms(
    const EnvSpec& spec, const ExperimentConfig& cfg,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "hist");
  const int max_budget =
      *std::max_element(cfg.budgets.begin(), cfg.budgets.end());
  std::vector<std::string> hist_files;
  struct DimSpec {
    std::string label;
    double low, high;
    bool is_action;
    int dim;
  };
  std::vector<DimSpec> dims;
  for (int d : spec.outcome_dims)
    dims.push_back({"state" + std::to_string(d), spec.state_low[d],
                    spec.state_high[d], false, d});
  for (int d = 0; d < spec.action_dim; ++d)
    dims.push_back({"action" + std::to_string(d), spec.action_low[d],
                    spec.action_high[d], true, d});

  // method -> per-dim pooled samples
  std::vector<std::vector<std::vector<double>>> pooled(
      cfg.methods.size(), std::vector<std::vector<double>>(dims.size()));
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t seed = cell_gather_seed(
          cell_seed(cfg.master_seed, cfg.environment, cfg.methods[mi],
                    max_budget, rep));
      const Dataset ds = gather(spec, cfg.methods[mi], max_budget,
                                cfg.action_repeat, seed,
                                cfg.policy_weight_range);
      for (std::size_t di = 0; di < dims.size(); ++di) {
        const auto& dim = dims[di];
        auto& sink = pooled[mi][di];
        sink.reserve(sink.size() + ds.size());
        const double* base =
            dim.is_action ? ds.actions.data() : ds.states.data();
        const int stride = dim.is_action ? ds.action_dim : ds.state_dim;
        for (std::size_t s = 0; s < ds.size(); ++s)
          sink.push_back(base[s * stride + dim.dim]);
      }
    }
  }
  for (std::size_t di = 0; di < dims.size(); ++di) {
    const auto& dim = dims[di];
    std::vector<std::pair<std::string, Histogram>> by_method;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
      by_method.emplace_back(
          to_string(cfg.methods[mi]),
          histogram(pooled[mi][di], cfg.histogram_bins, dim.low, dim.high,
                    dim.label));
    std::string csv = "bin_low,bin_high";
    for (const auto& [name, h] : by_method) csv += ",count_" + name;
    for (const auto& [name, h] : by_method) csv += ",density_" + name;
    csv += "\n";
    const int n_bins = static_cast<int>(by_method.front().second.counts.size());
    for (int b = 0; b < n_bins; ++b) {
      csv += format_double(by_method.front().second.bin_edges[b]) + "," +
             format_double(by_method.front().second.bin_edges[b + 1]);
      for (const auto& [name, h] : by_method)
        csv += "," + std::to_string(h.counts[b]);
      for (const auto& [name, h] : by_method) {
        const long long total = h.total_in_range() + h.overflow;
        csv += "," + format_double(total == 0
                                       ? 0.0
                                       : static_cast<double>(h.counts[b]) /
                                             static_cast<double>(total));
      }
      csv += "\n";
    }
    const std::string base = "hist_" + cfg.environment + "_" + dim.label;
    write_text_file(out_dir / "hist" / (base + ".csv"), csv);
    write_text_file(
        out_dir / "hist" / (base + ".svg"),
        svg_histogram(cfg.environment + " " + dim.label + " (budget " +
                          std::to_string(max_budget) + ")",
                      by_method));
    hist_files.push_back("hist/" + base + ".csv");
    hist_files.push_back("hist/" + base + ".svg");
  }
  return hist_files;
}

namespace detail {

inline double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Builds the NS archive, or loads a previously built one if it matches the
// expected environment, seed, and NS configuration.
inline NsArchive build_or_load_archive(const EnvSpec& spec,
                                       const ExperimentConfig& cfg,
                                       const std::filesystem::path& path,
                                       std::uint64_t build_seed,
                                       bool& loaded) {
  NsConfig ns = cfg.ns;
  ns.policy_weight_range = cfg.policy_weight_range;
  loaded = false;
  if (std::filesystem::exists(path)) {
    try {
      ArchiveFile f = load_archive(path);
      if (f.env_name == cfg.environment && f.seed == build_seed &&
          f.config == ns &&
          f.archive.size() == static_cast<std::size_t>(
                                  ns.generations * ns.archive_add_per_gen)) {
        loaded = true;
        return std::move(f.archive);
      }
    } catch (const ConfigError&) {
      // rebuild below
    }
  }
  NsArchive archive = evolve(spec, ns, build_seed);
  save_archive(archive, cfg.environment, build_seed, ns, path);
  return archive;
}

}  // namespace detail

// Runs the full grid for one environment: builds or loads the frozen NS
// evaluation suite, computes (or resumes) every repetition x method x budget
// cell, then writes errors.csv, table.csv/table.txt, histograms of the
// maximum-budget datasets, and the run manifest. Fully deterministic from
// the master seed, independent of the jobs count.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const EnvSpec spec = make_env_spec(env_name_from_string(cfg.environment));
  cfg.validate(spec);

  const std::filesystem::path out_dir = resolve_out_dir(cfg);
  const std::filesystem::path cells_dir = out_dir / "cells";
  std::filesystem::create_directories(cells_dir);
  std::filesystem::create_directories(out_dir / "hist");

  const std::uint64_t config_hash = science_config_hash(cfg);
  const std::uint64_t build_seed = ns_build_seed(cfg.master_seed, cfg.environment);
  const std::uint64_t pick_seed = ns_pick_seed(cfg.master_seed, cfg.environment);

  // Frozen evaluation suite, shared by every cell.
  const auto t_ns = std::chrono::steady_clock::now();
  bool archive_loaded = false;
  const std::filesystem::path archive_path =
      out_dir / ("ns_archive_" + cfg.environment + ".bin");
  const NsArchive archive = detail::build_or_load_archive(
      spec, cfg, archive_path, build_seed, archive_loaded);
  const std::vector<NsEntry> suite =
      evaluation_suite(archive, cfg.ns_suite_size, pick_seed);
  const double ns_seconds = detail::seconds_since(t_ns);

  const std::vector<int> horizons = cfg.resolved_horizons(spec);

  std::vector<CellKey> keys;
  for (Method m : cfg.methods)
    for (int b : cfg.budgets)
      for (int r = 0; r < cfg.repetitions; ++r) keys.push_back({m, b, r});

  std::vector<CellResult> cells(keys.size());
  parallel_for(keys.size(), cfg.jobs, [&](std::size_t i) {
    const CellKey key = keys[i];
    const std::uint64_t seed =
        cell_seed(cfg.master_seed, cfg.environment, key.method, key.budget,
                  key.repetition);
    const std::filesystem::path cell_path =
        cells_dir / detail::cell_file_name(cfg.environment, key);
    CellResult& cell = cells[i];
    cell.key = key;
    cell.seed = seed;
    const auto t_cell = std::chrono::steady_clock::now();
    if (std::filesystem::exists(cell_path)) {
      if (auto resumed = parse_cell_csv(
              read_text_file(cell_path), cfg.environment, key, seed,
              config_hash, horizons, static_cast<int>(suite.size()))) {
        cell = *resumed;
        cell.seconds = detail::seconds_since(t_cell);
        return;
      }
    }
    try {
      const Dataset dataset =
          gather(spec, key.method, key.budget, cfg.action_repeat,
                 cell_gather_seed(seed), cfg.policy_weight_range);
      const EnsembleModel model =
          fit(dataset, cfg.train, cell_fit_seed(seed));
      CellResult computed = evaluate_model_on_suite(spec, model, suite, horizons);
      computed.key = key;
      computed.seed = seed;
      cell = std::move(computed);
      write_text_file(cell_path, cell_to_csv(cfg.environment, cell, config_hash));
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error_message = e.what();
    }
    cell.seconds = detail::seconds_since(t_cell);
  });

  // errors.csv in canonical grid order.
  std::string errors_csv = errors_csv_header();
  int failed = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (cells[i].failed) {
      ++failed;
      continue;
    }
    append_errors_rows(errors_csv, cfg.environment, cells[i]);
  }
  write_text_file(out_dir / "errors.csv", errors_csv);

  // Tables.
  std::string table_error;
  try {
    const std::vector<MetricsRecord> records =
        aggregate_errors(parse_errors_csv(errors_csv));
    const RenderedTable table = render_table(records);
    write_text_file(out_dir / "table.csv", table.csv);
    write_text_file(out_dir / "table.txt", table.text);
  } catch (const std::exception& e) {
    table_error = e.what();
  }

  // Histograms of the maximum-budget datasets, pooled over repetitions.
  const std::vector<std::string> hist_files =
      write_histograms(spec, cfg, out_dir);

  // Manifest.
  nlohmann::json manifest;
  manifest["version"] = kVersionTag;
  manifest["environment"] = cfg.environment;
  manifest["config"] = serialize_config(cfg);
  manifest["config_hash"] = config_hash;
  manifest["master_seed"] = cfg.master_seed;
  manifest["ns"] = {
      {"build_seed", build_seed},   {"pick_seed", pick_seed},
      {"archive_loaded", archive_loaded},
      {"archive_path", archive_path.filename().string()},
      {"archive_entries", archive.size()},
      {"suite_size", suite.size()}, {"seconds", ns_seconds},
  };
  manifest["horizons"] = horizons;
  nlohmann::json cell_list = nlohmann::json::array();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const CellResult& cell = cells[i];
    nlohmann::json c;
    c["method"] = to_string(cell.key.method);
    c["budget"] = cell.key.budget;
    c["repetition"] = cell.key.repetition;
    c["seed"] = cell.seed;
    c["file"] = "cells/" + detail::cell_file_name(cfg.environment, cell.key);
    c["seconds"] = cell.seconds;
    c["resumed"] = cell.resumed;
    c["failed"] = cell.failed;
    if (cell.failed) c["error"] = cell.error_message;
    cell_list.push_back(c);
  }
  manifest["cells"] = cell_list;
  manifest["artifacts"] = {
      {"errors_csv", "errors.csv"},
      {"table_csv", "table.csv"},
      {"table_txt", "table.txt"},
      {"histograms", hist_files},
  };
  if (!table_error.empty()) manifest["table_error"] = table_error;
  manifest["failed_cells"] = failed;
  manifest["total_seconds"] = detail::seconds_since(t_start);
  write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

  RunSummary summary;
  summary.out_dir = out_dir;
  summary.failed_cells = failed;
  summary.total_seconds = detail::seconds_since(t_start);
  summary.manifest = std::move(manifest);
  return summary;
}

}  // namespace bootbench

// Command-line surface for the bootstrap benchmark. Subcommands cover the
// full pipeline (run) and its individual stages (gather, train, evaluate,
// ns, report). Exit codes: 0 success, 1 usage, 2 config, 3 runtime failures.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bootbench/bootbench.hpp"

namespace fs = std::filesystem;
using namespace bootbench;

namespace {

ExperimentConfig load_config_file(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return parse_config(read_text_file(path));
}

int cmd_run(const ExperimentConfig& cfg) {
  const RunSummary summary = run_experiment(cfg);
  std::printf("run: wrote %s (%d failed cells, %.1f s)\n",
              summary.out_dir.string().c_str(), summary.failed_cells,
              summary.total_seconds);
  if (summary.failed_cells > 0) {
    std::fprintf(stderr, "run: %d cell(s) failed; see run_manifest.json\n",
                 summary.failed_cells);
    return 3;
  }
  return 0;
}

int cmd_gather(const ExperimentConfig& cfg, const std::string& env_name,
               const std::string& method_name, int budget,
               std::uint64_t seed, const std::string& out_file) {
  const EnvSpec spec = make_env_spec(env_name_from_string(env_name));
  const Method method = method_from_string(method_name);
  const Dataset ds = gather(spec, method, budget, cfg.action_repeat, seed,
                            cfg.policy_weight_range);
  save_dataset(ds, env_name, method, cfg.action_repeat, seed, out_file);
  std::printf("gather: %zu samples from %d episodes -> %s\n", ds.size(),
              budget, out_file.c_str());
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data_file,
              std::uint64_t seed, const std::string& out_file) {
  const DatasetFile df = load_dataset(data_file);
  const EnsembleModel model = fit(df.dataset, cfg.train, seed);
  save_model(model, df.env_name, out_file);
  std::printf("train: %d members on %zu samples -> %s\n",
              cfg.train.ensemble_size, df.dataset.size(), out_file.c_str());
  return 0;
}

int cmd_evaluate(const std::string& model_file, const std::string& archive_file,
                 int suite_size, std::uint64_t suite_seed,
                 std::vector<int> horizons, const std::string& out_file) {
  const ModelFile mf = load_model(model_file);
  const ArchiveFile af = load_archive(archive_file);
  const EnvSpec spec = make_env_spec(env_name_from_string(af.env_name));
  const std::vector<NsEntry> suite =
      evaluation_suite(af.archive, suite_size, suite_seed);
  if (horizons.empty()) horizons = {1, 20, spec.horizon};
  const CellResult cell =
      evaluate_model_on_suite(spec, mf.model, suite, horizons);
  std::string csv = "horizon,trajectory_id,error,error_outcome,diverged\n";
  for (std::size_t hi = 0; hi < cell.horizons.size(); ++hi)
    for (int t = 0; t < cell.n_traj; ++t) {
      const std::size_t slot = hi * cell.n_traj + t;
      csv += std::to_string(cell.horizons[hi]) + "," + std::to_string(t) +
             "," + format_double(cell.errors[slot], "%a") + "," +
             format_double(cell.errors_outcome[slot], "%a") + "," +
             (cell.diverged[slot] ? "1" : "0") + "\n";
    }
  write_text_file(out_file, csv);
  std::printf("evaluate: %d trajectories x %zu horizons -> %s\n", cell.n_traj,
              cell.horizons.size(), out_file.c_str());
  return 0;
}

int cmd_ns(const ExperimentConfig& cfg, const std::string& env_name,
           std::uint64_t seed, const std::string& out_file) {
  const EnvSpec spec = make_env_spec(env_name_from_string(env_name));
  NsConfig ns = cfg.ns;
  ns.policy_weight_range = cfg.policy_weight_range;
  const NsArchive archive = evolve(spec, ns, seed);
  save_archive(archive, env_name, seed, ns, out_file);
  std::printf("ns: archive with %zu entries -> %s\n", archive.size(),
              out_file.c_str());
  return 0;
}

int cmd_report(const ExperimentConfig& cfg, bool config_given,
               const std::string& errors_file, const std::string& out_dir,
               bool with_hist) {
  const std::vector<ErrorsRow> rows =
      parse_errors_csv(read_text_file(errors_file));
  if (rows.empty()) throw ReportError("report: errors.csv has no rows");
  std::vector<MetricsRecord> records = aggregate_errors(rows);

  // Completeness against the configured grid.
  std::string env = config_given ? cfg.environment : rows.front().env;
  const EnvSpec spec = make_env_spec(env_name_from_string(env));
  std::vector<std::string> missing;
  for (int b : cfg.budgets)
    for (int h : cfg.resolved_horizons(spec))
      for (Method m : cfg.methods) {
        bool found = false;
        for (const auto& r : records)
          if (r.environment == env && r.budget == b && r.horizon == h &&
              r.method == m) {
            found = true;
            break;
          }
        if (!found)
          missing.push_back("(budget=" + std::to_string(b) +
                            ", horizon=" + std::to_string(h) +
                            ", method=" + to_string(m) + ")");
      }
  if (!missing.empty()) {
    std::string msg = "report: missing grid cells:";
    for (const auto& m : missing) msg += " " + m;
    throw ReportError(msg);
  }

  const RenderedTable table = render_table(records);
  const fs::path out = out_dir.empty()
                           ? fs::path(errors_file).parent_path()
                           : fs::path(out_dir);
  fs::create_directories(out.empty() ? fs::path(".") : out);
  write_text_file(out / "table.csv", table.csv);
  write_text_file(out / "table.txt", table.text);
  std::printf("report: wrote %s and %s\n", (out / "table.csv").string().c_str(),
              (out / "table.txt").string().c_str());
  if (with_hist) {
    ExperimentConfig hist_cfg = cfg;
    hist_cfg.environment = env;
    const auto files = write_histograms(spec, hist_cfg, out);
    std::printf("report: wrote %zu histogram files under %s/hist\n",
                files.size(), out.string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bootstrap-bench: measures how the bootstrap data-gathering "
               "strategy (random policies, random actions, or the RARPH "
               "hybrid) affects learned dynamics-model prediction error"};
  app.require_subcommand(1);

  std::string config_path, env_name, out_path, method_name;
  std::string data_file, model_file, archive_file, errors_file;
  std::uint64_t seed = 0;
  int jobs = 0, budget = 5, suite_size = 50;
  std::vector<int> horizons;
  bool with_hist = false;

  auto* run_cmd = app.add_subcommand("run", "Run the full experiment grid");
  auto* run_config = run_cmd->add_option("--config", config_path,
                                         "Experiment config file");
  auto* run_seed = run_cmd->add_option("--seed", seed, "Master seed override");
  auto* run_env = run_cmd->add_option("--env", env_name,
                                      "Environment name override");
  auto* run_out = run_cmd->add_option("--out", out_path,
                                      "Output directory override");
  auto* run_jobs = run_cmd->add_option("--jobs", jobs,
                                       "Max concurrent grid cells");

  auto* gather_cmd =
      app.add_subcommand("gather", "Gather one bootstrap dataset");
  gather_cmd->add_option("--config", config_path, "Experiment config file");
  gather_cmd->add_option("--env", env_name, "Environment name");
  gather_cmd->add_option("--method", method_name, "Data-gathering method")
      ->required();
  gather_cmd->add_option("--budget", budget, "Number of episodes")->required();
  gather_cmd->add_option("--seed", seed, "Gather seed")->required();
  gather_cmd->add_option("--out", out_path, "Output dataset file")->required();

  auto* train_cmd =
      app.add_subcommand("train", "Fit an ensemble model from a dataset file");
  train_cmd->add_option("--config", config_path, "Experiment config file");
  train_cmd->add_option("--data", data_file, "Dataset file")->required();
  train_cmd->add_option("--seed", seed, "Training seed")->required();
  train_cmd->add_option("--out", out_path, "Output model file")->required();

  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Score a model against an NS evaluation suite");
  eval_cmd->add_option("--model", model_file, "Model file")->required();
  eval_cmd->add_option("--archive", archive_file, "NS archive file")
      ->required();
  eval_cmd->add_option("--suite-size", suite_size, "Evaluation suite size");
  auto* eval_seed =
      eval_cmd->add_option("--suite-seed", seed, "Suite selection seed");
  eval_cmd->add_option("--horizons", horizons, "Prediction horizons")
      ->delimiter(',');
  eval_cmd->add_option("--out", out_path, "Output errors CSV")->required();

  auto* ns_cmd =
      app.add_subcommand("ns", "Build the NS evaluation archive");
  ns_cmd->add_option("--config", config_path, "Experiment config file");
  ns_cmd->add_option("--env", env_name, "Environment name")->required();
  ns_cmd->add_option("--seed", seed, "NS build seed")->required();
  ns_cmd->add_option("--out", out_path, "Output archive file")->required();

  auto* report_cmd = app.add_subcommand(
      "report", "Render tables (and optionally histograms) from errors.csv");
  auto* report_config =
      report_cmd->add_option("--config", config_path, "Experiment config file");
  report_cmd->add_option("--errors", errors_file, "errors.csv path")
      ->required();
  report_cmd->add_option("--out", out_path, "Output directory");
  report_cmd->add_flag("--hist", with_hist,
                       "Also regenerate data-distribution histograms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      ExperimentConfig cfg = load_config_file(config_path);
      if (run_seed->count()) cfg.master_seed = seed;
      if (run_env->count()) cfg.environment = env_name;
      if (run_out->count()) cfg.out_dir = out_path;
      if (run_jobs->count()) cfg.jobs = jobs;
      (void)run_config;
      return cmd_run(cfg);
    }
    if (gather_cmd->parsed()) {
      ExperimentConfig cfg = load_config_file(config_path);
      const std::string env = env_name.empty() ? cfg.environment : env_name;
      return cmd_gather(cfg, env, method_name, budget, seed, out_path);
    }
    if (train_cmd->parsed()) {
      ExperimentConfig cfg = load_config_file(config_path);
      return cmd_train(cfg, data_file, seed, out_path);
    }
    if (eval_cmd->parsed()) {
      if (!eval_seed->count())
        throw UsageError("evaluate: --suite-seed is required");
      return cmd_evaluate(model_file, archive_file, suite_size, seed, horizons,
                          out_path);
    }
    if (ns_cmd->parsed()) {
      ExperimentConfig cfg = load_config_file(config_path);
      return cmd_ns(cfg, env_name, seed, out_path);
    }
    if (report_cmd->parsed()) {
      ExperimentConfig cfg = load_config_file(config_path);
      return cmd_report(cfg, report_config->count() > 0, errors_file, out_path,
                        with_hist);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const ReportError& e) {
    std::fprintf(stderr, "report error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}

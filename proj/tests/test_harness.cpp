#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "bootbench/harness.hpp"

using namespace bootbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bootbench_harness_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter;
};
int TempDir::counter = 0;

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.environment = "ball_in_cup";
  cfg.budgets = {2};
  cfg.repetitions = 2;
  cfg.master_seed = 777;
  cfg.train.epochs = 5;
  cfg.train.batch_size = 32;
  cfg.train.ensemble_size = 2;
  cfg.train.hidden = {8, 8};
  cfg.ns.population_size = 8;
  cfg.ns.generations = 3;
  cfg.ns.k_nearest = 3;
  cfg.ns.archive_add_per_gen = 2;
  cfg.ns_suite_size = 4;
  cfg.out_dir = out.string();
  cfg.jobs = 1;
  return cfg;
}

}  // namespace

TEST_CASE("run_experiment produces the full artifact tree") {
  TempDir tmp;
  const ExperimentConfig cfg = small_config(tmp.path / "run");
  const RunSummary summary = run_experiment(cfg);
  REQUIRE(summary.failed_cells == 0);
  REQUIRE(fs::exists(summary.out_dir / "errors.csv"));
  REQUIRE(fs::exists(summary.out_dir / "table.csv"));
  REQUIRE(fs::exists(summary.out_dir / "table.txt"));
  REQUIRE(fs::exists(summary.out_dir / "run_manifest.json"));
  REQUIRE(fs::exists(summary.out_dir / "ns_archive_ball_in_cup.bin"));
  // 6 cells
  int cell_files = 0;
  for (const auto& entry : fs::directory_iterator(summary.out_dir / "cells"))
    if (entry.path().extension() == ".csv") ++cell_files;
  REQUIRE(cell_files == 6);
  // 3 outcome dims + 3 action dims, csv + svg each
  int hist_files = 0;
  for (const auto& entry : fs::directory_iterator(summary.out_dir / "hist"))
    ++hist_files;
  REQUIRE(hist_files == 12);

  // errors.csv: 6 cells x 3 horizons x 4 trajectories
  const auto rows = parse_errors_csv(read_text_file(summary.out_dir / "errors.csv"));
  REQUIRE(rows.size() == 72u);
  for (const auto& r : rows) {
    REQUIRE(r.env == "ball_in_cup");
    REQUIRE(r.error >= 0.0);
    REQUIRE(r.repetition < 2);
    REQUIRE(r.trajectory_id < 4);
  }
  // aggregation covers the grid with 2 repetitions each
  const auto records = aggregate_errors(rows);
  REQUIRE(records.size() == 9u);
  for (const auto& rec : records) REQUIRE(rec.n_repetitions == 2);
  // manifest sanity
  REQUIRE(summary.manifest["failed_cells"] == 0);
  REQUIRE(summary.manifest["ns"]["archive_loaded"] == false);
  REQUIRE(summary.manifest["cells"].size() == 6);
}

TEST_CASE("equal master seeds give byte-identical outputs, independent of jobs") {
  TempDir tmp;
  ExperimentConfig cfg1 = small_config(tmp.path / "a");
  const RunSummary s1 = run_experiment(cfg1);
  ExperimentConfig cfg2 = small_config(tmp.path / "b");
  cfg2.jobs = 4;
  const RunSummary s2 = run_experiment(cfg2);
  REQUIRE(read_text_file(s1.out_dir / "errors.csv") ==
          read_text_file(s2.out_dir / "errors.csv"));
  REQUIRE(read_text_file(s1.out_dir / "table.csv") ==
          read_text_file(s2.out_dir / "table.csv"));
  REQUIRE(read_text_file(s1.out_dir / "table.txt") ==
          read_text_file(s2.out_dir / "table.txt"));

  ExperimentConfig cfg3 = small_config(tmp.path / "c");
  cfg3.master_seed = 778;
  const RunSummary s3 = run_experiment(cfg3);
  REQUIRE(read_text_file(s1.out_dir / "errors.csv") !=
          read_text_file(s3.out_dir / "errors.csv"));
}

TEST_CASE("crash-resume skips valid cells and recomputes corrupt ones") {
  TempDir tmp;
  const ExperimentConfig cfg = small_config(tmp.path / "run");
  const RunSummary first = run_experiment(cfg);
  const std::string errors_before =
      read_text_file(first.out_dir / "errors.csv");

  // corrupt one cell artifact, remove the aggregate outputs
  fs::path corrupt;
  for (const auto& entry : fs::directory_iterator(first.out_dir / "cells")) {
    corrupt = entry.path();
    break;
  }
  write_text_file(corrupt, "garbage\n");
  fs::remove(first.out_dir / "errors.csv");
  fs::remove(first.out_dir / "table.csv");

  const RunSummary second = run_experiment(cfg);
  REQUIRE(second.failed_cells == 0);
  REQUIRE(read_text_file(second.out_dir / "errors.csv") == errors_before);
  // five cells resumed, one recomputed; the archive was loaded from disk
  int resumed = 0;
  for (const auto& cell : second.manifest["cells"])
    if (cell["resumed"] == true) ++resumed;
  REQUIRE(resumed == 5);
  REQUIRE(second.manifest["ns"]["archive_loaded"] == true);
}

TEST_CASE("a changed science config invalidates existing cell artifacts") {
  TempDir tmp;
  ExperimentConfig cfg = small_config(tmp.path / "run");
  run_experiment(cfg);
  cfg.train.epochs = 6;  // science-relevant change
  const RunSummary second = run_experiment(cfg);
  for (const auto& cell : second.manifest["cells"])
    REQUIRE(cell["resumed"] == false);
}

TEST_CASE("horizon-1 errors equal direct one-step prediction errors") {
  TempDir tmp;
  const ExperimentConfig cfg = small_config(tmp.path / "run");
  const RunSummary summary = run_experiment(cfg);
  const auto rows = parse_errors_csv(read_text_file(summary.out_dir / "errors.csv"));

  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  // reconstruct the frozen suite exactly as the run did
  const ArchiveFile af =
      load_archive(summary.out_dir / "ns_archive_ball_in_cup.bin");
  const auto suite = evaluation_suite(
      af.archive, cfg.ns_suite_size, ns_pick_seed(cfg.master_seed, "ball_in_cup"));

  const Method method = Method::RandomActions;
  const int rep = 1;
  const std::uint64_t seed =
      cell_seed(cfg.master_seed, "ball_in_cup", method, 2, rep);
  const Dataset ds = gather(spec, method, 2, cfg.action_repeat,
                            cell_gather_seed(seed), cfg.policy_weight_range);
  const EnsembleModel model = fit(ds, cfg.train, cell_fit_seed(seed));

  for (std::size_t ti = 0; ti < suite.size(); ++ti) {
    const Episode& truth = suite[ti].episode;
    const std::vector<double> action =
        policy_action(spec, suite[ti].policy, truth.states[0]);
    const std::vector<double> pred = predict_step(model, truth.states[0], action);
    double sq = 0.0;
    for (int d = 0; d < spec.state_dim; ++d) {
      const double diff = pred[d] - truth.states[1][d];
      sq += diff * diff;
    }
    const double want = std::sqrt(sq);
    bool found = false;
    for (const auto& r : rows)
      if (r.method == method && r.repetition == rep && r.horizon == 1 &&
          r.trajectory_id == static_cast<int>(ti)) {
        REQUIRE(r.error == want);
        found = true;
      }
    REQUIRE(found);
  }
}

TEST_CASE("library-level pipeline composition matches the run's cell files") {
  TempDir tmp;
  const ExperimentConfig cfg = small_config(tmp.path / "run");
  const RunSummary summary = run_experiment(cfg);

  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  const ArchiveFile af =
      load_archive(summary.out_dir / "ns_archive_ball_in_cup.bin");
  const auto suite = evaluation_suite(
      af.archive, cfg.ns_suite_size, ns_pick_seed(cfg.master_seed, "ball_in_cup"));

  for (Method method :
       {Method::RandomPolicy, Method::RandomActions, Method::Rarph}) {
    for (int rep = 0; rep < 2; ++rep) {
      const std::uint64_t seed =
          cell_seed(cfg.master_seed, "ball_in_cup", method, 2, rep);
      // compose the stages through files, as the CLI does
      const fs::path data_file = tmp.path / "compose_data.bin";
      const fs::path model_file = tmp.path / "compose_model.bin";
      const Dataset ds = gather(spec, method, 2, cfg.action_repeat,
                                cell_gather_seed(seed), cfg.policy_weight_range);
      save_dataset(ds, "ball_in_cup", method, cfg.action_repeat,
                   cell_gather_seed(seed), data_file);
      const DatasetFile df = load_dataset(data_file);
      const EnsembleModel model =
          fit(df.dataset, cfg.train, cell_fit_seed(seed));
      save_model(model, "ball_in_cup", model_file);
      const ModelFile mf = load_model(model_file);
      const CellResult composed = evaluate_model_on_suite(
          spec, mf.model, suite, cfg.resolved_horizons(spec));

      CellKey key{method, 2, rep};
      const auto resumed = parse_cell_csv(
          read_text_file(summary.out_dir / "cells" /
                         ("cell_ball_in_cup_" + to_string(method) + "_b2_r" +
                          std::to_string(rep) + ".csv")),
          "ball_in_cup", key, seed, science_config_hash(cfg),
          cfg.resolved_horizons(spec), static_cast<int>(suite.size()));
      REQUIRE(resumed.has_value());
      REQUIRE(resumed->errors == composed.errors);
      REQUIRE(resumed->errors_outcome == composed.errors_outcome);
      REQUIRE(resumed->diverged == composed.diverged);
    }
  }
}

TEST_CASE("BOOTSTRAP_BENCH_OUT provides the default output root") {
  ExperimentConfig cfg;
  cfg.out_dir.clear();
  ::setenv("BOOTSTRAP_BENCH_OUT", "/tmp/bootbench_env_root", 1);
  REQUIRE(resolve_out_dir(cfg) == fs::path("/tmp/bootbench_env_root"));
  ::unsetenv("BOOTSTRAP_BENCH_OUT");
  REQUIRE(resolve_out_dir(cfg) == fs::path("bootbench_out"));
  cfg.out_dir = "explicit";
  REQUIRE(resolve_out_dir(cfg) == fs::path("explicit"));
}

TEST_CASE("cell files round-trip through parse_cell_csv") {
  CellResult cell;
  cell.key = {Method::Rarph, 5, 3};
  cell.horizons = {1, 20};
  cell.n_traj = 2;
  cell.errors = {0.125, 3.5e-7, 1.0 / 3.0, 2e10};
  cell.errors_outcome = {0.1, 0.2, 0.3, 0.4};
  cell.diverged = {0, 0, 1, 0};
  cell.seed = 987654321;
  const std::string csv = cell_to_csv("redundant_arm", cell, 42);
  const auto back = parse_cell_csv(csv, "redundant_arm", cell.key, cell.seed,
                                   42, cell.horizons, cell.n_traj);
  REQUIRE(back.has_value());
  REQUIRE(back->errors == cell.errors);
  REQUIRE(back->errors_outcome == cell.errors_outcome);
  REQUIRE(back->diverged == cell.diverged);
  // identity mismatches are rejected
  REQUIRE(!parse_cell_csv(csv, "ball_in_cup", cell.key, cell.seed, 42,
                          cell.horizons, cell.n_traj)
               .has_value());
  REQUIRE(!parse_cell_csv(csv, "redundant_arm", cell.key, cell.seed + 1, 42,
                          cell.horizons, cell.n_traj)
               .has_value());
  REQUIRE(!parse_cell_csv(csv, "redundant_arm", cell.key, cell.seed, 43,
                          cell.horizons, cell.n_traj)
               .has_value());
  // checksum damage is rejected
  std::string damaged = csv;
  damaged.replace(damaged.find("0x1p-3"), 6, "0x1p-2");
  REQUIRE(!parse_cell_csv(damaged, "redundant_arm", cell.key, cell.seed, 42,
                          cell.horizons, cell.n_traj)
               .has_value());
}

TEST_CASE("divergence capping uses workspace diameter times compared steps") {
  // A model that explodes immediately: every horizon slot is capped and
  // flagged as diverged.
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  EnsembleModel model;
  model.state_dim = 6;
  model.action_dim = 3;
  model.input_norm.mean.assign(9, 0.0);
  model.input_norm.stddev.assign(9, 1.0);
  model.delta_norm.mean.assign(6, 0.0);
  model.delta_norm.stddev.assign(6, 1.0);
  for (int m = 0; m < 2; ++m) {
    MlpParams p = mlp_init({9, 4, 12}, Activation::Tanh, m);
    for (auto& layer : p.weights) std::fill(layer.begin(), layer.end(), 0.0);
    p.biases[1][0] = 1e308;  // mean head explodes at once
    model.members.push_back(std::move(p));
  }
  NsConfig ns;
  ns.population_size = 4;
  ns.generations = 1;
  ns.k_nearest = 2;
  ns.archive_add_per_gen = 2;
  const NsArchive archive = evolve(spec, ns, 5);
  const auto suite = evaluation_suite(archive, 2, 6);
  const CellResult cell =
      evaluate_model_on_suite(spec, model, suite, {1, 20});
  const double diameter = spec.workspace_diameter();
  for (std::size_t hi = 0; hi < 2; ++hi)
    for (int t = 0; t < 2; ++t) {
      const std::size_t slot = hi * 2 + t;
      REQUIRE(cell.diverged[slot] == 1);
      const int compared = hi == 0 ? 1 : 20;
      REQUIRE(cell.errors[slot] == diameter * compared);
    }
}

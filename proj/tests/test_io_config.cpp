#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "bootbench/config.hpp"
#include "bootbench/io.hpp"

using namespace bootbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bootbench_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter;
};
int TempDir::counter = 0;

}  // namespace

TEST_CASE("dataset files round-trip exactly") {
  TempDir tmp;
  const EnvSpec spec = make_env_spec(EnvName::RedundantArm);
  const Dataset ds = gather(spec, Method::Rarph, 4, 10, 12345);
  const fs::path file = tmp.path / "data.bin";
  save_dataset(ds, "redundant_arm", Method::Rarph, 10, 12345, file);
  const DatasetFile loaded = load_dataset(file);
  REQUIRE(loaded.env_name == "redundant_arm");
  REQUIRE(loaded.method == Method::Rarph);
  REQUIRE(loaded.repeat == 10);
  REQUIRE(loaded.seed == 12345u);
  REQUIRE(loaded.dataset.state_dim == ds.state_dim);
  REQUIRE(loaded.dataset.action_dim == ds.action_dim);
  REQUIRE(loaded.dataset.states == ds.states);
  REQUIRE(loaded.dataset.actions == ds.actions);
  REQUIRE(loaded.dataset.next_states == ds.next_states);
  REQUIRE(loaded.dataset.episode_offsets == ds.episode_offsets);
  REQUIRE(loaded.dataset.episode_sources == ds.episode_sources);
  REQUIRE(loaded.dataset.episode_terminations == ds.episode_terminations);
}

TEST_CASE("model files round-trip exactly") {
  TempDir tmp;
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  const Dataset ds = gather(spec, Method::RandomActions, 2, 10, 7);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.ensemble_size = 2;
  cfg.hidden = {8};
  const EnsembleModel model = fit(ds, cfg, 99);
  const fs::path file = tmp.path / "model.bin";
  save_model(model, "ball_in_cup", file);
  const ModelFile loaded = load_model(file);
  REQUIRE(loaded.env_name == "ball_in_cup");
  REQUIRE(loaded.model.state_dim == model.state_dim);
  REQUIRE(loaded.model.action_dim == model.action_dim);
  REQUIRE(loaded.model.seed == model.seed);
  REQUIRE(loaded.model.config == model.config);
  REQUIRE(loaded.model.input_norm == model.input_norm);
  REQUIRE(loaded.model.delta_norm == model.delta_norm);
  REQUIRE(loaded.model.members.size() == model.members.size());
  for (std::size_t m = 0; m < model.members.size(); ++m)
    REQUIRE(loaded.model.members[m] == model.members[m]);
  REQUIRE(loaded.model.diagnostics.size() == model.diagnostics.size());
}

TEST_CASE("archive files round-trip exactly") {
  TempDir tmp;
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  NsConfig ns;
  ns.population_size = 8;
  ns.generations = 2;
  ns.k_nearest = 3;
  ns.archive_add_per_gen = 2;
  const NsArchive archive = evolve(spec, ns, 31);
  const fs::path file = tmp.path / "archive.bin";
  save_archive(archive, "ball_in_cup", 31, ns, file);
  const ArchiveFile loaded = load_archive(file);
  REQUIRE(loaded.env_name == "ball_in_cup");
  REQUIRE(loaded.seed == 31u);
  REQUIRE(loaded.config == ns);
  REQUIRE(loaded.archive.size() == archive.size());
  for (std::size_t i = 0; i < archive.size(); ++i) {
    REQUIRE(loaded.archive.entries[i].policy == archive.entries[i].policy);
    REQUIRE(loaded.archive.entries[i].descriptor ==
            archive.entries[i].descriptor);
    REQUIRE(loaded.archive.entries[i].episode.states ==
            archive.entries[i].episode.states);
    REQUIRE(loaded.archive.entries[i].episode.actions ==
            archive.entries[i].episode.actions);
  }
}

TEST_CASE("loaders reject wrong magic and truncated files") {
  TempDir tmp;
  const fs::path bogus = tmp.path / "bogus.bin";
  write_text_file(bogus, "not a dataset at all");
  REQUIRE_THROWS_AS(load_dataset(bogus), ConfigError);
  REQUIRE_THROWS_AS(load_model(bogus), ConfigError);
  REQUIRE_THROWS_AS(load_archive(bogus), ConfigError);

  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  const Dataset ds = gather(spec, Method::RandomActions, 1, 10, 1);
  const fs::path file = tmp.path / "data.bin";
  save_dataset(ds, "ball_in_cup", Method::RandomActions, 10, 1, file);
  // truncate
  const std::string full = read_text_file(file);
  write_text_file(file, full.substr(0, full.size() / 2));
  REQUIRE_THROWS_AS(load_dataset(file), ConfigError);
  REQUIRE_THROWS_AS(load_dataset(tmp.path / "missing.bin"), ConfigError);
}

TEST_CASE("default config carries the benchmark grid") {
  const ExperimentConfig cfg;
  REQUIRE(cfg.budgets == std::vector<int>{5, 10, 15, 20});
  REQUIRE(cfg.repetitions == 10);
  REQUIRE(cfg.methods.size() == 3u);
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  REQUIRE(cfg.resolved_horizons(spec) == std::vector<int>{1, 20, 300});
  const EnvSpec arm = make_env_spec(EnvName::RedundantArm);
  REQUIRE(cfg.resolved_horizons(arm) == std::vector<int>{1, 20, 250});
  REQUIRE_NOTHROW(cfg.validate(spec));
}

TEST_CASE("config text parses with comments and whitespace") {
  const std::string text = R"(
# benchmark configuration
env = redundant_arm
methods = random_policy, rarph
budgets = 2, 4
repetitions = 3
action_repeat = 25   # 250 / 25 = 10 blocks
master_seed = 98765
train.epochs = 17
train.hidden = 8,8
ns.population = 12
ns.generations = 4
ns.archive_add = 2
ns.suite_size = 6
)";
  const ExperimentConfig cfg = parse_config(text);
  REQUIRE(cfg.environment == "redundant_arm");
  REQUIRE(cfg.methods ==
          std::vector<Method>{Method::RandomPolicy, Method::Rarph});
  REQUIRE(cfg.budgets == std::vector<int>{2, 4});
  REQUIRE(cfg.repetitions == 3);
  REQUIRE(cfg.action_repeat == 25);
  REQUIRE(cfg.master_seed == 98765u);
  REQUIRE(cfg.train.epochs == 17);
  REQUIRE(cfg.train.hidden == std::vector<int>{8, 8});
  REQUIRE(cfg.ns.population_size == 12);
  REQUIRE_NOTHROW(cfg.validate(make_env_spec(EnvName::RedundantArm)));
}

TEST_CASE("config round-trips through serialize/parse") {
  ExperimentConfig cfg;
  cfg.environment = "redundant_arm_no_walls";
  cfg.budgets = {3, 7};
  cfg.horizons = {1, 50, 250};
  cfg.master_seed = 31337;
  cfg.train.learning_rate = 5e-4;
  cfg.ns.mutation_std = 0.25;
  cfg.out_dir = "somewhere/out";
  const std::string text = serialize_config(cfg);
  const ExperimentConfig back = parse_config(text);
  REQUIRE(back.environment == cfg.environment);
  REQUIRE(back.budgets == cfg.budgets);
  REQUIRE(back.horizons == cfg.horizons);
  REQUIRE(back.master_seed == cfg.master_seed);
  REQUIRE(back.train.learning_rate == cfg.train.learning_rate);
  REQUIRE(back.ns.mutation_std == cfg.ns.mutation_std);
  REQUIRE(back.out_dir == cfg.out_dir);
  REQUIRE(serialize_config(back) == text);
}

TEST_CASE("config rejects unknown keys and malformed values") {
  REQUIRE_THROWS_AS(parse_config("nonsense_key = 3\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("repetitions = banana\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("env = pluto\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("budgets = \n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("just a line\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("methods = quantum\n"), ConfigError);
}

TEST_CASE("config validation catches grid violations") {
  const EnvSpec spec = make_env_spec(EnvName::BallInCup);
  ExperimentConfig cfg;
  cfg.budgets = {0};
  REQUIRE_THROWS_AS(cfg.validate(spec), ConfigError);
  cfg = ExperimentConfig{};
  cfg.horizons = {1, 500};  // beyond H = 300
  REQUIRE_THROWS_AS(cfg.validate(spec), ConfigError);
  cfg = ExperimentConfig{};
  cfg.repetitions = 0;
  REQUIRE_THROWS_AS(cfg.validate(spec), ConfigError);
  cfg = ExperimentConfig{};
  cfg.action_repeat = 7;  // 300 % 7 != 0
  REQUIRE_THROWS_AS(cfg.validate(spec), ConfigError);
  cfg = ExperimentConfig{};
  cfg.ns_suite_size = 1000;  // bigger than the final archive
  REQUIRE_THROWS_AS(cfg.validate(spec), ConfigError);
}

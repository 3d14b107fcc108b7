#pragma once

// Binary serialization of datasets, trained models, and NS archives, plus
// small text-file helpers. Binary formats are versioned and store doubles
// raw, so save/load round-trips are exact and downstream CSV output stays
// byte-stable.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "bootbench/datagen.hpp"
#include "bootbench/dyn_model.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/eval_ns.hpp"

namespace bootbench {

inline constexpr std::uint32_t kFileFormatVersion = 1;

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open for writing: " + path.string());
  }

  void u8(std::uint8_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void vec_f64(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void vec_i32(const std::vector<int>& v) {
    u64(v.size());
    for (int x : v) i32(x);
  }

  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw ConfigError("write failed");
  }

 private:
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw ConfigError("cannot open for reading: " + path_);
  }

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  double f64() { return get<double>(); }
  std::string str() {
    const std::uint64_t n = u64();
    check_size(n);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  std::vector<double> vec_f64() {
    const std::uint64_t n = u64();
    check_size(n * sizeof(double));
    std::vector<double> v(n);
    raw(v.data(), n * sizeof(double));
    return v;
  }
  std::vector<int> vec_i32() {
    const std::uint64_t n = u64();
    check_size(n * sizeof(std::int32_t));
    std::vector<int> v(n);
    for (auto& x : v) x = i32();
    return v;
  }

 private:
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_) throw ConfigError("truncated or corrupt file: " + path_);
  }
  void check_size(std::uint64_t n) {
    if (n > (1ULL << 33))
      throw ConfigError("implausible field size in file: " + path_);
  }
  std::ifstream in_;
  std::string path_;
};

// --- dataset ----------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& env_name,
                         Method method, int repeat, std::uint64_t seed,
                         const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.raw("BBDS", 4);
  w.u32(kFileFormatVersion);
  w.str(env_name);
  w.u8(static_cast<std::uint8_t>(method));
  w.i32(repeat);
  w.u64(seed);
  w.i32(ds.state_dim);
  w.i32(ds.action_dim);
  w.u64(ds.n_episodes());
  for (std::size_t e = 0; e < ds.n_episodes(); ++e) {
    w.u64(ds.episode_offsets[e + 1] - ds.episode_offsets[e]);
    w.u8(static_cast<std::uint8_t>(ds.episode_sources[e]));
    w.u8(static_cast<std::uint8_t>(ds.episode_terminations[e]));
  }
  w.vec_f64(ds.states);
  w.vec_f64(ds.actions);
  w.vec_f64(ds.next_states);
}

struct DatasetFile {
  Dataset dataset;
  std::string env_name;
  Method method = Method::RandomPolicy;
  int repeat = 0;
  std::uint64_t seed = 0;
};

inline DatasetFile load_dataset(const std::filesystem::path& path) {
  BinaryReader r(path);
  char magic[4];
  for (auto& c : magic) c = static_cast<char>(r.u8());
  if (std::string(magic, 4) != "BBDS")
    throw ConfigError("not a dataset file: " + path.string());
  if (r.u32() != kFileFormatVersion)
    throw ConfigError("unsupported dataset file version: " + path.string());
  DatasetFile f;
  f.env_name = r.str();
  f.method = static_cast<Method>(r.u8());
  f.repeat = r.i32();
  f.seed = r.u64();
  f.dataset.state_dim = r.i32();
  f.dataset.action_dim = r.i32();
  const std::uint64_t n_eps = r.u64();
  f.dataset.episode_offsets = {0};
  for (std::uint64_t e = 0; e < n_eps; ++e) {
    const std::uint64_t len = r.u64();
    f.dataset.episode_offsets.push_back(f.dataset.episode_offsets.back() + len);
    f.dataset.episode_sources.push_back(static_cast<Method>(r.u8()));
    f.dataset.episode_terminations.push_back(
        static_cast<TerminationReason>(r.u8()));
  }
  f.dataset.states = r.vec_f64();
  f.dataset.actions = r.vec_f64();
  f.dataset.next_states = r.vec_f64();
  const std::size_t n = f.dataset.size();
  if (f.dataset.episode_offsets.back() != n ||
      f.dataset.actions.size() !=
          n * static_cast<std::size_t>(f.dataset.action_dim) ||
      f.dataset.next_states.size() != f.dataset.states.size())
    throw ConfigError("inconsistent dataset file: " + path.string());
  return f;
}

// --- mlp params -------------------------------------------------------------

inline void write_mlp(BinaryWriter& w, const MlpParams& p) {
  w.vec_i32(p.layer_sizes);
  w.u8(static_cast<std::uint8_t>(p.activation));
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    w.vec_f64(p.weights[l]);
    w.vec_f64(p.biases[l]);
  }
}

inline MlpParams read_mlp(BinaryReader& r) {
  MlpParams p;
  p.layer_sizes = r.vec_i32();
  if (p.layer_sizes.size() < 2)
    throw ConfigError("corrupt network in file");
  p.activation = static_cast<Activation>(r.u8());
  const std::size_t n_layers = p.layer_sizes.size() - 1;
  p.weights.resize(n_layers);
  p.biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    p.weights[l] = r.vec_f64();
    p.biases[l] = r.vec_f64();
    const std::size_t expect_w =
        static_cast<std::size_t>(p.layer_sizes[l + 1]) * p.layer_sizes[l];
    if (p.weights[l].size() != expect_w ||
        p.biases[l].size() != static_cast<std::size_t>(p.layer_sizes[l + 1]))
      throw ConfigError("corrupt network shape in file");
  }
  return p;
}

// --- ensemble model ---------------------------------------------------------

inline void save_model(const EnsembleModel& model, const std::string& env_name,
                       const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.raw("BBDM", 4);
  w.u32(kFileFormatVersion);
  w.str(env_name);
  w.i32(model.state_dim);
  w.i32(model.action_dim);
  w.u64(model.seed);
  w.i32(model.config.epochs);
  w.i32(model.config.batch_size);
  w.f64(model.config.learning_rate);
  w.i32(model.config.ensemble_size);
  w.f64(model.config.bootstrap_fraction);
  w.vec_i32(model.config.hidden);
  w.f64(model.config.logvar_min);
  w.f64(model.config.logvar_max);
  w.vec_f64(model.input_norm.mean);
  w.vec_f64(model.input_norm.stddev);
  w.vec_f64(model.delta_norm.mean);
  w.vec_f64(model.delta_norm.stddev);
  w.u64(model.members.size());
  for (const auto& m : model.members) write_mlp(w, m);
  w.u64(model.diagnostics.size());
  for (const auto& diag : model.diagnostics) {
    w.f64(diag.nll_initial);
    w.f64(diag.nll_final);
  }
}

struct ModelFile {
  EnsembleModel model;
  std::string env_name;
};

inline ModelFile load_model(const std::filesystem::path& path) {
  BinaryReader r(path);
  char magic[4];
  for (auto& c : magic) c = static_cast<char>(r.u8());
  if (std::string(magic, 4) != "BBDM")
    throw ConfigError("not a model file: " + path.string());
  if (r.u32() != kFileFormatVersion)
    throw ConfigError("unsupported model file version: " + path.string());
  ModelFile f;
  f.env_name = r.str();
  f.model.state_dim = r.i32();
  f.model.action_dim = r.i32();
  f.model.seed = r.u64();
  f.model.config.epochs = r.i32();
  f.model.config.batch_size = r.i32();
  f.model.config.learning_rate = r.f64();
  f.model.config.ensemble_size = r.i32();
  f.model.config.bootstrap_fraction = r.f64();
  f.model.config.hidden = r.vec_i32();
  f.model.config.logvar_min = r.f64();
  f.model.config.logvar_max = r.f64();
  f.model.input_norm.mean = r.vec_f64();
  f.model.input_norm.stddev = r.vec_f64();
  f.model.delta_norm.mean = r.vec_f64();
  f.model.delta_norm.stddev = r.vec_f64();
  const std::uint64_t n_members = r.u64();
  for (std::uint64_t i = 0; i < n_members; ++i)
    f.model.members.push_back(read_mlp(r));
  const std::uint64_t n_diag = r.u64();
  for (std::uint64_t i = 0; i < n_diag; ++i) {
    MemberDiagnostics d;
    d.nll_initial = r.f64();
    d.nll_final = r.f64();
    f.model.diagnostics.push_back(d);
  }
  return f;
}

// --- ns archive -------------------------------------------------------------

inline void write_episode(BinaryWriter& w, const Episode& ep) {
  w.u8(static_cast<std::uint8_t>(ep.termination));
  w.u8(static_cast<std::uint8_t>(ep.source));
  w.u64(ep.states.size());
  for (const auto& s : ep.states) w.vec_f64(s);
  w.u64(ep.actions.size());
  for (const auto& a : ep.actions) w.vec_f64(a);
}

inline Episode read_episode(BinaryReader& r) {
  Episode ep;
  ep.termination = static_cast<TerminationReason>(r.u8());
  ep.source = static_cast<Method>(r.u8());
  const std::uint64_t n_states = r.u64();
  for (std::uint64_t i = 0; i < n_states; ++i) ep.states.push_back(r.vec_f64());
  const std::uint64_t n_actions = r.u64();
  for (std::uint64_t i = 0; i < n_actions; ++i)
    ep.actions.push_back(r.vec_f64());
  if (ep.states.size() != ep.actions.size() + 1)
    throw ConfigError("corrupt episode in archive file");
  return ep;
}

inline void save_archive(const NsArchive& archive, const std::string& env_name,
                         std::uint64_t seed, const NsConfig& config,
                         const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.raw("BBNS", 4);
  w.u32(kFileFormatVersion);
  w.str(env_name);
  w.u64(seed);
  w.i32(config.population_size);
  w.i32(config.generations);
  w.i32(config.k_nearest);
  w.f64(config.mutation_std);
  w.i32(config.archive_add_per_gen);
  w.f64(config.policy_weight_range);
  w.u64(archive.size());
  for (const NsEntry& e : archive.entries) {
    write_mlp(w, e.policy);
    write_episode(w, e.episode);
    w.vec_f64(e.descriptor);
  }
}

struct ArchiveFile {
  NsArchive archive;
  std::string env_name;
  std::uint64_t seed = 0;
  NsConfig config;
};

inline ArchiveFile load_archive(const std::filesystem::path& path) {
  BinaryReader r(path);
  char magic[4];
  for (auto& c : magic) c = static_cast<char>(r.u8());
  if (std::string(magic, 4) != "BBNS")
    throw ConfigError("not an NS archive file: " + path.string());
  if (r.u32() != kFileFormatVersion)
    throw ConfigError("unsupported archive file version: " + path.string());
  ArchiveFile f;
  f.env_name = r.str();
  f.seed = r.u64();
  f.config.population_size = r.i32();
  f.config.generations = r.i32();
  f.config.k_nearest = r.i32();
  f.config.mutation_std = r.f64();
  f.config.archive_add_per_gen = r.i32();
  f.config.policy_weight_range = r.f64();
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    NsEntry e;
    e.policy = read_mlp(r);
    e.episode = read_episode(r);
    e.descriptor = r.vec_f64();
    f.archive.entries.push_back(std::move(e));
  }
  return f;
}

// --- text helpers -----------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

}  // namespace bootbench

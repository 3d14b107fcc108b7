#pragma once

// Minimal Novelty Search over policies on the real environment. Produces the
// archive of diverse trajectories that serves as ground truth for prediction
// error measurement. Selection pressure is purely on novelty: the mean
// distance to the k nearest behavior descriptors in population + archive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bootbench/datagen.hpp"
#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/rng.hpp"

namespace bootbench {

struct NsConfig {
  int population_size = 50;
  int generations = 20;
  int k_nearest = 15;
  double mutation_std = 0.1;
  int archive_add_per_gen = 3;
  double policy_weight_range = kDefaultPolicyWeightRange;

  void validate() const {
    if (population_size < 1 || generations < 0 || k_nearest < 1 ||
        mutation_std <= 0.0 || archive_add_per_gen < 1)
      throw ConfigError("ns config: all parameters must be positive");
    if (archive_add_per_gen > population_size)
      throw ConfigError("ns config: archive_add_per_gen exceeds population");
  }

  bool operator==(const NsConfig&) const = default;
};

struct NsEntry {
  PolicyParams policy;
  Episode episode;
  BehaviorDescriptor descriptor;
};

struct NsArchive {
  std::vector<NsEntry> entries;

  std::size_t size() const { return entries.size(); }
};

// Mean Euclidean distance to the k nearest pool members (all members if the
// pool is smaller than k).
inline double novelty_score(const BehaviorDescriptor& b,
                            const std::vector<BehaviorDescriptor>& pool,
                            int k) {
  if (pool.empty()) throw UsageError("novelty_score: empty pool");
  if (k < 1) throw UsageError("novelty_score: k must be >= 1");
  std::vector<double> dists;
  dists.reserve(pool.size());
  for (const BehaviorDescriptor& other : pool) {
    if (other.size() != b.size())
      throw ShapeError("novelty_score: descriptor dims differ");
    double sq = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double diff = b[i] - other[i];
      sq += diff * diff;
    }
    dists.push_back(std::sqrt(sq));
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t take = std::min<std::size_t>(k, dists.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += dists[i];
  return sum / static_cast<double>(take);
}

namespace detail {

struct NsIndividual {
  PolicyParams policy;
  Episode episode;
  BehaviorDescriptor descriptor;
  double novelty = 0.0;
};

inline void evaluate_individual(const EnvSpec& spec, NsIndividual& ind) {
  ind.episode = rollout_random_policy(spec, ind.policy);
  ind.descriptor = observer(spec, ind.episode.states.back());
}

inline void mutate_policy(PolicyParams& policy, Rng& rng, double std_dev) {
  for (auto& layer : policy.weights)
    for (double& w : layer) w += rng.normal(0.0, std_dev);
  for (auto& layer : policy.biases)
    for (double& b : layer) b += rng.normal(0.0, std_dev);
}

}  // namespace detail

// Runs Novelty Search and returns the archive: generations *
// archive_add_per_gen entries, most novel first within each generation.
inline NsArchive evolve(const EnvSpec& spec, const NsConfig& config,
                        std::uint64_t seed) {
  config.validate();
  std::vector<detail::NsIndividual> population(config.population_size);
  for (int i = 0; i < config.population_size; ++i) {
    population[i].policy = sample_random_policy(
        spec, derive_seed(seed, {fnv1a("ns_init"), static_cast<std::uint64_t>(i)}),
        config.policy_weight_range);
    detail::evaluate_individual(spec, population[i]);
  }
  NsArchive archive;
  Rng rng(derive_seed(seed, {fnv1a("ns_run")}));

  for (int gen = 0; gen < config.generations; ++gen) {
    // Novelty against the other population members plus the archive.
    std::vector<BehaviorDescriptor> pool;
    pool.reserve(population.size() - 1 + archive.size());
    for (std::size_t i = 0; i < population.size(); ++i) {
      pool.clear();
      for (std::size_t j = 0; j < population.size(); ++j)
        if (j != i) pool.push_back(population[j].descriptor);
      for (const NsEntry& e : archive.entries) pool.push_back(e.descriptor);
      population[i].novelty =
          novelty_score(population[i].descriptor, pool, config.k_nearest);
    }

    std::vector<std::size_t> ranked(population.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) {
                       return population[a].novelty > population[b].novelty;
                     });
    for (int a = 0; a < config.archive_add_per_gen; ++a) {
      const detail::NsIndividual& ind = population[ranked[a]];
      archive.entries.push_back({ind.policy, ind.episode, ind.descriptor});
    }
    if (gen + 1 == config.generations) break;

    // Tournament (size 3) on novelty, then Gaussian weight mutation.
    std::vector<detail::NsIndividual> next(population.size());
    for (std::size_t c = 0; c < population.size(); ++c) {
      std::size_t winner = static_cast<std::size_t>(rng.below(population.size()));
      for (int t = 1; t < 3; ++t) {
        const std::size_t cand =
            static_cast<std::size_t>(rng.below(population.size()));
        if (population[cand].novelty > population[winner].novelty ||
            (population[cand].novelty == population[winner].novelty &&
             cand < winner))
          winner = cand;
      }
      next[c].policy = population[winner].policy;
      detail::mutate_policy(next[c].policy, rng, config.mutation_std);
      detail::evaluate_individual(spec, next[c]);
    }
    population = std::move(next);
  }
  return archive;
}

// Samples n archive entries without replacement; the whole archive in
// canonical order when n equals the archive size.
inline std::vector<NsEntry> evaluation_suite(const NsArchive& archive,
                                             std::size_t n,
                                             std::uint64_t seed) {
  if (n > archive.size())
    throw UsageError("evaluation_suite: n exceeds archive size");
  if (n == archive.size()) return archive.entries;
  std::vector<std::size_t> idx(archive.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<NsEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(archive.entries[idx[i]]);
  return out;
}

}  // namespace bootbench

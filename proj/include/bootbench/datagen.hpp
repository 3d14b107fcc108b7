#pragma once

// The three bootstrap data-gathering strategies (random policies, random
// actions, and the even-split RARPH hybrid) plus episode recording.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/nn.hpp"
#include "bootbench/rng.hpp"

namespace bootbench {

enum class Method { RandomPolicy, RandomActions, Rarph };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::RandomPolicy: return "random_policy";
    case Method::RandomActions: return "random_actions";
    case Method::Rarph: return "rarph";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "random_policy") return Method::RandomPolicy;
  if (s == "random_actions") return Method::RandomActions;
  if (s == "rarph") return Method::Rarph;
  throw ConfigError("unknown method: " + s);
}

using PolicyParams = MlpParams;

// One recorded environment rollout. states has one more entry than actions,
// so transition i is (states[i], actions[i], states[i+1]) and chained
// consistency holds by construction.
struct Episode {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> actions;
  TerminationReason termination = TerminationReason::None;
  Method source = Method::RandomPolicy;

  std::size_t n_transitions() const { return actions.size(); }
  const std::vector<double>& state(std::size_t i) const { return states[i]; }
  const std::vector<double>& action(std::size_t i) const { return actions[i]; }
  const std::vector<double>& next_state(std::size_t i) const {
    return states[i + 1];
  }
};

// Flat pool of (state, action, next_state) samples with per-episode
// provenance. Row-major storage.
struct Dataset {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> states, actions, next_states;
  std::vector<std::size_t> episode_offsets = {0};  // prefix sums, size n_eps+1
  std::vector<Method> episode_sources;
  std::vector<TerminationReason> episode_terminations;

  std::size_t size() const {
    return state_dim == 0 ? 0 : states.size() / static_cast<std::size_t>(state_dim);
  }
  std::size_t n_episodes() const { return episode_sources.size(); }

  std::span<const double> state(std::size_t i) const {
    return {states.data() + i * state_dim, static_cast<std::size_t>(state_dim)};
  }
  std::span<const double> action(std::size_t i) const {
    return {actions.data() + i * action_dim,
            static_cast<std::size_t>(action_dim)};
  }
  std::span<const double> next_state(std::size_t i) const {
    return {next_states.data() + i * state_dim,
            static_cast<std::size_t>(state_dim)};
  }

  void append(const Episode& ep) {
    for (std::size_t i = 0; i < ep.n_transitions(); ++i) {
      states.insert(states.end(), ep.state(i).begin(), ep.state(i).end());
      actions.insert(actions.end(), ep.action(i).begin(), ep.action(i).end());
      next_states.insert(next_states.end(), ep.next_state(i).begin(),
                         ep.next_state(i).end());
    }
    episode_offsets.push_back(size());
    episode_sources.push_back(ep.source);
    episode_terminations.push_back(ep.termination);
  }
};

// B uniformly drawn actions, each applied for R consecutive steps.
struct ActionSchedule {
  int repeat_length = 0;  // R
  std::vector<std::vector<double>> block_actions;

  int num_blocks() const { return static_cast<int>(block_actions.size()); }
};

inline constexpr double kDefaultPolicyWeightRange = 5.0;
inline constexpr int kPolicyHiddenSize = 10;

// Randomly parameterized policy: two hidden layers of size 10, weights and
// biases drawn uniformly from a fixed genotype box. Wide weights saturate the
// tanh output head, which is what makes random policies act at the limits of
// the action space.
inline PolicyParams sample_random_policy(
    const EnvSpec& spec, std::uint64_t seed,
    double weight_range = kDefaultPolicyWeightRange) {
  return mlp_init_uniform(
      {spec.state_dim, kPolicyHiddenSize, kPolicyHiddenSize, spec.action_dim},
      Activation::Tanh, weight_range, seed);
}

// tanh squashing of the raw network output, rescaled to the action box.
inline std::vector<double> policy_action(const EnvSpec& spec,
                                         const PolicyParams& policy,
                                         std::span<const double> state) {
  std::vector<double> raw = mlp_forward(policy, state);
  for (int i = 0; i < spec.action_dim; ++i) {
    const double center = 0.5 * (spec.action_low[i] + spec.action_high[i]);
    const double half = 0.5 * (spec.action_high[i] - spec.action_low[i]);
    raw[i] = center + half * std::tanh(raw[i]);
  }
  return raw;
}

namespace detail {

template <typename ActionFn>
Episode record_rollout(const EnvSpec& spec, Method source, ActionFn&& act_fn) {
  Episode ep;
  ep.source = source;
  EnvState state = reset(spec);
  ep.states.push_back(state.values);
  while (state.step_index < spec.horizon &&
         state.terminated == TerminationReason::None) {
    std::vector<double> action = act_fn(state);
    EnvState next = step(spec, state, action);
    ep.actions.push_back(std::move(action));
    ep.states.push_back(next.values);
    state = std::move(next);
  }
  ep.termination = state.terminated;
  return ep;
}

}  // namespace detail

inline Episode rollout_random_policy(const EnvSpec& spec,
                                     const PolicyParams& policy) {
  if (policy.input_dim() != spec.state_dim ||
      policy.output_dim() != spec.action_dim)
    throw ShapeError("rollout_random_policy: policy dims do not match env");
  return detail::record_rollout(spec, Method::RandomPolicy,
                                [&](const EnvState& s) {
                                  return policy_action(spec, policy, s.values);
                                });
}

inline ActionSchedule sample_action_schedule(const EnvSpec& spec, int repeat,
                                             std::uint64_t seed) {
  if (repeat < 1 || spec.horizon % repeat != 0)
    throw ConfigError("sample_action_schedule: horizon " +
                      std::to_string(spec.horizon) +
                      " not divisible by repeat length " +
                      std::to_string(repeat));
  ActionSchedule sched;
  sched.repeat_length = repeat;
  const int n_blocks = spec.horizon / repeat;
  Rng rng(seed);
  sched.block_actions.resize(n_blocks);
  for (auto& block : sched.block_actions) {
    block.resize(spec.action_dim);
    for (int d = 0; d < spec.action_dim; ++d)
      block[d] = rng.uniform(spec.action_low[d], spec.action_high[d]);
  }
  return sched;
}

inline Episode rollout_random_actions(const EnvSpec& spec,
                                      const ActionSchedule& sched) {
  if (sched.repeat_length < 1 ||
      sched.num_blocks() * sched.repeat_length != spec.horizon)
    throw ConfigError("rollout_random_actions: schedule does not cover horizon");
  for (const auto& block : sched.block_actions)
    if (static_cast<int>(block.size()) != spec.action_dim)
      throw ShapeError("rollout_random_actions: block action dim mismatch");
  return detail::record_rollout(
      spec, Method::RandomActions, [&](const EnvState& s) {
        return sched.block_actions[s.step_index / sched.repeat_length];
      });
}

// Even split of the episode budget; the odd episode goes to random policies.
inline std::pair<int, int> rarph_split(int total_episodes) {
  if (total_episodes < 1)
    throw ConfigError("rarph_split: budget must be >= 1");
  const int n_policy = (total_episodes + 1) / 2;
  return {n_policy, total_episodes - n_policy};
}

// Gathers n_episodes of bootstrap data. Per-episode seeds are derived from
// the master seed by episode index, so episodes are reproducible and
// order-independent. RARPH runs its policy episodes first.
inline Dataset gather(const EnvSpec& spec, Method method, int n_episodes,
                      int repeat, std::uint64_t seed,
                      double policy_weight_range = kDefaultPolicyWeightRange) {
  if (n_episodes < 1) throw ConfigError("gather: n_episodes must be >= 1");
  int n_policy = 0, n_action = 0;
  switch (method) {
    case Method::RandomPolicy: n_policy = n_episodes; break;
    case Method::RandomActions: n_action = n_episodes; break;
    case Method::Rarph: {
      auto [p, a] = rarph_split(n_episodes);
      n_policy = p;
      n_action = a;
      break;
    }
  }
  Dataset ds;
  ds.state_dim = spec.state_dim;
  ds.action_dim = spec.action_dim;
  for (int i = 0; i < n_episodes; ++i) {
    const std::uint64_t ep_seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});
    if (i < n_policy) {
      PolicyParams policy =
          sample_random_policy(spec, ep_seed, policy_weight_range);
      ds.append(rollout_random_policy(spec, policy));
    } else {
      ActionSchedule sched = sample_action_schedule(spec, repeat, ep_seed);
      ds.append(rollout_random_actions(spec, sched));
    }
  }
  (void)n_action;
  return ds;
}

}  // namespace bootbench

#pragma once

// Probabilistic ensemble dynamics model: M independently trained MLPs, each
// predicting a per-dimension Gaussian over the next-state delta. Fitting uses
// bootstrap resamples and minimizes Gaussian NLL of normalized deltas;
// prediction aggregates the de-normalized member means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bootbench/datagen.hpp"
#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/nn.hpp"
#include "bootbench/nn_batch.hpp"
#include "bootbench/rng.hpp"

namespace bootbench {

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1e-8

  int dim() const { return static_cast<int>(mean.size()); }

  void normalize(std::span<const double> x, double* out) const {
    for (std::size_t i = 0; i < mean.size(); ++i)
      out[i] = (x[i] - mean[i]) / stddev[i];
  }
  void denormalize(std::span<const double> x, double* out) const {
    for (std::size_t i = 0; i < mean.size(); ++i)
      out[i] = x[i] * stddev[i] + mean[i];
  }

  bool operator==(const Normalizer&) const = default;
};

// Per-dimension mean/std over row-major data. Values are summed in sorted
// order, which makes the statistics bitwise invariant to sample permutation.
inline Normalizer fit_normalizer(const double* data, std::size_t n_rows,
                                 int dim) {
  if (n_rows == 0) throw UsageError("fit_normalizer: empty data");
  Normalizer norm;
  norm.mean.resize(dim);
  norm.stddev.resize(dim);
  std::vector<double> column(n_rows);
  for (int d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < n_rows; ++i) column[i] = data[i * dim + d];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    const double mu = sum / static_cast<double>(n_rows);
    for (double& v : column) {
      const double c = v - mu;
      v = c * c;
    }
    std::sort(column.begin(), column.end());
    double sq = 0.0;
    for (double v : column) sq += v;
    norm.mean[d] = mu;
    norm.stddev[d] =
        std::max(std::sqrt(sq / static_cast<double>(n_rows)), 1e-8);
  }
  return norm;
}

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int ensemble_size = 5;
  double bootstrap_fraction = 1.0;
  std::vector<int> hidden = {32, 32};
  double logvar_min = -10.0;
  double logvar_max = 4.0;

  void validate() const {
    if (epochs < 1 || batch_size < 1 || ensemble_size < 2 ||
        learning_rate <= 0.0)
      throw ConfigError("train config: epochs/batch/lr positive, M >= 2");
    if (bootstrap_fraction <= 0.0 || bootstrap_fraction > 1.0)
      throw ConfigError("train config: bootstrap_fraction must be in (0, 1]");
    if (hidden.empty()) throw ConfigError("train config: hidden layers empty");
    if (!(logvar_min < logvar_max))
      throw ConfigError("train config: logvar_min must be < logvar_max");
  }

  bool operator==(const TrainConfig&) const = default;
};

struct MemberDiagnostics {
  double nll_initial = 0.0;  // mean NLL on the member's resample, untrained
  double nll_final = 0.0;    // same after the last epoch
};

struct EnsembleModel {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<MlpParams> members;  // output dim = 2 * state_dim
  Normalizer input_norm;           // over (state, action) inputs
  Normalizer delta_norm;           // over next_state - state targets
  TrainConfig config;
  std::uint64_t seed = 0;
  std::vector<MemberDiagnostics> diagnostics;

  int input_dim() const { return state_dim + action_dim; }
};

// Bootstrap resample indices for every member, derived purely from the seed.
inline std::vector<std::vector<std::size_t>> bootstrap_indices(
    std::uint64_t seed, int ensemble_size, std::size_t n_total,
    std::size_t n_draws) {
  std::vector<std::vector<std::size_t>> out(ensemble_size);
  for (int m = 0; m < ensemble_size; ++m) {
    Rng rng(derive_seed(seed, {fnv1a("resample"), static_cast<std::uint64_t>(m)}));
    out[m].resize(n_draws);
    for (auto& idx : out[m]) idx = static_cast<std::size_t>(rng.below(n_total));
  }
  return out;
}

// fit() with explicit per-member resample index lists. Exposed so tests can
// check invariance to dataset permutation with remapped indices.
inline EnsembleModel fit_resampled(
    const Dataset& dataset, const TrainConfig& config, std::uint64_t seed,
    const std::vector<std::vector<std::size_t>>& resamples) {
  config.validate();
  const std::size_t n = dataset.size();
  if (n == 0) throw UsageError("fit: empty dataset");
  if (static_cast<int>(resamples.size()) != config.ensemble_size)
    throw ShapeError("fit: one resample list per member required");

  EnsembleModel model;
  model.state_dim = dataset.state_dim;
  model.action_dim = dataset.action_dim;
  model.config = config;
  model.seed = seed;

  const int in_dim = model.input_dim();
  const int d = model.state_dim;

  // Assemble input (state, action) and target (delta) matrices.
  std::vector<double> inputs(n * in_dim);
  std::vector<double> deltas(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = dataset.state(i);
    const auto a = dataset.action(i);
    const auto s2 = dataset.next_state(i);
    double* row = inputs.data() + i * in_dim;
    for (int j = 0; j < d; ++j) row[j] = s[j];
    for (int j = 0; j < model.action_dim; ++j) row[d + j] = a[j];
    double* t = deltas.data() + i * d;
    for (int j = 0; j < d; ++j) t[j] = s2[j] - s[j];
  }
  model.input_norm = fit_normalizer(inputs.data(), n, in_dim);
  model.delta_norm = fit_normalizer(deltas.data(), n, d);
  for (std::size_t i = 0; i < n; ++i) {
    model.input_norm.normalize(
        {inputs.data() + i * in_dim, static_cast<std::size_t>(in_dim)},
        inputs.data() + i * in_dim);
    model.delta_norm.normalize(
        {deltas.data() + i * d, static_cast<std::size_t>(d)},
        deltas.data() + i * d);
  }

  std::vector<int> layers;
  layers.push_back(in_dim);
  for (int h : config.hidden) layers.push_back(h);
  layers.push_back(2 * d);

  model.members.resize(config.ensemble_size);
  model.diagnostics.resize(config.ensemble_size);

  const int batch = config.batch_size;
  batch::Workspace ws;
  std::vector<double> xb(static_cast<std::size_t>(batch) * in_dim);
  std::vector<double> tb(static_cast<std::size_t>(batch) * d);

  for (int m = 0; m < config.ensemble_size; ++m) {
    const std::vector<std::size_t>& sample_idx = resamples[m];
    if (sample_idx.empty()) throw UsageError("fit: empty resample");
    MlpParams params = mlp_init(
        layers, Activation::Tanh,
        derive_seed(seed, {fnv1a("init"), static_cast<std::uint64_t>(m)}));
    Gradients grads = make_zero_gradients(params);
    AdamState adam = make_adam_state(params);
    Rng shuffle_rng(
        derive_seed(seed, {fnv1a("shuffle"), static_cast<std::uint64_t>(m)}));

    auto eval_mean_nll = [&](const MlpParams& p) {
      double total = 0.0;
      std::size_t done = 0;
      while (done < sample_idx.size()) {
        const int mrows =
            static_cast<int>(std::min<std::size_t>(batch, sample_idx.size() - done));
        for (int r = 0; r < mrows; ++r) {
          const std::size_t src = sample_idx[done + r];
          std::copy_n(inputs.data() + src * in_dim, in_dim,
                      xb.data() + static_cast<std::size_t>(r) * in_dim);
          std::copy_n(deltas.data() + src * d, d,
                      tb.data() + static_cast<std::size_t>(r) * d);
        }
        total += batch::nll_eval(p, xb.data(), tb.data(), mrows,
                                 config.logvar_min, config.logvar_max, ws) *
                 mrows;
        done += mrows;
      }
      return total / static_cast<double>(sample_idx.size());
    };

    model.diagnostics[m].nll_initial = eval_mean_nll(params);

    std::vector<std::size_t> order = sample_idx;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      std::size_t done = 0;
      while (done < order.size()) {
        const int mrows =
            static_cast<int>(std::min<std::size_t>(batch, order.size() - done));
        for (int r = 0; r < mrows; ++r) {
          const std::size_t src = order[done + r];
          std::copy_n(inputs.data() + src * in_dim, in_dim,
                      xb.data() + static_cast<std::size_t>(r) * in_dim);
          std::copy_n(deltas.data() + src * d, d,
                      tb.data() + static_cast<std::size_t>(r) * d);
        }
        batch::nll_step(params, xb.data(), tb.data(), mrows, config.logvar_min,
                        config.logvar_max, ws, grads);
        optimizer_step(params, grads, adam, config.learning_rate);
        done += mrows;
      }
    }

    model.diagnostics[m].nll_final = eval_mean_nll(params);
    model.members[m] = std::move(params);
  }
  return model;
}

// Trains each member on its own bootstrap resample (with replacement,
// bootstrap_fraction * N draws). Deterministic given the seed.
inline EnsembleModel fit(const Dataset& dataset, const TrainConfig& config,
                         std::uint64_t seed) {
  config.validate();
  const std::size_t n = dataset.size();
  if (n == 0) throw UsageError("fit: empty dataset");
  const std::size_t n_draws = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.bootstrap_fraction *
                                  static_cast<double>(n)));
  return fit_resampled(dataset, config, seed,
                       bootstrap_indices(seed, config.ensemble_size, n, n_draws));
}

namespace detail {

inline void check_predict_inputs(const EnsembleModel& model,
                                 std::span<const double> state,
                                 std::span<const double> action) {
  if (static_cast<int>(state.size()) != model.state_dim ||
      static_cast<int>(action.size()) != model.action_dim)
    throw ShapeError("predict: state/action dims do not match model");
  for (double v : state)
    if (!std::isfinite(v)) throw UsageError("predict: non-finite state");
  for (double v : action)
    if (!std::isfinite(v)) throw UsageError("predict: non-finite action");
}

// De-normalized mean-head delta of one member.
inline void member_delta(const EnsembleModel& model, const MlpParams& member,
                         std::span<const double> normalized_input,
                         ForwardCache& cache, double* delta_out) {
  const std::vector<double>& raw =
      mlp_forward_cached(member, normalized_input, cache);
  model.delta_norm.denormalize({raw.data(), static_cast<std::size_t>(model.state_dim)},
                               delta_out);
}

}  // namespace detail

// next_state = state + mean over members of the member-mean delta.
inline std::vector<double> predict_step(const EnsembleModel& model,
                                        std::span<const double> state,
                                        std::span<const double> action) {
  detail::check_predict_inputs(model, state, action);
  const int in_dim = model.input_dim();
  const int d = model.state_dim;
  std::vector<double> input(in_dim);
  std::copy(state.begin(), state.end(), input.begin());
  std::copy(action.begin(), action.end(), input.begin() + d);
  model.input_norm.normalize(input, input.data());

  std::vector<double> delta(d), accum(d, 0.0);
  ForwardCache cache;
  for (const MlpParams& member : model.members) {
    detail::member_delta(model, member, input, cache, delta.data());
    for (int j = 0; j < d; ++j) accum[j] += delta[j];
  }
  const double inv_m = 1.0 / static_cast<double>(model.members.size());
  std::vector<double> next(state.begin(), state.end());
  for (int j = 0; j < d; ++j) next[j] += accum[j] * inv_m;
  return next;
}

// Ensemble disagreement: mean over output dimensions of the population
// variance of the member-mean deltas.
inline double predict_uncertainty(const EnsembleModel& model,
                                  std::span<const double> state,
                                  std::span<const double> action) {
  detail::check_predict_inputs(model, state, action);
  const int in_dim = model.input_dim();
  const int d = model.state_dim;
  const std::size_t m_count = model.members.size();
  std::vector<double> input(in_dim);
  std::copy(state.begin(), state.end(), input.begin());
  std::copy(action.begin(), action.end(), input.begin() + d);
  model.input_norm.normalize(input, input.data());

  std::vector<double> all(m_count * d);
  ForwardCache cache;
  for (std::size_t m = 0; m < m_count; ++m)
    detail::member_delta(model, model.members[m], input, cache,
                         all.data() + m * d);
  double total = 0.0;
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) mean += all[m * d + j];
    mean /= static_cast<double>(m_count);
    double var = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      const double c = all[m * d + j] - mean;
      var += c * c;
    }
    total += var / static_cast<double>(m_count);
  }
  return total / d;
}

using Controller = std::variant<PolicyParams, ActionSchedule>;

struct ModelRollout {
  std::vector<std::vector<double>> states;  // n_steps + 1 entries when finite
  std::optional<std::size_t> diverged_at;   // 1-based prediction step
};

// Recursive model rollout; stops early (with diverged_at set) if a predicted
// state goes non-finite. The controller is queried on predicted states
// (policy) or indexed by step (schedule).
inline ModelRollout rollout_model_partial(const EnsembleModel& model,
                                          const EnvSpec& spec,
                                          const Controller& controller,
                                          std::span<const double> start_state,
                                          int n_steps) {
  if (n_steps < 1) throw UsageError("rollout_model: n_steps must be >= 1");
  if (static_cast<int>(start_state.size()) != model.state_dim)
    throw ShapeError("rollout_model: start state dim mismatch");
  ModelRollout out;
  out.states.reserve(n_steps + 1);
  out.states.emplace_back(start_state.begin(), start_state.end());
  for (int t = 0; t < n_steps; ++t) {
    const std::vector<double>& current = out.states.back();
    std::vector<double> action;
    if (std::holds_alternative<PolicyParams>(controller)) {
      action = policy_action(spec, std::get<PolicyParams>(controller), current);
    } else {
      const ActionSchedule& sched = std::get<ActionSchedule>(controller);
      const int block = t / sched.repeat_length;
      if (block >= sched.num_blocks())
        throw UsageError("rollout_model: schedule shorter than n_steps");
      action = sched.block_actions[block];
    }
    std::vector<double> next = predict_step(model, current, action);
    bool finite = true;
    for (double v : next)
      if (!std::isfinite(v)) {
        finite = false;
        break;
      }
    if (!finite) {
      out.diverged_at = static_cast<std::size_t>(t + 1);
      return out;
    }
    out.states.push_back(std::move(next));
  }
  return out;
}

inline std::vector<std::vector<double>> rollout_model(
    const EnsembleModel& model, const EnvSpec& spec,
    const Controller& controller, std::span<const double> start_state,
    int n_steps) {
  ModelRollout r =
      rollout_model_partial(model, spec, controller, start_state, n_steps);
  if (r.diverged_at)
    throw RolloutError("rollout_model: non-finite prediction at step " +
                           std::to_string(*r.diverged_at),
                       *r.diverged_at);
  return std::move(r.states);
}

// Mean over steps t >= 1 of the Euclidean distance between predicted and
// ground-truth states, over the given dimensions.
inline double prediction_error_dims(
    const std::vector<std::vector<double>>& predicted,
    const std::vector<std::vector<double>>& truth,
    std::span<const int> dims) {
  if (predicted.size() != truth.size())
    throw UsageError("prediction_error: trajectory lengths differ");
  if (predicted.size() < 2)
    throw UsageError("prediction_error: need at least one prediction step");
  double total = 0.0;
  for (std::size_t t = 1; t < predicted.size(); ++t) {
    if (predicted[t].size() != truth[t].size())
      throw ShapeError("prediction_error: state dims differ");
    double sq = 0.0;
    for (int dim : dims) {
      const double diff = predicted[t][dim] - truth[t][dim];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(predicted.size() - 1);
}

inline double prediction_error(const std::vector<std::vector<double>>& predicted,
                               const std::vector<std::vector<double>>& truth) {
  if (predicted.empty() || predicted.front().empty())
    throw UsageError("prediction_error: empty trajectory");
  std::vector<int> dims(predicted.front().size());
  for (std::size_t i = 0; i < dims.size(); ++i) dims[i] = static_cast<int>(i);
  return prediction_error_dims(predicted, truth, dims);
}

}  // namespace bootbench

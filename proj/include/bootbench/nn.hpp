#pragma once

// Minimal feed-forward network with analytic gradients, a Gaussian
// negative-log-likelihood head, and an Adam optimizer. Shared by the random
// policies and the ensemble dynamics model. All math is double precision.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "bootbench/errors.hpp"
#include "bootbench/rng.hpp"

namespace bootbench {

enum class Activation { Tanh, Relu };

struct MlpParams {
  std::vector<int> layer_sizes;  // includes input and output dims
  Activation activation = Activation::Tanh;
  // weights[l] is row-major (layer_sizes[l+1] x layer_sizes[l]);
  // biases[l] has layer_sizes[l+1] entries.
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t n_layers() const { return weights.size(); }

  std::size_t n_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      n += weights[l].size() + biases[l].size();
    return n;
  }

  bool operator==(const MlpParams& other) const = default;
};

namespace detail {

inline void check_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw ConfigError("mlp: layer_sizes needs at least input and output dims");
  for (int s : layer_sizes)
    if (s < 1) throw ConfigError("mlp: layer sizes must be >= 1");
}

inline MlpParams make_shaped(const std::vector<int>& layer_sizes,
                             Activation activation) {
  check_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  p.activation = activation;
  const std::size_t n_layers = layer_sizes.size() - 1;
  p.weights.resize(n_layers);
  p.biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    p.weights[l].assign(
        static_cast<std::size_t>(layer_sizes[l + 1]) * layer_sizes[l], 0.0);
    p.biases[l].assign(layer_sizes[l + 1], 0.0);
  }
  return p;
}

inline double activate(double x, Activation a) {
  return a == Activation::Tanh ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

// Derivative expressed through the post-activation value.
inline double activate_grad(double post, Activation a) {
  return a == Activation::Tanh ? 1.0 - post * post : (post > 0.0 ? 1.0 : 0.0);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
inline MlpParams mlp_init(const std::vector<int>& layer_sizes,
                          Activation activation, std::uint64_t seed) {
  MlpParams p = detail::make_shaped(layer_sizes, activation);
  Rng rng(seed);
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
    for (double& w : p.weights[l]) w = rng.uniform(-bound, bound);
  }
  return p;
}

// All weights and biases uniform in [-range, range]. This is the genotype
// convention used for randomly parameterized policies, where saturated
// outputs are part of the behavior.
inline MlpParams mlp_init_uniform(const std::vector<int>& layer_sizes,
                                  Activation activation, double range,
                                  std::uint64_t seed) {
  if (range <= 0.0) throw ConfigError("mlp_init_uniform: range must be > 0");
  MlpParams p = detail::make_shaped(layer_sizes, activation);
  Rng rng(seed);
  for (std::size_t l = 0; l < p.n_layers(); ++l) {
    for (double& w : p.weights[l]) w = rng.uniform(-range, range);
    for (double& b : p.biases[l]) b = rng.uniform(-range, range);
  }
  return p;
}

struct ForwardCache {
  // activations[0] is the input; activations[l+1] the post-activation output
  // of layer l. The last entry is the linear network output.
  std::vector<std::vector<double>> activations;
};

inline const std::vector<double>& mlp_forward_cached(const MlpParams& params,
                                                     std::span<const double> input,
                                                     ForwardCache& cache) {
  if (static_cast<int>(input.size()) != params.input_dim())
    throw ShapeError("mlp_forward: input length " +
                     std::to_string(input.size()) + " != input dim " +
                     std::to_string(params.input_dim()));
  const std::size_t n_layers = params.n_layers();
  cache.activations.resize(n_layers + 1);
  cache.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in_dim = params.layer_sizes[l];
    const int out_dim = params.layer_sizes[l + 1];
    const std::vector<double>& x = cache.activations[l];
    std::vector<double>& y = cache.activations[l + 1];
    y.assign(out_dim, 0.0);
    const double* w = params.weights[l].data();
    for (int j = 0; j < out_dim; ++j) {
      double acc = params.biases[l][j];
      const double* row = w + static_cast<std::size_t>(j) * in_dim;
      for (int k = 0; k < in_dim; ++k) acc += row[k] * x[k];
      y[j] = acc;
    }
    if (l + 1 < n_layers)  // hidden layers activated, output layer linear
      for (double& v : y) v = detail::activate(v, params.activation);
  }
  return cache.activations.back();
}

inline std::vector<double> mlp_forward(const MlpParams& params,
                                       std::span<const double> input) {
  ForwardCache cache;
  return mlp_forward_cached(params, input, cache);
}

struct GaussianOutput {
  std::vector<double> mean;
  std::vector<double> log_variance;
};

// Splits a raw 2d-dim network output into a per-dimension Gaussian. The
// log-variance half is soft-clamped into [logvar_min, logvar_max] through a
// scaled sigmoid, so it stays strictly inside the interval and keeps a smooth
// gradient everywhere.
inline GaussianOutput gaussian_head(std::span<const double> raw,
                                    double logvar_min, double logvar_max) {
  if (raw.size() % 2 != 0)
    throw ShapeError("gaussian_head: raw output size must be even");
  if (!(logvar_min < logvar_max))
    throw ConfigError("gaussian_head: logvar_min must be < logvar_max");
  const std::size_t d = raw.size() / 2;
  GaussianOutput out;
  out.mean.assign(raw.begin(), raw.begin() + d);
  out.log_variance.resize(d);
  for (std::size_t i = 0; i < d; ++i)
    out.log_variance[i] =
        logvar_min + (logvar_max - logvar_min) * detail::sigmoid(raw[d + i]);
  return out;
}

// Per-dimension Gaussian negative log-likelihood:
//   1/2 sum_d [ log(2*pi) + logvar_d + (target_d - mean_d)^2 / exp(logvar_d) ]
inline double gaussian_nll(const GaussianOutput& pred,
                           std::span<const double> target) {
  if (pred.mean.size() != pred.log_variance.size() ||
      pred.mean.size() != target.size())
    throw ShapeError("gaussian_nll: mean/logvar/target lengths disagree");
  double nll = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double lv = pred.log_variance[i];
    const double diff = target[i] - pred.mean[i];
    nll += std::log(2.0 * std::numbers::pi) + lv + diff * diff * std::exp(-lv);
  }
  return 0.5 * nll;
}

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

inline Gradients make_zero_gradients(const MlpParams& params) {
  Gradients g;
  g.weights.resize(params.n_layers());
  g.biases.resize(params.n_layers());
  for (std::size_t l = 0; l < params.n_layers(); ++l) {
    g.weights[l].assign(params.weights[l].size(), 0.0);
    g.biases[l].assign(params.biases[l].size(), 0.0);
  }
  return g;
}

enum class LossKind {
  SquaredError,  // sum_d (y_d - t_d)^2 on the raw output
  GaussianNll,   // gaussian_head + gaussian_nll on the raw output
};

struct LossSpec {
  LossKind kind = LossKind::SquaredError;
  std::vector<double> target;
  double logvar_min = -10.0;  // GaussianNll only
  double logvar_max = 4.0;
};

namespace detail {

// Backpropagates dL/d(raw output) through the cached forward pass,
// accumulating into grads (callers zero them first).
inline void backprop(const MlpParams& params, const ForwardCache& cache,
                     std::vector<double> output_grad, Gradients& grads) {
  std::vector<double> next_grad;
  for (std::size_t l = params.n_layers(); l-- > 0;) {
    const int in_dim = params.layer_sizes[l];
    const int out_dim = params.layer_sizes[l + 1];
    const std::vector<double>& x = cache.activations[l];
    double* gw = grads.weights[l].data();
    for (int j = 0; j < out_dim; ++j) {
      const double g = output_grad[j];
      grads.biases[l][j] += g;
      double* row = gw + static_cast<std::size_t>(j) * in_dim;
      for (int k = 0; k < in_dim; ++k) row[k] += g * x[k];
    }
    if (l == 0) break;
    next_grad.assign(in_dim, 0.0);
    const double* w = params.weights[l].data();
    for (int j = 0; j < out_dim; ++j) {
      const double g = output_grad[j];
      const double* row = w + static_cast<std::size_t>(j) * in_dim;
      for (int k = 0; k < in_dim; ++k) next_grad[k] += g * row[k];
    }
    // x here is the post-activation output of layer l-1
    for (int k = 0; k < in_dim; ++k)
      next_grad[k] *= activate_grad(x[k], params.activation);
    output_grad.swap(next_grad);
  }
}

// Loss value and dL/d(raw output) for a LossSpec evaluated at raw output y.
inline double loss_and_output_grad(const LossSpec& spec,
                                   std::span<const double> y,
                                   std::vector<double>& output_grad) {
  output_grad.assign(y.size(), 0.0);
  if (spec.kind == LossKind::SquaredError) {
    if (spec.target.size() != y.size())
      throw ShapeError("backward: squared-error target length mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double diff = y[i] - spec.target[i];
      loss += diff * diff;
      output_grad[i] = 2.0 * diff;
    }
    return loss;
  }
  // Gaussian NLL through the soft-clamped head.
  if (y.size() != 2 * spec.target.size())
    throw ShapeError("backward: Gaussian NLL needs output dim = 2 * target dim");
  const std::size_t d = spec.target.size();
  const double span = spec.logvar_max - spec.logvar_min;
  double loss = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double mu = y[i];
    const double s = sigmoid(y[d + i]);
    const double lv = spec.logvar_min + span * s;
    const double diff = spec.target[i] - mu;
    const double inv_var = std::exp(-lv);
    loss += 0.5 * (std::log(2.0 * std::numbers::pi) + lv +
                   diff * diff * inv_var);
    output_grad[i] = -diff * inv_var;                       // dL/dmu
    const double dl_dlv = 0.5 * (1.0 - diff * diff * inv_var);
    output_grad[d + i] = dl_dlv * span * s * (1.0 - s);     // dL/draw
  }
  return loss;
}

}  // namespace detail

// Exact analytic gradients of the chosen loss with respect to every weight
// and bias. Returns the loss value.
inline double backward(const MlpParams& params, std::span<const double> input,
                       const LossSpec& spec, Gradients& grads) {
  ForwardCache cache;
  const std::vector<double>& y = mlp_forward_cached(params, input, cache);
  std::vector<double> output_grad;
  const double loss = detail::loss_and_output_grad(spec, y, output_grad);
  grads = make_zero_gradients(params);
  detail::backprop(params, cache, std::move(output_grad), grads);
  return loss;
}

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  long long step = 0;
};

inline AdamState make_adam_state(const MlpParams& params) {
  AdamState s;
  s.m_w.resize(params.n_layers());
  s.v_w.resize(params.n_layers());
  s.m_b.resize(params.n_layers());
  s.v_b.resize(params.n_layers());
  for (std::size_t l = 0; l < params.n_layers(); ++l) {
    s.m_w[l].assign(params.weights[l].size(), 0.0);
    s.v_w[l].assign(params.weights[l].size(), 0.0);
    s.m_b[l].assign(params.biases[l].size(), 0.0);
    s.v_b[l].assign(params.biases[l].size(), 0.0);
  }
  return s;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One adaptive-moment update. Throws TrainingError (with the layer index) on
// a non-finite gradient entry.
inline void optimizer_step(MlpParams& params, const Gradients& grads,
                           AdamState& state, double lr,
                           const AdamConfig& cfg = {}) {
  if (grads.weights.size() != params.n_layers())
    throw ShapeError("optimizer_step: gradient layer count mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& w, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v,
                    std::size_t layer) {
    if (g.size() != w.size())
      throw ShapeError("optimizer_step: gradient shape mismatch at layer " +
                       std::to_string(layer));
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw TrainingError("optimizer_step: non-finite gradient in layer " +
                                std::to_string(layer),
                            layer);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  };
  for (std::size_t l = 0; l < params.n_layers(); ++l) {
    update(params.weights[l], grads.weights[l], state.m_w[l], state.v_w[l], l);
    update(params.biases[l], grads.biases[l], state.m_b[l], state.v_b[l], l);
  }
}

}  // namespace bootbench

#pragma once

// Minibatch forward/backward kernels for ensemble training. Same math as the
// single-sample path in nn.hpp, restructured around row-major batch matrices
// so the inner loops run over contiguous memory.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bootbench/errors.hpp"
#include "bootbench/nn.hpp"

namespace bootbench::batch {

struct Workspace {
  // act[l] is the batch output of layer l-1 (act[0] left unused; the input
  // matrix is passed separately). delta[l] is dL/d(pre-activation) of layer l.
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> delta;

  void prepare(const MlpParams& params, int batch) {
    const std::size_t n_layers = params.n_layers();
    act.resize(n_layers + 1);
    delta.resize(n_layers + 1);
    for (std::size_t l = 1; l <= n_layers; ++l) {
      const std::size_t width =
          static_cast<std::size_t>(params.layer_sizes[l]) * batch;
      if (act[l].size() < width) act[l].resize(width);
      if (delta[l].size() < width) delta[l].resize(width);
    }
  }
};

namespace detail {

// Y(m x out) = X(m x in) * W^T + b, W row-major (out x in).
inline void linear_forward(const double* x, int m, int in_dim, int out_dim,
                           const double* w, const double* b, double* y) {
  for (int i = 0; i < m; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * in_dim;
    double* yi = y + static_cast<std::size_t>(i) * out_dim;
    for (int j = 0; j < out_dim; ++j) {
      const double* wj = w + static_cast<std::size_t>(j) * in_dim;
      double acc = b[j];
      for (int k = 0; k < in_dim; ++k) acc += wj[k] * xi[k];
      yi[j] = acc;
    }
  }
}

inline void apply_activation(double* y, std::size_t n, Activation a) {
  if (a == Activation::Tanh)
    for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(y[i]);
  else
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
}

}  // namespace detail

// Forward pass over a batch. X is m x input_dim row-major; outputs land in
// ws.act[1..L], the raw network output in ws.act[L].
inline void forward(const MlpParams& params, const double* x, int m,
                    Workspace& ws) {
  ws.prepare(params, m);
  const std::size_t n_layers = params.n_layers();
  const double* input = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in_dim = params.layer_sizes[l];
    const int out_dim = params.layer_sizes[l + 1];
    double* out = ws.act[l + 1].data();
    detail::linear_forward(input, m, in_dim, out_dim,
                           params.weights[l].data(), params.biases[l].data(),
                           out);
    if (l + 1 < n_layers)
      detail::apply_activation(out, static_cast<std::size_t>(m) * out_dim,
                               params.activation);
    input = out;
  }
}

// Mean Gaussian NLL of the batch through the soft-clamped head, with
// dL/d(raw output) written to ws.delta[L]. Targets T are m x d row-major,
// where the raw network output is m x 2d.
inline double nll_loss_and_output_grad(const MlpParams& params,
                                       const double* targets, int m,
                                       double logvar_min, double logvar_max,
                                       Workspace& ws) {
  const int out_dim = params.output_dim();
  const int d = out_dim / 2;
  if (out_dim % 2 != 0)
    throw ShapeError("nll batch: network output dim must be even");
  const double span = logvar_max - logvar_min;
  const double inv_m = 1.0 / m;
  const double* y = ws.act[params.n_layers()].data();
  double* dy = ws.delta[params.n_layers()].data();
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* yi = y + static_cast<std::size_t>(i) * out_dim;
    double* dyi = dy + static_cast<std::size_t>(i) * out_dim;
    const double* ti = targets + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      const double mu = yi[j];
      const double s = 1.0 / (1.0 + std::exp(-yi[d + j]));
      const double lv = logvar_min + span * s;
      const double diff = ti[j] - mu;
      const double inv_var = std::exp(-lv);
      loss += 0.5 * (std::log(2.0 * std::numbers::pi) + lv +
                     diff * diff * inv_var);
      dyi[j] = -diff * inv_var * inv_m;
      dyi[d + j] = 0.5 * (1.0 - diff * diff * inv_var) * span * s * (1.0 - s) *
                   inv_m;
    }
  }
  return loss * inv_m;
}

// Backpropagates ws.delta[L] through the network; writes mean-batch gradients
// (overwriting grads). X is the same batch passed to forward().
inline void backward(const MlpParams& params, const double* x, int m,
                     Workspace& ws, Gradients& grads) {
  const std::size_t n_layers = params.n_layers();
  for (std::size_t l = n_layers; l-- > 0;) {
    const int in_dim = params.layer_sizes[l];
    const int out_dim = params.layer_sizes[l + 1];
    const double* input = l == 0 ? x : ws.act[l].data();
    const double* dz = ws.delta[l + 1].data();
    double* gw = grads.weights[l].data();
    double* gb = grads.biases[l].data();
    std::fill(grads.weights[l].begin(), grads.weights[l].end(), 0.0);
    std::fill(grads.biases[l].begin(), grads.biases[l].end(), 0.0);
    for (int i = 0; i < m; ++i) {
      const double* xi = input + static_cast<std::size_t>(i) * in_dim;
      const double* dzi = dz + static_cast<std::size_t>(i) * out_dim;
      for (int j = 0; j < out_dim; ++j) {
        const double g = dzi[j];
        gb[j] += g;
        double* gwj = gw + static_cast<std::size_t>(j) * in_dim;
        for (int k = 0; k < in_dim; ++k) gwj[k] += g * xi[k];
      }
    }
    if (l == 0) break;
    // dL/d(post-activation of layer l-1), then through the activation.
    double* dx = ws.delta[l].data();
    std::fill(ws.delta[l].begin(),
              ws.delta[l].begin() + static_cast<std::size_t>(m) * in_dim, 0.0);
    const double* w = params.weights[l].data();
    for (int i = 0; i < m; ++i) {
      const double* dzi = dz + static_cast<std::size_t>(i) * out_dim;
      double* dxi = dx + static_cast<std::size_t>(i) * in_dim;
      for (int j = 0; j < out_dim; ++j) {
        const double g = dzi[j];
        const double* wj = w + static_cast<std::size_t>(j) * in_dim;
        for (int k = 0; k < in_dim; ++k) dxi[k] += g * wj[k];
      }
    }
    const double* a = ws.act[l].data();
    for (std::size_t i = 0; i < static_cast<std::size_t>(m) * in_dim; ++i)
      dx[i] *= bootbench::detail::activate_grad(a[i], params.activation);
  }
}

// One training step: returns the batch mean NLL and fills grads.
inline double nll_step(const MlpParams& params, const double* x,
                       const double* targets, int m, double logvar_min,
                       double logvar_max, Workspace& ws, Gradients& grads) {
  forward(params, x, m, ws);
  const double loss =
      nll_loss_and_output_grad(params, targets, m, logvar_min, logvar_max, ws);
  backward(params, x, m, ws, grads);
  return loss;
}

// Loss only, no gradients.
inline double nll_eval(const MlpParams& params, const double* x,
                       const double* targets, int m, double logvar_min,
                       double logvar_max, Workspace& ws) {
  forward(params, x, m, ws);
  const int out_dim = params.output_dim();
  const int d = out_dim / 2;
  const double span = logvar_max - logvar_min;
  const double* y = ws.act[params.n_layers()].data();
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* yi = y + static_cast<std::size_t>(i) * out_dim;
    const double* ti = targets + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      const double s = 1.0 / (1.0 + std::exp(-yi[d + j]));
      const double lv = logvar_min + span * s;
      const double diff = ti[j] - yi[j];
      loss += 0.5 * (std::log(2.0 * std::numbers::pi) + lv +
                     diff * diff * std::exp(-lv));
    }
  }
  return loss / m;
}

}  // namespace bootbench::batch

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace dynq {

/// Fully connected layer, weights row-major (out x in).
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double weight(int r, int c) const {
    return weights[static_cast<std::size_t>(r) * static_cast<std::size_t>(in) +
                   static_cast<std::size_t>(c)];
  }
};

/// Parameters of a multilayer perceptron with rectified-linear hidden units
/// and an identity output layer. Also reused as the container for gradients
/// and squared-gradient accumulators, which share the same shapes.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  int input_dim() const {
    return layers.empty() ? 0 : layers.front().in;
  }
  int output_dim() const {
    return layers.empty() ? 0 : layers.back().out;
  }

  void fill(double value) {
    for (DenseLayer& layer : layers) {
      std::fill(layer.weights.begin(), layer.weights.end(), value);
      std::fill(layer.bias.begin(), layer.bias.end(), value);
    }
  }
};

using GradientSet = NetworkParams;

inline bool same_shape(const NetworkParams& a, const NetworkParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i)
    if (a.layers[i].in != b.layers[i].in || a.layers[i].out != b.layers[i].out)
      return false;
  return true;
}

/// Gradient container of the same shape as params, all entries zero.
inline GradientSet zeros_like(const NetworkParams& params) {
  GradientSet g = params;
  g.fill(0.0);
  return g;
}

/// Builds a network from layer sizes [input, hidden..., output]. Weights are
/// drawn uniformly from [-b, b] with b = 0.05 / sqrt(fan_in) so initial
/// outputs sit close to zero; biases start at zero. Deterministic per seed.
inline NetworkParams init_network(const std::vector<int>& sizes,
                                  std::uint64_t seed) {
  if (sizes.size() < 2)
    throw std::invalid_argument("network needs at least input and output sizes");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  Rng rng(seed);
  NetworkParams params;
  params.layers.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer& layer = params.layers[l];
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.weights.resize(static_cast<std::size_t>(layer.in) *
                         static_cast<std::size_t>(layer.out));
    layer.bias.assign(static_cast<std::size_t>(layer.out), 0.0);
    const double bound = 0.05 / std::sqrt(static_cast<double>(layer.in));
    for (double& w : layer.weights)
      w = (2.0 * next_canonical(rng) - 1.0) * bound;
  }
  return params;
}

/// Scratch buffers for forward and backward passes, reusable across calls so
/// the training loop performs no per-step allocation.
struct NetworkWorkspace {
  /// activations[0] is the input; activations[l+1] the post-activation output
  /// of layer l (identity on the last layer).
  std::vector<std::vector<double>> activations;
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

namespace detail {

inline void forward_into(const NetworkParams& params,
                         const std::vector<double>& obs,
                         NetworkWorkspace& ws) {
  if (static_cast<int>(obs.size()) != params.input_dim())
    throw std::invalid_argument("observation size does not match network input");
  ws.activations.resize(params.layers.size() + 1);
  ws.activations[0] = obs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    const std::vector<double>& x = ws.activations[l];
    std::vector<double>& y = ws.activations[l + 1];
    y.assign(static_cast<std::size_t>(layer.out), 0.0);
    const bool hidden = l + 1 < params.layers.size();
    for (int r = 0; r < layer.out; ++r) {
      double z = layer.bias[static_cast<std::size_t>(r)];
      const double* w = layer.weights.data() +
                        static_cast<std::size_t>(r) * static_cast<std::size_t>(layer.in);
      for (int c = 0; c < layer.in; ++c) z += w[c] * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = hidden && z < 0.0 ? 0.0 : z;
    }
  }
}

}  // namespace detail

/// Action values for one observation.
inline std::vector<double> forward(const NetworkParams& params,
                                   const std::vector<double>& obs) {
  NetworkWorkspace ws;
  detail::forward_into(params, obs, ws);
  return ws.activations.back();
}

/// Computes the temporal-difference error delta = target - Q(obs, action),
/// optionally clipped to [-clip, clip], and accumulates
///   weight * delta * dQ(obs, action)/dtheta
/// into grad (which must match params in shape). Returns the unclipped
/// delta. This is the ascent-direction gradient: applying it with a positive
/// step moves Q(obs, action) toward the target.
inline double td_gradient_into(const NetworkParams& params,
                               const std::vector<double>& obs, int action,
                               double target, std::optional<double> clip,
                               double weight, GradientSet& grad,
                               NetworkWorkspace& ws) {
  if (action < 0 || action >= params.output_dim())
    throw std::invalid_argument("action index out of range");
  if (!same_shape(params, grad))
    throw std::invalid_argument("gradient shape does not match network");
  detail::forward_into(params, obs, ws);
  const double q = ws.activations.back()[static_cast<std::size_t>(action)];
  const double delta = target - q;
  double d = delta;
  if (clip) d = std::clamp(d, -*clip, *clip);

  // Backward pass, seeded with d on the chosen output unit only. ws.delta
  // holds the gradient with respect to the current layer's post-activation
  // input as we walk from the top layer down.
  const std::size_t top = params.layers.size() - 1;
  {
    const DenseLayer& layer = params.layers[top];
    DenseLayer& g = grad.layers[top];
    const std::vector<double>& x = ws.activations[top];
    const double wd = weight * d;
    double* gw = g.weights.data() +
                 static_cast<std::size_t>(action) * static_cast<std::size_t>(layer.in);
    for (int c = 0; c < layer.in; ++c) gw[c] += wd * x[static_cast<std::size_t>(c)];
    g.bias[static_cast<std::size_t>(action)] += wd;
    if (top > 0) {
      ws.delta.assign(static_cast<std::size_t>(layer.in), 0.0);
      const double* w = layer.weights.data() +
                        static_cast<std::size_t>(action) * static_cast<std::size_t>(layer.in);
      for (int c = 0; c < layer.in; ++c) {
        // Rectifier derivative: zero where the activation was clamped.
        if (x[static_cast<std::size_t>(c)] > 0.0)
          ws.delta[static_cast<std::size_t>(c)] = d * w[c];
      }
    }
  }
  for (std::size_t l = top; l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    DenseLayer& g = grad.layers[l];
    const std::vector<double>& x = ws.activations[l];
    for (int r = 0; r < layer.out; ++r) {
      const double dr = ws.delta[static_cast<std::size_t>(r)];
      if (dr == 0.0) continue;
      const double wdr = weight * dr;
      double* gw = g.weights.data() +
                   static_cast<std::size_t>(r) * static_cast<std::size_t>(layer.in);
      for (int c = 0; c < layer.in; ++c) gw[c] += wdr * x[static_cast<std::size_t>(c)];
      g.bias[static_cast<std::size_t>(r)] += wdr;
    }
    if (l > 0) {
      ws.delta_prev.assign(static_cast<std::size_t>(layer.in), 0.0);
      for (int r = 0; r < layer.out; ++r) {
        const double dr = ws.delta[static_cast<std::size_t>(r)];
        if (dr == 0.0) continue;
        const double* w = layer.weights.data() +
                          static_cast<std::size_t>(r) * static_cast<std::size_t>(layer.in);
        for (int c = 0; c < layer.in; ++c)
          ws.delta_prev[static_cast<std::size_t>(c)] += dr * w[c];
      }
      for (int c = 0; c < layer.in; ++c)
        if (!(ws.activations[l][static_cast<std::size_t>(c)] > 0.0))
          ws.delta_prev[static_cast<std::size_t>(c)] = 0.0;
      std::swap(ws.delta, ws.delta_prev);
    }
  }
  return delta;
}

/// Convenience wrapper returning a fresh gradient for a single example.
inline std::pair<GradientSet, double> td_gradient(const NetworkParams& params,
                                                  const std::vector<double>& obs,
                                                  int action, double target,
                                                  std::optional<double> clip) {
  GradientSet grad = zeros_like(params);
  NetworkWorkspace ws;
  const double delta =
      td_gradient_into(params, obs, action, target, clip, 1.0, grad, ws);
  return {std::move(grad), delta};
}

/// Writes parameters to a binary checkpoint: magic, layer-size list, then
/// per layer the row-major weights followed by the biases, all as raw
/// doubles. Round-trips bit-exactly on the same platform.
inline void save_checkpoint(const NetworkParams& params,
                            const std::string& path) {
  if (params.layers.empty())
    throw std::invalid_argument("cannot checkpoint an empty network");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  auto write = [&](const void* p, std::size_t bytes) {
    if (std::fwrite(p, 1, bytes, f) != bytes) {
      std::fclose(f);
      throw std::runtime_error("short write to checkpoint: " + path);
    }
  };
  const char magic[8] = {'Q', 'N', 'E', 'T', 'C', 'K', 'P', '1'};
  write(magic, sizeof magic);
  const std::uint64_t n_sizes = params.layers.size() + 1;
  write(&n_sizes, sizeof n_sizes);
  std::vector<std::uint64_t> sizes;
  sizes.push_back(static_cast<std::uint64_t>(params.layers.front().in));
  for (const DenseLayer& layer : params.layers)
    sizes.push_back(static_cast<std::uint64_t>(layer.out));
  write(sizes.data(), sizes.size() * sizeof(std::uint64_t));
  for (const DenseLayer& layer : params.layers) {
    write(layer.weights.data(), layer.weights.size() * sizeof(double));
    write(layer.bias.data(), layer.bias.size() * sizeof(double));
  }
  if (std::fclose(f) != 0)
    throw std::runtime_error("failed to finish checkpoint: " + path);
}

inline NetworkParams load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  auto read = [&](void* p, std::size_t bytes) {
    if (std::fread(p, 1, bytes, f) != bytes) {
      std::fclose(f);
      throw std::runtime_error("truncated or unreadable checkpoint: " + path);
    }
  };
  char magic[8];
  read(magic, sizeof magic);
  const char expect[8] = {'Q', 'N', 'E', 'T', 'C', 'K', 'P', '1'};
  for (int i = 0; i < 8; ++i)
    if (magic[i] != expect[i]) {
      std::fclose(f);
      throw std::runtime_error("not a network checkpoint: " + path);
    }
  std::uint64_t n_sizes = 0;
  read(&n_sizes, sizeof n_sizes);
  if (n_sizes < 2 || n_sizes > 1024) {
    std::fclose(f);
    throw std::runtime_error("corrupt checkpoint header: " + path);
  }
  std::vector<std::uint64_t> sizes(n_sizes);
  read(sizes.data(), sizes.size() * sizeof(std::uint64_t));
  NetworkParams params;
  params.layers.resize(n_sizes - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l] > (1u << 20)) {
      std::fclose(f);
      throw std::runtime_error("corrupt layer size in checkpoint: " + path);
    }
    DenseLayer& layer = params.layers[l];
    layer.in = static_cast<int>(sizes[l]);
    layer.out = static_cast<int>(sizes[l + 1]);
    layer.weights.resize(static_cast<std::size_t>(layer.in) *
                         static_cast<std::size_t>(layer.out));
    layer.bias.resize(static_cast<std::size_t>(layer.out));
    read(layer.weights.data(), layer.weights.size() * sizeof(double));
    read(layer.bias.data(), layer.bias.size() * sizeof(double));
  }
  std::fclose(f);
  return params;
}

}  // namespace dynq

#pragma once

#include <cmath>
#include <stdexcept>

#include "network.hpp"

namespace dynq {

enum class OptimizerKind { SGD, RMSProp };

/// Optimizer settings and per-parameter state. The RMSProp accumulator is
/// created lazily on the first update so the state can be declared before
/// the network shape is known.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::RMSProp;
  /// Exponential decay of the squared-gradient accumulator.
  double decay = 0.95;
  /// Stabilizer added under the square root.
  double eps_stab = 0.01;
  GradientSet acc;
};

/// Applies one ascent step along grad with step size alpha:
///   SGD:     theta += alpha * g
///   RMSProp: acc    = decay * acc + (1 - decay) * g^2
///            theta += alpha * g / sqrt(acc + eps_stab)
/// The gradient is the ascent direction (TD error times dQ/dtheta), so the
/// step is additive for both methods.
inline void apply_update(NetworkParams& params, const GradientSet& grad,
                         double alpha, OptimizerState& opt) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!same_shape(params, grad))
    throw std::invalid_argument("gradient shape does not match network");
  if (opt.kind == OptimizerKind::SGD) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      DenseLayer& p = params.layers[l];
      const DenseLayer& g = grad.layers[l];
      for (std::size_t i = 0; i < p.weights.size(); ++i)
        p.weights[i] += alpha * g.weights[i];
      for (std::size_t i = 0; i < p.bias.size(); ++i)
        p.bias[i] += alpha * g.bias[i];
    }
    return;
  }
  if (opt.acc.layers.empty()) opt.acc = zeros_like(params);
  if (!same_shape(params, opt.acc))
    throw std::invalid_argument("optimizer state shape does not match network");
  const double d = opt.decay;
  const double stab = opt.eps_stab;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    DenseLayer& p = params.layers[l];
    const DenseLayer& g = grad.layers[l];
    DenseLayer& a = opt.acc.layers[l];
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      a.weights[i] = d * a.weights[i] + (1.0 - d) * g.weights[i] * g.weights[i];
      p.weights[i] += alpha * g.weights[i] / std::sqrt(a.weights[i] + stab);
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
      a.bias[i] = d * a.bias[i] + (1.0 - d) * g.bias[i] * g.bias[i];
      p.bias[i] += alpha * g.bias[i] / std::sqrt(a.bias[i] + stab);
    }
  }
}

}  // namespace dynq

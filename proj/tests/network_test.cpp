#include "dynq/network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dynq/optimizer.hpp"
#include "dynq/rng.hpp"

namespace dynq {
namespace {

// Flat views over all parameters, for sweeping in the finite-difference check.
std::vector<double*> parameter_pointers(NetworkParams& params) {
  std::vector<double*> out;
  for (DenseLayer& layer : params.layers) {
    for (double& w : layer.weights) out.push_back(&w);
    for (double& b : layer.bias) out.push_back(&b);
  }
  return out;
}

std::vector<double> flatten(const NetworkParams& params) {
  std::vector<double> out;
  for (const DenseLayer& layer : params.layers) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

TEST(InitNetwork, ShapesAndBounds) {
  const NetworkParams params = init_network({4, 24, 24, 2}, 9);
  ASSERT_EQ(params.layers.size(), 3u);
  EXPECT_EQ(params.input_dim(), 4);
  EXPECT_EQ(params.output_dim(), 2);
  EXPECT_EQ(params.layers[0].in, 4);
  EXPECT_EQ(params.layers[0].out, 24);
  EXPECT_EQ(params.layers[1].in, 24);
  EXPECT_EQ(params.layers[2].out, 2);
  for (const DenseLayer& layer : params.layers) {
    const double bound = 0.05 / std::sqrt(static_cast<double>(layer.in));
    for (double w : layer.weights) {
      EXPECT_GE(w, -bound);
      EXPECT_LE(w, bound);
    }
    for (double b : layer.bias) EXPECT_DOUBLE_EQ(b, 0.0);
  }
}

TEST(InitNetwork, OutputsStartNearZero) {
  const NetworkParams params = init_network({8, 24, 24, 3}, 17);
  std::vector<double> obs(8, 0.0);
  obs[3] = 1.0;
  for (double q : forward(params, obs)) EXPECT_LT(std::abs(q), 0.1);
}

TEST(InitNetwork, DeterministicPerSeed) {
  const NetworkParams a = init_network({4, 8, 2}, 5);
  const NetworkParams b = init_network({4, 8, 2}, 5);
  const NetworkParams c = init_network({4, 8, 2}, 6);
  EXPECT_EQ(flatten(a), flatten(b));
  EXPECT_NE(flatten(a), flatten(c));
}

TEST(InitNetwork, RejectsBadSizes) {
  EXPECT_THROW(init_network({4}, 0), std::invalid_argument);
  EXPECT_THROW(init_network({}, 0), std::invalid_argument);
  EXPECT_THROW(init_network({4, 0, 2}, 0), std::invalid_argument);
}

TEST(Forward, SingleLayerIsAffine) {
  NetworkParams params;
  params.layers.resize(1);
  DenseLayer& l = params.layers[0];
  l.in = 2;
  l.out = 2;
  l.weights = {1.0, 2.0, 3.0, 4.0};  // rows: [1 2], [3 4]
  l.bias = {0.5, -0.5};
  const std::vector<double> y = forward(params, {1.0, -1.0});
  ASSERT_EQ(y.size(), 2u);
  // Identity output: negative values must come through unclamped.
  EXPECT_DOUBLE_EQ(y[0], -0.5);
  EXPECT_DOUBLE_EQ(y[1], -1.5);
}

TEST(Forward, HiddenLayersRectify) {
  NetworkParams params;
  params.layers.resize(2);
  params.layers[0].in = 1;
  params.layers[0].out = 2;
  params.layers[0].weights = {1.0, -1.0};
  params.layers[0].bias = {0.0, 0.0};
  params.layers[1].in = 2;
  params.layers[1].out = 1;
  params.layers[1].weights = {1.0, 1.0};
  params.layers[1].bias = {0.25};
  // Hidden pre-activations are [2, -2]; the second clamps to zero.
  const std::vector<double> y = forward(params, {2.0});
  ASSERT_EQ(y.size(), 1u);
  EXPECT_DOUBLE_EQ(y[0], 2.25);
}

TEST(Forward, RejectsWrongInputSize) {
  const NetworkParams params = init_network({4, 8, 2}, 1);
  EXPECT_THROW(forward(params, {1.0, 0.0}), std::invalid_argument);
}

// Central-difference oracle: the update direction delta * dQ/dtheta must
// equal minus the gradient of the squared TD loss L = 0.5 * (y - Q)^2,
// estimated as -(L(theta + h) - L(theta - h)) / (2h) per parameter.
TEST(TdGradient, MatchesFiniteDifferences) {
  Rng rng(2024);
  const std::vector<std::vector<int>> shapes = {{3, 8, 4, 2}, {5, 2}, {4, 6, 3}};
  int cases = 0;
  for (const auto& shape : shapes) {
    for (int trial = 0; trial < 7; ++trial) {
      NetworkParams params = init_network(shape, rng());
      // Mix of one-hot and dense observations.
      std::vector<double> obs(static_cast<std::size_t>(shape.front()), 0.0);
      if (trial % 2 == 0) {
        obs[static_cast<std::size_t>(next_index(rng, shape.front()))] = 1.0;
      } else {
        for (double& x : obs) x = 2.0 * next_canonical(rng) - 1.0;
      }
      const int action = next_index(rng, shape.back());
      const double target = 2.0 * next_canonical(rng) - 1.0;

      const auto [grad, delta] = td_gradient(params, obs, action, target,
                                             std::nullopt);
      const std::vector<double> flat_grad = flatten(grad);
      const std::vector<double*> ptrs = parameter_pointers(params);
      ASSERT_EQ(flat_grad.size(), ptrs.size());

      auto loss = [&]() {
        const double q =
            forward(params, obs)[static_cast<std::size_t>(action)];
        return 0.5 * (target - q) * (target - q);
      };
      const double h = 1e-5;
      for (std::size_t i = 0; i < ptrs.size(); ++i) {
        const double saved = *ptrs[i];
        *ptrs[i] = saved + h;
        const double up = loss();
        *ptrs[i] = saved - h;
        const double down = loss();
        *ptrs[i] = saved;
        const double expected = -(up - down) / (2.0 * h);
        const double diff = std::abs(flat_grad[i] - expected);
        EXPECT_TRUE(diff <= 1e-4 * std::abs(expected) || diff <= 1e-8)
            << "param " << i << ": got " << flat_grad[i] << ", expected "
            << expected;
      }
      ++cases;
      (void)delta;
    }
  }
  EXPECT_GE(cases, 20);
}

TEST(TdGradient, ReturnsTheUnclippedError) {
  const NetworkParams params = init_network({3, 6, 2}, 4);
  std::vector<double> obs = {1.0, 0.0, 0.0};
  const double q = forward(params, obs)[1];
  const auto [grad, delta] = td_gradient(params, obs, 1, q + 5.0, 1.0);
  EXPECT_NEAR(delta, 5.0, 1e-12);
  (void)grad;
}

TEST(TdGradient, ClippingActsOnTheErrorBeforeTheProduct) {
  const NetworkParams params = init_network({3, 6, 2}, 4);
  std::vector<double> obs = {0.0, 1.0, 0.0};
  const double q = forward(params, obs)[0];
  // Error of +5 clipped at 1 must give exactly the gradient of error +1.
  const auto [clipped, d1] = td_gradient(params, obs, 0, q + 5.0, 1.0);
  const auto [unit, d2] = td_gradient(params, obs, 0, q + 1.0, std::nullopt);
  EXPECT_EQ(flatten(clipped), flatten(unit));
  EXPECT_NEAR(d1, 5.0, 1e-12);
  EXPECT_NEAR(d2, 1.0, 1e-12);
}

TEST(TdGradient, ZeroErrorGivesZeroGradient) {
  const NetworkParams params = init_network({4, 5, 3}, 8);
  std::vector<double> obs = {0.0, 0.0, 1.0, 0.0};
  const double q = forward(params, obs)[2];
  const auto [grad, delta] = td_gradient(params, obs, 2, q, std::nullopt);
  EXPECT_DOUBLE_EQ(delta, 0.0);
  for (double g : flatten(grad)) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(TdGradient, RejectsBadArguments) {
  const NetworkParams params = init_network({3, 2}, 1);
  GradientSet grad = zeros_like(params);
  GradientSet wrong = zeros_like(init_network({3, 4}, 1));
  NetworkWorkspace ws;
  std::vector<double> obs = {1.0, 0.0, 0.0};
  EXPECT_THROW(td_gradient(params, obs, 5, 0.0, std::nullopt),
               std::invalid_argument);
  EXPECT_THROW(
      td_gradient_into(params, obs, 0, 0.0, std::nullopt, 1.0, wrong, ws),
      std::invalid_argument);
}

TEST(ApplyUpdate, PlainSgdStep) {
  NetworkParams params = init_network({2, 2}, 3);
  const std::vector<double> before = flatten(params);
  GradientSet grad = zeros_like(params);
  grad.layers[0].weights = {1.0, -2.0, 0.5, 0.0};
  grad.layers[0].bias = {0.25, -0.25};
  OptimizerState opt;
  opt.kind = OptimizerKind::SGD;
  apply_update(params, grad, 0.1, opt);
  const std::vector<double> after = flatten(params);
  const std::vector<double> g = flatten(grad);
  for (std::size_t i = 0; i < after.size(); ++i)
    EXPECT_DOUBLE_EQ(after[i], before[i] + 0.1 * g[i]);
}

TEST(ApplyUpdate, RmsPropWorkedExample) {
  // One parameter, gradient 1, step 0.1, decay 0.95, stabilizer 0.01:
  //   acc  = 0.95 * 0 + 0.05 * 1 = 0.05
  //   step = 0.1 / sqrt(0.05 + 0.01) = 0.40824829...
  NetworkParams params;
  params.layers.resize(1);
  params.layers[0].in = 1;
  params.layers[0].out = 1;
  params.layers[0].weights = {0.0};
  params.layers[0].bias = {0.0};
  GradientSet grad = zeros_like(params);
  grad.layers[0].weights[0] = 1.0;
  OptimizerState opt;
  opt.kind = OptimizerKind::RMSProp;
  apply_update(params, grad, 0.1, opt);
  EXPECT_NEAR(params.layers[0].weights[0], 0.1 / std::sqrt(0.06), 1e-12);
  EXPECT_NEAR(params.layers[0].weights[0], 0.40824829046386296, 1e-12);
  EXPECT_NEAR(opt.acc.layers[0].weights[0], 0.05, 1e-15);
  // Zero bias gradient: bias unchanged, its accumulator still zero.
  EXPECT_DOUBLE_EQ(params.layers[0].bias[0], 0.0);
  EXPECT_DOUBLE_EQ(opt.acc.layers[0].bias[0], 0.0);

  // A second update with zero gradient decays the accumulator but leaves
  // the parameter where it is.
  const double theta = params.layers[0].weights[0];
  grad.layers[0].weights[0] = 0.0;
  apply_update(params, grad, 0.1, opt);
  EXPECT_DOUBLE_EQ(params.layers[0].weights[0], theta);
  EXPECT_NEAR(opt.acc.layers[0].weights[0], 0.0475, 1e-15);
}

TEST(ApplyUpdate, RejectsBadArguments) {
  NetworkParams params = init_network({2, 2}, 3);
  GradientSet grad = zeros_like(params);
  OptimizerState opt;
  EXPECT_THROW(apply_update(params, grad, 0.0, opt), std::invalid_argument);
  EXPECT_THROW(apply_update(params, grad, -0.1, opt), std::invalid_argument);
  GradientSet wrong = zeros_like(init_network({2, 3}, 3));
  EXPECT_THROW(apply_update(params, wrong, 0.1, opt), std::invalid_argument);
}

TEST(Checkpoint, RoundTripsBitExactly) {
  const std::string path = "network_test_checkpoint.bin";
  const NetworkParams params = init_network({5, 24, 24, 3}, 99);
  save_checkpoint(params, path);
  const NetworkParams loaded = load_checkpoint(path);
  ASSERT_TRUE(same_shape(params, loaded));
  EXPECT_EQ(flatten(params), flatten(loaded));
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsMissingAndCorruptFiles) {
  EXPECT_THROW(load_checkpoint("no_such_checkpoint.bin"), std::runtime_error);

  const std::string path = "network_test_corrupt.bin";
  std::FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  std::fputs("definitely not a checkpoint", f);
  std::fclose(f);
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::remove(path.c_str());

  // Valid header but truncated payload.
  const std::string trunc = "network_test_truncated.bin";
  save_checkpoint(init_network({4, 4, 2}, 1), trunc);
  f = std::fopen(trunc.c_str(), "rb");
  ASSERT_NE(f, nullptr);
  char buffer[64];
  ASSERT_EQ(std::fread(buffer, 1, sizeof buffer, f), sizeof buffer);
  std::fclose(f);
  f = std::fopen(trunc.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  std::fwrite(buffer, 1, sizeof buffer, f);
  std::fclose(f);
  EXPECT_THROW(load_checkpoint(trunc), std::runtime_error);
  std::remove(trunc.c_str());

  EXPECT_THROW(save_checkpoint(NetworkParams{}, "network_test_empty.bin"),
               std::invalid_argument);
}

}  // namespace
}  // namespace dynq

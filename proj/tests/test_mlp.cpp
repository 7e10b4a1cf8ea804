#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "redistrib/errors.hpp"
#include "redistrib/fixtures.hpp"
#include "redistrib/mlp.hpp"

using namespace redistrib;

namespace {

const Mlp& two_node_net() {
  static const Mlp net = known_mechanisms(3).front().mechanism.effective_net();
  return net;
}

double loss_of(const Mlp& net, const std::vector<std::vector<double>>& xs, const std::vector<double>& up) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += up[i] * forward(net, xs[i]);
  return total;
}

}  // namespace

TEST(Forward, TwoNodeMechanismCorners) {
  EXPECT_NEAR(forward(two_node_net(), std::vector<double>{0.0, 0.0}), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(forward(two_node_net(), std::vector<double>{1.0, 1.0}), 7.0 / 3.0, 1e-15);
}

TEST(Forward, ZeroNetIsZero) {
  const Mlp net(3, {4, 2});
  EXPECT_EQ(forward(net, std::vector<double>{0.3, -2.0, 7.0}), 0.0);
}

TEST(Forward, RejectsWrongInputLength) {
  EXPECT_THROW(forward(two_node_net(), std::vector<double>{0.5}), ContractError);
}

TEST(Forward, NonFiniteInputRaisesNumericalError) {
  EXPECT_THROW(forward(two_node_net(), std::vector<double>{NAN, 0.0}), NumericalError);
}

TEST(Forward, MatchesHandEvaluationOnShallowNets) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mlp net = oracle::random_net(3, {5}, seed, 1.0, seed % 2 == 0);
    for (int t = 0; t < 50; ++t) {
      const auto x = oracle::random_sorted(3, rng);
      EXPECT_NEAR(forward(net, x), oracle::shallow_eval(net, x), 1e-13);
    }
  }
}

TEST(Gradients, SingleActiveNode) {
  Mlp net(1, {1});
  net.weights(0)(0, 0) = 1.0;
  net.weights(1)(0, 0) = 1.0;
  const std::vector<double> x{2.0};
  const GradientSample s{x, 1.0};
  const auto g = gradients(net, std::span(&s, 1));
  // layout: w0, b0, w1, b1
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], 1.0);
}

TEST(Gradients, SingleInactiveNode) {
  Mlp net(1, {1});
  net.weights(0)(0, 0) = 1.0;
  net.weights(1)(0, 0) = 1.0;
  const std::vector<double> x{-2.0};
  const GradientSample s{x, 1.0};
  const auto g = gradients(net, std::span(&s, 1));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Gradients, MatchCentralDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> up(-1.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<std::size_t> hidden = seed % 2 ? std::vector<std::size_t>{6, 4} : std::vector<std::size_t>{5};
    const Mlp net = oracle::random_net(3, hidden, 100 + seed, 1.0, seed % 3 == 0);
    std::vector<std::vector<double>> xs;
    std::vector<double> ups;
    for (int b = 0; b < 8; ++b) {
      xs.push_back(oracle::random_sorted(3, rng));
      ups.push_back(up(rng));
    }
    std::vector<GradientSample> batch;
    for (std::size_t b = 0; b < xs.size(); ++b) batch.push_back({xs[b], ups[b]});
    const auto g = gradients(net, batch);
    const auto p = net.flatten();
    ASSERT_EQ(g.size(), p.size());
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
      Mlp plus = net, minus = net;
      auto pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      plus.assign(pp);
      minus.assign(pm);
      const double fd = (loss_of(plus, xs, ups) - loss_of(minus, xs, ups)) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(g[i]), 1e-3});
      EXPECT_LE(std::abs(fd - g[i]) / scale, 1e-4) << "seed " << seed << " param " << i;
    }
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Mlp net = oracle::random_net(2, {3}, 1);
  const auto before = net.flatten();
  AdamState st = AdamState::for_net(net);
  adam_step(net, st, std::vector<double>(net.parameter_count(), 0.0));
  EXPECT_EQ(net.flatten(), before);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
  Mlp net = oracle::random_net(2, {3}, 2);
  const auto before = net.flatten();
  AdamState st = AdamState::for_net(net, 1e-4);
  std::vector<double> g(net.parameter_count());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 2 ? -1.0 : 1.0) * (0.5 + static_cast<double>(i));
  adam_step(net, st, g);
  const auto after = net.flatten();
  for (std::size_t i = 0; i < g.size(); ++i) {
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expect = -1e-4 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(after[i] - before[i], expect, 1e-15);
  }
}

TEST(Adam, ConstantGradientDescends) {
  Mlp net(1, {1});
  AdamState st = AdamState::for_net(net, 1e-2);
  std::vector<double> g(net.parameter_count(), 0.0);
  g[1] = 3.0;
  for (int i = 0; i < 100; ++i) adam_step(net, st, g);
  EXPECT_LT(net.biases(0)[0], -0.5);
}

TEST(InitRandom, DeterministicPerSeed) {
  EXPECT_EQ(init_random(5, {20, 20}, 9), init_random(5, {20, 20}, 9));
  EXPECT_NE(init_random(5, {20, 20}, 9).flatten(), init_random(5, {20, 20}, 10).flatten());
  EXPECT_EQ(init_random(5, {20, 20}, 9).hidden_node_count(), 40u);
}

TEST(InitRandom, FanInRangeAndZeroBiases) {
  const Mlp net = init_random(4, {16, 9}, 3);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double limit = std::sqrt(1.0 / static_cast<double>(net.weights(l).cols));
    for (double w : net.weights(l).data) EXPECT_LE(std::abs(w), limit);
    for (double b : net.biases(l)) EXPECT_EQ(b, 0.0);
  }
  EXPECT_FALSE(net.has_skip());
}

TEST(Mlp, FlattenAssignRoundTrip) {
  Mlp net = oracle::random_net(3, {4, 2}, 4, 1.0, true);
  const auto p = net.flatten();
  Mlp other(3, {4, 2});
  other.enable_skip();
  other.assign(p);
  EXPECT_EQ(other, net);
  EXPECT_THROW(other.assign(std::vector<double>(p.size() + 1)), ContractError);
}

TEST(Mlp, RemoveHiddenNodeEqualsZeroedNode) {
  std::mt19937_64 rng(8);
  const Mlp net = oracle::random_net(3, {5, 4}, 12);
  Mlp silenced = net;
  for (std::size_t r = 0; r < 4; ++r) silenced.weights(1)(r, 2) = 0.0;
  Mlp pruned = net;
  pruned.remove_hidden_node(0, 2);
  EXPECT_EQ(pruned.hidden_sizes(), (std::vector<std::size_t>{4, 4}));
  for (int t = 0; t < 100; ++t) {
    const auto x = oracle::random_sorted(3, rng);
    EXPECT_NEAR(forward(pruned, x), forward(silenced, x), 1e-14);
  }
}

TEST(Mlp, RemovingLastNodeOfLayerThrows) {
  Mlp net(2, {1, 3});
  EXPECT_THROW(net.remove_hidden_node(0, 0), ContractError);
  EXPECT_THROW(net.remove_hidden_node(1, 3), ContractError);
}

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "redistrib/bounds.hpp"
#include "redistrib/errors.hpp"
#include "redistrib/fixtures.hpp"
#include "redistrib/lottery.hpp"

using namespace redistrib;

TEST(Importance, SingleNode) {
  Mlp net(2, {1});
  net.weights(1)(0, 0) = -0.5;
  const NodeImportance r = node_relative_importance(net, 0, 0);
  EXPECT_DOUBLE_EQ(r.importance, 0.5);
  EXPECT_DOUBLE_EQ(r.relative, 1.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(Importance, SumsAbsoluteOutgoingWeights) {
  Mlp net(2, {2, 3});
  net.weights(1)(0, 0) = 0.25;
  net.weights(1)(1, 0) = 0.7;
  net.weights(1)(2, 0) = -0.2;
  net.weights(1)(0, 1) = 0.85;
  EXPECT_NEAR(node_relative_importance(net, 0, 0).importance, 1.15, 1e-15);
  EXPECT_NEAR(node_relative_importance(net, 0, 0).relative, 1.15 / 2.0, 1e-15);
}

TEST(Importance, RelativeSumsToOneAndDegenerateIsUniform) {
  const Mlp net = oracle::random_net(3, {5, 4}, 2);
  for (std::size_t l = 0; l < 2; ++l) {
    double total = 0;
    for (std::size_t k = 0; k < net.hidden_sizes()[l]; ++k) total += node_relative_importance(net, l, k).relative;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  const NodeImportance z = node_relative_importance(Mlp(2, {4}), 0, 1);
  EXPECT_TRUE(z.degenerate);
  EXPECT_DOUBLE_EQ(z.relative, 0.25);
}

TEST(Prune, RemovesGlobalArgmin) {
  Mlp net(2, {2});
  net.weights(1)(0, 0) = 0.01;
  net.weights(1)(0, 1) = 1.0;
  EXPECT_EQ(least_important_node(net), (std::pair<std::size_t, std::size_t>{0, 0}));
  const Mlp p = prune_one_node(net);
  EXPECT_EQ(p.hidden_node_count(), 1u);
  EXPECT_DOUBLE_EQ(p.weights(1)(0, 0), 1.0);
}

TEST(Prune, TieBreaksOnEarliestLayerThenIndex) {
  EXPECT_EQ(least_important_node(Mlp(2, {3, 3})), (std::pair<std::size_t, std::size_t>{0, 0}));
}

TEST(Prune, SkipsSingleNodeLayers) {
  Mlp net(2, {1, 3});
  net.weights(1)(0, 0) = 1e-6;  // layer 0's only node would otherwise be least important
  net.weights(2)(0, 0) = 1.0;
  net.weights(2)(0, 1) = 2.0;
  net.weights(2)(0, 2) = 3.0;
  EXPECT_EQ(least_important_node(net), (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_THROW(least_important_node(Mlp(2, {1})), ContractError);
  EXPECT_THROW(least_important_node(Mlp(2, {1, 1})), ContractError);
}

TEST(Prune, EqualsZeroingTheNodeOutput) {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mlp net = oracle::random_net(3, {6, 5}, 90 + seed);
    const auto [layer, node] = least_important_node(net);
    const Mlp pruned = prune_one_node(net);
    Mlp zeroed = net;
    for (std::size_t r = 0; r < zeroed.weights(layer + 1).rows; ++r) zeroed.weights(layer + 1)(r, node) = 0.0;
    for (int t = 0; t < 100; ++t) {
      const auto x = oracle::random_sorted(3, rng);
      EXPECT_NEAR(forward(pruned, x), forward(zeroed, x), 1e-12);
    }
  }
}

TEST(Prune, SurvivingParametersMapFlatLayout) {
  const Mlp net = oracle::random_net(3, {4, 3}, 6);
  const auto keep = surviving_parameters(net, 0, 2);
  Mlp removed = net;
  removed.remove_hidden_node(0, 2);
  const auto full = net.flatten();
  const auto small = removed.flatten();
  ASSERT_EQ(keep.size(), small.size());
  for (std::size_t i = 0; i < keep.size(); ++i) EXPECT_EQ(full[keep[i]], small[i]);
}

TEST(Restrict, MatchesSequentialRemoval) {
  const Mlp net = oracle::random_net(3, {5, 4}, 7);
  Mlp manual = net;
  manual.remove_hidden_node(1, 3);
  manual.remove_hidden_node(1, 0);
  manual.remove_hidden_node(0, 4);
  manual.remove_hidden_node(0, 1);
  const Mlp r = restrict_to(net, {{0, 2, 3}, {1, 2}});
  EXPECT_EQ(r.flatten(), manual.flatten());
}

TEST(Novelty, ComparesRetainedIndexSets) {
  DrawHistory h(Mlp(2, {4}), 1, GoalState::starting_at(0.6, 0.7));
  Ticket t;
  t.retained = {{0, 2}};
  EXPECT_TRUE(is_new_ticket(t, h));
  h.tickets.push_back(t);
  EXPECT_FALSE(is_new_ticket(t, h));
  t.retained = {{0, 3}};
  EXPECT_TRUE(is_new_ticket(t, h));
}

TEST(Ensemble, AveragesPointwise) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Mechanism a(4, oracle::random_net(3, {4}, 200 + seed, 1.0, seed % 2 == 0), 0.1);
    const Mechanism b(4, oracle::random_net(3, seed % 3 == 0 ? std::vector<std::size_t>{3, 2} : std::vector<std::size_t>{5},
                                             300 + seed),
                      -0.3);
    const Mechanism e = ensemble(a, b);
    EXPECT_EQ(e.n, 4u);
    for (int t = 0; t < 200; ++t) {
      const auto x = oracle::random_sorted(3, rng);
      EXPECT_NEAR(e.groves(x), 0.5 * a.groves(x) + 0.5 * b.groves(x), 1e-12);
    }
  }
}

TEST(Ensemble, EqualDepthNodeCountIsSum) {
  const Mechanism a(3, oracle::random_net(2, {4}, 1));
  const Mechanism b(3, oracle::random_net(2, {6}, 2));
  EXPECT_EQ(ensemble(a, b).net.hidden_node_count(), 10u);
  EXPECT_THROW(ensemble(a, Mechanism(4, oracle::random_net(3, {2}, 3))), ContractError);
}

TEST(Ensemble, ViolationIsAtMostWorstMember) {
  std::mt19937_64 rng(9);
  const Mechanism a(3, oracle::random_net(2, {3}, 11));
  const Mechanism b(3, oracle::random_net(2, {3}, 12));
  const Mechanism e = ensemble(a, b);
  for (int t = 0; t < 1000; ++t) {
    const TypeProfile p(oracle::random_sorted(3, rng));
    const Violations ve = violations(e, p, 0.6), va = violations(a, p, 0.6), vb = violations(b, p, 0.6);
    EXPECT_LE(ve.left + ve.right, std::max(va.left + va.right, vb.left + vb.right) + 1e-9);
  }
}

TEST(Lottery, DrawIsDeterministicAndRestoresLargeNet) {
  LotteryConfig cfg;
  cfg.train.seed = 3;
  const Mlp large = init_random(2, {6}, 10);
  DrawHistory h1(large, 5, GoalState::starting_at(2.0 / 3, 2.0 / 3));
  DrawHistory h2(large, 5, GoalState::starting_at(2.0 / 3, 2.0 / 3));
  const Ticket a = draw_ticket(h1, 3, 3, cfg);
  const Ticket b = draw_ticket(h2, 3, 3, cfg);
  EXPECT_EQ(a.retained, b.retained);
  EXPECT_EQ(a.trained_subnet.flatten(), b.trained_subnet.flatten());
  EXPECT_TRUE(a.complete);
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(h1.large_initial.flatten(), large.flatten());
  EXPECT_EQ(a.initial_subnet.flatten(), restrict_to(large, a.retained).flatten());
}

TEST(Lottery, ScratchSharesSixteenProfiles) {
  LotteryConfig cfg;
  cfg.train.mip_rounds = 8;
  DrawHistory h(init_random(2, {6}, 10), 5, GoalState::starting_at(2.0 / 3, 2.0 / 3));
  Ticket t = draw_ticket(h, 3, 3, cfg);
  scratch_ticket(t, 3, cfg, h);
  EXPECT_TRUE(t.scratched);
  EXPECT_EQ(h.shared.size(), 16u);
  EXPECT_EQ(t.scratch_history.size(), 8u);
}

TEST(Lottery, ScratchWithZeroRoundsChangesNothing) {
  LotteryConfig cfg;
  cfg.train.mip_rounds = 0;
  DrawHistory h(init_random(2, {6}, 10), 5, GoalState::starting_at(2.0 / 3, 2.0 / 3));
  Ticket t = draw_ticket(h, 3, 3, cfg);
  const GoalState before = h.goal;
  scratch_ticket(t, 3, cfg, h);
  EXPECT_TRUE(h.shared.empty());
  EXPECT_EQ(h.goal.alpha_goal, before.alpha_goal);
  EXPECT_EQ(h.goal.alpha_low, before.alpha_low);
}

TEST(Lottery, OptimalFixtureTicketSucceeds) {
  LotteryConfig cfg;
  cfg.train.mip_rounds = 1;
  const auto fixture = known_mechanisms(3).front().mechanism.net;
  const double a = theoretical_upper_bound(3);
  DrawHistory h(fixture, 5, GoalState::starting_at(a, a));
  Ticket t;
  t.retained = {{0, 1}};
  t.initial_subnet = fixture;
  t.trained_subnet = fixture;
  t.complete = true;
  scratch_ticket(t, 3, cfg, h);
  EXPECT_TRUE(t.success);
  EXPECT_NEAR(h.goal.alpha_low, a, 1e-9);
}

TEST(Lottery, RejectsTargetNotBelowLargeSize) {
  LotteryConfig cfg;
  DrawHistory h(init_random(2, {4}, 1), 1, GoalState::starting_at(0.6, 0.7));
  EXPECT_THROW(draw_ticket(h, 3, 4, cfg), ContractError);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "redistrib/mechanism.hpp"
#include "redistrib/mlp.hpp"
#include "redistrib/trainer.hpp"

namespace redistrib {

struct NodeImportance {
  double importance = 0.0;  // sum of |outgoing weights|
  double relative = 0.0;    // importance / layer total
  bool degenerate = false;  // layer total was 0; relative is then 1 / layer size
};

NodeImportance node_relative_importance(const Mlp& net, std::size_t layer, std::size_t node);

/// Global argmin of relative importance, earliest layer then lowest index on
/// ties. Layers with a single node are skipped so none is ever emptied.
std::pair<std::size_t, std::size_t> least_important_node(const Mlp& net);

Mlp prune_one_node(const Mlp& net);

/// Positions in net.flatten() that survive remove_hidden_node(layer, node), in order.
std::vector<std::size_t> surviving_parameters(const Mlp& net, std::size_t layer, std::size_t node);

/// The subnetwork keeping only `retained[l]` (original indices, ascending) of hidden layer l.
Mlp restrict_to(const Mlp& net, const std::vector<std::vector<std::size_t>>& retained);

struct Ticket {
  std::size_t draw = 0;  // 1-based
  std::vector<std::vector<std::size_t>> retained;
  Mlp initial_subnet;
  Mlp trained_subnet;
  std::size_t training_rounds = 0;
  bool complete = false;  // reached the target size within the round limit
  bool novel = false;

  bool scratched = false;
  std::optional<double> best_ratio;
  Mechanism best;
  std::vector<RoundRecord> scratch_history;
  bool success = false;
  double goal_before = 0.0;  // lottery alpha^G when the ticket was scratched

  std::size_t size() const;
};

struct LotteryConfig {
  /// Adam, epochs, schedule and certifier settings; train.mip_rounds is the scratch budget.
  TrainConfig train;
  /// Cap on 500-epoch rounds spent drawing one ticket; 0 means unlimited.
  std::size_t draw_round_limit = 0;
  /// false clears the shared store before every draw.
  bool persistent_store = true;

  LotteryConfig() { train.mip_rounds = 100; }
};

struct DrawHistory {
  std::vector<Ticket> tickets;
  WcpStore shared;
  Mlp large_initial;
  Rng rng;
  GoalState goal;

  DrawHistory(Mlp large, std::uint64_t seed, GoalState start);
};

Ticket draw_ticket(DrawHistory& history, std::size_t n, std::size_t target_size, const LotteryConfig& config);

/// Runs WCT on the ticket, shares its last 16 worst cases and moves the lottery goal.
void scratch_ticket(Ticket& ticket, std::size_t n, const LotteryConfig& config, DrawHistory& history,
                    const RoundObserver& observer = {});

bool is_new_ticket(const Ticket& ticket, const DrawHistory& history);

/// h = (h1 + h2) / 2 as one net: hidden layers stacked block-diagonally, the
/// shallower member padded with identity layers.
Mechanism ensemble(const Mechanism& a, const Mechanism& b);

struct DrawRecord {
  std::size_t draw = 0;
  bool novel = false;
  std::optional<double> ratio;
  std::optional<double> running_best;
  double gap = 0.0;  // alpha^U - ratio (alpha^U alone when nothing certified)
  bool beat_previous = false;
  bool success = false;
  double alpha_goal = 0.0;  // after the goal update
  std::size_t shared_store_size = 0;
  std::size_t training_rounds = 0;
};

struct LotteryResult {
  Mechanism best;
  std::optional<double> best_ratio;
  DrawHistory history;
  std::vector<DrawRecord> draws;
};

struct LotteryObserver {
  std::function<void(const Ticket&)> on_ticket;
  std::function<void(const DrawRecord&)> on_draw;
  RoundObserver on_round;
};

LotteryResult lottery_run(std::size_t n, const std::vector<std::size_t>& large_sizes, std::size_t target_size,
                          std::size_t draws, const LotteryConfig& config, std::uint64_t seed,
                          const LotteryObserver& observer = {});

}  // namespace redistrib

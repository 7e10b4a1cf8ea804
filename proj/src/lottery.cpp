#include "redistrib/lottery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "redistrib/bounds.hpp"
#include "redistrib/errors.hpp"

namespace redistrib {

NodeImportance node_relative_importance(const Mlp& net, std::size_t layer, std::size_t node) {
  if (layer >= net.hidden_layer_count() || node >= net.hidden_sizes()[layer])
    throw ContractError("node_relative_importance: no such hidden node");
  const Matrix& next = net.weights(layer + 1);
  std::vector<double> per_node(next.cols, 0.0);
  for (std::size_t r = 0; r < next.rows; ++r)
    for (std::size_t c = 0; c < next.cols; ++c) per_node[c] += std::abs(next(r, c));
  const double total = std::accumulate(per_node.begin(), per_node.end(), 0.0);
  NodeImportance out;
  out.importance = per_node[node];
  if (total > 0.0) {
    out.relative = per_node[node] / total;
  } else {
    out.relative = 1.0 / static_cast<double>(per_node.size());
    out.degenerate = true;
  }
  return out;
}

std::pair<std::size_t, std::size_t> least_important_node(const Mlp& net) {
  if (net.hidden_node_count() < 2) throw ContractError("prune_one_node: need more than one hidden node");
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_value = INFINITY;
  bool found = false;
  for (std::size_t l = 0; l < net.hidden_layer_count(); ++l) {
    if (net.hidden_sizes()[l] < 2) continue;
    for (std::size_t k = 0; k < net.hidden_sizes()[l]; ++k) {
      const double v = node_relative_importance(net, l, k).relative;
      if (v < best_value) {
        best_value = v;
        best = {l, k};
        found = true;
      }
    }
  }
  if (!found) throw ContractError("prune_one_node: every hidden layer has a single node");
  return best;
}

Mlp prune_one_node(const Mlp& net) {
  const auto [layer, node] = least_important_node(net);
  Mlp out = net;
  out.remove_hidden_node(layer, node);
  return out;
}

std::vector<std::size_t> surviving_parameters(const Mlp& net, std::size_t layer, std::size_t node) {
  Mlp labels = net;
  std::vector<double> ids(net.parameter_count());
  std::iota(ids.begin(), ids.end(), 0.0);
  labels.assign(ids);
  labels.remove_hidden_node(layer, node);
  std::vector<std::size_t> out;
  for (double v : labels.flatten()) out.push_back(static_cast<std::size_t>(v));
  return out;
}

Mlp restrict_to(const Mlp& net, const std::vector<std::vector<std::size_t>>& retained) {
  if (retained.size() != net.hidden_layer_count()) throw ContractError("restrict_to: one index set per hidden layer");
  Mlp out = net;
  for (std::size_t l = 0; l < retained.size(); ++l) {
    const auto& keep = retained[l];
    if (keep.empty() || !std::is_sorted(keep.begin(), keep.end()) ||
        std::adjacent_find(keep.begin(), keep.end()) != keep.end() || keep.back() >= net.hidden_sizes()[l])
      throw ContractError("restrict_to: index sets must be nonempty, ascending and in range");
    for (std::size_t k = net.hidden_sizes()[l]; k-- > 0;)
      if (!std::binary_search(keep.begin(), keep.end(), k)) out.remove_hidden_node(l, k);
  }
  return out;
}

std::size_t Ticket::size() const {
  std::size_t total = 0;
  for (const auto& layer : retained) total += layer.size();
  return total;
}

DrawHistory::DrawHistory(Mlp large, std::uint64_t seed, GoalState start)
    : large_initial(std::move(large)), rng(seed), goal(start) {
  large_initial.validate();
  goal.validate();
}

Ticket draw_ticket(DrawHistory& history, std::size_t n, std::size_t target_size, const LotteryConfig& config) {
  config.train.validate();
  const Mlp& large = history.large_initial;
  if (n < 2 || large.input_dim() != n - 1) throw ContractError("draw_ticket: net input_dim must equal n - 1");
  if (target_size >= large.hidden_node_count() || target_size < large.hidden_layer_count())
    throw ContractError("draw_ticket: target size must be below the large net's node count and keep every layer");
  if (!config.persistent_store) history.shared = WcpStore{};

  Ticket ticket;
  ticket.draw = history.tickets.size() + 1;
  for (std::size_t size : large.hidden_sizes()) {
    std::vector<std::size_t> all(size);
    std::iota(all.begin(), all.end(), std::size_t{0});
    ticket.retained.push_back(std::move(all));
  }

  Mlp net = large;
  AdamState adam = AdamState::for_net(net, config.train.learning_rate);
  std::size_t stalls = 0;
  for (;;) {
    if (config.draw_round_limit != 0 && ticket.training_rounds >= config.draw_round_limit) break;
    const std::vector<TypeProfile> batch = build_batch(history.shared, n, history.rng);
    const double loss = train_round(net, adam, batch, history.goal.alpha_goal, n, config.train.epochs);
    ++ticket.training_rounds;
    if (loss > loss_threshold(stalls, config.train.threshold_unit, config.train.threshold_period)) {
      ++stalls;
      continue;
    }
    stalls = 0;
    if (net.hidden_node_count() == target_size) {
      ticket.complete = true;
      break;
    }
    const auto [layer, node] = least_important_node(net);
    const std::vector<std::size_t> keep = surviving_parameters(net, layer, node);
    net.remove_hidden_node(layer, node);
    std::vector<double> m1, m2;
    for (std::size_t i : keep) {
      m1.push_back(adam.first_moment[i]);
      m2.push_back(adam.second_moment[i]);
    }
    adam.first_moment = std::move(m1);
    adam.second_moment = std::move(m2);
    ticket.retained[layer].erase(ticket.retained[layer].begin() + static_cast<std::ptrdiff_t>(node));
  }

  ticket.initial_subnet = restrict_to(large, ticket.retained);
  ticket.trained_subnet = std::move(net);
  ticket.novel = is_new_ticket(ticket, history);
  return ticket;
}

void scratch_ticket(Ticket& ticket, std::size_t n, const LotteryConfig& config, DrawHistory& history,
                    const RoundObserver& observer) {
  TrainConfig cfg = config.train;
  cfg.seed = history.rng();
  ticket.goal_before = history.goal.alpha_goal;
  if (cfg.mip_rounds == 0) {
    ticket.scratched = true;
    ticket.best = Mechanism(n, ticket.trained_subnet, 0.0);
    return;
  }

  WctResult run = wct_run(ticket.trained_subnet, n, cfg, WcpStore{}, history.goal, observer);
  for (TypeProfile& p : run.store.latest(kBatchGroup)) history.shared.append(std::move(p));

  ticket.scratched = true;
  ticket.best = std::move(run.best);
  ticket.best_ratio = run.best_ratio;
  ticket.success = std::any_of(run.history.begin(), run.history.end(), [&](const RoundRecord& r) {
    return r.success && r.alpha_goal >= ticket.goal_before;
  });
  ticket.scratch_history = std::move(run.history);
  history.goal = goal_update(history.goal, ticket.success);
}

bool is_new_ticket(const Ticket& ticket, const DrawHistory& history) {
  return std::none_of(history.tickets.begin(), history.tickets.end(),
                      [&](const Ticket& t) { return t.retained == ticket.retained; });
}

namespace {

// Identity hidden layers appended after the last hidden layer; exact because
// the inputs to them are post-ReLU and hence nonnegative.
Mlp deepen(const Mlp& net, std::size_t hidden_layers) {
  if (net.hidden_layer_count() >= hidden_layers) return net;
  std::vector<std::size_t> sizes = net.hidden_sizes();
  const std::size_t width = sizes.back();
  while (sizes.size() < hidden_layers) sizes.push_back(width);
  Mlp out(net.input_dim(), sizes);
  for (std::size_t l = 0; l < net.hidden_layer_count(); ++l) {
    out.weights(l) = net.weights(l);
    out.biases(l) = net.biases(l);
  }
  for (std::size_t l = net.hidden_layer_count(); l < hidden_layers; ++l)
    for (std::size_t k = 0; k < width; ++k) out.weights(l)(k, k) = 1.0;
  const std::size_t last = net.layer_count() - 1;
  out.weights(hidden_layers) = net.weights(last);
  out.biases(hidden_layers) = net.biases(last);
  if (net.has_skip()) {
    out.enable_skip();
    out.skip() = net.skip();
  }
  return out;
}

}  // namespace

Mechanism ensemble(const Mechanism& a, const Mechanism& b) {
  if (a.n != b.n) throw ContractError("ensemble: members must have the same n");
  a.net.validate();
  b.net.validate();
  if (a.net.hidden_layer_count() == 0 || b.net.hidden_layer_count() == 0)
    throw ContractError("ensemble: members need at least one hidden layer");
  const std::size_t depth = std::max(a.net.hidden_layer_count(), b.net.hidden_layer_count());
  const Mlp x = deepen(a.net, depth);
  const Mlp y = deepen(b.net, depth);

  std::vector<std::size_t> sizes;
  for (std::size_t l = 0; l < depth; ++l) sizes.push_back(x.hidden_sizes()[l] + y.hidden_sizes()[l]);
  Mlp out(x.input_dim(), sizes);
  for (std::size_t l = 0; l <= depth; ++l) {
    const Matrix& wx = x.weights(l);
    const Matrix& wy = y.weights(l);
    Matrix& w = out.weights(l);
    const bool output = l == depth;
    const double scale = output ? 0.5 : 1.0;
    const std::size_t row_offset = output ? 0 : wx.rows;
    const std::size_t col_offset = l == 0 ? 0 : wx.cols;
    for (std::size_t r = 0; r < wx.rows; ++r)
      for (std::size_t c = 0; c < wx.cols; ++c) w(r, c) = scale * wx(r, c);
    for (std::size_t r = 0; r < wy.rows; ++r)
      for (std::size_t c = 0; c < wy.cols; ++c) w(row_offset + r, col_offset + c) = scale * wy(r, c);
    std::vector<double>& bias = out.biases(l);
    if (output) {
      bias[0] = 0.5 * (x.biases(l)[0] + y.biases(l)[0]);
    } else {
      std::copy(x.biases(l).begin(), x.biases(l).end(), bias.begin());
      std::copy(y.biases(l).begin(), y.biases(l).end(), bias.begin() + static_cast<std::ptrdiff_t>(wx.rows));
    }
  }
  if (x.has_skip() || y.has_skip()) {
    out.enable_skip();
    for (std::size_t c = 0; c < out.input_dim(); ++c)
      out.skip()[c] = 0.5 * ((x.has_skip() ? x.skip()[c] : 0.0) + (y.has_skip() ? y.skip()[c] : 0.0));
  }
  return Mechanism(a.n, std::move(out), 0.5 * (a.shift + b.shift));
}

LotteryResult lottery_run(std::size_t n, const std::vector<std::size_t>& large_sizes, std::size_t target_size,
                          std::size_t draws, const LotteryConfig& config, std::uint64_t seed,
                          const LotteryObserver& observer) {
  if (draws == 0) throw ContractError("lottery_run: need at least one draw");
  if (n < 3) throw ContractError("lottery_run: n must be at least 3");
  Rng master(seed);
  const std::uint64_t init_seed = master();
  const GoalState start = GoalState::starting_at(manual_lower_bound(n), theoretical_upper_bound(n));
  LotteryResult result{Mechanism{}, std::nullopt, DrawHistory(init_random(n - 1, large_sizes, init_seed), master(), start), {}};
  DrawHistory& history = result.history;

  for (std::size_t d = 0; d < draws; ++d) {
    Ticket ticket = draw_ticket(history, n, target_size, config);
    if (observer.on_ticket) observer.on_ticket(ticket);
    scratch_ticket(ticket, n, config, history, observer.on_round);

    DrawRecord rec;
    rec.draw = ticket.draw;
    rec.novel = ticket.novel;
    rec.ratio = ticket.best_ratio;
    rec.success = ticket.success;
    rec.training_rounds = ticket.training_rounds;
    rec.gap = history.goal.alpha_upper - ticket.best_ratio.value_or(0.0);
    rec.beat_previous = ticket.best_ratio && (!result.best_ratio || *ticket.best_ratio > *result.best_ratio);
    if (rec.beat_previous) {
      result.best = ticket.best;
      result.best_ratio = ticket.best_ratio;
    }
    rec.running_best = result.best_ratio;
    rec.alpha_goal = history.goal.alpha_goal;
    rec.shared_store_size = history.shared.size();
    history.tickets.push_back(std::move(ticket));
    if (observer.on_draw) observer.on_draw(rec);
    result.draws.push_back(rec);
  }
  if (!result.best_ratio) result.best = history.tickets.back().best;
  return result;
}

}  // namespace redistrib

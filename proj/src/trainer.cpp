#include "redistrib/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "redistrib/bounds.hpp"
#include "redistrib/errors.hpp"

namespace redistrib {

std::vector<TypeProfile> WcpStore::latest(std::size_t k) const {
  const std::size_t take = std::min(k, profiles_.size());
  return {profiles_.end() - static_cast<std::ptrdiff_t>(take), profiles_.end()};
}

std::vector<TypeProfile> WcpStore::earlier(std::size_t k) const {
  const std::size_t keep = profiles_.size() - std::min(k, profiles_.size());
  return {profiles_.begin(), profiles_.begin() + static_cast<std::ptrdiff_t>(keep)};
}

std::string WcpStore::to_text() const {
  std::string out;
  for (const TypeProfile& p : profiles_) {
    out += p.to_text();
    out += '\n';
  }
  return out;
}

WcpStore WcpStore::from_text(const std::string& text) {
  WcpStore store;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    store.append(TypeProfile::from_text(line));
  }
  return store;
}

GoalState GoalState::starting_at(double lower, double upper) {
  // The LP bound can land a rounding error below a closed-form lower bound (n = 3).
  if (lower > upper && lower - upper <= 1e-9) lower = upper;
  GoalState g{lower, lower, upper};
  g.validate();
  return g;
}

void GoalState::validate() const {
  if (!(std::isfinite(alpha_low) && std::isfinite(alpha_goal) && std::isfinite(alpha_upper)))
    throw ContractError("GoalState: non-finite ratio");
  if (!(alpha_low <= alpha_goal && alpha_goal <= alpha_upper))
    throw ContractError("GoalState: need alpha_low <= alpha_goal <= alpha_upper");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || epochs == 0 || !(success_tolerance > 0.0) || !(threshold_unit > 0.0) ||
      threshold_period == 0)
    throw ContractError("TrainConfig: learning rate, epochs, tolerance and schedule must be positive");
}

TypeProfile sample_random_profile(std::size_t n, Rng& rng) {
  const double c = 1.0 / static_cast<double>(n / 2);
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) {
    switch (pick(rng)) {
      case 0: x = 0.0; break;
      case 1: x = c; break;
      default: x = unit(rng); break;
    }
  }
  return TypeProfile(std::move(v));
}

std::vector<TypeProfile> build_batch(const WcpStore& store, std::size_t n, Rng& rng) {
  std::vector<TypeProfile> batch = store.latest(kBatchGroup);
  const std::vector<TypeProfile> older = store.earlier(kBatchGroup);
  std::sample(older.begin(), older.end(), std::back_inserter(batch), kBatchGroup, rng);
  for (std::size_t i = 0; i < kBatchGroup; ++i) batch.push_back(sample_random_profile(n, rng));
  for (TypeProfile& p : bound_profiles(n)) batch.push_back(std::move(p));
  return batch;
}

namespace {

void check_batch(const Mlp& net, const std::vector<TypeProfile>& batch, std::size_t n) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  if (n < 2 || net.input_dim() != n - 1) throw ContractError("batch_loss: net input_dim must equal n - 1");
  for (const TypeProfile& p : batch)
    if (p.size() != n) throw ContractError("batch_loss: profile length must equal n");
}

// Per-agent inputs of every profile, laid out so that gradient samples can point into them.
struct PreparedBatch {
  std::size_t n = 0;
  std::vector<std::vector<double>> inputs;  // profile b, agent i at b * n + i
  std::vector<double> s;

  PreparedBatch(const std::vector<TypeProfile>& batch, std::size_t agents) : n(agents) {
    inputs.reserve(batch.size() * n);
    for (const TypeProfile& p : batch) {
      for (std::size_t i = 0; i < n; ++i) inputs.push_back(p.without(i));
      s.push_back(s_value(p));
    }
  }
  std::size_t size() const { return s.size(); }
};

double prepared_loss(const Mlp& net, const PreparedBatch& pb, double alpha, std::vector<double>* grad) {
  const double nn = static_cast<double>(pb.n);
  const double inv = 1.0 / static_cast<double>(pb.size());
  double total = 0.0;
  std::vector<GradientSample> samples;
  if (grad) samples.reserve(pb.inputs.size());
  for (std::size_t b = 0; b < pb.size(); ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pb.n; ++i) sum += forward(net, pb.inputs[b * pb.n + i]);
    const double left = (nn - 1.0) * pb.s[b] - sum;
    const double right = sum - (nn - alpha) * pb.s[b];
    double upstream = 0.0;
    if (left > 0.0) {
      total += left;
      upstream -= inv;
    }
    if (right > 0.0) {
      total += right;
      upstream += inv;
    }
    if (grad && upstream != 0.0)
      for (std::size_t i = 0; i < pb.n; ++i) samples.push_back({pb.inputs[b * pb.n + i], upstream});
  }
  if (grad) {
    if (samples.empty())
      grad->assign(net.parameter_count(), 0.0);
    else
      *grad = gradients(net, samples);
  }
  const double loss = total * inv;
  if (!std::isfinite(loss)) throw NumericalError("batch_loss: non-finite loss", 0);
  return loss;
}

}  // namespace

double batch_loss(const Mlp& net, const std::vector<TypeProfile>& batch, double alpha_goal, std::size_t n) {
  check_batch(net, batch, n);
  return prepared_loss(net, PreparedBatch(batch, n), alpha_goal, nullptr);
}

double batch_loss_gradient(const Mlp& net, const std::vector<TypeProfile>& batch, double alpha_goal, std::size_t n,
                           std::vector<double>& grad) {
  check_batch(net, batch, n);
  return prepared_loss(net, PreparedBatch(batch, n), alpha_goal, &grad);
}

double loss_threshold(std::size_t k, double unit, std::size_t period) {
  double t = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t exponent = (j + period - 1) / period;
    t += unit * std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(exponent, 1000)));
  }
  return t;
}

GoalState goal_update(const GoalState& state, bool success) {
  state.validate();
  GoalState next = state;
  if (success) {
    next.alpha_low = state.alpha_goal;
    next.alpha_goal = (state.alpha_upper + state.alpha_goal) / 2.0;
  } else {
    next.alpha_goal = (state.alpha_low + state.alpha_goal) / 2.0;
  }
  return next;
}

double train_round(Mlp& net, AdamState& adam, const std::vector<TypeProfile>& batch, double alpha_goal,
                   std::size_t n, std::size_t epochs) {
  check_batch(net, batch, n);
  const PreparedBatch pb(batch, n);
  std::vector<double> grad;
  double sum = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) {
    sum += prepared_loss(net, pb, alpha_goal, &grad);
    adam_step(net, adam, grad);
  }
  return epochs == 0 ? 0.0 : sum / static_cast<double>(epochs);
}

WctResult wct_run(const Mlp& net, std::size_t n, const TrainConfig& config, WcpStore store, GoalState goal,
                  const RoundObserver& observer) {
  config.validate();
  goal.validate();
  if (n < 2 || net.input_dim() != n - 1) throw ContractError("wct_run: net input_dim must equal n - 1");

  WctResult result;
  result.best = Mechanism(n, net, 0.0);
  result.final_net = net;
  if (config.mip_rounds == 0) {
    result.store = std::move(store);
    result.goal = goal;
    return result;
  }

  Rng rng(config.seed);
  Mlp current = net;
  AdamState adam = AdamState::for_net(current, config.learning_rate);
  std::size_t stalls = 0;
  std::size_t training_rounds = 0;
  std::size_t mip_round = 0;
  while (mip_round < config.mip_rounds) {
    if (config.max_training_rounds != 0 && training_rounds >= config.max_training_rounds) break;
    const std::vector<TypeProfile> batch = build_batch(store, n, rng);
    const double mean_loss = train_round(current, adam, batch, goal.alpha_goal, n, config.epochs);
    ++training_rounds;
    if (mean_loss > loss_threshold(stalls, config.threshold_unit, config.threshold_period)) {
      ++stalls;
      continue;
    }

    ++mip_round;
    const Certificate cert = certify(current, n, goal.alpha_goal, config.certify);
    store.append(cert.theta_left);
    store.append(cert.theta_right);

    RoundRecord rec;
    rec.round = mip_round;
    rec.training_rounds = training_rounds;
    rec.alpha_goal = goal.alpha_goal;
    rec.mean_loss = mean_loss;
    rec.stall_count = stalls;
    rec.eps_left = cert.eps_left;
    rec.eps_right = cert.eps_right;
    rec.theta_left = cert.theta_left;
    rec.theta_right = cert.theta_right;
    rec.achieved_ratio = cert.achieved_ratio();
    rec.exact = cert.exact;
    rec.success = cert.exact && cert.gap() <= config.success_tolerance;

    const Mechanism shifted = shift_to_feasible(current, cert.eps_left, n);
    if (cert.exact && (!result.best_ratio || rec.achieved_ratio > *result.best_ratio)) {
      result.best = shifted;
      result.best_ratio = rec.achieved_ratio;
      rec.improved = true;
    }
    goal = goal_update(goal, rec.success);
    stalls = 0;
    if (observer) observer(rec, shifted);
    result.history.push_back(std::move(rec));
  }

  result.store = std::move(store);
  result.goal = goal;
  result.final_net = std::move(current);
  result.training_rounds = training_rounds;
  return result;
}

}  // namespace redistrib

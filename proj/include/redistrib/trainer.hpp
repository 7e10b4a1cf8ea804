#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "redistrib/certifier.hpp"
#include "redistrib/mechanism.hpp"
#include "redistrib/mlp.hpp"

namespace redistrib {

using Rng = std::mt19937_64;

/// Worst-case profiles found so far, in the order they were appended.
class WcpStore {
 public:
  void append(TypeProfile p) { profiles_.push_back(std::move(p)); }
  std::size_t size() const noexcept { return profiles_.size(); }
  bool empty() const noexcept { return profiles_.empty(); }
  const TypeProfile& operator[](std::size_t i) const { return profiles_[i]; }
  const std::vector<TypeProfile>& profiles() const noexcept { return profiles_; }

  /// The last min(k, size) profiles.
  std::vector<TypeProfile> latest(std::size_t k) const;
  /// Everything before latest(k).
  std::vector<TypeProfile> earlier(std::size_t k) const;

  /// One profile per line.
  std::string to_text() const;
  static WcpStore from_text(const std::string& text);

  friend bool operator==(const WcpStore&, const WcpStore&) = default;

 private:
  std::vector<TypeProfile> profiles_;
};

struct GoalState {
  double alpha_low = 0.0;
  double alpha_goal = 0.0;
  double alpha_upper = 1.0;

  /// alpha_low = alpha_goal = lower, alpha_upper = upper.
  static GoalState starting_at(double lower, double upper);
  void validate() const;
};

inline constexpr std::size_t kBatchGroup = 16;

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 500;
  std::size_t mip_rounds = 100;
  double success_tolerance = 1e-3;
  std::uint64_t seed = 0;
  double threshold_unit = 1e-4;
  std::size_t threshold_period = 10;
  CertifyOptions certify;
  /// Hard cap on 500-epoch rounds in one run; 0 means unlimited.
  std::size_t max_training_rounds = 0;

  void validate() const;
};

TypeProfile sample_random_profile(std::size_t n, Rng& rng);

/// latest 16 of the store, up to 16 drawn without replacement from the rest,
/// 16 fresh random profiles, then the n+1 bound profiles.
std::vector<TypeProfile> build_batch(const WcpStore& store, std::size_t n, Rng& rng);

/// Mean over the batch of left + right violation of the unshifted net.
double batch_loss(const Mlp& net, const std::vector<TypeProfile>& batch, double alpha_goal, std::size_t n);

/// batch_loss plus its gradient in Mlp::flatten() layout.
double batch_loss_gradient(const Mlp& net, const std::vector<TypeProfile>& batch, double alpha_goal, std::size_t n,
                           std::vector<double>& grad);

/// Cumulative gate after k failed arrivals since the last MIP call:
/// sum_{j=1..k} unit * 2^ceil(j / period).
double loss_threshold(std::size_t k, double unit = 1e-4, std::size_t period = 10);

GoalState goal_update(const GoalState& state, bool success);

/// Full-batch Adam steps on a fixed batch; returns the mean per-step loss.
double train_round(Mlp& net, AdamState& adam, const std::vector<TypeProfile>& batch, double alpha_goal,
                   std::size_t n, std::size_t epochs);

struct RoundRecord {
  std::size_t round = 0;            // 1-based MIP round
  std::size_t training_rounds = 0;  // 500-epoch rounds so far, including this one
  double alpha_goal = 0.0;
  double mean_loss = 0.0;
  std::size_t stall_count = 0;
  double eps_left = 0.0;
  double eps_right = 0.0;
  TypeProfile theta_left;
  TypeProfile theta_right;
  double achieved_ratio = 0.0;
  bool exact = true;
  bool success = false;
  bool improved = false;
};

struct WctResult {
  Mechanism best;
  std::optional<double> best_ratio;
  WcpStore store;
  GoalState goal;
  std::vector<RoundRecord> history;
  Mlp final_net;
  std::size_t training_rounds = 0;
};

using RoundObserver = std::function<void(const RoundRecord&, const Mechanism& shifted)>;

/// Worst-case training from `net` for config.mip_rounds MIP rounds.
WctResult wct_run(const Mlp& net, std::size_t n, const TrainConfig& config, WcpStore store, GoalState goal,
                  const RoundObserver& observer = {});

}  // namespace redistrib

#pragma once

#include <cstddef>
#include <cstdint>

#include "redistrib/mechanism.hpp"
#include "redistrib/mip.hpp"

namespace redistrib {

struct CertifyOptions {
  std::uint64_t node_budget = kDefaultNodeBudget;
  /// With more than one thread the left and right problems are solved concurrently.
  unsigned threads = 1;
  BigMRule big_m = BigMRule::sorted;
};

/// Exact worst-case violations of both sides of the mechanism inequality.
struct Certificate {
  double eps_left = 0.0;
  double eps_right = 0.0;
  TypeProfile theta_left;
  TypeProfile theta_right;
  double alpha_goal = 0.0;
  std::uint64_t nodes_left = 0;
  std::uint64_t nodes_right = 0;
  bool exact = true;  // false if either branch-and-bound ran out of nodes

  double gap() const noexcept { return eps_left + eps_right; }
  /// Worst-case ratio guaranteed by the eps_left/n-shifted mechanism.
  double achieved_ratio() const noexcept { return alpha_goal - eps_left - eps_right; }
};

/// Solves the left and right MIPs for `net` with n agents at goal ratio alpha_goal.
Certificate certify(const Mlp& net, std::size_t n, double alpha_goal, const CertifyOptions& options = {});

/// Certifies h' = net + shift.
Certificate certify(const Mechanism& mech, double alpha_goal, const CertifyOptions& options = {});

/// Brute-force scan of every sorted grid profile with spacing 1/(resolution-1).
/// Values are the raw (unclamped) side objectives, so they lower-bound the MIP optima.
struct GridResult {
  double left = 0.0;
  TypeProfile left_argmax;
  double right = 0.0;
  TypeProfile right_argmax;
  std::uint64_t points = 0;
};

inline constexpr std::uint64_t kGridPointLimit = 10'000'000;

/// Throws ContractError when resolution < 2 or the scan would exceed kGridPointLimit points.
GridResult grid_oracle(const Mlp& net, std::size_t n, double alpha, std::size_t resolution);

/// Number of sorted profiles (multisets) on the grid: C(resolution + n - 1, n).
std::uint64_t sorted_grid_size(std::size_t n, std::size_t resolution);

}  // namespace redistrib

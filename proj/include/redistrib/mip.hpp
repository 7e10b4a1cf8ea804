#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "redistrib/lp.hpp"
#include "redistrib/mlp.hpp"

namespace redistrib {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Per hidden layer, per node: an interval containing every pre-activation
/// reachable from inputs in the box [0,1]^input_dim (layer-wise interval arithmetic).
std::vector<std::vector<Interval>> activation_bounds(const Mlp& net);

/// Same, but for inputs restricted to sorted vectors 0 <= x_1 <= ... <= x_d <= 1.
/// The first layer is exact there (a linear function over that polytope peaks at
/// one of its d+1 0/1 step vertices); deeper layers use interval arithmetic.
std::vector<std::vector<Interval>> sorted_activation_bounds(const Mlp& net);

enum class MipSide { left, right };

/// Big-M constants of one hidden node in one agent copy.
struct BigM {
  std::size_t copy = 0;  // index of the removed agent
  std::size_t layer = 0;
  std::size_t node = 0;
  Interval bounds;
  double m_plus = 0.0;   // max(0, upper)
  double m_minus = 0.0;  // max(0, -lower)
};

/// Exact mixed-integer encoding of the worst violation of one side of the
/// mechanism inequality for a fixed net.
struct MipProblem {
  LinearProgram lp;
  std::vector<std::size_t> binaries;  // one per hidden node per copy, then the s indicator
  std::vector<BigM> big_m;            // parallel to binaries minus the last entry
  std::size_t s_binary = 0;
  std::size_t s_var = 0;
  std::vector<std::size_t> theta;  // sorted valuation variables
  std::size_t n = 0;
  MipSide side = MipSide::left;
  double alpha = 0.0;
  Mlp net;  // kept to evaluate the exact objective at candidate profiles
};

enum class BigMRule {
  box,     ///< activation_bounds
  sorted,  ///< sorted_activation_bounds (default; valid because the MIP keeps theta sorted)
};

/// maximize (n-1)s - sum_i h(theta_-i).
MipProblem build_left_mip(const Mlp& net, std::size_t n, BigMRule rule = BigMRule::sorted);
/// maximize sum_i h(theta_-i) - (n-alpha)s.
MipProblem build_right_mip(const Mlp& net, std::size_t n, double alpha, BigMRule rule = BigMRule::sorted);

/// The side's objective at a concrete profile, straight from the net (no LP).
double mip_objective_at(const MipProblem& problem, std::span<const double> sorted_theta);

enum class MipStatus { optimal, infeasible, budget_exhausted };

struct MipResult {
  MipStatus status = MipStatus::infeasible;
  double optimum = 0.0;
  std::vector<double> theta;  // attaining profile (sorted)
  std::vector<double> x;      // LP point of the best integral node, when one was found
  std::uint64_t nodes = 0;
  double best_bound = 0.0;    // upper bound on the optimum at termination
  bool exact() const noexcept { return status == MipStatus::optimal; }
};

inline constexpr std::uint64_t kDefaultNodeBudget = 5'000'000;

/// Depth-first branch-and-bound on the binaries, branching on the most
/// fractional one (lowest index on ties), backtracking to the best open bound.
/// Node LPs are re-solved from the parent's basis with the dual simplex.
/// On budget exhaustion the incumbent is returned with status budget_exhausted.
MipResult solve_mip(const MipProblem& problem, std::uint64_t node_budget = kDefaultNodeBudget);

}  // namespace redistrib

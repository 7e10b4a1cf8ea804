#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace redistrib {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { less_equal, equal, greater_equal };

struct LinearConstraint {
  std::vector<std::pair<std::size_t, double>> terms;  // (variable, coefficient)
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

/// maximize objective . x + objective_constant subject to rows and box bounds.
struct LinearProgram {
  std::vector<double> objective;
  double objective_constant = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LinearConstraint> constraints;

  std::size_t variable_count() const noexcept { return objective.size(); }
  std::size_t add_variable(double lo, double hi, double cost = 0.0);
  void add_constraint(std::vector<std::pair<std::size_t, double>> terms, Relation relation, double rhs);

  /// Throws ContractError on non-finite coefficients, crossed bounds or bad indices.
  void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t iterations = 0;
};

/// Cold solve with the bounded primal simplex (composite phase 1, Dantzig
/// pricing with lowest-index tie-breaks, Bland's rule after degenerate stalls).
LpResult solve_lp(const LinearProgram& lp);

/// Dense bounded-variable simplex tableau that survives bound changes, so a
/// branch-and-bound search can re-optimise each node from its parent's basis
/// with the dual simplex instead of starting over.
class SimplexEngine {
 public:
  explicit SimplexEngine(const LinearProgram& lp);

  /// Primal simplex from the current basis.
  LpStatus solve_primal();
  /// Dual simplex from the current basis; falls back to the primal method when
  /// the basis is not dual feasible.
  LpStatus solve_dual();

  void set_bounds(std::size_t var, double lo, double hi);
  double lower(std::size_t var) const { return lo_[var]; }
  double upper(std::size_t var) const { return hi_[var]; }

  double objective() const;
  std::vector<double> primal() const;  // structural variables only
  double value(std::size_t var) const { return x_[var]; }
  std::size_t iterations() const noexcept { return iterations_; }

  static constexpr double kFeasibilityTol = 1e-9;
  static constexpr double kOptimalityTol = 1e-9;
  static constexpr double kPivotTol = 1e-10;

 private:
  enum class State : std::uint8_t { basic, at_lower, at_upper, free_zero };

  double& tab(std::size_t row, std::size_t col) { return tableau_[row * cols_ + col]; }
  double tab(std::size_t row, std::size_t col) const { return tableau_[row * cols_ + col]; }

  void place_nonbasic(std::size_t var);
  void recompute_basics();
  void recompute_reduced_costs();
  void pivot(std::size_t row, std::size_t entering);
  void refactor();
  bool drifted() const;
  double infeasibility(std::size_t row) const;
  bool primal_infeasible() const;
  void count_iteration();

  std::size_t structural_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> constraint_matrix_;  // rows_ x structural_, the original A
  std::vector<double> tableau_;            // rows_ x cols_, B^-1 [A | -I]
  std::vector<double> cost_;
  double cost_constant_ = 0.0;
  std::vector<double> lo_, hi_, x_;
  std::vector<double> reduced_;
  std::vector<State> state_;
  std::vector<std::size_t> basis_;  // basic variable per row
  std::size_t iterations_ = 0;
  std::size_t pivots_since_refactor_ = 0;
  std::size_t iteration_limit_ = 0;
};

}  // namespace redistrib

#include "redistrib/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "redistrib/errors.hpp"

namespace redistrib {

namespace {

constexpr std::size_t kRefactorInterval = 150;
constexpr std::size_t kDegenerateStreakForBland = 60;
constexpr double kTieTol = 1e-12;
constexpr double kDriftTol = 1e-9;

}  // namespace

std::size_t LinearProgram::add_variable(double lo, double hi, double cost) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return objective.size() - 1;
}

void LinearProgram::add_constraint(std::vector<std::pair<std::size_t, double>> terms, Relation relation, double rhs) {
  constraints.push_back({std::move(terms), relation, rhs});
}

void LinearProgram::validate() const {
  const std::size_t n = variable_count();
  if (lower.size() != n || upper.size() != n) throw ContractError("LinearProgram: bound vectors have wrong length");
  if (!std::isfinite(objective_constant)) throw ContractError("LinearProgram: non-finite objective constant");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) throw ContractError("LinearProgram: non-finite objective coefficient");
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] || lower[j] == kInfinity ||
        upper[j] == -kInfinity)
      throw ContractError("LinearProgram: bad bounds on variable " + std::to_string(j));
  }
  for (const LinearConstraint& row : constraints) {
    if (!std::isfinite(row.rhs)) throw ContractError("LinearProgram: non-finite right-hand side");
    for (const auto& [var, coef] : row.terms) {
      if (var >= n) throw ContractError("LinearProgram: constraint references unknown variable");
      if (!std::isfinite(coef)) throw ContractError("LinearProgram: non-finite constraint coefficient");
    }
  }
}

SimplexEngine::SimplexEngine(const LinearProgram& lp) {
  lp.validate();
  structural_ = lp.variable_count();
  rows_ = lp.constraints.size();
  cols_ = structural_ + rows_;
  constraint_matrix_.assign(rows_ * structural_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (const auto& [var, coef] : lp.constraints[i].terms) constraint_matrix_[i * structural_ + var] += coef;

  cost_.assign(cols_, 0.0);
  std::copy(lp.objective.begin(), lp.objective.end(), cost_.begin());
  cost_constant_ = lp.objective_constant;

  lo_.assign(cols_, 0.0);
  hi_.assign(cols_, 0.0);
  std::copy(lp.lower.begin(), lp.lower.end(), lo_.begin());
  std::copy(lp.upper.begin(), lp.upper.end(), hi_.begin());
  for (std::size_t i = 0; i < rows_; ++i) {
    const LinearConstraint& row = lp.constraints[i];
    const std::size_t logical = structural_ + i;
    switch (row.relation) {
      case Relation::less_equal: lo_[logical] = -kInfinity; hi_[logical] = row.rhs; break;
      case Relation::greater_equal: lo_[logical] = row.rhs; hi_[logical] = kInfinity; break;
      case Relation::equal: lo_[logical] = hi_[logical] = row.rhs; break;
    }
  }

  // Slack basis: B = -I, so the tableau is [-A | I].
  tableau_.assign(rows_ * cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < structural_; ++j) tab(i, j) = -constraint_matrix_[i * structural_ + j];
    tab(i, structural_ + i) = 1.0;
  }
  x_.assign(cols_, 0.0);
  state_.assign(cols_, State::at_lower);
  basis_.resize(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    basis_[i] = structural_ + i;
    state_[structural_ + i] = State::basic;
  }
  for (std::size_t j = 0; j < structural_; ++j) place_nonbasic(j);
  recompute_basics();
  recompute_reduced_costs();
  iteration_limit_ = 50 * (rows_ + cols_) + 10000;
}

void SimplexEngine::place_nonbasic(std::size_t var) {
  const bool has_lo = std::isfinite(lo_[var]);
  const bool has_hi = std::isfinite(hi_[var]);
  if (has_lo && has_hi && state_[var] == State::at_upper) {
    x_[var] = hi_[var];
  } else if (has_lo) {
    state_[var] = State::at_lower;
    x_[var] = lo_[var];
  } else if (has_hi) {
    state_[var] = State::at_upper;
    x_[var] = hi_[var];
  } else {
    state_[var] = State::free_zero;
    x_[var] = 0.0;
  }
}

void SimplexEngine::recompute_basics() {
  std::vector<std::size_t> moving;
  for (std::size_t j = 0; j < cols_; ++j)
    if (state_[j] != State::basic && x_[j] != 0.0) moving.push_back(j);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* row = &tableau_[i * cols_];
    double v = 0.0;
    for (std::size_t j : moving) v -= row[j] * x_[j];
    x_[basis_[i]] = v;
  }
}

void SimplexEngine::recompute_reduced_costs() {
  reduced_ = cost_;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double cb = cost_[basis_[i]];
    if (cb == 0.0) continue;
    const double* row = &tableau_[i * cols_];
    for (std::size_t j = 0; j < cols_; ++j) reduced_[j] -= cb * row[j];
  }
  for (std::size_t b : basis_) reduced_[b] = 0.0;
}

void SimplexEngine::pivot(std::size_t row, std::size_t entering) {
  double* pr = &tableau_[row * cols_];
  const double inv = 1.0 / pr[entering];
  for (std::size_t j = 0; j < cols_; ++j) pr[j] *= inv;
  pr[entering] = 1.0;

  std::vector<std::size_t> nonzero;
  nonzero.reserve(cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    if (pr[j] != 0.0) nonzero.push_back(j);

  for (std::size_t i = 0; i < rows_; ++i) {
    if (i == row) continue;
    double* ri = &tableau_[i * cols_];
    const double factor = ri[entering];
    if (factor == 0.0) continue;
    for (std::size_t j : nonzero) ri[j] -= factor * pr[j];
    ri[entering] = 0.0;
  }
  const double dj = reduced_[entering];
  if (dj != 0.0)
    for (std::size_t j : nonzero) reduced_[j] -= dj * pr[j];
  reduced_[entering] = 0.0;

  basis_[row] = entering;
  state_[entering] = State::basic;
  if (++pivots_since_refactor_ >= kRefactorInterval) refactor();
}

// Rebuilds B^-1 [A | -I] from the original matrix to shed accumulated round-off.
void SimplexEngine::refactor() {
  pivots_since_refactor_ = 0;
  const std::size_t width = rows_ + cols_;
  std::vector<double> work(rows_ * width, 0.0);
  auto column_of = [&](std::size_t var, std::size_t i) {
    return var < structural_ ? constraint_matrix_[i * structural_ + var] : (var - structural_ == i ? -1.0 : 0.0);
  };
  for (std::size_t i = 0; i < rows_; ++i) {
    double* w = &work[i * width];
    for (std::size_t c = 0; c < rows_; ++c) w[c] = column_of(basis_[c], i);
    for (std::size_t j = 0; j < structural_; ++j) w[rows_ + j] = constraint_matrix_[i * structural_ + j];
    w[rows_ + structural_ + i] = -1.0;
  }
  // Gauss-Jordan with partial pivoting; row c of the result belongs to basis_[c].
  for (std::size_t c = 0; c < rows_; ++c) {
    std::size_t best = c;
    for (std::size_t i = c + 1; i < rows_; ++i)
      if (std::abs(work[i * width + c]) > std::abs(work[best * width + c])) best = i;
    if (std::abs(work[best * width + c]) < 1e-13) throw SolverError("simplex: singular basis during refactorisation");
    if (best != c)
      std::swap_ranges(work.begin() + static_cast<std::ptrdiff_t>(best * width),
                       work.begin() + static_cast<std::ptrdiff_t>((best + 1) * width),
                       work.begin() + static_cast<std::ptrdiff_t>(c * width));
    double* pc = &work[c * width];
    const double inv = 1.0 / pc[c];
    for (std::size_t j = c; j < width; ++j) pc[j] *= inv;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == c) continue;
      double* pi = &work[i * width];
      const double factor = pi[c];
      if (factor == 0.0) continue;
      for (std::size_t j = c; j < width; ++j) pi[j] -= factor * pc[j];
    }
  }
  for (std::size_t i = 0; i < rows_; ++i)
    std::copy_n(&work[i * width + rows_], cols_, &tableau_[i * cols_]);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t r = 0; r < rows_; ++r) tab(r, basis_[i]) = r == i ? 1.0 : 0.0;
  }
  recompute_reduced_costs();
  recompute_basics();
}

double SimplexEngine::infeasibility(std::size_t row) const {
  const std::size_t b = basis_[row];
  if (x_[b] < lo_[b] - kFeasibilityTol) return lo_[b] - x_[b];
  if (x_[b] > hi_[b] + kFeasibilityTol) return x_[b] - hi_[b];
  return 0.0;
}

bool SimplexEngine::primal_infeasible() const {
  for (std::size_t i = 0; i < rows_; ++i)
    if (infeasibility(i) > 0.0) return true;
  return false;
}

// True when the logical values no longer match A x for the current structurals.
bool SimplexEngine::drifted() const {
  for (std::size_t i = 0; i < rows_; ++i) {
    double r = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < structural_; ++j) {
      const double term = constraint_matrix_[i * structural_ + j] * x_[j];
      r += term;
      scale = std::max(scale, std::abs(term));
    }
    if (std::abs(r - x_[structural_ + i]) > kDriftTol * scale) return true;
  }
  return false;
}

void SimplexEngine::count_iteration() { ++iterations_; }

void SimplexEngine::set_bounds(std::size_t var, double lo, double hi) {
  if (var >= structural_) throw ContractError("SimplexEngine::set_bounds: not a structural variable");
  if (!(lo <= hi)) throw ContractError("SimplexEngine::set_bounds: crossed bounds");
  lo_[var] = lo;
  hi_[var] = hi;
  if (state_[var] == State::basic) return;
  const bool has_lo = std::isfinite(lo);
  const bool has_hi = std::isfinite(hi);
  double old = x_[var];
  if (has_lo && has_hi) {
    if (reduced_[var] > 0.0) {
      state_[var] = State::at_upper;
      x_[var] = hi;
    } else if (reduced_[var] < 0.0) {
      state_[var] = State::at_lower;
      x_[var] = lo;
    } else {
      place_nonbasic(var);
    }
  } else {
    place_nonbasic(var);
  }
  const double delta = x_[var] - old;
  if (delta != 0.0)
    for (std::size_t i = 0; i < rows_; ++i) x_[basis_[i]] -= tab(i, var) * delta;
}

LpStatus SimplexEngine::solve_primal() {
  recompute_basics();
  std::size_t local = 0;
  std::size_t degenerate_streak = 0;
  std::vector<double> pricing(cols_);
  std::vector<double> weight(rows_);
  for (;;) {
    if (++local > iteration_limit_) throw SolverError("simplex: iteration limit exceeded (cycling guard)");
    const bool bland = degenerate_streak > kDegenerateStreakForBland;

    bool phase1 = false;
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t b = basis_[i];
      weight[i] = x_[b] < lo_[b] - kFeasibilityTol ? 1.0 : (x_[b] > hi_[b] + kFeasibilityTol ? -1.0 : 0.0);
      phase1 = phase1 || weight[i] != 0.0;
    }
    if (phase1) {
      std::fill(pricing.begin(), pricing.end(), 0.0);
      for (std::size_t i = 0; i < rows_; ++i) {
        if (weight[i] == 0.0) continue;
        const double* row = &tableau_[i * cols_];
        for (std::size_t j = 0; j < cols_; ++j) pricing[j] -= weight[i] * row[j];
      }
    } else {
      pricing = reduced_;
    }

    std::size_t entering = cols_;
    int direction = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (state_[j] == State::basic || lo_[j] == hi_[j]) continue;
      const double d = pricing[j];
      int dir = 0;
      if (d > kOptimalityTol && (state_[j] == State::at_lower || state_[j] == State::free_zero)) dir = 1;
      if (d < -kOptimalityTol && (state_[j] == State::at_upper || state_[j] == State::free_zero)) dir = -1;
      if (dir == 0) continue;
      if (bland) {
        entering = j;
        direction = dir;
        break;
      }
      if (std::abs(d) > best_score + kTieTol) {
        best_score = std::abs(d);
        entering = j;
        direction = dir;
      }
    }
    if (entering == cols_) {
      if (!phase1) {
        if (pivots_since_refactor_ == 0 || !drifted()) return LpStatus::optimal;
        refactor();
        continue;
      }
      // Only trust an infeasibility proof read off a freshly factored tableau.
      if (pivots_since_refactor_ == 0) return LpStatus::infeasible;
      refactor();
      continue;
    }

    double step = kInfinity;
    std::size_t leave_row = rows_;
    bool leave_upper = false;
    double leave_pivot = 0.0;
    if (std::isfinite(lo_[entering]) && std::isfinite(hi_[entering])) step = hi_[entering] - lo_[entering];
    for (std::size_t i = 0; i < rows_; ++i) {
      const double alpha = tab(i, entering);
      if (std::abs(alpha) <= kPivotTol) continue;
      const double rate = -direction * alpha;
      const std::size_t b = basis_[i];
      const double xb = x_[b];
      double limit = kInfinity;
      bool to_upper = false;
      if (phase1 && xb < lo_[b] - kFeasibilityTol) {
        if (rate > 0.0) limit = (lo_[b] - xb) / rate;
      } else if (phase1 && xb > hi_[b] + kFeasibilityTol) {
        if (rate < 0.0) {
          limit = (hi_[b] - xb) / rate;
          to_upper = true;
        }
      } else if (rate > 0.0 && std::isfinite(hi_[b])) {
        limit = (hi_[b] - xb) / rate;
        to_upper = true;
      } else if (rate < 0.0 && std::isfinite(lo_[b])) {
        limit = (lo_[b] - xb) / rate;
      }
      if (!std::isfinite(limit)) continue;
      limit = std::max(limit, 0.0);
      bool take = limit < step - kTieTol;
      if (!take && limit <= step + kTieTol && leave_row != rows_) {
        if (bland)
          take = b < basis_[leave_row];
        else
          take = std::abs(alpha) > std::abs(leave_pivot) * (1.0 + 1e-9) ||
                 (std::abs(alpha) >= std::abs(leave_pivot) && b < basis_[leave_row]);
      }
      if (take) {
        step = limit;
        leave_row = i;
        leave_upper = to_upper;
        leave_pivot = alpha;
      }
    }

    if (!std::isfinite(step)) {
      if (phase1) throw SolverError("simplex: phase one direction without a blocking variable");
      return LpStatus::unbounded;
    }
    count_iteration();
    degenerate_streak = step <= kTieTol ? degenerate_streak + 1 : 0;

    if (leave_row == rows_) {
      // Bound flip of the entering variable.
      state_[entering] = direction > 0 ? State::at_upper : State::at_lower;
      x_[entering] = direction > 0 ? hi_[entering] : lo_[entering];
      recompute_basics();
      continue;
    }
    const std::size_t leaving = basis_[leave_row];
    x_[entering] += direction * step;
    state_[leaving] = leave_upper ? State::at_upper : State::at_lower;
    x_[leaving] = leave_upper ? hi_[leaving] : lo_[leaving];
    pivot(leave_row, entering);
    recompute_basics();
  }
}

LpStatus SimplexEngine::solve_dual() {
restart:
  // Restore dual feasibility by moving boxed nonbasics to the bound their reduced cost favours.
  for (std::size_t j = 0; j < cols_; ++j) {
    if (state_[j] == State::basic || lo_[j] == hi_[j]) continue;
    const double d = reduced_[j];
    if (d > kOptimalityTol && state_[j] != State::at_upper) {
      if (!std::isfinite(hi_[j])) return solve_primal();
      state_[j] = State::at_upper;
      x_[j] = hi_[j];
    } else if (d < -kOptimalityTol && state_[j] != State::at_lower) {
      if (!std::isfinite(lo_[j])) return solve_primal();
      state_[j] = State::at_lower;
      x_[j] = lo_[j];
    }
  }
  recompute_basics();

  std::size_t local = 0;
  std::size_t degenerate_streak = 0;
  for (;;) {
    if (++local > iteration_limit_) throw SolverError("dual simplex: iteration limit exceeded (cycling guard)");
    const bool bland = degenerate_streak > kDegenerateStreakForBland;

    std::size_t leave_row = rows_;
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const double inf = infeasibility(i);
      if (inf <= 0.0) continue;
      if (bland) {
        if (leave_row == rows_ || basis_[i] < basis_[leave_row]) leave_row = i;
      } else if (inf > worst + kTieTol) {
        worst = inf;
        leave_row = i;
      }
    }
    if (leave_row == rows_) {
      if (pivots_since_refactor_ == 0 || !drifted()) return LpStatus::optimal;
      refactor();
      goto restart;
    }

    const std::size_t leaving = basis_[leave_row];
    const bool below = x_[leaving] < lo_[leaving];
    const double target = below ? lo_[leaving] : hi_[leaving];

    std::size_t entering = cols_;
    double best_ratio = kInfinity;
    double best_alpha = 0.0;
    const double* row = &tableau_[leave_row * cols_];
    for (std::size_t j = 0; j < cols_; ++j) {
      if (state_[j] == State::basic || lo_[j] == hi_[j]) continue;
      const double alpha = row[j];
      if (std::abs(alpha) <= kPivotTol) continue;
      // x_leaving moves by -alpha per unit increase of x_j.
      const bool can_increase = state_[j] == State::at_lower || state_[j] == State::free_zero;
      const bool can_decrease = state_[j] == State::at_upper || state_[j] == State::free_zero;
      const bool helps = below ? ((alpha < 0.0 && can_increase) || (alpha > 0.0 && can_decrease))
                               : ((alpha > 0.0 && can_increase) || (alpha < 0.0 && can_decrease));
      if (!helps) continue;
      const double ratio = std::abs(reduced_[j]) / std::abs(alpha);
      bool take = ratio < best_ratio - kTieTol;
      if (!take && ratio <= best_ratio + kTieTol && entering != cols_)
        take = bland ? j < entering : std::abs(alpha) > std::abs(best_alpha) * (1.0 + 1e-9);
      if (take) {
        best_ratio = ratio;
        entering = j;
        best_alpha = alpha;
      }
    }
    if (entering == cols_) {
      if (pivots_since_refactor_ == 0) return LpStatus::infeasible;
      refactor();
      goto restart;
    }
    count_iteration();
    degenerate_streak = best_ratio <= kTieTol ? degenerate_streak + 1 : 0;

    const double delta = (target - x_[leaving]) / (-best_alpha);
    x_[entering] += delta;
    state_[leaving] = below ? State::at_lower : State::at_upper;
    x_[leaving] = target;
    pivot(leave_row, entering);
    recompute_basics();
  }
}

double SimplexEngine::objective() const {
  double v = cost_constant_;
  for (std::size_t j = 0; j < structural_; ++j) v += cost_[j] * x_[j];
  return v;
}

std::vector<double> SimplexEngine::primal() const {
  return std::vector<double>(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(structural_));
}

LpResult solve_lp(const LinearProgram& lp) {
  SimplexEngine engine(lp);
  LpResult result;
  result.status = engine.solve_primal();
  result.iterations = engine.iterations();
  if (result.status == LpStatus::optimal) {
    result.objective = engine.objective();
    result.x = engine.primal();
  }
  return result;
}

}  // namespace redistrib

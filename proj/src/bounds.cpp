#include "redistrib/bounds.hpp"

#include <algorithm>

#include "redistrib/errors.hpp"
#include "redistrib/lp.hpp"

namespace redistrib {

namespace {

void require_n(std::size_t n, const char* who) {
  if (n < 3) throw ContractError(std::string(who) + ": n must be at least 3");
}

double bound_value(std::size_t n) { return 1.0 / static_cast<double>(n / 2); }

}  // namespace

double manual_lower_bound(std::size_t n) {
  require_n(n, "manual_lower_bound");
  return static_cast<double>(n + 1) / static_cast<double>(2 * n);
}

std::vector<TypeProfile> bound_profiles(std::size_t n) {
  require_n(n, "bound_profiles");
  const double c = bound_value(n);
  std::vector<TypeProfile> out;
  for (std::size_t k = 0; k <= n; ++k) {
    std::vector<double> v(n, 0.0);
    std::fill(v.end() - static_cast<std::ptrdiff_t>(k), v.end(), c);
    out.emplace_back(std::move(v));
  }
  return out;
}

BoundResult compute_bounds(std::size_t n) {
  require_n(n, "theoretical_upper_bound");
  const double c = bound_value(n);
  const double nn = static_cast<double>(n);

  LinearProgram lp;
  std::vector<std::size_t> h;
  for (std::size_t j = 0; j < n; ++j) h.push_back(lp.add_variable(-kInfinity, kInfinity));
  const std::size_t alpha = lp.add_variable(-kInfinity, kInfinity, 1.0);

  for (std::size_t k = 0; k <= n; ++k) {
    const double s = std::max(static_cast<double>(k) * c, 1.0);
    // Agents at c see k-1 others at c; agents at 0 see k others at c.
    std::vector<std::pair<std::size_t, double>> sum;
    if (k > 0) sum.emplace_back(h[k - 1], static_cast<double>(k));
    if (k < n) sum.emplace_back(h[k], static_cast<double>(n - k));
    lp.add_constraint(sum, Relation::greater_equal, (nn - 1.0) * s);
    auto with_alpha = sum;
    with_alpha.emplace_back(alpha, s);
    lp.add_constraint(std::move(with_alpha), Relation::less_equal, nn * s);
  }

  const LpResult r = solve_lp(lp);
  if (r.status != LpStatus::optimal) throw SolverError("theoretical_upper_bound: bound LP not optimal");

  BoundResult out;
  out.n = n;
  out.alpha_upper = r.x[alpha];
  out.alpha_lower_manual = manual_lower_bound(n);
  out.profiles = bound_profiles(n);
  for (std::size_t j = 0; j < n; ++j) out.h_values.push_back(r.x[h[j]]);
  return out;
}

double theoretical_upper_bound(std::size_t n) { return compute_bounds(n).alpha_upper; }

}  // namespace redistrib

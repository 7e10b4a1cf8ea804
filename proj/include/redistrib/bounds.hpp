#pragma once

#include <cstddef>
#include <vector>

#include "redistrib/mechanism.hpp"

namespace redistrib {

struct BoundResult {
  std::size_t n = 0;
  double alpha_upper = 0.0;
  double alpha_lower_manual = 0.0;
  std::vector<TypeProfile> profiles;
  /// h at the sorted (n-1)-vector with j copies of c = 1/floor(n/2) and the rest 0, j = 0..n-1.
  std::vector<double> h_values;
};

/// (n+1)/(2n), the best ratio reached by hand-built mechanisms. Requires n >= 3.
double manual_lower_bound(std::size_t n);

/// The n+1 profiles with k agents at 1/floor(n/2) and the others at 0, k = 0..n.
std::vector<TypeProfile> bound_profiles(std::size_t n);

/// Largest alpha for which some h satisfies the mechanism inequality on every
/// bound profile (an LP in alpha and the n values h_j).
BoundResult compute_bounds(std::size_t n);

double theoretical_upper_bound(std::size_t n);

}  // namespace redistrib

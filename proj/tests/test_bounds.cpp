#include <gtest/gtest.h>

#include "redistrib/bounds.hpp"
#include "redistrib/errors.hpp"

using namespace redistrib;

TEST(Bounds, KnownUpperBounds) {
  EXPECT_NEAR(theoretical_upper_bound(3), 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(theoretical_upper_bound(4), 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(theoretical_upper_bound(5), 5.0 / 7.0, 1e-9);
}

TEST(Bounds, ManualLowerBound) {
  EXPECT_DOUBLE_EQ(manual_lower_bound(4), 0.625);
  EXPECT_DOUBLE_EQ(manual_lower_bound(3), 2.0 / 3.0);
  EXPECT_THROW(manual_lower_bound(2), ContractError);
}

TEST(Bounds, ProfilesUseOneOverHalfN) {
  const auto p = bound_profiles(5);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p[0], (TypeProfile{0, 0, 0, 0, 0}));
  EXPECT_EQ(p[5], (TypeProfile{0.5, 0.5, 0.5, 0.5, 0.5}));
  EXPECT_EQ(p[2], (TypeProfile{0, 0, 0, 0.5, 0.5}));
}

TEST(Bounds, UpperBoundLiesBetweenManualAndOne) {
  for (std::size_t n = 3; n <= 12; ++n) {
    const BoundResult r = compute_bounds(n);
    EXPECT_GE(r.alpha_upper, r.alpha_lower_manual - 1e-9) << n;
    EXPECT_LT(r.alpha_upper, 1.0) << n;
    EXPECT_EQ(r.h_values.size(), n);
  }
}

TEST(Bounds, LpWitnessSatisfiesProfileConstraints) {
  for (std::size_t n : {4, 5, 6, 7}) {
    const BoundResult r = compute_bounds(n);
    const double c = 1.0 / static_cast<double>(n / 2);
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) {
      const double s = std::max(1.0, static_cast<double>(k) * c);
      double sum = 0.0;
      if (k > 0) sum += static_cast<double>(k) * r.h_values[k - 1];
      if (k < n) sum += static_cast<double>(n - k) * r.h_values[k];
      EXPECT_GE(sum, (nn - 1) * s - 1e-9);
      EXPECT_LE(sum, (nn - r.alpha_upper) * s + 1e-9);
    }
  }
}

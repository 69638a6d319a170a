#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "qsgd/special_functions.hpp"

namespace {

namespace sp = qsgd::special;

// Reference values computed with mpmath at 30 digits (erfinv / betainc).
TEST(NormalQuantile, MatchesHighPrecisionReference) {
  EXPECT_NEAR(sp::normal_quantile(0.975), 1.95996398454005423552, 1e-12);
  EXPECT_NEAR(sp::normal_quantile(0.001), -3.09023230616781354154, 1e-12);
  EXPECT_NEAR(sp::normal_quantile(0.02), -2.05374891063182305294, 1e-12);
  EXPECT_NEAR(sp::normal_quantile(0.3), -0.52440051270804078404, 1e-12);
  EXPECT_NEAR(sp::normal_quantile(0.999999), 4.75342430882289894819, 1e-9);
  EXPECT_NEAR(sp::normal_quantile(1e-10), -6.36134090240405620470, 1e-9);
  EXPECT_EQ(sp::normal_quantile(0.5), 0.0);
}

TEST(NormalQuantile, InvertsCdf) {
  // Above x = 4.5 the CDF sits too close to 1 for double to resolve x.
  for (double x = -6.0; x <= 4.5; x += 0.37) {
    EXPECT_NEAR(sp::normal_quantile(sp::normal_cdf(x)), x, 1e-9) << x;
  }
}

TEST(NormalQuantile, RejectsOutsideUnitInterval) {
  EXPECT_THROW(sp::normal_quantile(0.0), std::invalid_argument);
  EXPECT_THROW(sp::normal_quantile(1.0), std::invalid_argument);
  EXPECT_THROW(sp::normal_quantile(std::nan("")), std::invalid_argument);
}

TEST(NormalCdf, KnownValue) {
  EXPECT_NEAR(sp::normal_cdf(1.0), 0.84134474606854294859, 1e-15);
  EXPECT_NEAR(sp::normal_cdf(-1.0) + sp::normal_cdf(1.0), 1.0, 1e-15);
}

TEST(IncompleteBeta, MatchesReference) {
  EXPECT_NEAR(sp::incomplete_beta(2, 3, 0.5), 0.6875, 1e-14);
  EXPECT_NEAR(sp::incomplete_beta(0.5, 0.5, 0.3), 0.36901011956554537504, 1e-12);
  EXPECT_NEAR(sp::incomplete_beta(5, 1.5, 0.9), 0.77617213431621566833, 1e-12);
  EXPECT_NEAR(sp::incomplete_beta(30, 40, 0.45), 0.64474800855856811281, 1e-12);
  EXPECT_NEAR(sp::incomplete_beta(2, 3, 0.999), 0.99999999600300000000, 1e-14);
  EXPECT_NEAR(sp::incomplete_beta(0.7, 2.5, 0.01), 0.07939853947155564689, 1e-12);
}

TEST(IncompleteBeta, PolynomialCaseAcrossUnitInterval) {
  // I_x(2,3) = 6x^2 - 8x^3 + 3x^4
  for (double x = 0.0; x <= 1.0; x += 0.01) {
    const double expected = 6 * x * x - 8 * x * x * x + 3 * x * x * x * x;
    EXPECT_NEAR(sp::incomplete_beta(2, 3, x), expected, 1e-12) << x;
  }
}

TEST(IncompleteBeta, Symmetry) {
  for (double x : {0.05, 0.3, 0.61, 0.97}) {
    EXPECT_NEAR(sp::incomplete_beta(2.5, 4.0, x), 1.0 - sp::incomplete_beta(4.0, 2.5, 1.0 - x),
                1e-13);
  }
}

TEST(IncompleteBeta, RejectsBadArguments) {
  EXPECT_THROW(sp::incomplete_beta(0.0, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(sp::incomplete_beta(1.0, 1.0, 1.5), std::invalid_argument);
}

}  // namespace

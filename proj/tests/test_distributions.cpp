#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qsgd/distributions.hpp"
#include "qsgd/random.hpp"

namespace {

using qsgd::Distribution;
using qsgd::Philox4x32;

std::vector<Distribution> families() {
  return {Distribution::uniform(0, 1), Distribution::uniform(-2, 5),
          Distribution::normal(0, 1),  Distribution::normal(3, 0.5),
          Distribution::cauchy(0, 2),  Distribution::beta(2, 3),
          Distribution::beta(0.5, 0.8)};
}

TEST(Distribution, CauchyQuantileIsAnalytic) {
  // 2 tan(pi/4) = 2
  EXPECT_DOUBLE_EQ(Distribution::cauchy(0, 2).quantile(0.75), 2.0);
}

TEST(Distribution, BetaCdfIsThePolynomial) {
  const auto beta = Distribution::beta(2, 3);
  EXPECT_NEAR(beta.cdf(0.5), 0.6875, 1e-14);
  EXPECT_EQ(beta.cdf(-1.0), 0.0);
  EXPECT_EQ(beta.cdf(2.0), 1.0);
}

TEST(Distribution, BetaDensityAtUpperQuartile) {
  // x* = 0.543678285419080 solves 6x^2 - 8x^3 + 3x^4 = 3/4 (bisection, mpmath)
  const auto beta = Distribution::beta(2, 3);
  const double x = beta.quantile(0.75);
  EXPECT_NEAR(x, 0.54367828541908029, 1e-10);
  EXPECT_NEAR(beta.pdf(x), 1.35851833736528311, 1e-9);
}

TEST(Distribution, UniformMedian) {
  EXPECT_EQ(Distribution::uniform(0, 1).quantile(0.5), 0.5);
}

TEST(Distribution, QuantileInvertsCdfOnCentralMass) {
  Philox4x32 rng(11);
  for (const auto& d : families()) {
    const double lo = d.quantile(0.005);
    const double hi = d.quantile(0.995);
    for (int i = 0; i < 1000; ++i) {
      const double x = lo + (hi - lo) * rng.uniform();
      ASSERT_NEAR(d.quantile(d.cdf(x)), x, 1e-8) << d.to_string() << " x=" << x;
    }
  }
}

TEST(Distribution, DensityIsDerivativeOfCdf) {
  constexpr double h = 1e-5;
  for (const auto& d : families()) {
    for (double p = 0.02; p < 0.99; p += 0.04) {
      const double x = d.quantile(p);
      // Beta(0.5, .) has an integrable pole at 0 that swamps the difference quotient.
      if (std::holds_alternative<qsgd::Beta>(d.params()) && (x < 0.05 || x > 0.95)) continue;
      const double numeric = (d.cdf(x + h) - d.cdf(x - h)) / (2 * h);
      ASSERT_NEAR(d.pdf(x), numeric, 1e-6) << d.to_string() << " x=" << x;
    }
  }
}

TEST(Distribution, CdfMonotoneWithUnitLimits) {
  for (const auto& d : families()) {
    double previous = 0.0;
    for (double p = 0.001; p < 1.0; p += 0.001) {
      const double f = d.cdf(d.quantile(0.0005) + p * (d.quantile(0.9995) - d.quantile(0.0005)));
      ASSERT_GE(f, previous);
      ASSERT_GE(d.pdf(d.quantile(p)), 0.0);
      previous = f;
    }
    EXPECT_NEAR(d.cdf(-1e12), 0.0, 1e-10);
    EXPECT_NEAR(d.cdf(1e12), 1.0, 1e-10);
  }
}

TEST(Distribution, SamplerMatchesLawByKs) {
  constexpr std::size_t n = 1'000'000;
  for (const auto& d : families()) {
    Philox4x32 rng(2024);
    std::vector<double> draws(n);
    for (auto& x : draws) x = d.sample(rng);
    const double ks = qsgd::ks_statistic(draws, [&](double x) { return d.cdf(x); });
    EXPECT_LT(ks, 0.002) << d.to_string();
  }
}

TEST(Distribution, SamplingIsDeterministicUnderSeed) {
  for (const auto& d : families()) {
    Philox4x32 a(5, 9);
    Philox4x32 b(5, 9);
    for (int i = 0; i < 500; ++i) ASSERT_EQ(d.sample(a), d.sample(b));
  }
}

TEST(Distribution, GammaSamplerMean) {
  for (double shape : {0.4, 1.0, 2.0, 7.5}) {
    Philox4x32 rng(17);
    double sum = 0.0;
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) sum += qsgd::sample_gamma(shape, rng);
    EXPECT_NEAR(sum / n, shape, 5 * std::sqrt(shape / n)) << shape;
  }
}

TEST(Distribution, ParseAndPrintRoundTrip) {
  for (const auto& d : families()) {
    const auto again = Distribution::parse(d.to_string());
    EXPECT_EQ(again.to_string(), d.to_string());
  }
  EXPECT_DOUBLE_EQ(Distribution::parse("beta:2,3").pdf(0.5), Distribution::beta(2, 3).pdf(0.5));
}

TEST(Distribution, RejectsInvalidParameters) {
  EXPECT_THROW(Distribution::uniform(1, 1), std::invalid_argument);
  EXPECT_THROW(Distribution::normal(0, 0), std::invalid_argument);
  EXPECT_THROW(Distribution::cauchy(0, -1), std::invalid_argument);
  EXPECT_THROW(Distribution::beta(0, 1), std::invalid_argument);
  EXPECT_THROW(Distribution::parse("gamma:1,2"), std::invalid_argument);
  EXPECT_THROW(Distribution::parse("beta:2"), std::invalid_argument);
  EXPECT_THROW(Distribution::parse("beta:2,x"), std::invalid_argument);
  EXPECT_THROW(Distribution::parse("beta"), std::invalid_argument);
  EXPECT_THROW(Distribution::normal(0, 1).quantile(1.0), std::invalid_argument);
  EXPECT_THROW(Distribution::normal(0, 1).quantile(0.0), std::invalid_argument);
}

TEST(KsStatistic, ExactSmallCase) {
  // Empirical steps at 0.25 and 0.75 against U(0,1): worst gap 0.25.
  const auto ks = qsgd::ks_statistic({0.25, 0.75}, [](double x) { return x; });
  EXPECT_NEAR(ks, 0.25, 1e-15);
}

}  // namespace

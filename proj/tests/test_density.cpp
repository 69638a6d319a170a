#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qsgd/density.hpp"
#include "qsgd/distributions.hpp"
#include "qsgd/error.hpp"
#include "qsgd/random.hpp"

namespace {

using qsgd::Kernel;
using qsgd::KernelKind;
using qsgd::KdeState;

TEST(Kernel, RectangleValues) {
  const Kernel k(KernelKind::rectangle);
  EXPECT_EQ(qsgd::kernel_eval(k, 0.0), 1.0);
  EXPECT_EQ(qsgd::kernel_eval(k, 0.7), 0.0);
  EXPECT_EQ(qsgd::kernel_eval(k, -0.49), 1.0);
  EXPECT_EQ(qsgd::kernel_eval(k, 0.5), 0.0);
}

TEST(Kernel, EpanechnikovValues) {
  const Kernel k(KernelKind::epanechnikov);
  EXPECT_EQ(qsgd::kernel_eval(k, 0.0), 0.75);
  EXPECT_DOUBLE_EQ(qsgd::kernel_eval(k, 0.5), 0.5625);
  EXPECT_EQ(qsgd::kernel_eval(k, 1.0), 0.0);
  EXPECT_EQ(qsgd::kernel_eval(k, -1.2), 0.0);
}

TEST(Kernel, QuadratureConstants) {
  const Kernel rect(KernelKind::rectangle);
  EXPECT_NEAR(rect.mass(), 1.0, 1e-9);
  EXPECT_NEAR(rect.kappa(), 1.0, 1e-6);
  EXPECT_NEAR(rect.moment_bound(), 1.0 + 1.0 / 12.0, 1e-6);
  EXPECT_EQ(rect.support_radius(), 0.5);

  const Kernel epa(KernelKind::epanechnikov);
  EXPECT_NEAR(epa.mass(), 1.0, 1e-9);
  EXPECT_NEAR(epa.kappa(), 0.6, 1e-6);
  EXPECT_NEAR(epa.moment_bound(), 0.75 + 0.2, 1e-6);
  EXPECT_EQ(epa.support_radius(), 1.0);
}

TEST(Kernel, ParseNames) {
  EXPECT_EQ(Kernel::parse("rectangle").kind(), KernelKind::rectangle);
  EXPECT_EQ(Kernel::parse("epanechnikov").kind(), KernelKind::epanechnikov);
  EXPECT_EQ(Kernel(KernelKind::epanechnikov).name(), "epanechnikov");
  EXPECT_THROW(Kernel::parse("gaussian"), std::invalid_argument);
}

TEST(Bandwidth, PowerLaw) {
  EXPECT_EQ(qsgd::bandwidth(1), 1.0);
  EXPECT_NEAR(qsgd::bandwidth(32), 0.5, 1e-15);
  EXPECT_NEAR(qsgd::bandwidth(100000), 0.1, 1e-15);
  EXPECT_THROW(qsgd::bandwidth(0), std::invalid_argument);
}

TEST(Kde, SingleSampleInsideWindow) {
  const auto s = qsgd::kde_update(KdeState(Kernel(KernelKind::rectangle)), 0.0, 0.3);
  EXPECT_EQ(s.numerator(), 1.0);
  EXPECT_EQ(s.bandwidth_sum(), 1.0);
  EXPECT_EQ(qsgd::kde_estimate(s), 1.0);
}

TEST(Kde, SingleSampleOutsideWindow) {
  const auto s = qsgd::kde_update(KdeState(Kernel(KernelKind::rectangle)), 0.0, 0.6);
  EXPECT_EQ(qsgd::kde_estimate(s), 0.0);
}

TEST(Kde, TwoSamplesInsideWindow) {
  KdeState s(Kernel(KernelKind::rectangle));
  s.update(0.0, 0.1);
  s.update(0.0, -0.1);
  // 2 / (1 + 2^(-1/5))
  EXPECT_NEAR(s.estimate(), 1.06920392276152704, 1e-15);
}

TEST(Kde, EmptyStateHasNoEstimate) {
  const KdeState s(Kernel(KernelKind::rectangle));
  EXPECT_THROW(qsgd::kde_estimate(s), qsgd::NumericError);
}

TEST(Kde, RejectsNonFiniteInputs) {
  KdeState s(Kernel(KernelKind::epanechnikov));
  EXPECT_THROW(s.update(0.0, std::numeric_limits<double>::infinity()), std::invalid_argument);
  EXPECT_THROW(s.update(std::numeric_limits<double>::quiet_NaN(), 0.0), std::invalid_argument);
  EXPECT_EQ(s.count(), 0u);
}

TEST(Kde, BandwidthSumAndNonNegativity) {
  KdeState s(Kernel(KernelKind::epanechnikov));
  qsgd::Philox4x32 rng(3);
  double previous = 0.0;
  double reference = 0.0;
  for (std::uint64_t k = 1; k <= 5000; ++k) {
    s.update(0.2, rng.uniform());
    reference += std::pow(static_cast<double>(k), -0.2);
    ASSERT_GT(s.bandwidth_sum(), previous);
    ASSERT_GE(s.estimate(), 0.0);
    previous = s.bandwidth_sum();
  }
  EXPECT_NEAR(s.bandwidth_sum(), reference, 1e-9 * reference);
}

// Batch formula written out independently of KdeState.
double batch_estimate(KernelKind kind, double x, const std::vector<double>& samples) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double b = 1.0 / std::pow(static_cast<double>(i + 1), 0.2);
    const double v = (x - samples[i]) / b;
    const double a = std::fabs(v);
    if (kind == KernelKind::rectangle) {
      num += a < 0.5 ? 1.0 : 0.0;
    } else {
      num += a <= 1.0 ? 0.75 * (1.0 - v * v) : 0.0;
    }
    den += b;
  }
  return num / den;
}

TEST(Kde, OnlineMatchesBatch) {
  const auto normal = qsgd::Distribution::normal(0, 1);
  for (auto kind : {KernelKind::rectangle, KernelKind::epanechnikov}) {
    qsgd::Philox4x32 rng(77);
    KdeState s{Kernel(kind)};
    std::vector<double> samples;
    for (std::size_t n = 1; n <= 10000; ++n) {
      samples.push_back(normal.sample(rng));
      s.update(0.3, samples.back());
      if (n % 997 == 0 || n == 1 || n == 10000) {
        const double batch = batch_estimate(kind, 0.3, samples);
        ASSERT_NEAR(s.estimate(), batch, 1e-12 * batch) << "n=" << n;
      }
    }
  }
}

double fixed_point_estimate(const qsgd::Distribution& d, double x, std::uint64_t seed) {
  qsgd::Philox4x32 rng(seed);
  KdeState s(Kernel(KernelKind::epanechnikov));
  for (int i = 0; i < 100000; ++i) s.update(x, d.sample(rng));
  return s.estimate();
}

TEST(Kde, BetaDensityAtUpperQuartile) {
  const double f = 1.35851833736528311;
  const double x = 0.54367828541908029;
  EXPECT_NEAR(fixed_point_estimate(qsgd::Distribution::beta(2, 3), x, 42), f, 0.1 * f);
}

TEST(Kde, CauchyDensityAtUpperQuartile) {
  const double f = 1.0 / (4.0 * std::numbers::pi);
  EXPECT_NEAR(fixed_point_estimate(qsgd::Distribution::cauchy(0, 2), 2.0, 42), f, 0.1 * f);
}

}  // namespace

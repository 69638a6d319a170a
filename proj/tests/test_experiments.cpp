#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsgd/distributions.hpp"
#include "qsgd/experiments.hpp"

namespace {

using qsgd::Distribution;
using qsgd::ExperimentConfig;

ExperimentConfig small_beta() {
  ExperimentConfig c;
  c.eta_grid = {0.01, 0.005};
  c.n_grid = {2000, 5000};
  c.replications = 64;
  c.seed = 9;
  return c;
}

std::string coverage_text(ExperimentConfig c, unsigned threads, qsgd::OutputFormat format) {
  c.threads = threads;
  c.format = format;
  std::ostringstream out;
  qsgd::write_coverage(out, qsgd::coverage_experiment(c), c);
  return out.str();
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  qsgd::parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerErrors) {
  EXPECT_THROW(qsgd::parallel_for(100, 3,
                                  [](std::size_t i) {
                                    if (i == 17) throw std::runtime_error("boom");
                                  }),
               std::runtime_error);
}

TEST(Coverage, ByteIdenticalAcrossThreadCounts) {
  const auto c = small_beta();
  for (auto format : {qsgd::OutputFormat::csv, qsgd::OutputFormat::json}) {
    const auto one = coverage_text(c, 1, format);
    EXPECT_EQ(one, coverage_text(c, 4, format));
    EXPECT_EQ(one, coverage_text(c, 3, format));
  }
}

TEST(Coverage, CellsAreConsistent) {
  const auto c = small_beta();
  const auto report = qsgd::coverage_experiment(c);
  ASSERT_EQ(report.cells.size(), 4u);
  EXPECT_EQ(report.cells[0].eta, 0.01);
  EXPECT_EQ(report.cells[0].n, 2000u);
  EXPECT_EQ(report.cells[3].eta, 0.005);
  EXPECT_EQ(report.cells[3].n, 5000u);
  for (const auto& cell : report.cells) {
    EXPECT_EQ(cell.replications, 64u);
    EXPECT_EQ(cell.coverage, cell.covered / 64.0);
    EXPECT_GE(cell.coverage, 0.0);
    EXPECT_LE(cell.coverage, 1.0);
    EXPECT_GT(cell.half_width, 0.0);
    EXPECT_GT(cell.mse, 0.0);
    EXPECT_GE(cell.ks, 0.0);
  }
}

TEST(Coverage, SmallerAlphaNeverCoversLess) {
  // Same streams, nested intervals: coverage is monotone in the level.
  auto c = small_beta();
  c.alpha = 0.05;
  const auto wide = qsgd::coverage_experiment(c);
  c.alpha = 0.10;
  const auto narrow = qsgd::coverage_experiment(c);
  for (std::size_t i = 0; i < wide.cells.size(); ++i) {
    EXPECT_LE(narrow.cells[i].coverage, wide.cells[i].coverage);
    EXPECT_LT(narrow.cells[i].half_width, wide.cells[i].half_width);
    EXPECT_EQ(narrow.cells[i].mse, wide.cells[i].mse);
  }
}

TEST(Coverage, BurnInHelpsSlowCauchyStart) {
  ExperimentConfig c;
  c.distribution = Distribution::cauchy(0, 2);
  c.eta_grid = {0.001};
  c.n_grid = {20000};
  c.replications = 40;
  const auto cold = qsgd::coverage_experiment(c);
  c.burn_in = 60000;
  const auto warm = qsgd::coverage_experiment(c);
  EXPECT_LT(cold.cells[0].coverage, 0.2);
  EXPECT_LT(warm.cells[0].mse, cold.cells[0].mse);
}

TEST(Coverage, RejectsInvalidConfig) {
  auto c = small_beta();
  c.replications = 0;
  EXPECT_THROW(qsgd::coverage_experiment(c), std::invalid_argument);
  c = small_beta();
  c.alpha = 1.0;
  EXPECT_THROW(qsgd::coverage_experiment(c), std::invalid_argument);
  c = small_beta();
  c.eta_grid.clear();
  EXPECT_THROW(qsgd::coverage_experiment(c), std::invalid_argument);
  c = small_beta();
  c.n_grid = {0};
  EXPECT_THROW(qsgd::coverage_experiment(c), std::invalid_argument);
}

TEST(CoverageOutput, CsvSchema) {
  const auto text = coverage_text(small_beta(), 1, qsgd::OutputFormat::csv);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "eta,n,coverage,half_width,mse,ks,failed");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0.01,2000,", 0), 0u) << line;
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(CoverageOutput, JsonSchema) {
  const auto doc =
      nlohmann::json::parse(coverage_text(small_beta(), 1, qsgd::OutputFormat::json));
  EXPECT_EQ(doc.at("distribution"), "beta:2,3");
  EXPECT_EQ(doc.at("tau"), "3/4");
  ASSERT_EQ(doc.at("cells").size(), 4u);
  for (const auto& cell : doc.at("cells")) {
    for (const char* key : {"eta", "n", "coverage", "half_width", "mse", "ks", "failed"}) {
      EXPECT_TRUE(cell.contains(key)) << key;
    }
  }
}

TEST(FormatG6, SixSignificantDigits) {
  EXPECT_EQ(qsgd::format_g6(0.123456789), "0.123457");
  EXPECT_EQ(qsgd::format_g6(100000), "100000");
  EXPECT_EQ(qsgd::format_g6(1.25e-3), "0.00125");
}

TEST(MseCurve, StartsAtSquaredInitialOffset) {
  ExperimentConfig c;
  c.distribution = Distribution::uniform(0, 1);
  c.quantile = {1, 2};
  c.eta_grid = {0.01};
  c.n_grid = {1000};
  c.replications = 8;
  c.theta0 = 0.2;
  c.curve_points = 10;
  const auto curve = qsgd::mse_curve(c);
  ASSERT_EQ(curve.size(), 11u);
  EXPECT_EQ(curve[0].n, 0u);
  EXPECT_NEAR(curve[0].mse, 0.09, 1e-15);
  EXPECT_EQ(curve.back().n, 1000u);
}

double plateau(const std::vector<qsgd::MsePoint>& curve, double eta) {
  double sum = 0.0;
  int count = 0;
  for (const auto& p : curve) {
    if (p.eta == eta && p.n >= 20000) {
      sum += p.mse;
      ++count;
    }
  }
  return sum / count;
}

TEST(MseCurve, UniformMedianPlateau) {
  ExperimentConfig c;
  c.distribution = Distribution::uniform(0, 1);
  c.quantile = {1, 2};
  c.eta_grid = {0.01, 0.005};
  c.n_grid = {40000};
  c.replications = 400;
  c.curve_points = 20;
  const auto curve = qsgd::mse_curve(c);
  const double a = plateau(curve, 0.01);
  const double b = plateau(curve, 0.005);
  EXPECT_NEAR(a, 1.25e-3, 0.2 * 1.25e-3);
  EXPECT_NEAR(b / a, 0.5, 0.1);
}

TEST(MseCurve, DeterministicAcrossThreads) {
  ExperimentConfig c;
  c.eta_grid = {0.01};
  c.n_grid = {3000};
  c.replications = 20;
  c.curve_points = 5;
  c.threads = 1;
  std::ostringstream a;
  qsgd::write_mse(a, qsgd::mse_curve(c), c);
  c.threads = 4;
  std::ostringstream b;
  qsgd::write_mse(b, qsgd::mse_curve(c), c);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "eta,n,mse");
}

TEST(Normality, HistogramAndDeterminism) {
  ExperimentConfig c;
  c.eta_grid = {0.01};
  c.n_grid = {5000};
  c.replications = 200;
  c.histogram_bins = 16;
  c.threads = 1;
  const auto one = qsgd::normality_experiment(c);
  c.threads = 4;
  const auto four = qsgd::normality_experiment(c);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].ks, four[0].ks);
  ASSERT_EQ(one[0].bins.size(), 16u);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < one[0].bins.size(); ++i) {
    total += one[0].bins[i].count;
    EXPECT_EQ(one[0].bins[i].count, four[0].bins[i].count);
  }
  EXPECT_LE(total, 200u);
  EXPECT_GT(total, 190u);
  EXPECT_NEAR(one[0].limit_variance, 0.0690090059305487136, 1e-9);

  std::ostringstream csv;
  qsgd::write_normality(csv, one, c);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "eta,n,ks,bin_lo,bin_hi,count");
  c.format = qsgd::OutputFormat::json;
  std::ostringstream json;
  qsgd::write_normality(json, one, c);
  const auto doc = nlohmann::json::parse(json.str());
  EXPECT_EQ(doc.at("results").at(0).at("bins").size(), 16u);
}

TEST(Normality, KsBelowBandForNormalTarget) {
  // Pooled standard normal draws against their own law.
  qsgd::Philox4x32 rng(4);
  std::vector<double> z(2000);
  for (auto& v : z) v = qsgd::sample_standard_normal(rng);
  const double ks = qsgd::ks_statistic(z, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); });
  EXPECT_LT(ks, qsgd::ks_critical_99(z.size()));
}

}  // namespace

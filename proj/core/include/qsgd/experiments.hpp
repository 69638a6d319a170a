#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qsgd/density.hpp"
#include "qsgd/distributions.hpp"
#include "qsgd/sgd.hpp"

namespace qsgd {

enum class OutputFormat { csv, json };

struct ExperimentConfig {
  Distribution distribution = Distribution::beta(2.0, 3.0);
  RationalQuantile quantile{3, 4};
  std::vector<double> eta_grid{0.01};
  std::vector<std::uint64_t> n_grid{100000};
  std::uint32_t replications = 500;
  double alpha = 0.05;
  std::uint64_t seed = 42;
  /// SGD steps taken before step 1; the KDE only sees post-burn-in samples.
  /// Ignored by mse_curve, whose first checkpoint is the initial point.
  std::uint64_t burn_in = 0;
  double theta0 = 0.0;
  KernelKind kernel = KernelKind::epanechnikov;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Number of checkpoints after n = 0 on the MSE curve.
  std::size_t curve_points = 50;
  std::size_t histogram_bins = 40;
  std::string output_path;
  OutputFormat format = OutputFormat::csv;

  void validate() const;
};

struct CoverageCell {
  double eta;
  std::uint64_t n;
  double coverage;
  double half_width;  ///< mean over replications that produced an interval
  double mse;
  double ks;
  std::uint32_t failed;
  std::uint32_t covered;
  std::uint32_t replications;
};

struct CoverageReport {
  std::vector<CoverageCell> cells;
};

struct MsePoint {
  double eta;
  std::uint64_t n;
  double mse;
};

struct HistogramBin {
  double lower;
  double upper;
  std::uint64_t count;
};

struct NormalityResult {
  double eta;
  std::uint64_t n;
  double ks;
  double limit_variance;
  std::vector<HistogramBin> bins;
};

/// Runs `body(i)` for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

/// Per (eta, n) cell: run SGD with the KDE plug-in alongside, form the
/// (1 - alpha) interval at step n and check it against the true quantile.
/// Replication r of eta cell e draws from Philox stream (e, r), so results do
/// not depend on the number of workers.
CoverageReport coverage_experiment(const ExperimentConfig& config);

/// Mean squared error of theta_n against the true quantile, at n = 0 and
/// curve_points evenly spaced checkpoints up to max(n_grid), per eta.
std::vector<MsePoint> mse_curve(const ExperimentConfig& config);

/// Pools (theta_n - theta*)/sqrt(eta) at n = max(n_grid) across replications
/// and compares it with N(0, tau(1-tau)/(2f)) by KS distance and histogram.
std::vector<NormalityResult> normality_experiment(const ExperimentConfig& config);

/// printf("%.6g").
std::string format_g6(double value);

void write_coverage(std::ostream& out, const CoverageReport& report,
                    const ExperimentConfig& config);
void write_mse(std::ostream& out, const std::vector<MsePoint>& curve,
               const ExperimentConfig& config);
void write_normality(std::ostream& out, const std::vector<NormalityResult>& results,
                     const ExperimentConfig& config);

}  // namespace qsgd

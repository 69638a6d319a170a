#include "qsgd/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "qsgd/error.hpp"
#include "qsgd/inference.hpp"
#include "qsgd/special_functions.hpp"

namespace qsgd {
namespace {

std::vector<std::uint64_t> sorted_checkpoints(const std::vector<std::uint64_t>& grid) {
  std::vector<std::uint64_t> out = grid;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct ReplicationOutcome {
  double theta;
  double half_width;
  bool covered;
  bool failed;
};

double limit_variance(const ExperimentConfig& config, double theta_star) {
  return asymptotic_variance(config.quantile, config.distribution.pdf(theta_star));
}

double ks_against_normal(std::vector<double> standardized, double variance) {
  const double sd = std::sqrt(variance);
  return ks_statistic(std::move(standardized),
                      [sd](double x) { return special::normal_cdf(x / sd); });
}

SgdConfig sgd_config(const ExperimentConfig& config, double eta) {
  SgdConfig sgd;
  sgd.quantile = config.quantile;
  sgd.eta = eta;
  sgd.theta0 = {config.theta0};
  return sgd;
}

nlohmann::json rounded(double value) {
  return std::stod(format_g6(value));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (eta_grid.empty()) throw std::invalid_argument("eta grid must not be empty");
  if (n_grid.empty()) throw std::invalid_argument("n grid must not be empty");
  for (double eta : eta_grid) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be > 0");
  }
  for (auto n : n_grid) {
    if (n == 0) throw std::invalid_argument("step counts in the n grid must be >= 1");
  }
  if (!std::isfinite(theta0)) throw std::invalid_argument("theta0 must be finite");
  if (curve_points == 0) throw std::invalid_argument("curve_points must be >= 1");
  if (histogram_bins == 0) throw std::invalid_argument("histogram_bins must be >= 1");
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

CoverageReport coverage_experiment(const ExperimentConfig& config) {
  config.validate();
  const Kernel kernel(config.kernel);
  const double theta_star = config.distribution.quantile(config.quantile.tau());
  const double variance = limit_variance(config, theta_star);
  const auto checkpoints = sorted_checkpoints(config.n_grid);
  const std::size_t reps = config.replications;

  CoverageReport report;
  for (std::size_t e = 0; e < config.eta_grid.size(); ++e) {
    const double eta = config.eta_grid[e];
    // outcomes[r * checkpoints + c]
    std::vector<ReplicationOutcome> outcomes(reps * checkpoints.size());
    parallel_for(reps, config.threads, [&](std::size_t r) {
      Philox4x32 rng(config.seed, replication_stream(static_cast<std::uint32_t>(e),
                                                     static_cast<std::uint32_t>(r)));
      SgdState sgd(sgd_config(config, eta));
      KdeState kde(kernel);
      for (std::uint64_t i = 0; i < config.burn_in; ++i) sgd.step(config.distribution.sample(rng));
      std::size_t c = 0;
      for (std::uint64_t n = 1; c < checkpoints.size(); ++n) {
        const double x = config.distribution.sample(rng);
        kde.update(sgd.theta(0), x);
        sgd.step(x);
        if (n != checkpoints[c]) continue;
        ReplicationOutcome& out = outcomes[r * checkpoints.size() + c];
        out.theta = sgd.theta(0);
        try {
          const auto ci = confidence_interval(out.theta, eta, config.quantile, kde.estimate(),
                                              config.alpha);
          out.half_width = ci.half_width;
          out.covered = ci.contains(theta_star);
          out.failed = false;
        } catch (const NumericError&) {
          out.half_width = 0.0;
          out.covered = false;
          out.failed = true;
        }
        ++c;
      }
    });

    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      CoverageCell cell{eta, checkpoints[c], 0.0, 0.0, 0.0, 0.0, 0, 0,
                        static_cast<std::uint32_t>(reps)};
      double width_sum = 0.0;
      double sq_sum = 0.0;
      std::vector<double> standardized;
      standardized.reserve(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& out = outcomes[r * checkpoints.size() + c];
        const double err = out.theta - theta_star;
        sq_sum += err * err;
        standardized.push_back(err / std::sqrt(eta));
        if (out.failed) {
          ++cell.failed;
          continue;
        }
        width_sum += out.half_width;
        if (out.covered) ++cell.covered;
      }
      cell.coverage = static_cast<double>(cell.covered) / static_cast<double>(reps);
      const std::uint32_t ok = cell.replications - cell.failed;
      cell.half_width = ok > 0 ? width_sum / ok : 0.0;
      cell.mse = sq_sum / static_cast<double>(reps);
      cell.ks = ks_against_normal(std::move(standardized), variance);
      report.cells.push_back(cell);
    }
  }
  return report;
}

std::vector<MsePoint> mse_curve(const ExperimentConfig& config) {
  config.validate();
  const double theta_star = config.distribution.quantile(config.quantile.tau());
  const std::uint64_t horizon = *std::max_element(config.n_grid.begin(), config.n_grid.end());
  const std::uint64_t stride = std::max<std::uint64_t>(1, horizon / config.curve_points);
  const std::size_t reps = config.replications;

  std::vector<MsePoint> curve;
  for (std::size_t e = 0; e < config.eta_grid.size(); ++e) {
    const double eta = config.eta_grid[e];
    std::vector<Trajectory> paths(reps);
    parallel_for(reps, config.threads, [&](std::size_t r) {
      Philox4x32 rng(config.seed, replication_stream(static_cast<std::uint32_t>(e),
                                                     static_cast<std::uint32_t>(r)));
      TrajectoryOptions options;
      options.record = true;
      options.stride = stride;
      auto result = run_stream(
          sgd_config(config, eta), horizon,
          [&](std::span<double> out) { out[0] = config.distribution.sample(rng); }, options);
      paths[r] = std::move(*result.trajectory);
    });
    for (std::size_t row = 0; row < paths.front().size(); ++row) {
      double sum = 0.0;
      for (const auto& path : paths) {
        const double err = path.row(row)[0] - theta_star;
        sum += err * err;
      }
      curve.push_back({eta, paths.front().steps[row], sum / static_cast<double>(reps)});
    }
  }
  return curve;
}

std::vector<NormalityResult> normality_experiment(const ExperimentConfig& config) {
  config.validate();
  const double theta_star = config.distribution.quantile(config.quantile.tau());
  const double variance = limit_variance(config, theta_star);
  const double sd = std::sqrt(variance);
  const std::uint64_t horizon = *std::max_element(config.n_grid.begin(), config.n_grid.end());
  const std::size_t reps = config.replications;

  std::vector<NormalityResult> results;
  for (std::size_t e = 0; e < config.eta_grid.size(); ++e) {
    const double eta = config.eta_grid[e];
    std::vector<double> standardized(reps);
    parallel_for(reps, config.threads, [&](std::size_t r) {
      Philox4x32 rng(config.seed, replication_stream(static_cast<std::uint32_t>(e),
                                                     static_cast<std::uint32_t>(r)));
      SgdState sgd(sgd_config(config, eta));
      for (std::uint64_t i = 0; i < config.burn_in + horizon; ++i) {
        sgd.step(config.distribution.sample(rng));
      }
      standardized[r] = (sgd.theta(0) - theta_star) / std::sqrt(eta);
    });

    NormalityResult result{eta, horizon, 0.0, variance, {}};
    const double lo = -4.0 * sd;
    const double width = 8.0 * sd / static_cast<double>(config.histogram_bins);
    for (std::size_t b = 0; b < config.histogram_bins; ++b) {
      result.bins.push_back({lo + width * static_cast<double>(b),
                             lo + width * static_cast<double>(b + 1), 0});
    }
    for (double z : standardized) {
      const double slot = std::floor((z - lo) / width);
      if (slot >= 0.0 && slot < static_cast<double>(config.histogram_bins)) {
        ++result.bins[static_cast<std::size_t>(slot)].count;
      }
    }
    result.ks = ks_against_normal(std::move(standardized), variance);
    results.push_back(std::move(result));
  }
  return results;
}

std::string format_g6(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

void write_coverage(std::ostream& out, const CoverageReport& report,
                    const ExperimentConfig& config) {
  if (config.format == OutputFormat::csv) {
    out << "eta,n,coverage,half_width,mse,ks,failed\n";
    for (const auto& c : report.cells) {
      out << format_g6(c.eta) << ',' << c.n << ',' << format_g6(c.coverage) << ','
          << format_g6(c.half_width) << ',' << format_g6(c.mse) << ',' << format_g6(c.ks)
          << ',' << c.failed << '\n';
    }
    return;
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"eta", rounded(c.eta)},
                     {"n", c.n},
                     {"coverage", rounded(c.coverage)},
                     {"half_width", rounded(c.half_width)},
                     {"mse", rounded(c.mse)},
                     {"ks", rounded(c.ks)},
                     {"failed", c.failed}});
  }
  nlohmann::json doc = {{"distribution", config.distribution.to_string()},
                        {"tau", config.quantile.to_string()},
                        {"alpha", rounded(config.alpha)},
                        {"replications", config.replications},
                        {"seed", config.seed},
                        {"cells", std::move(cells)}};
  out << doc.dump(2) << '\n';
}

void write_mse(std::ostream& out, const std::vector<MsePoint>& curve,
               const ExperimentConfig& config) {
  if (config.format == OutputFormat::csv) {
    out << "eta,n,mse\n";
    for (const auto& p : curve) {
      out << format_g6(p.eta) << ',' << p.n << ',' << format_g6(p.mse) << '\n';
    }
    return;
  }
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve) {
    points.push_back({{"eta", rounded(p.eta)}, {"n", p.n}, {"mse", rounded(p.mse)}});
  }
  nlohmann::json doc = {{"distribution", config.distribution.to_string()},
                        {"tau", config.quantile.to_string()},
                        {"replications", config.replications},
                        {"seed", config.seed},
                        {"points", std::move(points)}};
  out << doc.dump(2) << '\n';
}

void write_normality(std::ostream& out, const std::vector<NormalityResult>& results,
                     const ExperimentConfig& config) {
  if (config.format == OutputFormat::csv) {
    out << "eta,n,ks,bin_lo,bin_hi,count\n";
    for (const auto& r : results) {
      for (const auto& b : r.bins) {
        out << format_g6(r.eta) << ',' << r.n << ',' << format_g6(r.ks) << ','
            << format_g6(b.lower) << ',' << format_g6(b.upper) << ',' << b.count << '\n';
      }
    }
    return;
  }
  nlohmann::json items = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.bins) {
      bins.push_back({{"lo", rounded(b.lower)}, {"hi", rounded(b.upper)}, {"count", b.count}});
    }
    items.push_back({{"eta", rounded(r.eta)},
                     {"n", r.n},
                     {"ks", rounded(r.ks)},
                     {"limit_variance", rounded(r.limit_variance)},
                     {"bins", std::move(bins)}});
  }
  nlohmann::json doc = {{"distribution", config.distribution.to_string()},
                        {"tau", config.quantile.to_string()},
                        {"replications", config.replications},
                        {"seed", config.seed},
                        {"results", std::move(items)}};
  out << doc.dump(2) << '\n';
}

}  // namespace qsgd

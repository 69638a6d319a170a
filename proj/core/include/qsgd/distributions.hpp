#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qsgd/random.hpp"

namespace qsgd {

struct Uniform {
  double lower;
  double upper;
};

struct Normal {
  double mean;
  double stddev;
};

struct Cauchy {
  double location;
  double scale;
};

struct Beta {
  double alpha;
  double beta;
};

/// A univariate sampling law with exact CDF, density and quantile function.
/// Immutable once constructed; sample() draws from a caller-owned stream.
class Distribution {
 public:
  using Params = std::variant<Uniform, Normal, Cauchy, Beta>;

  static Distribution uniform(double lower, double upper);
  static Distribution normal(double mean, double stddev);
  static Distribution cauchy(double location, double scale);
  static Distribution beta(double alpha, double beta);

  /// Parses "uniform:a,b", "normal:mu,sigma", "cauchy:x0,gamma" or
  /// "beta:a,b".
  static Distribution parse(std::string_view text);

  double cdf(double x) const;
  double pdf(double x) const;
  /// Inverse CDF for p in (0, 1). Closed form where one exists; Beta uses
  /// bisection on the CDF down to 1e-15 in x.
  double quantile(double p) const;
  double sample(Philox4x32& rng) const;

  const Params& params() const noexcept { return params_; }
  /// Round-trips through parse().
  std::string to_string() const;

 private:
  explicit Distribution(Params params) : params_(params) {}

  Params params_;
};

/// Gamma(shape, 1) variate by Marsaglia-Tsang rejection; shapes below one
/// use the boost X * U^(1/shape).
double sample_gamma(double shape, Philox4x32& rng);

double sample_standard_normal(Philox4x32& rng);

/// Two-sided Kolmogorov-Smirnov statistic between the empirical law of
/// `samples` and a continuous CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max({worst, f - static_cast<double>(i) / n,
                      static_cast<double>(i + 1) / n - f});
  }
  return worst;
}

/// Approximate 99% critical value of the one-sample KS statistic.
inline double ks_critical_99(std::size_t n) {
  return 1.628 / std::sqrt(static_cast<double>(n));
}

}  // namespace qsgd

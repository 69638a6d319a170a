#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qsgd/density.hpp"
#include "qsgd/sgd.hpp"

namespace qsgd {

/// Density estimates below this are treated as a numeric failure rather than
/// producing an effectively unbounded interval.
inline constexpr double kDensityFloor = 1e-8;

struct ConfidenceInterval {
  double center;
  double half_width;
  double level;
  double eta;
  double f_hat;

  double lower() const noexcept { return center - half_width; }
  double upper() const noexcept { return center + half_width; }
  bool contains(double x) const noexcept { return lower() <= x && x <= upper(); }
};

/// Standard normal quantile Phi^{-1}(prob), 0 < prob < 1.
double z_quantile(double prob);

/// tau(1-tau) / (2 f): variance of the limiting law of (theta - x0)/sqrt(eta).
double asymptotic_variance(const RationalQuantile& quantile, double f_hat);

/// theta_n +/- z_{1-alpha/2} sqrt(eta tau(1-tau) / (2 f_hat)).
/// Throws NumericError when f_hat is below kDensityFloor.
ConfidenceInterval confidence_interval(double theta_n, double eta,
                                       const RationalQuantile& quantile, double f_hat,
                                       double alpha);

/// Where each recursive KDE term is evaluated.
enum class EvalPoint {
  current_iterate,  ///< the SGD iterate held when the sample arrives
  fixed,            ///< a caller-supplied point per coordinate
};

/// Fully online quantile inference: SGD iterates plus one recursive KDE per
/// coordinate, O(d) memory. On each sample the KDE term is taken at the
/// iterate held before the SGD update (or at the fixed point), then the SGD
/// step is applied.
class OnlineQuantileEstimator {
 public:
  OnlineQuantileEstimator(SgdConfig config, Kernel kernel);
  OnlineQuantileEstimator(SgdConfig config, Kernel kernel, std::vector<double> eval_points);

  void observe(std::span<const double> sample);
  void observe(double sample);

  const SgdState& sgd() const noexcept { return sgd_; }
  const KdeState& density(std::size_t coordinate) const { return kde_.at(coordinate); }
  double f_hat(std::size_t coordinate) const { return kde_.at(coordinate).estimate(); }
  std::uint64_t count() const noexcept { return sgd_.steps(); }
  EvalPoint eval_point() const noexcept { return mode_; }

  ConfidenceInterval interval(std::size_t coordinate, double alpha) const;

 private:
  SgdState sgd_;
  std::vector<KdeState> kde_;
  EvalPoint mode_;
  std::vector<double> eval_points_;
};

}  // namespace qsgd

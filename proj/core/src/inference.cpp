#include "qsgd/inference.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "qsgd/error.hpp"
#include "qsgd/special_functions.hpp"

namespace qsgd {

double z_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw std::invalid_argument("z_quantile: probability must lie in (0, 1)");
  }
  return special::normal_quantile(prob);
}

double asymptotic_variance(const RationalQuantile& quantile, double f_hat) {
  if (!(f_hat > 0.0) || !std::isfinite(f_hat)) {
    throw std::invalid_argument("asymptotic_variance: density must be positive and finite");
  }
  const double tau = quantile.tau();
  return tau * (1.0 - tau) / (2.0 * f_hat);
}

ConfidenceInterval confidence_interval(double theta_n, double eta,
                                       const RationalQuantile& quantile, double f_hat,
                                       double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("confidence_interval: alpha must lie in (0, 1)");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("confidence_interval: eta must be positive and finite");
  }
  if (!std::isfinite(theta_n)) {
    throw std::invalid_argument("confidence_interval: theta_n must be finite");
  }
  if (!(f_hat >= kDensityFloor) || !std::isfinite(f_hat)) {
    throw NumericError("confidence_interval: density estimate below floor");
  }
  const double z = z_quantile(1.0 - alpha / 2.0);
  const double half_width = z * std::sqrt(eta * asymptotic_variance(quantile, f_hat));
  return {theta_n, half_width, 1.0 - alpha, eta, f_hat};
}

OnlineQuantileEstimator::OnlineQuantileEstimator(SgdConfig config, Kernel kernel)
    : sgd_(std::move(config)),
      kde_(sgd_.dimension(), KdeState(kernel)),
      mode_(EvalPoint::current_iterate) {}

OnlineQuantileEstimator::OnlineQuantileEstimator(SgdConfig config, Kernel kernel,
                                                 std::vector<double> eval_points)
    : sgd_(std::move(config)),
      kde_(sgd_.dimension(), KdeState(kernel)),
      mode_(EvalPoint::fixed),
      eval_points_(std::move(eval_points)) {
  if (eval_points_.size() != sgd_.dimension()) {
    throw std::invalid_argument("fixed evaluation points must match the state dimension");
  }
}

void OnlineQuantileEstimator::observe(std::span<const double> sample) {
  if (sample.size() != sgd_.dimension()) {
    throw std::invalid_argument("sample dimension does not match estimator dimension");
  }
  for (double x : sample) {
    if (!std::isfinite(x)) throw std::invalid_argument("sample must be finite");
  }
  for (std::size_t i = 0; i < kde_.size(); ++i) {
    const double x = mode_ == EvalPoint::fixed ? eval_points_[i] : sgd_.theta(i);
    kde_[i].update(x, sample[i]);
  }
  sgd_.step(sample);
}

void OnlineQuantileEstimator::observe(double sample) {
  observe(std::span<const double>(&sample, 1));
}

ConfidenceInterval OnlineQuantileEstimator::interval(std::size_t coordinate,
                                                     double alpha) const {
  return confidence_interval(sgd_.theta(coordinate), sgd_.config().eta,
                             sgd_.config().quantile, f_hat(coordinate), alpha);
}

}  // namespace qsgd

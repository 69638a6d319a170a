#include "qsgd/sgd.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace qsgd {

RationalQuantile::RationalQuantile(std::int64_t p, std::int64_t q) : p_(p), q_(q) {
  if (p <= 0 || q <= 0 || p >= q) {
    throw std::invalid_argument("quantile level p/q needs 0 < p < q, got " +
                                std::to_string(p) + "/" + std::to_string(q));
  }
  if (std::gcd(p, q) != 1) {
    throw std::invalid_argument("quantile level p/q needs coprime p and q, got " +
                                std::to_string(p) + "/" + std::to_string(q));
  }
}

RationalQuantile RationalQuantile::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw std::invalid_argument("quantile level must be written p/q, got '" +
                                std::string(text) + "'");
  }
  auto parse_int = [&](std::string_view part) {
    const std::string token(part);
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (token.empty() || used != token.size()) {
      throw std::invalid_argument("quantile level must be written p/q, got '" +
                                  std::string(text) + "'");
    }
    return static_cast<std::int64_t>(value);
  };
  return {parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1))};
}

std::string RationalQuantile::to_string() const {
  return std::to_string(p_) + "/" + std::to_string(q_);
}

void SgdConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("learning rate eta must be positive and finite");
  }
  if (theta0.empty()) {
    throw std::invalid_argument("theta0 must have at least one coordinate");
  }
  for (double t : theta0) {
    if (!std::isfinite(t)) throw std::invalid_argument("theta0 must be finite");
  }
}

std::int64_t draw_lattice_offset(const RationalQuantile& quantile, Philox4x32& rng) {
  const auto q = quantile.q();
  const auto j = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(q));
  return j < q ? j : q - 1;
}

double randomized_init(double theta0, const RationalQuantile& quantile, double eta,
                       Philox4x32& rng) {
  return theta0 + static_cast<double>(draw_lattice_offset(quantile, rng)) *
                      quantile.spacing(eta);
}

SgdState::SgdState(SgdConfig config)
    : config_(std::move(config)),
      spacing_(config_.quantile.spacing(config_.eta)),
      up_(config_.quantile.p()),
      down_(config_.quantile.q() - config_.quantile.p()) {
  config_.validate();
  index_.assign(config_.theta0.size(), 0);
  if (config_.randomized_init) {
    Philox4x32 rng(config_.seed);
    for (auto& k : index_) k = draw_lattice_offset(config_.quantile, rng);
  }
  start_index_ = index_;
}

void SgdState::step(std::span<const double> sample) {
  if (sample.size() != index_.size()) {
    throw std::invalid_argument("sample dimension " + std::to_string(sample.size()) +
                                " does not match state dimension " +
                                std::to_string(index_.size()));
  }
  for (double x : sample) {
    if (!std::isfinite(x)) throw std::invalid_argument("sample must be finite");
  }
  for (std::size_t i = 0; i < index_.size(); ++i) {
    index_[i] += sample[i] > theta(i) ? up_ : -down_;
  }
  ++n_;
}

void SgdState::step(double sample) { step(std::span<const double>(&sample, 1)); }

std::vector<double> SgdState::theta() const {
  std::vector<double> out(index_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = theta(i);
  return out;
}

SgdState sgd_step(SgdState state, std::span<const double> sample) {
  state.step(sample);
  return state;
}

TrajectoryRecorder::TrajectoryRecorder(const TrajectoryOptions& options,
                                       std::size_t dimension)
    : options_(options) {
  if (options_.stride == 0) throw std::invalid_argument("trajectory stride must be >= 1");
  if (options_.record) {
    trajectory_.emplace();
    trajectory_->dimension = dimension;
    trajectory_->stride = options_.stride;
  }
}

void TrajectoryRecorder::observe(const SgdState& state) {
  if (!trajectory_ || state.steps() % options_.stride != 0) return;
  if (trajectory_->size() >= options_.max_points) {
    trajectory_->truncated = true;
    return;
  }
  trajectory_->steps.push_back(state.steps());
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    trajectory_->values.push_back(state.theta(i));
  }
}

std::optional<Trajectory> TrajectoryRecorder::finish() && { return std::move(trajectory_); }

StreamResult run_stream(const SgdConfig& config, std::span<const std::vector<double>> samples,
                        const TrajectoryOptions& options) {
  SgdState state(config);
  TrajectoryRecorder recorder(options, state.dimension());
  recorder.observe(state);
  for (const auto& sample : samples) {
    state.step(sample);
    recorder.observe(state);
  }
  return {std::move(state), std::move(recorder).finish()};
}

StreamResult run_stream(const SgdConfig& config, std::span<const double> samples,
                        const TrajectoryOptions& options) {
  SgdState state(config);
  if (state.dimension() != 1) {
    throw std::invalid_argument("scalar stream requires a one-dimensional state");
  }
  TrajectoryRecorder recorder(options, 1);
  recorder.observe(state);
  for (double x : samples) {
    state.step(x);
    recorder.observe(state);
  }
  return {std::move(state), std::move(recorder).finish()};
}

}  // namespace qsgd

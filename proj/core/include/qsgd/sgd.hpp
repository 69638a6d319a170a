#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsgd/random.hpp"

namespace qsgd {

/// Quantile level tau = p/q with coprime 0 < p < q. The denominator fixes the
/// lattice spacing eta/q of the iterates and the period q of the chain.
class RationalQuantile {
 public:
  RationalQuantile(std::int64_t p, std::int64_t q);

  /// Parses "p/q".
  static RationalQuantile parse(std::string_view text);

  std::int64_t p() const noexcept { return p_; }
  std::int64_t q() const noexcept { return q_; }
  double tau() const noexcept { return static_cast<double>(p_) / static_cast<double>(q_); }
  double spacing(double eta) const noexcept { return eta / static_cast<double>(q_); }
  std::string to_string() const;

  friend bool operator==(const RationalQuantile&, const RationalQuantile&) = default;

 private:
  std::int64_t p_;
  std::int64_t q_;
};

struct SgdConfig {
  RationalQuantile quantile{1, 2};
  double eta = 0.01;
  std::vector<double> theta0{0.0};
  bool randomized_init = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Uniform lattice offset j in {0, ..., q-1}.
std::int64_t draw_lattice_offset(const RationalQuantile& quantile, Philox4x32& rng);

/// theta0 + j * eta / q with j uniform on {0, ..., q-1}.
double randomized_init(double theta0, const RationalQuantile& quantile, double eta,
                       Philox4x32& rng);

/// Constant learning-rate SGD on the quantile loss, one independent chain per
/// coordinate. Iterates are held as integer lattice offsets from theta0, so
/// theta_i = theta0_i + k_i * eta / q holds exactly for any number of steps.
class SgdState {
 public:
  explicit SgdState(SgdConfig config);

  /// Up-step k += p when sample > theta, otherwise down-step k -= q - p.
  void step(std::span<const double> sample);
  /// Scalar form for d == 1.
  void step(double sample);

  std::size_t dimension() const noexcept { return index_.size(); }
  double theta(std::size_t coordinate) const noexcept {
    return config_.theta0[coordinate] + static_cast<double>(index_[coordinate]) * spacing_;
  }
  std::vector<double> theta() const;
  /// Offset of the current iterate from theta0 in units of eta/q.
  std::int64_t lattice_index(std::size_t coordinate) const noexcept {
    return index_[coordinate];
  }
  /// The (possibly randomized) initial point.
  double start(std::size_t coordinate) const noexcept {
    return config_.theta0[coordinate] + static_cast<double>(start_index_[coordinate]) * spacing_;
  }
  std::int64_t start_index(std::size_t coordinate) const noexcept {
    return start_index_[coordinate];
  }
  std::uint64_t steps() const noexcept { return n_; }
  double spacing() const noexcept { return spacing_; }
  const SgdConfig& config() const noexcept { return config_; }

 private:
  SgdConfig config_;
  double spacing_;
  std::int64_t up_;
  std::int64_t down_;
  std::vector<std::int64_t> index_;
  std::vector<std::int64_t> start_index_;
  std::uint64_t n_ = 0;
};

/// Functional form of SgdState::step.
SgdState sgd_step(SgdState state, std::span<const double> sample);

struct TrajectoryOptions {
  bool record = false;
  std::uint64_t stride = 1;
  /// Recording stops once this many points are held.
  std::size_t max_points = std::size_t{1} << 24;
};

/// Thinned iterate history, row-major (one row of `dimension` values per
/// recorded step). Row 0 is the initial state at step 0.
struct Trajectory {
  std::size_t dimension = 1;
  std::uint64_t stride = 1;
  std::vector<std::uint64_t> steps;
  std::vector<double> values;
  bool truncated = false;

  std::size_t size() const noexcept { return steps.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dimension, dimension};
  }
};

struct StreamResult {
  SgdState state;
  std::optional<Trajectory> trajectory;
};

class TrajectoryRecorder {
 public:
  TrajectoryRecorder(const TrajectoryOptions& options, std::size_t dimension);
  void observe(const SgdState& state);
  std::optional<Trajectory> finish() &&;

 private:
  TrajectoryOptions options_;
  std::optional<Trajectory> trajectory_;
};

StreamResult run_stream(const SgdConfig& config, std::span<const std::vector<double>> samples,
                        const TrajectoryOptions& options = {});

/// Scalar stream for d == 1.
StreamResult run_stream(const SgdConfig& config, std::span<const double> samples,
                        const TrajectoryOptions& options = {});

/// Pulls `count` sample vectors from `source`, which fills a span of length d.
template <typename Source>
StreamResult run_stream(const SgdConfig& config, std::uint64_t count, Source&& source,
                        const TrajectoryOptions& options = {}) {
  SgdState state(config);
  TrajectoryRecorder recorder(options, state.dimension());
  recorder.observe(state);
  std::vector<double> buffer(state.dimension());
  for (std::uint64_t i = 0; i < count; ++i) {
    source(std::span<double>(buffer));
    state.step(buffer);
    recorder.observe(state);
  }
  return {std::move(state), std::move(recorder).finish()};
}

}  // namespace qsgd

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qsgd/distributions.hpp"
#include "qsgd/sgd.hpp"

namespace qsgd {

/// The SGD iterates for tau = p/q as a Markov chain on the lattice
/// x_k = x0 + k eta/q, truncated to k in [-K, K]. x0 is the lattice point
/// closest to the true quantile. From state k the chain moves to k + p - q
/// with probability F_k = F(x_k) and to k + p otherwise.
class LatticeChain {
 public:
  using Cdf = std::function<double(double)>;

  /// `theta0` fixes which lattice (theta0 + Z eta/q) the chain lives on.
  LatticeChain(RationalQuantile quantile, double eta, double true_quantile, Cdf cdf,
               std::int64_t truncation, double theta0 = 0.0);

  const RationalQuantile& quantile() const noexcept { return quantile_; }
  double eta() const noexcept { return eta_; }
  double spacing() const noexcept { return spacing_; }
  double x0() const noexcept { return x0_; }
  double true_quantile() const noexcept { return true_quantile_; }
  std::int64_t truncation() const noexcept { return truncation_; }
  std::size_t size() const noexcept { return cdf_values_.size(); }

  double state(std::int64_t k) const noexcept {
    return x0_ + static_cast<double>(k) * spacing_;
  }
  /// F_k for k inside the window.
  double cdf_at(std::int64_t k) const { return cdf_values_.at(slot(k)); }
  /// F at any lattice index, evaluated through the stored CDF.
  double cdf_anywhere(std::int64_t k) const { return cdf_(state(k)); }
  std::span<const double> cdf_values() const noexcept { return cdf_values_; }

  std::int64_t up_jump() const noexcept { return quantile_.p(); }
  std::int64_t down_jump() const noexcept { return quantile_.p() - quantile_.q(); }

  std::size_t slot(std::int64_t k) const noexcept {
    return static_cast<std::size_t>(k + truncation_);
  }

 private:
  RationalQuantile quantile_;
  double eta_;
  double spacing_;
  double true_quantile_;
  double x0_;
  Cdf cdf_;
  std::int64_t truncation_;
  std::vector<double> cdf_values_;
};

/// 10 q ceil(sqrt(tau(1-tau) / (2 f eta))) + 10 q: about ten limiting
/// standard deviations in lattice units.
std::int64_t default_truncation(const RationalQuantile& quantile, double eta,
                                double f_at_quantile);

/// Chain for a named distribution; truncation defaults to default_truncation.
LatticeChain build_chain(const RationalQuantile& quantile, double eta,
                         const Distribution& distribution,
                         std::optional<std::int64_t> truncation = std::nullopt,
                         double theta0 = 0.0);

/// Probability vector over the truncated lattice window.
struct StationaryDistribution {
  std::int64_t truncation = 0;
  std::vector<double> pi;
  double eta = 0.0;
  std::int64_t q = 1;
  double x0 = 0.0;
  /// Chernoff bound on the stationary mass beyond the window edge, from the
  /// exponential moment sum_k pi_k exp(t |x~_k|) optimised over t.
  double truncated_mass_bound = 0.0;
  std::uint64_t iterations = 0;
  double final_change = 0.0;

  std::size_t size() const noexcept { return pi.size(); }
  std::int64_t index(std::size_t slot) const noexcept {
    return static_cast<std::int64_t>(slot) - truncation;
  }
  double at(std::int64_t k) const {
    if (k < -truncation || k > truncation) return 0.0;
    return pi[static_cast<std::size_t>(k + truncation)];
  }
  double theta(std::int64_t k) const noexcept {
    return x0 + static_cast<double>(k) * eta / static_cast<double>(q);
  }
  /// x~_k = k sqrt(eta) / q.
  double standardized(std::int64_t k) const noexcept;
};

struct SolveOptions {
  double tolerance = 1e-13;
  std::uint64_t max_iterations = 50'000'000;
};

/// Power iteration on the lazy kernel (P + I)/2 with out-of-window moves
/// clamped to the nearest edge state. Stops when successive iterates differ
/// by less than `tolerance` in L1; throws NumericError otherwise.
StationaryDistribution stationary_solve(const LatticeChain& chain,
                                        const SolveOptions& options = {});

/// Detailed-balance product solution for tau = 1/2:
/// pi_{s+1} = pi_s (1 - F_s) / F_{s+1}, normalised over the window.
StationaryDistribution closed_form_median(const LatticeChain& chain);

/// max over interior k of |pi_k - pi_{k+q-p} F_{k+q-p} - pi_{k-p} (1 - F_{k-p})|.
double balance_residual(const StationaryDistribution& pi, const LatticeChain& chain);

/// Half the L1 distance; both vectors must cover the same window.
double total_variation(const StationaryDistribution& a, const StationaryDistribution& b);

/// Expected change of L(k) = |k| + 1 after one step from state k.
double lyapunov_drift(const LatticeChain& chain, std::int64_t k);

struct DriftReport {
  /// Exception set is [-window, window].
  std::int64_t window;
  /// Largest (least negative) drift over the scanned states with |k| > window.
  double min_margin;
  double epsilon;
  std::int64_t scanned;
};

/// Finds the smallest [-N, N] outside of which the drift of L(k) = |k| + 1 is
/// at most -epsilon, scanning |k| <= search_limit (default: the truncation)
/// through the chain's CDF. Since F is monotone the drift is monotone in |k|
/// beyond max(p, q - p), so the scanned condition extends to the whole
/// lattice. Throws NumericError if every scanned window fails.
DriftReport foster_drift_check(const LatticeChain& chain, double epsilon = 0.25,
                               std::optional<std::int64_t> search_limit = std::nullopt);

struct BoundCheck {
  double value;
  bool holds;
};

/// S = sum_k eta^beta pi_k |k|^d exp(|k| sqrt(eta) / q); holds iff S <= q^2.
BoundCheck mgf_bound_check(const StationaryDistribution& pi, double beta, int d);

/// tail = sum_{|k| >= N} pi_k |k|^d with N = ceil(q K0 log(1/eta) / sqrt(eta));
/// holds iff tail <= q^2 eta^(K0 - beta). Throws NumericError when N lies
/// outside the window.
BoundCheck tail_bound_check(const StationaryDistribution& pi, int k0, double beta, int d);

/// Index N used by tail_bound_check.
std::int64_t tail_threshold(double eta, std::int64_t q, int k0);

struct Moments {
  double abs_first;   ///< sum pi_k |x~_k|
  double second;      ///< sum pi_k x~_k^2
  double signed_first;
};

Moments moment_check(const StationaryDistribution& pi);

/// KS distance between the standardized stationary law (atoms at x~_k) and
/// N(0, tau(1-tau) / (2 f)).
double normality_check(const StationaryDistribution& pi, double f_at_quantile,
                       const RationalQuantile& quantile);

/// KS distance between two stationary laws on the same lattice.
double ks_distance(const StationaryDistribution& a, const StationaryDistribution& b);

/// Stationary mass carried by each residue class k mod q.
std::vector<double> class_masses(const StationaryDistribution& pi);

/// Compares the empirical law of a fixed-start trajectory at steps n = j mod q
/// against q pi restricted to the matching lattice class, for each j.
/// Rows with step < burn_in are skipped. Returns the largest TV distance.
double cyclic_class_check(const LatticeChain& chain, const StationaryDistribution& pi,
                          const Trajectory& trajectory, std::uint64_t burn_in = 0,
                          std::size_t coordinate = 0);

/// TV distance between the pooled empirical law of the trajectory (steps >=
/// burn_in) and pi. Pooling over a uniformly randomized start removes the
/// periodic structure.
double pooled_tv_check(const LatticeChain& chain, const StationaryDistribution& pi,
                       const Trajectory& trajectory, std::uint64_t burn_in = 0,
                       std::size_t coordinate = 0);

/// TV distance between the empirical law of iterate values (snapped to the
/// chain's lattice) and pi. Values off the window count as unmatched mass.
double empirical_tv(const LatticeChain& chain, const StationaryDistribution& pi,
                    std::span<const double> thetas);

/// CSV with header "k,theta,pi".
void write_stationary_csv(std::ostream& out, const StationaryDistribution& pi);

}  // namespace qsgd

#include "qsgd/markov_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

#include "qsgd/error.hpp"
#include "qsgd/special_functions.hpp"

namespace qsgd {
namespace {

// Entries below this are flushed to zero so far-tail mass never enters the
// subnormal range.
constexpr double kUnderflow = 1e-290;

double chernoff_tail_bound(const StationaryDistribution& pi) {
  const double edge = pi.standardized(pi.truncation);
  double best = 1.0;
  for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      const double x = std::fabs(pi.standardized(pi.index(i)));
      sum += pi.pi[i] * std::exp(t * (x - edge));
    }
    best = std::min(best, sum);
  }
  return best;
}

StationaryDistribution empty_like(const LatticeChain& chain) {
  StationaryDistribution out;
  out.truncation = chain.truncation();
  out.pi.assign(chain.size(), 0.0);
  out.eta = chain.eta();
  out.q = chain.quantile().q();
  out.x0 = chain.x0();
  return out;
}

void normalise(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= total;
}

std::int64_t snap(const LatticeChain& chain, double theta) {
  return std::llround((theta - chain.x0()) / chain.spacing());
}

std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

LatticeChain::LatticeChain(RationalQuantile quantile, double eta, double true_quantile,
                           Cdf cdf, std::int64_t truncation, double theta0)
    : quantile_(quantile),
      eta_(eta),
      spacing_(quantile.spacing(eta)),
      true_quantile_(true_quantile),
      cdf_(std::move(cdf)),
      truncation_(truncation) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("lattice chain: eta must be positive and finite");
  }
  if (!std::isfinite(true_quantile) || !std::isfinite(theta0)) {
    throw std::invalid_argument("lattice chain: quantile and theta0 must be finite");
  }
  if (!cdf_) throw std::invalid_argument("lattice chain: missing CDF");
  if (truncation < quantile.q()) {
    throw std::invalid_argument("lattice chain: truncation " + std::to_string(truncation) +
                                " cannot hold one jump on each side of the quantile (need >= q)");
  }
  x0_ = theta0 + std::round((true_quantile - theta0) / spacing_) * spacing_;
  cdf_values_.resize(static_cast<std::size_t>(2 * truncation + 1));
  double previous = 0.0;
  for (std::int64_t k = -truncation; k <= truncation; ++k) {
    const double f = cdf_(state(k));
    if (!(f >= 0.0 && f <= 1.0)) {
      throw std::invalid_argument("lattice chain: CDF value outside [0, 1]");
    }
    if (f < previous) throw std::invalid_argument("lattice chain: CDF is not monotone");
    cdf_values_[slot(k)] = f;
    previous = f;
  }
}

std::int64_t default_truncation(const RationalQuantile& quantile, double eta,
                                double f_at_quantile) {
  if (!(f_at_quantile > 0.0)) {
    throw std::invalid_argument("default_truncation: density at the quantile must be positive");
  }
  const double tau = quantile.tau();
  const double sd = std::sqrt(tau * (1.0 - tau) / (2.0 * f_at_quantile * eta));
  return 10 * quantile.q() * static_cast<std::int64_t>(std::ceil(sd)) + 10 * quantile.q();
}

LatticeChain build_chain(const RationalQuantile& quantile, double eta,
                         const Distribution& distribution,
                         std::optional<std::int64_t> truncation, double theta0) {
  const double theta_star = distribution.quantile(quantile.tau());
  const std::int64_t k = truncation.value_or(
      default_truncation(quantile, eta, distribution.pdf(theta_star)));
  return LatticeChain(quantile, eta, theta_star,
                      [distribution](double x) { return distribution.cdf(x); }, k, theta0);
}

double StationaryDistribution::standardized(std::int64_t k) const noexcept {
  return static_cast<double>(k) * std::sqrt(eta) / static_cast<double>(q);
}

StationaryDistribution stationary_solve(const LatticeChain& chain, const SolveOptions& options) {
  StationaryDistribution out = empty_like(chain);
  const std::size_t n = chain.size();
  const auto up = static_cast<std::size_t>(chain.up_jump());
  const auto down = static_cast<std::size_t>(-chain.down_jump());
  const auto F = chain.cdf_values();

  // Start from the discretised limiting normal, with the density at the
  // quantile read off the chain's own CDF.
  std::vector<double> current(n, 0.0);
  {
    const double h = chain.spacing();
    const double slope = (chain.cdf_anywhere(1) - chain.cdf_anywhere(-1)) / (2.0 * h);
    const double tau = chain.quantile().tau();
    const auto q = static_cast<double>(chain.quantile().q());
    double sd = 0.0;
    if (slope > 0.0 && std::isfinite(slope)) {
      sd = q * std::sqrt(tau * (1.0 - tau) / (2.0 * slope * chain.eta()));
    }
    if (sd > 0.5) {
      for (std::size_t i = 0; i < n; ++i) {
        const double z = static_cast<double>(out.index(i)) / sd;
        const double v = std::exp(-0.5 * z * z);
        current[i] = v < kUnderflow ? 0.0 : v;
      }
    } else {
      current[chain.slot(0)] = 1.0;
    }
    normalise(current);
  }

  std::vector<double> next(n);
  std::vector<double> down_flow(n);
  std::vector<double> up_flow(n);
  double change = 0.0;
  std::uint64_t iteration = 0;
  while (iteration < options.max_iterations) {
    ++iteration;
    for (std::size_t i = 0; i < n; ++i) {
      down_flow[i] = 0.5 * current[i] * F[i];
      up_flow[i] = 0.5 * current[i] - down_flow[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.5 * current[j];
      if (j + down < n) v += down_flow[j + down];
      if (j >= up) v += up_flow[j - up];
      next[j] = v;
    }
    // Moves that would leave the window stay on its edge states.
    for (std::size_t i = 0; i < std::min(down, n); ++i) next[0] += down_flow[i];
    for (std::size_t i = n - std::min(up, n); i < n; ++i) next[n - 1] += up_flow[i];

    change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (next[j] < kUnderflow) next[j] = 0.0;
      change += std::fabs(next[j] - current[j]);
    }
    std::swap(current, next);
    if (iteration % 1024 == 0) normalise(current);
    if (change < options.tolerance) break;
  }
  normalise(current);
  out.pi = std::move(current);
  out.iterations = iteration;
  out.final_change = change;
  if (!(change < options.tolerance)) {
    throw NumericError("stationary_solve: no convergence after " + std::to_string(iteration) +
                       " iterations (last L1 change " + std::to_string(change) +
                       ", balance residual " + std::to_string(balance_residual(out, chain)) +
                       ")");
  }
  out.truncated_mass_bound = chernoff_tail_bound(out);
  return out;
}

StationaryDistribution closed_form_median(const LatticeChain& chain) {
  if (chain.quantile() != RationalQuantile(1, 2)) {
    throw std::invalid_argument("closed_form_median: requires tau = 1/2");
  }
  StationaryDistribution out = empty_like(chain);
  const std::int64_t K = chain.truncation();
  auto& u = out.pi;
  u[chain.slot(0)] = 1.0;
  // pi_s (1 - F_s) = pi_{s+1} F_{s+1}
  for (std::int64_t s = 0; s < K; ++s) {
    const double num = u[chain.slot(s)] * (1.0 - chain.cdf_at(s));
    if (num == 0.0) break;
    const double den = chain.cdf_at(s + 1);
    if (den == 0.0) {
      throw NumericError("closed_form_median: F vanishes at reachable state " +
                         std::to_string(s + 1));
    }
    u[chain.slot(s + 1)] = num / den;
  }
  for (std::int64_t s = 0; s > -K; --s) {
    const double num = u[chain.slot(s)] * chain.cdf_at(s);
    if (num == 0.0) break;
    const double den = 1.0 - chain.cdf_at(s - 1);
    if (den == 0.0) {
      throw NumericError("closed_form_median: 1 - F vanishes at reachable state " +
                         std::to_string(s - 1));
    }
    u[chain.slot(s - 1)] = num / den;
  }
  for (double& v : u) {
    if (v < kUnderflow) v = 0.0;
  }
  normalise(u);
  out.truncated_mass_bound = chernoff_tail_bound(out);
  return out;
}

double balance_residual(const StationaryDistribution& pi, const LatticeChain& chain) {
  if (pi.size() != chain.size() || pi.truncation != chain.truncation()) {
    throw std::invalid_argument("balance_residual: distribution and chain windows differ");
  }
  const std::int64_t K = chain.truncation();
  const std::int64_t p = chain.quantile().p();
  const std::int64_t q = chain.quantile().q();
  double worst = 0.0;
  for (std::int64_t k = -K + p; k + q - p <= K; ++k) {
    const double inflow = pi.at(k + q - p) * chain.cdf_at(k + q - p) +
                          pi.at(k - p) * (1.0 - chain.cdf_at(k - p));
    worst = std::max(worst, std::fabs(pi.at(k) - inflow));
  }
  return worst;
}

double total_variation(const StationaryDistribution& a, const StationaryDistribution& b) {
  if (a.truncation != b.truncation || a.size() != b.size()) {
    throw std::invalid_argument("total_variation: windows differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(a.pi[i] - b.pi[i]);
  return 0.5 * sum;
}

double lyapunov_drift(const LatticeChain& chain, std::int64_t k) {
  const double f = chain.cdf_anywhere(k);
  const auto abs_k = static_cast<double>(std::llabs(k));
  const auto after_down = static_cast<double>(std::llabs(k + chain.down_jump()));
  const auto after_up = static_cast<double>(std::llabs(k + chain.up_jump()));
  return f * (after_down - abs_k) + (1.0 - f) * (after_up - abs_k);
}

DriftReport foster_drift_check(const LatticeChain& chain, double epsilon,
                               std::optional<std::int64_t> search_limit) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("foster_drift_check: epsilon must be > 0");
  const std::int64_t limit = search_limit.value_or(chain.truncation());
  if (limit < chain.quantile().q()) {
    throw std::invalid_argument("foster_drift_check: search limit below q");
  }
  std::vector<double> drift(static_cast<std::size_t>(2 * limit + 1));
  std::int64_t window = 0;
  for (std::int64_t k = -limit; k <= limit; ++k) {
    const double d = lyapunov_drift(chain, k);
    drift[static_cast<std::size_t>(k + limit)] = d;
    if (d > -epsilon) window = std::max<std::int64_t>(window, std::llabs(k));
  }
  if (window >= limit) {
    throw NumericError("foster_drift_check: drift exceeds -" + std::to_string(epsilon) +
                       " out to |k| = " + std::to_string(limit) +
                       "; widen the truncation or the search limit");
  }
  double margin = -HUGE_VAL;
  for (std::int64_t k = -limit; k <= limit; ++k) {
    if (std::llabs(k) > window) {
      margin = std::max(margin, drift[static_cast<std::size_t>(k + limit)]);
    }
  }
  return {window, margin, epsilon, limit};
}

BoundCheck mgf_bound_check(const StationaryDistribution& pi, double beta, int d) {
  if (!(beta > 3.0)) throw std::invalid_argument("mgf_bound_check: beta must exceed 3");
  if (d < 0 || d > 2) throw std::invalid_argument("mgf_bound_check: d must be 0, 1 or 2");
  const double scale = std::pow(pi.eta, beta);
  const double rate = std::sqrt(pi.eta) / static_cast<double>(pi.q);
  double sum = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi.pi[i] == 0.0) continue;
    const auto k = static_cast<double>(std::llabs(pi.index(i)));
    sum += pi.pi[i] * std::pow(k, d) * std::exp(k * rate);
  }
  const double value = scale * sum;
  const auto q = static_cast<double>(pi.q);
  return {value, value <= q * q};
}

std::int64_t tail_threshold(double eta, std::int64_t q, int k0) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("tail_threshold: eta must lie in (0, 1)");
  }
  return static_cast<std::int64_t>(
      std::ceil(static_cast<double>(q) * k0 * std::log(1.0 / eta) / std::sqrt(eta)));
}

BoundCheck tail_bound_check(const StationaryDistribution& pi, int k0, double beta, int d) {
  if (!(static_cast<double>(k0) > beta)) {
    throw std::invalid_argument("tail_bound_check: K0 must exceed beta");
  }
  if (d < 0 || d > 2) throw std::invalid_argument("tail_bound_check: d must be 0, 1 or 2");
  const std::int64_t threshold = tail_threshold(pi.eta, pi.q, k0);
  if (threshold > pi.truncation) {
    throw NumericError("tail_bound_check: threshold N = " + std::to_string(threshold) +
                       " exceeds the truncation " + std::to_string(pi.truncation) +
                       "; increase K_trunc");
  }
  double tail = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const std::int64_t k = std::llabs(pi.index(i));
    if (k >= threshold) tail += pi.pi[i] * std::pow(static_cast<double>(k), d);
  }
  const auto q = static_cast<double>(pi.q);
  return {tail, tail <= q * q * std::pow(pi.eta, k0 - beta)};
}

Moments moment_check(const StationaryDistribution& pi) {
  Moments m{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double x = pi.standardized(pi.index(i));
    m.abs_first += pi.pi[i] * std::fabs(x);
    m.second += pi.pi[i] * x * x;
    m.signed_first += pi.pi[i] * x;
  }
  return m;
}

double normality_check(const StationaryDistribution& pi, double f_at_quantile,
                       const RationalQuantile& quantile) {
  if (!(f_at_quantile > 0.0)) {
    throw std::invalid_argument("normality_check: density must be positive");
  }
  const double tau = quantile.tau();
  const double sd = std::sqrt(tau * (1.0 - tau) / (2.0 * f_at_quantile));
  double below = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double target = special::normal_cdf(pi.standardized(pi.index(i)) / sd);
    const double at = below + pi.pi[i];
    worst = std::max({worst, std::fabs(below - target), std::fabs(at - target)});
    below = at;
  }
  return worst;
}

double ks_distance(const StationaryDistribution& a, const StationaryDistribution& b) {
  if (a.truncation != b.truncation || a.size() != b.size()) {
    throw std::invalid_argument("ks_distance: windows differ");
  }
  double ca = 0.0;
  double cb = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a.pi[i];
    cb += b.pi[i];
    worst = std::max(worst, std::fabs(ca - cb));
  }
  return worst;
}

std::vector<double> class_masses(const StationaryDistribution& pi) {
  std::vector<double> mass(static_cast<std::size_t>(pi.q), 0.0);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    mass[static_cast<std::size_t>(floor_mod(pi.index(i), pi.q))] += pi.pi[i];
  }
  return mass;
}

double empirical_tv(const LatticeChain& chain, const StationaryDistribution& pi,
                    std::span<const double> thetas) {
  if (thetas.empty()) throw std::invalid_argument("empirical_tv: no values");
  std::vector<double> counts(pi.size(), 0.0);
  double outside = 0.0;
  for (double theta : thetas) {
    const std::int64_t k = snap(chain, theta);
    if (k < -pi.truncation || k > pi.truncation) {
      outside += 1.0;
    } else {
      counts[static_cast<std::size_t>(k + pi.truncation)] += 1.0;
    }
  }
  const auto total = static_cast<double>(thetas.size());
  double sum = outside / total;
  for (std::size_t i = 0; i < pi.size(); ++i) sum += std::fabs(counts[i] / total - pi.pi[i]);
  return 0.5 * sum;
}

double cyclic_class_check(const LatticeChain& chain, const StationaryDistribution& pi,
                          const Trajectory& trajectory, std::uint64_t burn_in,
                          std::size_t coordinate) {
  if (coordinate >= trajectory.dimension) {
    throw std::invalid_argument("cyclic_class_check: coordinate out of range");
  }
  const std::int64_t q = pi.q;
  const auto classes = static_cast<std::size_t>(q);
  std::vector<std::vector<double>> counts(classes, std::vector<double>(pi.size(), 0.0));
  std::vector<double> outside(classes, 0.0);
  std::vector<double> totals(classes, 0.0);
  std::vector<std::int64_t> residue(classes, -1);
  for (std::size_t row = 0; row < trajectory.size(); ++row) {
    const std::uint64_t step = trajectory.steps[row];
    if (step < burn_in) continue;
    const auto j = static_cast<std::size_t>(step % static_cast<std::uint64_t>(q));
    const std::int64_t k = snap(chain, trajectory.row(row)[coordinate]);
    const std::int64_t r = floor_mod(k, q);
    if (residue[j] < 0) {
      residue[j] = r;
    } else if (residue[j] != r) {
      throw std::invalid_argument(
          "cyclic_class_check: step class visits two lattice classes; the trajectory "
          "must come from a single fixed-start chain");
    }
    totals[j] += 1.0;
    if (k < -pi.truncation || k > pi.truncation) {
      outside[j] += 1.0;
    } else {
      counts[j][static_cast<std::size_t>(k + pi.truncation)] += 1.0;
    }
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < classes; ++j) {
    if (totals[j] == 0.0) continue;
    double sum = outside[j] / totals[j];
    for (std::size_t i = 0; i < pi.size(); ++i) {
      const bool in_class = floor_mod(pi.index(i), q) == residue[j];
      const double target = in_class ? static_cast<double>(q) * pi.pi[i] : 0.0;
      sum += std::fabs(counts[j][i] / totals[j] - target);
    }
    worst = std::max(worst, 0.5 * sum);
  }
  return worst;
}

double pooled_tv_check(const LatticeChain& chain, const StationaryDistribution& pi,
                       const Trajectory& trajectory, std::uint64_t burn_in,
                       std::size_t coordinate) {
  if (coordinate >= trajectory.dimension) {
    throw std::invalid_argument("pooled_tv_check: coordinate out of range");
  }
  std::vector<double> values;
  values.reserve(trajectory.size());
  for (std::size_t row = 0; row < trajectory.size(); ++row) {
    if (trajectory.steps[row] >= burn_in) values.push_back(trajectory.row(row)[coordinate]);
  }
  return empirical_tv(chain, pi, values);
}

void write_stationary_csv(std::ostream& out, const StationaryDistribution& pi) {
  out << "k,theta,pi\n";
  char line[128];
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const std::int64_t k = pi.index(i);
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g\n", static_cast<long long>(k),
                  pi.theta(k), pi.pi[i]);
    out << line;
  }
}

}  // namespace qsgd

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qsgd {

enum class KernelKind { rectangle, epanechnikov };

/// Bounded-support smoothing kernel. Construction integrates the kernel
/// numerically and rejects it unless it has unit mass (to 1e-6).
class Kernel {
 public:
  explicit Kernel(KernelKind kind);

  static Kernel parse(std::string_view name);

  double operator()(double v) const noexcept {
    const double a = v < 0.0 ? -v : v;
    switch (kind_) {
      case KernelKind::rectangle:
        return a < 0.5 ? 1.0 : 0.0;
      case KernelKind::epanechnikov:
        return a <= 1.0 ? 0.75 * (1.0 - v * v) : 0.0;
    }
    return 0.0;
  }

  KernelKind kind() const noexcept { return kind_; }
  std::string name() const;
  /// M such that K(v) = 0 for |v| > M.
  double support_radius() const noexcept { return support_radius_; }
  /// Integral of K (numeric).
  double mass() const noexcept { return mass_; }
  /// Integral of K^2 (numeric).
  double kappa() const noexcept { return kappa_; }
  /// sup|K| + integral of u^2 |K(u)| (numeric).
  double moment_bound() const noexcept { return moment_bound_; }

 private:
  KernelKind kind_;
  double support_radius_;
  double mass_ = 0.0;
  double kappa_ = 0.0;
  double moment_bound_ = 0.0;
};

double kernel_eval(const Kernel& kernel, double v);

/// b_k = k^(-1/5), k >= 1.
double bandwidth(std::uint64_t k);

/// Recursive kernel density estimate
///   f_n(x) = (1/B_n) sum_{k<=n} K((x_k - X_k) / b_k),  B_n = sum_{k<=n} b_k,
/// held as two running sums. Each update may use its own evaluation point
/// x_k, which is how the plug-in mode tracks the moving SGD iterate.
class KdeState {
 public:
  explicit KdeState(Kernel kernel) : kernel_(kernel) {}

  void update(double x_eval, double sample);
  double estimate() const;

  double numerator() const noexcept { return numerator_; }
  double bandwidth_sum() const noexcept { return bandwidth_sum_; }
  std::uint64_t count() const noexcept { return n_; }
  const Kernel& kernel() const noexcept { return kernel_; }

 private:
  Kernel kernel_;
  double numerator_ = 0.0;
  double bandwidth_sum_ = 0.0;
  std::uint64_t n_ = 0;
};

KdeState kde_update(KdeState state, double x_eval, double sample);
double kde_estimate(const KdeState& state);

}  // namespace qsgd

#pragma once

namespace qsgd::special {

/// Standard normal CDF via erfc; accurate in both tails.
double normal_cdf(double x) noexcept;

/// Standard normal inverse CDF. Acklam's rational approximation followed by
/// one Halley correction against normal_cdf, good to ~1e-15 absolute on the
/// central range. Requires 0 < p < 1 (throws std::invalid_argument otherwise).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b), a, b > 0, 0 <= x <= 1. Evaluated by
/// the modified Lentz continued fraction on whichever of I_x(a,b) and
/// 1 - I_{1-x}(b,a) converges faster.
double incomplete_beta(double a, double b, double x);

/// log B(a, b).
double log_beta(double a, double b) noexcept;

}  // namespace qsgd::special

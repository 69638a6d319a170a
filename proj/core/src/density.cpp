#include "qsgd/density.hpp"

#include <cmath>
#include <stdexcept>

#include "qsgd/error.hpp"

namespace qsgd {
namespace {

// Midpoint rule never samples the support endpoints, where the rectangle
// kernel jumps.
template <typename F>
double integrate_midpoint(F&& f, double lo, double hi, int panels) {
  const double h = (hi - lo) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) sum += f(lo + (i + 0.5) * h);
  return sum * h;
}

}  // namespace

Kernel::Kernel(KernelKind kind)
    : kind_(kind), support_radius_(kind == KernelKind::rectangle ? 0.5 : 1.0) {
  constexpr int kPanels = 200000;
  const double m = support_radius_;
  const Kernel& self = *this;
  mass_ = integrate_midpoint([&](double u) { return self(u); }, -m, m, kPanels);
  kappa_ = integrate_midpoint([&](double u) { return self(u) * self(u); }, -m, m, kPanels);
  double sup = 0.0;
  for (int i = 0; i <= 2000; ++i) sup = std::fmax(sup, std::fabs(self(-m + i * m / 1000.0)));
  moment_bound_ =
      sup + integrate_midpoint([&](double u) { return u * u * std::fabs(self(u)); }, -m, m,
                               kPanels);
  if (std::fabs(mass_ - 1.0) > 1e-6) {
    throw std::invalid_argument("kernel " + name() + " does not integrate to one");
  }
}

Kernel Kernel::parse(std::string_view name) {
  if (name == "rectangle") return Kernel(KernelKind::rectangle);
  if (name == "epanechnikov") return Kernel(KernelKind::epanechnikov);
  throw std::invalid_argument("unknown kernel '" + std::string(name) +
                              "' (expected rectangle or epanechnikov)");
}

std::string Kernel::name() const {
  return kind_ == KernelKind::rectangle ? "rectangle" : "epanechnikov";
}

double kernel_eval(const Kernel& kernel, double v) { return kernel(v); }

double bandwidth(std::uint64_t k) {
  if (k == 0) throw std::invalid_argument("bandwidth index starts at 1");
  return std::pow(static_cast<double>(k), -0.2);
}

void KdeState::update(double x_eval, double sample) {
  if (!std::isfinite(x_eval) || !std::isfinite(sample)) {
    throw std::invalid_argument("kde_update: inputs must be finite");
  }
  ++n_;
  const double b = bandwidth(n_);
  numerator_ += kernel_((x_eval - sample) / b);
  bandwidth_sum_ += b;
}

double KdeState::estimate() const {
  if (n_ == 0) throw NumericError("kde_estimate: no samples observed");
  return numerator_ / bandwidth_sum_;
}

KdeState kde_update(KdeState state, double x_eval, double sample) {
  state.update(x_eval, sample);
  return state;
}

double kde_estimate(const KdeState& state) { return state.estimate(); }

}  // namespace qsgd

#include "qsgd/distributions.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qsgd/special_functions.hpp"

namespace qsgd {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

double beta_quantile(const Beta& d, double p) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (special::incomplete_beta(d.alpha, d.beta, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> values;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string token(text.substr(0, comma));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("distribution: bad number '" + token + "'");
    }
    if (used != token.size()) {
      throw std::invalid_argument("distribution: bad number '" + token + "'");
    }
    values.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return values;
}

}  // namespace

Distribution Distribution::uniform(double lower, double upper) {
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper,
          "uniform: need finite lower < upper");
  return Distribution(Uniform{lower, upper});
}

Distribution Distribution::normal(double mean, double stddev) {
  require(std::isfinite(mean) && std::isfinite(stddev) && stddev > 0.0,
          "normal: need finite mean and stddev > 0");
  return Distribution(Normal{mean, stddev});
}

Distribution Distribution::cauchy(double location, double scale) {
  require(std::isfinite(location) && std::isfinite(scale) && scale > 0.0,
          "cauchy: need finite location and scale > 0");
  return Distribution(Cauchy{location, scale});
}

Distribution Distribution::beta(double alpha, double beta) {
  require(std::isfinite(alpha) && std::isfinite(beta) && alpha > 0.0 && beta > 0.0,
          "beta: need shape parameters > 0");
  return Distribution(Beta{alpha, beta});
}

Distribution Distribution::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("distribution: expected <name>:<p1>,<p2>, got '" +
                                std::string(text) + "'");
  }
  const std::string_view name = text.substr(0, colon);
  const auto values = parse_numbers(text.substr(colon + 1));
  if (values.size() != 2) {
    throw std::invalid_argument("distribution: expected two parameters in '" +
                                std::string(text) + "'");
  }
  if (name == "uniform") return uniform(values[0], values[1]);
  if (name == "normal") return normal(values[0], values[1]);
  if (name == "cauchy") return cauchy(values[0], values[1]);
  if (name == "beta") return beta(values[0], values[1]);
  throw std::invalid_argument("distribution: unknown family '" + std::string(name) + "'");
}

std::string Distribution::to_string() const {
  std::ostringstream out;
  out.precision(17);
  std::visit(Overloaded{
                 [&](const Uniform& d) { out << "uniform:" << d.lower << ',' << d.upper; },
                 [&](const Normal& d) { out << "normal:" << d.mean << ',' << d.stddev; },
                 [&](const Cauchy& d) { out << "cauchy:" << d.location << ',' << d.scale; },
                 [&](const Beta& d) { out << "beta:" << d.alpha << ',' << d.beta; },
             },
             params_);
  return out.str();
}

double Distribution::cdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const Uniform& d) {
            if (x <= d.lower) return 0.0;
            if (x >= d.upper) return 1.0;
            return (x - d.lower) / (d.upper - d.lower);
          },
          [x](const Normal& d) { return special::normal_cdf((x - d.mean) / d.stddev); },
          [x](const Cauchy& d) {
            return 0.5 + std::atan((x - d.location) / d.scale) / std::numbers::pi;
          },
          [x](const Beta& d) {
            if (x <= 0.0) return 0.0;
            if (x >= 1.0) return 1.0;
            return special::incomplete_beta(d.alpha, d.beta, x);
          },
      },
      params_);
}

double Distribution::pdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const Uniform& d) {
            return (x < d.lower || x > d.upper) ? 0.0 : 1.0 / (d.upper - d.lower);
          },
          [x](const Normal& d) {
            const double z = (x - d.mean) / d.stddev;
            return std::exp(-0.5 * z * z) /
                   (d.stddev * std::sqrt(2.0 * std::numbers::pi));
          },
          [x](const Cauchy& d) {
            const double z = (x - d.location) / d.scale;
            return 1.0 / (std::numbers::pi * d.scale * (1.0 + z * z));
          },
          [x](const Beta& d) {
            if (x < 0.0 || x > 1.0) return 0.0;
            if (x == 0.0) return d.alpha < 1.0 ? HUGE_VAL : (d.alpha == 1.0 ? d.beta : 0.0);
            if (x == 1.0) return d.beta < 1.0 ? HUGE_VAL : (d.beta == 1.0 ? d.alpha : 0.0);
            return std::exp((d.alpha - 1.0) * std::log(x) + (d.beta - 1.0) * std::log1p(-x) -
                            special::log_beta(d.alpha, d.beta));
          },
      },
      params_);
}

double Distribution::quantile(double p) const {
  require(p > 0.0 && p < 1.0, "quantile: probability must lie in (0, 1)");
  return std::visit(
      Overloaded{
          [p](const Uniform& d) { return d.lower + p * (d.upper - d.lower); },
          [p](const Normal& d) { return d.mean + d.stddev * special::normal_quantile(p); },
          [p](const Cauchy& d) {
            return d.location + d.scale * std::tan(std::numbers::pi * (p - 0.5));
          },
          [p](const Beta& d) { return beta_quantile(d, p); },
      },
      params_);
}

double sample_standard_normal(Philox4x32& rng) {
  return special::normal_quantile(rng.uniform_open());
}

double sample_gamma(double shape, Philox4x32& rng) {
  if (shape < 1.0) {
    const double boosted = sample_gamma(shape + 1.0, rng);
    return boosted * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = sample_standard_normal(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Distribution::sample(Philox4x32& rng) const {
  return std::visit(
      Overloaded{
          [&rng](const Uniform& d) { return d.lower + (d.upper - d.lower) * rng.uniform(); },
          [&rng](const Normal& d) { return d.mean + d.stddev * sample_standard_normal(rng); },
          [&rng](const Cauchy& d) {
            return d.location + d.scale * std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
          },
          [&rng](const Beta& d) {
            const double x = sample_gamma(d.alpha, rng);
            const double y = sample_gamma(d.beta, rng);
            return x / (x + y);
          },
      },
      params_);
}

}  // namespace qsgd

#include "qsgd_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsgd/distributions.hpp"
#include "qsgd/error.hpp"
#include "qsgd/experiments.hpp"
#include "qsgd/inference.hpp"
#include "qsgd/markov_oracle.hpp"

namespace qsgd::cli {
namespace {

constexpr const char* kOutputDirEnv = "QSGD_OUTPUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string dist = "beta:2,3";
  std::string tau = "3/4";
  std::vector<double> eta{0.01};
  std::vector<std::uint64_t> n{100000};
  std::uint32_t reps = 500;
  double alpha = 0.05;
  std::uint64_t seed = 42;
  std::uint64_t burn_in = 0;
  double theta0 = 0.0;
  std::string kernel = "epanechnikov";
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
  std::size_t points = 50;
  std::size_t bins = 40;
};

struct EstimateOptions {
  std::string tau = "1/2";
  double eta = 0.01;
  double alpha = 0.05;
  double theta0 = 0.0;
  std::string kernel = "epanechnikov";
  std::string input;
};

struct OracleOptions {
  std::string dist = "uniform:0,1";
  std::string tau = "1/2";
  double eta = 0.01;
  double theta0 = 0.0;
  std::optional<std::int64_t> ktrunc;
  std::string checks = "all";
  double beta = 3.5;
  int k0 = 5;
  std::string out;
};

std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
      p = std::filesystem::path(dir) / p;
    }
  }
  return p;
}

// Writes through `emit` either to `out` or to the resolved file.
template <typename Emit>
void write_output(const std::string& path, std::ostream& out, Emit&& emit) {
  if (path.empty()) {
    emit(out);
    return;
  }
  const auto target = resolve_output(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  std::ofstream file(target);
  if (!file) throw UsageError("cannot open output file " + target.string());
  emit(file);
  if (!file) throw UsageError("failed writing " + target.string());
}

ExperimentConfig to_config(const CommonOptions& o) {
  ExperimentConfig c;
  c.distribution = Distribution::parse(o.dist);
  c.quantile = RationalQuantile::parse(o.tau);
  c.eta_grid = o.eta;
  c.n_grid = o.n;
  c.replications = o.reps;
  c.alpha = o.alpha;
  c.seed = o.seed;
  c.burn_in = o.burn_in;
  c.theta0 = o.theta0;
  c.kernel = Kernel::parse(o.kernel).kind();
  c.threads = o.threads;
  c.curve_points = o.points;
  c.histogram_bins = o.bins;
  c.output_path = o.out;
  if (o.format == "csv") {
    c.format = OutputFormat::csv;
  } else if (o.format == "json") {
    c.format = OutputFormat::json;
  } else {
    throw UsageError("--format must be csv or json");
  }
  c.validate();
  return c;
}

void add_experiment_flags(CLI::App& sub, CommonOptions& o, bool with_alpha) {
  sub.add_option("--dist", o.dist, "sampling law: uniform:a,b normal:mu,sd cauchy:x0,g beta:a,b")
      ->capture_default_str();
  sub.add_option("--tau", o.tau, "quantile level p/q")->capture_default_str();
  sub.add_option("--eta", o.eta, "learning rates (comma separated)")->delimiter(',');
  sub.add_option("--n", o.n, "step counts (comma separated)")->delimiter(',');
  sub.add_option("--reps", o.reps, "replications")->capture_default_str();
  if (with_alpha) sub.add_option("--alpha", o.alpha, "1 - confidence level")->capture_default_str();
  sub.add_option("--seed", o.seed, "base seed")->capture_default_str();
  sub.add_option("--burn-in", o.burn_in, "SGD steps discarded before step 1")
      ->capture_default_str();
  sub.add_option("--theta0", o.theta0, "initial iterate")->capture_default_str();
  if (with_alpha) sub.add_option("--kernel", o.kernel, "rectangle or epanechnikov")->capture_default_str();
  sub.add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
  sub.add_option("--out", o.out, "output file (relative paths go under $QSGD_OUTPUT_DIR)");
  sub.add_option("--format", o.format, "csv or json")->capture_default_str();
}

std::vector<double> read_numbers(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string token = line.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(v)) {
      throw UsageError("line " + std::to_string(line_no) + ": not a finite number: '" + token +
                       "'");
    }
    values.push_back(v);
  }
  return values;
}

double rounded(double v) { return std::stod(format_g6(v)); }

int run_estimate(const EstimateOptions& o, std::istream& in, std::ostream& out) {
  SgdConfig config;
  config.quantile = RationalQuantile::parse(o.tau);
  config.eta = o.eta;
  config.theta0 = {o.theta0};
  OnlineQuantileEstimator estimator(config, Kernel::parse(o.kernel));

  std::vector<double> data;
  if (o.input.empty() || o.input == "-") {
    data = read_numbers(in);
  } else {
    std::ifstream file(o.input);
    if (!file) throw UsageError("cannot open input file " + o.input);
    data = read_numbers(file);
  }
  if (data.empty()) throw NumericError("no observations on input");
  for (double x : data) estimator.observe(x);
  const auto ci = estimator.interval(0, o.alpha);
  const nlohmann::json doc = {{"theta", rounded(ci.center)},
                              {"f_hat", rounded(ci.f_hat)},
                              {"ci_lo", rounded(ci.lower())},
                              {"ci_hi", rounded(ci.upper())},
                              {"n", estimator.count()}};
  out << doc.dump() << '\n';
  return kExitOk;
}

std::set<std::string> parse_checks(const std::string& text) {
  static const std::set<std::string> known{"balance", "drift", "mgf", "tail", "moments",
                                           "normality"};
  std::set<std::string> chosen;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "all") {
      chosen.insert(known.begin(), known.end());
    } else if (item == "none" || item.empty()) {
      continue;
    } else if (known.count(item) != 0) {
      chosen.insert(item);
    } else {
      throw UsageError("unknown check '" + item + "'");
    }
  }
  return chosen;
}

const char* verdict(bool ok) { return ok ? "pass" : "fail"; }

int run_oracle(const OracleOptions& o, std::ostream& out) {
  const auto dist = Distribution::parse(o.dist);
  const auto quantile = RationalQuantile::parse(o.tau);
  const auto checks = parse_checks(o.checks);
  const double theta_star = dist.quantile(quantile.tau());
  const double f = dist.pdf(theta_star);

  std::int64_t truncation = o.ktrunc.value_or(default_truncation(quantile, o.eta, f));
  std::vector<std::string> notes;
  if (checks.count("tail") != 0 && o.eta < 1.0) {
    const std::int64_t needed = tail_threshold(o.eta, quantile.q(), o.k0) + quantile.q();
    if (needed > truncation) {
      notes.push_back("truncation raised from " + std::to_string(truncation) + " to " +
                      std::to_string(needed) + " for the tail check");
      truncation = needed;
    }
  }
  const auto chain = build_chain(quantile, o.eta, dist, truncation, o.theta0);
  const auto pi = stationary_solve(chain);

  write_output(o.out, out, [&](std::ostream& s) { write_stationary_csv(s, pi); });

  out << "# dist=" << dist.to_string() << " tau=" << quantile.to_string()
      << " eta=" << format_g6(o.eta) << " K=" << truncation << " x0=" << format_g6(chain.x0())
      << " iterations=" << pi.iterations
      << " truncated_mass_bound=" << format_g6(pi.truncated_mass_bound) << '\n';
  for (const auto& note : notes) out << "# note: " << note << '\n';

  bool all_hold = true;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    all_hold = all_hold && ok;
    out << "# " << name << ": " << verdict(ok) << ' ' << detail << '\n';
  };
  if (checks.count("balance") != 0) {
    const double r = balance_residual(pi, chain);
    line("balance", r <= 1e-10, "residual=" + format_g6(r));
  }
  if (checks.count("drift") != 0) {
    try {
      const auto d = foster_drift_check(chain, 0.25, 16 * truncation);
      line("drift", true,
           "window=" + std::to_string(d.window) + " margin=" + format_g6(d.min_margin));
    } catch (const NumericError& e) {
      line("drift", false, e.what());
    }
  }
  if (checks.count("mgf") != 0) {
    for (int d = 0; d <= 2; ++d) {
      const auto b = mgf_bound_check(pi, o.beta, d);
      line("mgf(beta=" + format_g6(o.beta) + ",d=" + std::to_string(d) + ")", b.holds,
           "S=" + format_g6(b.value) + " limit=" + std::to_string(quantile.q() * quantile.q()));
    }
  }
  if (checks.count("tail") != 0) {
    for (int d = 0; d <= 2; ++d) {
      const auto b = tail_bound_check(pi, o.k0, o.beta, d);
      const double limit = static_cast<double>(quantile.q() * quantile.q()) *
                           std::pow(o.eta, o.k0 - o.beta);
      line("tail(K0=" + std::to_string(o.k0) + ",d=" + std::to_string(d) + ")", b.holds,
           "sum=" + format_g6(b.value) + " limit=" + format_g6(limit));
    }
  }
  if (checks.count("moments") != 0) {
    const auto m = moment_check(pi);
    const double log_inv = std::log(1.0 / o.eta);
    const bool ok = m.abs_first <= 10.0 * log_inv && m.second <= 10.0 * log_inv * log_inv;
    line("moments", ok,
         "m1=" + format_g6(m.abs_first) + " m2=" + format_g6(m.second) +
             " limit_variance=" + format_g6(asymptotic_variance(quantile, f)));
  }
  if (checks.count("normality") != 0) {
    const double ks = normality_check(pi, f, quantile);
    line("normality-KS", ks < 0.05, "ks=" + format_g6(ks));
  }
  out << "# verdict: " << (all_hold ? "all checks hold" : "some checks fail") << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Streaming quantile estimation by constant learning-rate SGD"};
  app.name("qsgd");
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "estimate a quantile from numbers on stdin");
  estimate->add_option("--tau", est.tau, "quantile level p/q")->capture_default_str();
  estimate->add_option("--eta", est.eta, "learning rate")->capture_default_str();
  estimate->add_option("--alpha", est.alpha, "1 - confidence level")->capture_default_str();
  estimate->add_option("--theta0", est.theta0, "initial iterate")->capture_default_str();
  estimate->add_option("--kernel", est.kernel, "rectangle or epanechnikov")->capture_default_str();
  estimate->add_option("--input", est.input, "input file, one number per line (default stdin)");

  OracleOptions orc;
  auto* oracle = app.add_subcommand("oracle", "exact stationary law and bound checks");
  oracle->add_option("--dist", orc.dist, "sampling law")->capture_default_str();
  oracle->add_option("--tau", orc.tau, "quantile level p/q")->capture_default_str();
  oracle->add_option("--eta", orc.eta, "learning rate")->capture_default_str();
  oracle->add_option("--theta0", orc.theta0, "lattice origin")->capture_default_str();
  oracle->add_option("--ktrunc", orc.ktrunc, "truncation K (states -K..K)");
  oracle->add_option("--checks", orc.checks,
                     "all, none, or a list of balance,drift,mgf,tail,moments,normality")
      ->capture_default_str();
  oracle->add_option("--beta", orc.beta, "exponent for the mgf and tail checks")
      ->capture_default_str();
  oracle->add_option("--k0", orc.k0, "K0 for the tail check")->capture_default_str();
  oracle->add_option("--out", orc.out, "write the CSV here instead of stdout");

  CommonOptions cov;
  auto* coverage = app.add_subcommand("coverage", "Monte Carlo interval coverage");
  add_experiment_flags(*coverage, cov, true);

  CommonOptions mse;
  mse.n = {100000};
  auto* mse_cmd = app.add_subcommand("mse", "mean squared error along the run");
  add_experiment_flags(*mse_cmd, mse, false);
  mse_cmd->add_option("--points", mse.points, "checkpoints after n = 0")->capture_default_str();

  CommonOptions nor;
  auto* normality = app.add_subcommand("normality", "standardized endpoint law vs the limit");
  add_experiment_flags(*normality, nor, false);
  normality->add_option("--bins", nor.bins, "histogram bins")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (estimate->parsed()) return run_estimate(est, in, out);
    if (oracle->parsed()) return run_oracle(orc, out);
    if (coverage->parsed()) {
      const auto config = to_config(cov);
      const auto report = coverage_experiment(config);
      write_output(cov.out, out, [&](std::ostream& s) { write_coverage(s, report, config); });
    } else if (mse_cmd->parsed()) {
      const auto config = to_config(mse);
      const auto curve = mse_curve(config);
      write_output(mse.out, out, [&](std::ostream& s) { write_mse(s, curve, config); });
    } else if (normality->parsed()) {
      const auto config = to_config(nor);
      const auto results = normality_experiment(config);
      write_output(nor.out, out, [&](std::ostream& s) { write_normality(s, results, config); });
    }
    return kExitOk;
  } catch (const NumericError& e) {
    err << "qsgd: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const UsageError& e) {
    err << "qsgd: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "qsgd: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "qsgd: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace qsgd::cli

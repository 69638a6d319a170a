#include <benchmark/benchmark.h>

#include <vector>

#include "qsgd/density.hpp"
#include "qsgd/distributions.hpp"
#include "qsgd/inference.hpp"
#include "qsgd/markov_oracle.hpp"
#include "qsgd/random.hpp"
#include "qsgd/sgd.hpp"

namespace {

void BM_PhiloxUniform(benchmark::State& state) {
  qsgd::Philox4x32 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(rng.uniform());
}
BENCHMARK(BM_PhiloxUniform);

void BM_Sample(benchmark::State& state, qsgd::Distribution dist) {
  qsgd::Philox4x32 rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(dist.sample(rng));
}
BENCHMARK_CAPTURE(BM_Sample, beta_2_3, qsgd::Distribution::beta(2, 3));
BENCHMARK_CAPTURE(BM_Sample, cauchy_0_2, qsgd::Distribution::cauchy(0, 2));
BENCHMARK_CAPTURE(BM_Sample, normal_0_1, qsgd::Distribution::normal(0, 1));

void BM_SgdStep(benchmark::State& state) {
  qsgd::SgdConfig config;
  config.quantile = {3, 4};
  config.theta0.assign(static_cast<std::size_t>(state.range(0)), 0.0);
  qsgd::SgdState sgd(config);
  qsgd::Philox4x32 rng(3);
  std::vector<double> sample(config.theta0.size());
  for (auto& x : sample) x = rng.uniform();
  for (auto _ : state) {
    sample[0] = rng.uniform();
    sgd.step(sample);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SgdStep)->Arg(1)->Arg(16)->Arg(256);

void BM_KdeUpdate(benchmark::State& state) {
  qsgd::KdeState kde(qsgd::Kernel(qsgd::KernelKind::epanechnikov));
  qsgd::Philox4x32 rng(4);
  for (auto _ : state) kde.update(0.5, rng.uniform());
  benchmark::DoNotOptimize(kde.estimate());
}
BENCHMARK(BM_KdeUpdate);

void BM_OnlineEstimatorBeta(benchmark::State& state) {
  qsgd::SgdConfig config;
  config.quantile = {3, 4};
  qsgd::OnlineQuantileEstimator est(config, qsgd::Kernel(qsgd::KernelKind::epanechnikov));
  const auto beta = qsgd::Distribution::beta(2, 3);
  qsgd::Philox4x32 rng(5);
  for (auto _ : state) est.observe(beta.sample(rng));
}
BENCHMARK(BM_OnlineEstimatorBeta);

void BM_StationarySolve(benchmark::State& state) {
  const double eta = 1.0 / static_cast<double>(state.range(0));
  const auto chain =
      qsgd::build_chain({3, 4}, eta, qsgd::Distribution::beta(2, 3));
  for (auto _ : state) benchmark::DoNotOptimize(qsgd::stationary_solve(chain).pi.data());
  state.counters["states"] = static_cast<double>(chain.size());
}
BENCHMARK(BM_StationarySolve)->Arg(25)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ClosedFormMedian(benchmark::State& state) {
  const auto chain = qsgd::build_chain({1, 2}, 0.001, qsgd::Distribution::normal(0, 1));
  for (auto _ : state) benchmark::DoNotOptimize(qsgd::closed_form_median(chain).pi.data());
}
BENCHMARK(BM_ClosedFormMedian)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

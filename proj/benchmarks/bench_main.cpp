#include <epiinfer/bayes.hpp>
#include <epiinfer/contrast.hpp>
#include <epiinfer/em.hpp>
#include <epiinfer/models.hpp>
#include <epiinfer/rng.hpp>
#include <epiinfer/simulate.hpp>
#include <epiinfer/sobol.hpp>

#include <benchmark/benchmark.h>

using namespace epi;

namespace {

const ModelPtr kSir = build_model("sir");
const Vec kTheta = (Vec(2) << 0.5, 1.0 / 3.0).finished();

Vec sir_start(double N) { return (Vec(2) << std::round(0.99 * N), std::round(0.01 * N)).finished(); }

void BM_Gillespie(benchmark::State& st) {
  const double N = static_cast<double>(st.range(0));
  std::uint64_t rep = 0;
  std::size_t events = 0;
  for (auto _ : st) {
    const JumpPath p = gillespie(kSir, kTheta, N, sir_start(N), 40.0, {1, rep++});
    events += p.n_events();
  }
  st.counters["events/s"] = benchmark::Counter(double(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Gillespie)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_TauLeap(benchmark::State& st) {
  std::uint64_t rep = 0;
  for (auto _ : st) benchmark::DoNotOptimize(tau_leap(kSir, kTheta, 1e5, sir_start(1e5), 40.0, 0.05, {1, rep++}));
}
BENCHMARK(BM_TauLeap)->Unit(benchmark::kMillisecond);

void BM_ContrastHf(benchmark::State& st) {
  const double N = 10000;
  const SampledSeries s = sample_path(gillespie(kSir, kTheta, N, sir_start(N), 40.0, {3, 0}), 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(contrast_hf(*kSir, kTheta, s, 1.0 / std::sqrt(N)));
}
BENCHMARK(BM_ContrastHf)->Unit(benchmark::kMillisecond);

void BM_EstimateLf(benchmark::State& st) {
  const double N = 10000;
  const SampledSeries s = sample_path(gillespie(kSir, kTheta, N, sir_start(N), 40.0, {4, 0}), 4.0);
  for (auto _ : st) benchmark::DoNotOptimize(estimate_lf(*kSir, s, 1.0 / std::sqrt(N), kTheta));
}
BENCHMARK(BM_EstimateLf)->Unit(benchmark::kMillisecond);

void BM_EmEstep(benchmark::State& st) {
  const int S = static_cast<int>(st.range(0));
  Mat Q = Mat::Constant(S, S, 0.5);
  for (int i = 0; i < S; ++i) Q(i, i) = -0.5 * (S - 1);
  const DiscreteChainObs obs = sample_ctmc(simulate_ctmc(Q, 0, 2000 * 0.1, {5, 0}), 0.1, 2000);
  for (auto _ : st) benchmark::DoNotOptimize(e_step(Q, obs));
}
BENCHMARK(BM_EmEstep)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AbcPathL1(benchmark::State& st) {
  Rng rng(6);
  const auto tau = removal_times(simulate_sir_events(0.12, 1.0, 9, 1, 1e9, rng));
  const PriorSampler prior = [](Rng& r) { return (Vec(2) << r.gamma(0.1, 1.0), r.gamma(0.1, 0.1)).finished(); };
  const DistanceSimulator dist = [&](const Vec& th, Rng& r) {
    return summary_path_l1(tau, removal_times(simulate_sir_events(th[0], th[1], 9, 1, 1e9, r)), 10.0);
  };
  for (auto _ : st) benchmark::DoNotOptimize(abc_rejection_distance(prior, dist, 10000, 0.01, AbcKernel::Epanechnikov, {7, 0}));
  st.SetItemsProcessed(st.iterations() * 10000);
}
BENCHMARK(BM_AbcPathL1)->Unit(benchmark::kMillisecond);

std::vector<double> uniforms(std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<double> x(n);
  for (double& v : x) v = r.uniform(0.0, 1.0);
  return x;
}

void BM_SobolNw(benchmark::State& st) {
  const auto x = uniforms(st.range(0), 8), e = uniforms(st.range(0), 9);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + 0.5 * e[i];
  for (auto _ : st) benchmark::DoNotOptimize(sobol_nw(x, y));
}
BENCHMARK(BM_SobolNw)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SobolWavelet(benchmark::State& st) {
  const auto x = uniforms(st.range(0), 8), e = uniforms(st.range(0), 9);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + 0.5 * e[i];
  for (auto _ : st) benchmark::DoNotOptimize(sobol_wavelet(x, y));
}
BENCHMARK(BM_SobolWavelet)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

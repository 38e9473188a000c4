#include <benchmark/benchmark.h>

#include <random>

#include "erkm/experiments.hpp"

using namespace erkm;

namespace {

SpectralField random_coeffs(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  SpectralField f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = z(rng) / static_cast<double>((k + 1) * (k + 1));
  return f;
}

void BM_ToPhysical(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SineBasisGrid grid(n);
  const SpectralField a = random_coeffs(n);
  for (auto _ : state) benchmark::DoNotOptimize(grid.to_physical(a));
}
BENCHMARK(BM_ToPhysical)->RangeMultiplier(2)->Range(16, 256);

void BM_RoundTrip(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SineBasisGrid grid(n);
  const SpectralField a = random_coeffs(n);
  for (auto _ : state) benchmark::DoNotOptimize(grid.to_spectral(grid.to_physical(a)));
}
BENCHMARK(BM_RoundTrip)->RangeMultiplier(2)->Range(16, 256);

void BM_SamplePath(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const QSpec q = QSpec::sine_basis(std::vector<double>(k, 1.0));
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_path(1, r++, q, 64, 1.0));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_SamplePath)->Arg(1)->Arg(64);

// Cost of one time step of each scheme on example3 with N = K = n.
void BM_Step(benchmark::State& state, const char* scheme) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Solver solver(make_problem("example3", n, n));
  const Stepper stepper(SchemeSpec::parse(scheme));
  const NoisePath path = sample_path(2, 0, solver.problem().qspec, 32, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(solver.terminal(stepper, path));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK_CAPTURE(BM_Step, lie, "lie")->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Step, exe, "exe")->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Step, dfmm, "dfmm")->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Step, ewp, "ewp")->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Step, erkm15, "erkm15")->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Step, erkm_closed, "erkm-closed")->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();

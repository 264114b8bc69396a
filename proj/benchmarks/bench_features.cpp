#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "voxrisk/acoustic.hpp"

namespace {

voxrisk::AudioBuffer voiced_tone(double seconds) {
  voxrisk::AudioBuffer b;
  const auto n = static_cast<std::size_t>(seconds * b.sample_rate_hz);
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / b.sample_rate_hz;
    b.samples[i] = 0.4 * std::sin(2 * std::numbers::pi * 140 * t) + 0.1 * std::sin(2 * std::numbers::pi * 420 * t);
  }
  return b;
}

void BM_ComputeLld(benchmark::State& state) {
  const auto b = voiced_tone(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(voxrisk::compute_lld(b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b.size()));
}
BENCHMARK(BM_ComputeLld)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Functionals(benchmark::State& state) {
  const auto lld = voxrisk::compute_lld(voiced_tone(3.0));
  const auto& set = state.range(0) ? voxrisk::FunctionalSet::extended() : voxrisk::FunctionalSet::compact();
  for (auto _ : state) benchmark::DoNotOptimize(voxrisk::apply_functionals(lld, set));
}
BENCHMARK(BM_Functionals)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_MelSummary(benchmark::State& state) {
  const auto b = voiced_tone(3.0);
  for (auto _ : state) benchmark::DoNotOptimize(voxrisk::melspec_summary(b));
}
BENCHMARK(BM_MelSummary)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

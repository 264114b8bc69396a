#include <benchmark/benchmark.h>

#include <random>

#include "voxrisk/learner.hpp"

namespace {

void make_blobs(std::size_t n, std::size_t d, voxrisk::Matrix& x, std::vector<int>& y) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  x = voxrisk::Matrix(n, d);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    for (std::size_t j = 0; j < d; ++j) x.at(i, j) = g(rng) + (j < 3 ? 0.8 * y[i] : 0.0);
  }
}

void BM_TrainSvm(benchmark::State& state) {
  voxrisk::Matrix x;
  std::vector<int> y;
  make_blobs(static_cast<std::size_t>(state.range(0)), 88, x, y);
  for (auto _ : state) benchmark::DoNotOptimize(voxrisk::fit_model(x, y, 1e-2));
}
BENCHMARK(BM_TrainSvm)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SelectC(benchmark::State& state) {
  voxrisk::Matrix x;
  std::vector<int> y;
  make_blobs(200, 88, x, y);
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < 200; ++i) groups.push_back("S" + std::to_string(i % 20));
  for (auto _ : state) benchmark::DoNotOptimize(voxrisk::select_c(x, y, groups, voxrisk::CGrid{}, {}));
}
BENCHMARK(BM_SelectC)->Unit(benchmark::kMillisecond);

}  // namespace

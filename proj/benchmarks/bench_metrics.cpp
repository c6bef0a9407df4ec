#include <benchmark/benchmark.h>

#include <random>

#include "curigs/metrics.hpp"

namespace {

using namespace curigs;

Image noise_image(int size, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(size, size, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
  return img;
}

void BM_SsimWithGradient(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Image a = noise_image(size, 1), b = noise_image(size, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ssim_with_gradient(a, b).value);
}
BENCHMARK(BM_SsimWithGradient)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_CompositeScore(benchmark::State& state) {
  const Image a = noise_image(64, 3), b = noise_image(64, 4);
  BuiltinMetricPlugin plugin;
  for (auto _ : state) benchmark::DoNotOptimize(composite_score(a, b, plugin).composite);
}
BENCHMARK(BM_CompositeScore)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();

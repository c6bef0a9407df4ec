#include <map>

#include <benchmark/benchmark.h>

#include "curigs/rasterizer.hpp"
#include "curigs/scene_synth.hpp"

namespace {

using namespace curigs;

const SyntheticScene& scene_for(int n, int size) {
  static std::map<std::pair<int, int>, SyntheticScene> cache;
  auto key = std::make_pair(n, size);
  auto it = cache.find(key);
  if (it == cache.end()) {
    SceneSpec spec;
    spec.n_gaussians = n;
    spec.n_cameras = 2;
    spec.width = spec.height = size;
    spec.seed = 1;
    it = cache.emplace(key, make_scene(spec)).first;
  }
  return it->second;
}

void BM_RenderForward(benchmark::State& state) {
  const auto& s = scene_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    RenderOutput out = render(s.cloud_gt, s.cameras[0]);
    benchmark::DoNotOptimize(out.color.data());
  }
}
BENCHMARK(BM_RenderForward)->Args({2000, 64})->Args({2000, 128})->Args({10000, 128})->Unit(benchmark::kMicrosecond);

void BM_RenderBackward(benchmark::State& state) {
  const auto& s = scene_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const RenderOutput fwd = render(s.cloud_gt, s.cameras[0]);
  Image d_color(fwd.color.width(), fwd.color.height(), 3, 1e-3);
  Image d_depth(fwd.color.width(), fwd.color.height(), 1, 1e-3);
  for (auto _ : state) {
    RenderGradients g = render_backward(s.cloud_gt, s.cameras[0], fwd, d_color, d_depth);
    benchmark::DoNotOptimize(g.params.data());
  }
}
BENCHMARK(BM_RenderBackward)->Args({2000, 64})->Args({2000, 128})->Args({10000, 128})->Unit(benchmark::kMicrosecond);

}  // namespace

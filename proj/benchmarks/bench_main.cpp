#include <benchmark/benchmark.h>

#include "geoprior/eikonal.hpp"
#include "geoprior/geodesic.hpp"
#include "geoprior/metrics.hpp"
#include "geoprior/nn/ops.hpp"
#include "geoprior/rng.hpp"
#include "geoprior/synth.hpp"
#include "geoprior/training.hpp"

using namespace geoprior;

namespace {

void BM_FastMarchCube(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Mask dom(Dims(n, n, n), Spacing(), 1);
  const SeedSet seeds{{n / 2, n / 2, n / 2}};
  for (auto _ : state) benchmark::DoNotOptimize(fast_march(dom, seeds, std::monostate{}, Spacing()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}
BENCHMARK(BM_FastMarchCube)->Arg(17)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);

void BM_ComposeChannels(benchmark::State& state) {
  const Phantom p = generate_phantom(PhantomSpec{}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(compose_channels(p.labels));
}
BENCHMARK(BM_ComposeChannels)->Unit(benchmark::kMillisecond);

void BM_DistanceTransform(benchmark::State& state) {
  const Phantom p = generate_phantom(PhantomSpec{}, 7);
  Mask lv(p.labels.dims(), p.labels.spacing());
  for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = p.labels[i] == 1;
  for (auto _ : state) benchmark::DoNotOptimize(squared_distance_transform(lv));
}
BENCHMARK(BM_DistanceTransform)->Unit(benchmark::kMicrosecond);

void BM_Conv3d(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Rng rng(1);
  nn::Tensor x(nn::Shape{4, c, 8, 32, 32}), w(nn::Shape{c, c, 3, 3, 3}), b(nn::Shape{c, 1, 1, 1, 1});
  for (double& v : x.values()) v = rng.normal();
  for (double& v : w.values()) v = rng.normal() * 0.1;
  const nn::Var vx = nn::leaf(x, true), vw = nn::leaf(w, true), vb = nn::leaf(b, true);
  for (auto _ : state) {
    const nn::Var y = nn::conv3d(vx, vw, vb);
    if (state.range(1)) nn::backward(nn::mse(y, nn::leaf(nn::Tensor(y.shape()))));
    benchmark::DoNotOptimize(y.value().values().data());
  }
}
BENCHMARK(BM_Conv3d)->Args({8, 0})->Args({16, 0})->Args({16, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

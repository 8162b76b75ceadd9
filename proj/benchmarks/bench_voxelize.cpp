#include <benchmark/benchmark.h>

#include "cyldet/simulator.hpp"
#include "cyldet/voxelizer.hpp"

namespace {

using namespace cyldet;

Scene bench_scene() {
  ScannerSpec scanner;
  scanner.n_azimuth = 1800;
  scanner.elevation_angles = {-0.30, -0.25, -0.20, -0.16, -0.12, -0.09,
                              -0.06, -0.04, -0.02, 0.0,   0.02,  0.05};
  scanner.max_range = 60.0;
  return random_scene(4, 5.0, 45.0, scanner, 42);
}

void BM_Voxelize(benchmark::State& state) {
  const Scene scene = bench_scene();
  const GridSpec spec = make_grid_spec(1.0, 53.8, 0.3, kTwoPi / 300.0, -3.0, 5.0, 0.5);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    VoxelGrid g = voxelize(scene.cloud, spec, threads);
    benchmark::DoNotOptimize(g.voxels.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(scene.cloud.points.size()));
}
BENCHMARK(BM_Voxelize)->Arg(1)->Arg(2)->Arg(4);

void BM_Densify(benchmark::State& state) {
  const Scene scene = bench_scene();
  const GridSpec spec = make_grid_spec(1.0, 53.8, 0.3, kTwoPi / 300.0, -3.0, 5.0, 0.5);
  const VoxelGrid grid = voxelize(scene.cloud, spec, 1);
  for (auto _ : state) {
    DenseInput d = densify(grid);
    benchmark::DoNotOptimize(d.features.data.data());
  }
}
BENCHMARK(BM_Densify);

}  // namespace

BENCHMARK_MAIN();

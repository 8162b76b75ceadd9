#include <random>

#include <benchmark/benchmark.h>

#include "cyldet/decoder.hpp"

namespace {

using namespace cyldet;

std::vector<Detection> random_boxes(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-40.0, 40.0), size(0.5, 5.0), ang(-3.14, 3.14),
      score(0.0, 1.0);
  std::vector<Detection> dets(n);
  for (auto& d : dets) {
    d.x = pos(rng);
    d.y = pos(rng);
    d.w = size(rng);
    d.l = size(rng);
    d.h = 1.5;
    d.yaw = ang(rng);
    d.score = score(rng);
  }
  return dets;
}

void BM_BevIou(benchmark::State& state) {
  auto dets = random_boxes(2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(bev_iou(dets[0], dets[1]));
}
BENCHMARK(BM_BevIou);

void BM_Nms100(benchmark::State& state) {
  auto dets = random_boxes(100, 9);
  for (auto _ : state) {
    auto kept = nms(dets, 0.1, 83);
    benchmark::DoNotOptimize(kept.data());
  }
}
BENCHMARK(BM_Nms100);

}  // namespace

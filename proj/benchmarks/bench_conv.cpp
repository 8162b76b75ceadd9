#include <random>

#include <benchmark/benchmark.h>

#include "cyldet/conv.hpp"

namespace {

using namespace cyldet;

Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.f, 1.f);
  for (auto& v : t.data) v = dist(rng);
  return t;
}

Conv3dSpec spec_3d(int in_ch, int out_ch, PadMode theta_pad) {
  Conv3dSpec s;
  s.in_ch = in_ch;
  s.out_ch = out_ch;
  s.z = {3, 1, 1, PadMode::Zero};
  s.r = {3, 1, 1, PadMode::Zero};
  s.t = {3, 1, 1, theta_pad};
  return s;
}

void BM_Conv3dForward(benchmark::State& state) {
  const bool circular = state.range(0) != 0;
  const int threads = static_cast<int>(state.range(1));
  const Conv3dSpec spec = spec_3d(16, 16, circular ? PadMode::Circular : PadMode::Zero);
  const Tensor x = random_tensor({1, 16, 4, 22, 38}, 1);
  const Tensor w = random_tensor({16, 16, 3, 3, 3}, 2);
  const Tensor b = random_tensor({16}, 3);
  for (auto _ : state) {
    Tensor y = conv3d_forward(x, w, b, spec, threads);
    benchmark::DoNotOptimize(y.data.data());
  }
}
BENCHMARK(BM_Conv3dForward)->Args({0, 1})->Args({1, 1})->Args({1, 2});

void BM_Conv3dBackward(benchmark::State& state) {
  const Conv3dSpec spec = spec_3d(16, 16, PadMode::Circular);
  const Tensor x = random_tensor({1, 16, 4, 22, 38}, 1);
  const Tensor w = random_tensor({16, 16, 3, 3, 3}, 2);
  const Tensor b = random_tensor({16}, 3);
  const Tensor gout = random_tensor({1, 16, 4, 22, 38}, 4);
  for (auto _ : state) {
    Tensor gx, gw({16, 16, 3, 3, 3}), gb({16});
    conv3d_backward(x, w, spec, gout, gx, gw, gb, 1);
    benchmark::DoNotOptimize(gx.data.data());
  }
}
BENCHMARK(BM_Conv3dBackward);

}  // namespace

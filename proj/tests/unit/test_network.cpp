#include <doctest.h>

#include "cyldet/grad_check.hpp"
#include "cyldet/loss.hpp"
#include "cyldet/network.hpp"
#include "nn_helpers.hpp"

using namespace cyldet;
using cyldet::testing::max_abs_diff;
using cyldet::testing::random_tensor;
using cyldet::testing::roll_theta;

namespace {

// theta-constant range map [1, 1, 1, R, T], as densify produces.
template <class T>
TensorT<T> range_map(int R, int Tn, double r_min = 1.0, double dr = 1.0) {
  TensorT<T> m({1, 1, 1, R, Tn});
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < Tn; ++t) m(0, 0, 0, r, t) = static_cast<T>(r_min + (r + 0.5) * dr);
  return m;
}

}  // namespace

TEST_CASE("guiding unit: closed gates reduce to the residual path") {
  GuidingUnit<float> unit;
  unit.configure(3, 3, 4, {1, 3, 3});
  std::mt19937_64 rng(1);
  unit.init(rng);
  for (auto& g : unit.gate) {
    g.w.value.zero();
    g.b.value.zero();
  }
  unit.reduce.b.value.zero();

  Tensor x = random_tensor<float>({2, 3, 2, 4, 6}, 2);
  Tensor out = unit.forward(x, range_map<float>(4, 6));
  CHECK(max_abs_diff(out, x) == 0.0);
}

TEST_CASE("guiding unit: unit gates pass the ungated concat path plus residual") {
  GuidingUnit<float> unit;
  unit.configure(2, 2, 3, {1, 3, 3});
  std::mt19937_64 rng(3);
  unit.init(rng);
  for (auto& g : unit.gate) {
    g.w.value.zero();
    g.b.value.fill(1.f);  // g_b == 1 everywhere
  }
  Tensor x = random_tensor<float>({1, 2, 1, 3, 5}, 4);
  Tensor range = range_map<float>(3, 5);
  Tensor out = unit.forward(x, range);

  // Manual ungated path: reduce(concat(branch_b(x))) + x.
  Tensor cat({1, 4 * 3, 1, 3, 5});
  for (int bi = 0; bi < 4; ++bi) {
    Tensor m = unit.branch[bi].forward(x);
    std::copy(m.data.begin(), m.data.end(), cat.data.begin() + bi * 3 * 15);
  }
  Tensor expect = unit.reduce.forward(cat);
  for (int64_t i = 0; i < expect.numel(); ++i) expect.data[i] += x.data[i];
  CHECK(max_abs_diff(out, expect) < 1e-6);
}

TEST_CASE("guiding unit with projection changes the channel count") {
  GuidingUnit<float> unit;
  unit.configure(3, 5, 2, {1, 3, 3});
  std::mt19937_64 rng(5);
  unit.init(rng);
  Tensor x = random_tensor<float>({1, 3, 1, 4, 6}, 6);
  Tensor out = unit.forward(x, range_map<float>(4, 6));
  CHECK(out.shape == std::vector<int64_t>{1, 5, 1, 4, 6});
}

TEST_CASE("guiding unit gradients pass the finite-difference check") {
  GuidingUnit<double> unit;
  unit.configure(2, 2, 2, {1, 3, 3});
  std::mt19937_64 rng(7);
  unit.init(rng);
  Param<double> x({1, 2, 1, 4, 6});
  x.value = random_tensor<double>(x.value.shape, 8);
  TensorD range = range_map<double>(4, 6);

  NamedParams<double> named;
  unit.collect("unit", named);
  std::vector<Param<double>*> params = {&x};
  for (auto& [name, p] : named) params.push_back(p);

  auto forward = [&] {
    TensorD out = unit.forward(x.value, range);
    double loss = 0.0;
    for (double v : out.data) loss += 0.5 * v * v;
    return loss;
  };
  auto forward_backward = [&] {
    TensorD out = unit.forward(x.value, range);
    TensorD gout(out.shape);
    double loss = 0.0;
    for (int64_t i = 0; i < out.numel(); ++i) {
      loss += 0.5 * out.data[i] * out.data[i];
      gout.data[i] = out.data[i];
    }
    for (auto* p : params) p->zero_grad();
    TensorD gx = unit.backward(gout);
    x.grad = gx;
    return loss;
  };
  CHECK(fd_max_rel_error(params, forward, forward_backward, 1e-3) < 1e-4);
}

TEST_CASE("network spec shape arithmetic") {
  SUBCASE("full-scale stage plan lands on 88 x 300 with z folded 40 -> 5") {
    NetworkSpec spec;
    spec.stages = {{16, 2, 2, 2, false}, {32, 2, 2, 2, true}, {64, 2, 2, 1, true}};
    auto [r, t] = spec.bev_shape(704, 1200);
    CHECK(r == 88);
    CHECK(t == 300);
    CHECK(spec.bev_z(40) == 5);
    CHECK(spec.total_stride_r() == 8);
    CHECK(spec.total_stride_theta() == 4);
  }
  SUBCASE("toy plan shapes") {
    NetworkSpec spec;  // defaults
    auto [r, t] = spec.bev_shape(44, 75);
    CHECK(r == 11);
    CHECK(t == 19);
    CHECK(spec.bev_z(8) == 1);
  }
  SUBCASE("group validation") {
    NetworkSpec spec;
    spec.num_classes = 3;
    spec.head_groups = {{0, 1}, {1, 2}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.head_groups = {{0}, {2}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.head_groups = {{0, 3}};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
}

namespace {

NetworkSpec tiny_spec(int n_groups = 1) {
  NetworkSpec spec;
  spec.stages = {{4, 2, 2, 2, false}, {6, 1, 2, 2, true}};
  spec.guide_mid = 2;
  spec.rpn_channels = 4;
  spec.head_shared = 6;
  spec.num_classes = n_groups == 1 ? 2 : 4;
  if (n_groups == 1)
    spec.head_groups = {{0, 1}};
  else
    spec.head_groups = {{0}, {1, 2}, {3}};
  return spec;
}

}  // namespace

TEST_CASE("network forward shapes: toy example (z=2, r=8, theta=12) -> (2, 3)") {
  NetworkSpec spec = tiny_spec();
  Network<float> net(spec);
  net.init(1, 2);
  Tensor x = random_tensor<float>({1, 6, 2, 8, 12}, 2);
  Tensor range({1, 8, 12});
  for (int r = 0; r < 8; ++r)
    for (int t = 0; t < 12; ++t) range(0, r, t) = 1.f + r;
  auto outs = net.forward(x, range);
  REQUIRE(outs.size() == 1);
  CHECK(outs[0].hm.shape == std::vector<int64_t>{1, 2, 1, 2, 3});
  CHECK(outs[0].reg.shape == std::vector<int64_t>{1, 10, 1, 2, 3});
}

TEST_CASE("multi-group heads split channels as configured, reg stays 10-wide") {
  NetworkSpec spec = tiny_spec(3);
  Network<float> net(spec);
  net.init(2, 2);
  Tensor x = random_tensor<float>({1, 6, 2, 8, 12}, 3);
  Tensor range({1, 8, 12});
  range.fill(3.f);
  auto outs = net.forward(x, range);
  REQUIRE(outs.size() == 3);
  CHECK(outs[0].hm.dim(1) == 1);
  CHECK(outs[1].hm.dim(1) == 2);
  CHECK(outs[2].hm.dim(1) == 1);
  for (const auto& o : outs) CHECK(o.reg.dim(1) == 10);
}

TEST_CASE("paper-style 6-group split of 10 classes") {
  NetworkSpec spec = tiny_spec();
  spec.num_classes = 10;
  spec.head_groups = {{0}, {1, 2}, {3, 4}, {5}, {6, 7}, {8, 9}};
  spec.validate();
  Network<float> net(spec);
  net.init(3, 2);
  Tensor x = random_tensor<float>({1, 6, 2, 8, 12}, 4);
  Tensor range({1, 8, 12});
  range.fill(2.f);
  auto outs = net.forward(x, range);
  std::vector<int64_t> widths;
  for (const auto& o : outs) widths.push_back(o.hm.dim(1));
  CHECK(widths == std::vector<int64_t>{1, 2, 2, 1, 2, 2});
}

TEST_CASE("end-to-end theta-roll equivariance of backbone + RPN + head") {
  // Roll granularity is the backbone theta stride times the RPN's internal
  // stride-2; every theta extent stays divisible through the network.
  for (uint64_t seed = 0; seed < 20; ++seed) {
    NetworkSpec spec;
    std::mt19937_64 cfg_rng(900 + seed);
    const int theta_stride = (cfg_rng() % 2) ? 2 : 1;
    spec.stages = {{3 + static_cast<int>(cfg_rng() % 3), 2, 2, theta_stride,
                    (cfg_rng() % 2) != 0},
                   {4, 1, 1, 1, (cfg_rng() % 2) != 0}};
    spec.guide_mid = 2;
    spec.rpn_channels = 3;
    spec.head_shared = 4;
    spec.num_classes = 2;
    spec.head_groups = {{0, 1}};

    const int Tn = 16, R = 8, Z = 2;
    Network<float> net(spec);
    net.init(100 + seed, Z);

    Tensor x = random_tensor<float>({1, 6, Z, R, Tn}, 200 + seed);
    Tensor range({1, R, Tn});
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < Tn; ++t) range(0, r, t) = 1.f + 0.7f * r;

    const int roll_in = spec.total_stride_theta() * 2;  // one BEV-level roll of 2
    auto base = net.forward(x, range);
    auto rolled = net.forward(roll_theta(x, roll_in), range);
    const int roll_out = roll_in / spec.total_stride_theta();
    for (size_t g = 0; g < base.size(); ++g) {
      CHECK(max_abs_diff(rolled[g].hm, roll_theta(base[g].hm, roll_out)) < 1e-4);
      CHECK(max_abs_diff(rolled[g].reg, roll_theta(base[g].reg, roll_out)) < 1e-4);
    }
  }
}

TEST_CASE("full network gradients pass directional finite-difference probes") {
  NetworkSpec spec = tiny_spec();
  Network<double> net(spec);
  net.init(11, 2);
  TensorD x = random_tensor<double>({1, 6, 2, 8, 12}, 12);
  TensorD range({1, 8, 12});
  for (int r = 0; r < 8; ++r)
    for (int t = 0; t < 12; ++t) range(0, r, t) = 1.0 + r;
  TensorD hm_target = random_tensor<double>({1, 2, 1, 2, 3}, 13, 0.0, 0.9);
  TensorD reg_target = random_tensor<double>({1, 10, 1, 2, 3}, 14);
  TensorD mask({1, 1, 1, 2, 3});
  mask(0, 0, 0, 1, 2) = 1.0;
  mask(0, 0, 0, 0, 0) = 1.0;

  auto loss_of = [&](bool backward) {
    auto outs = net.forward(x, range);
    auto focal = focal_loss(outs[0].hm, hm_target);
    auto reg = reg_loss(outs[0].reg, reg_target, mask);
    if (backward) {
      std::vector<HeadOutput<double>> grads(1);
      grads[0].hm = focal.grad;
      grads[0].reg = reg.grad;
      for (auto& v : grads[0].reg.data) v *= 0.25;
      net.zero_grads();
      net.backward(grads);
    }
    return focal.value + 0.25 * reg.value;
  };

  std::vector<Param<double>*> params;
  for (auto& [name, p] : net.named_params()) params.push_back(p);
  const double err = directional_probe_max_rel_error(
      params, [&] { return loss_of(false); }, [&] { return loss_of(true); }, 1e-4, 20, 99);
  CHECK(err < 1e-3);
}

TEST_CASE("forward is bit-stable across runs") {
  NetworkSpec spec = tiny_spec();
  Network<float> net(spec);
  net.init(21, 2);
  Tensor x = random_tensor<float>({2, 6, 2, 8, 12}, 22);
  Tensor range({1, 8, 12});
  range.fill(4.f);
  auto a = net.forward(x, range, 1);
  auto b = net.forward(x, range, 2);
  CHECK(max_abs_diff(a[0].hm, b[0].hm) == 0.0);
  CHECK(max_abs_diff(a[0].reg, b[0].reg) == 0.0);
}

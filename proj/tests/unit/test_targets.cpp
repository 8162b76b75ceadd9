#include <cmath>
#include <functional>
#include <random>

#include <doctest.h>

#include "cyldet/geometry.hpp"
#include "cyldet/targets.hpp"
#include "nn_helpers.hpp"

using namespace cyldet;

namespace {

GridSpec toy_grid() {
  return make_grid_spec(1.0, 53.8, 1.2, kTwoPi / 75.0, -3.0, 5.0, 1.0);
}

// Independent oracle: solve each overlap condition by bisection instead of
// the closed-form roots.
double bisect(double lo, double hi, const std::function<double(double)>& f) {
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (f(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2.0;
}

double radius_oracle(double w, double l, double t) {
  // Case 1: both boxes shifted diagonally against each other.
  const double r1 = bisect(0.0, std::min(w, l), [&](double r) {
    const double inter = (w - r) * (l - r);
    return inter - t * (2.0 * w * l - inter);
  });
  // Case 2: the shifted box shrunk inside the original.
  const double r2 = bisect(0.0, std::min(w, l) / 2.0, [&](double r) {
    return (w - 2.0 * r) * (l - 2.0 * r) - t * w * l;
  });
  // Case 3: the shifted box grown around the original.
  const double r3 = bisect(0.0, 10.0 * (w + l) / t, [&](double r) {
    return w * l - t * (w + 2.0 * r) * (l + 2.0 * r);
  });
  return std::min({r1, r2, r3});
}

Box3D make_box(double x, double y, double yaw = 0.0, int cls = 0) {
  Box3D b;
  b.x = x;
  b.y = y;
  b.z = -0.9;
  b.w = 1.9;
  b.l = 4.6;
  b.h = 1.7;
  b.yaw = yaw;
  b.class_id = cls;
  return b;
}

}  // namespace

TEST_CASE("box_to_cylbox") {
  SUBCASE("axis-aligned box straight ahead") {
    Box3D b = make_box(10.0, 0.0, 0.0);
    auto cb = box_to_cylbox(b, 1.0, 53.8);
    REQUIRE(cb.has_value());
    CHECK(cb->r_center == doctest::Approx(10.0));
    CHECK(cb->theta_center == doctest::Approx(0.0).scale(1.0));
    CHECK(cb->theta_bar_dir == doctest::Approx(0.0).scale(1.0));
    CHECK(cb->v_r == 0.0);
    CHECK(cb->v_theta == 0.0);
  }
  SUBCASE("global rotation leaves the self-oriented view unchanged") {
    Box3D b = make_box(10.0, 0.0, 0.4);
    b.vx = 1.5;
    b.vy = -0.5;
    auto base = box_to_cylbox(b, 1.0, 53.8);
    const double phi = kPi / 2.0;
    Box3D rotated = b;
    rotated.x = b.x * std::cos(phi) - b.y * std::sin(phi);
    rotated.y = b.x * std::sin(phi) + b.y * std::cos(phi);
    rotated.yaw = wrap_angle(b.yaw + phi);
    rotated.vx = b.vx * std::cos(phi) - b.vy * std::sin(phi);
    rotated.vy = b.vx * std::sin(phi) + b.vy * std::cos(phi);
    auto rot = box_to_cylbox(rotated, 1.0, 53.8);
    REQUIRE(rot.has_value());
    CHECK(rot->theta_bar_dir == doctest::Approx(base->theta_bar_dir).epsilon(1e-9));
    CHECK(rot->v_r == doctest::Approx(base->v_r).epsilon(1e-9));
    CHECK(rot->v_theta == doctest::Approx(base->v_theta).epsilon(1e-9));
    CHECK(rot->r_center == doctest::Approx(base->r_center).epsilon(1e-9));
  }
  SUBCASE("out-of-range centers are rejected") {
    CHECK(!box_to_cylbox(make_box(60.0, 0.0), 1.0, 53.8).has_value());
    CHECK(!box_to_cylbox(make_box(0.5, 0.0), 1.0, 53.8).has_value());
    CHECK(box_to_cylbox(make_box(53.79, 0.0), 1.0, 53.8).has_value());
    CHECK(!box_to_cylbox(make_box(53.8, 0.0), 1.0, 53.8).has_value());
  }
}

TEST_CASE("cornernet_radius matches the bisection oracle") {
  CHECK(cornernet_radius(10.0, 10.0, 0.1) ==
        doctest::Approx(radius_oracle(10.0, 10.0, 0.1)).epsilon(1e-9));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dim(0.5, 60.0);
  for (int i = 0; i < 200; ++i) {
    const double w = dim(rng), l = dim(rng);
    CHECK(cornernet_radius(w, l, 0.1) ==
          doctest::Approx(radius_oracle(w, l, 0.1)).epsilon(1e-7));
  }
  // Sanity at a different overlap too.
  CHECK(cornernet_radius(8.0, 3.0, 0.5) ==
        doctest::Approx(radius_oracle(8.0, 3.0, 0.5)).epsilon(1e-9));
}

TEST_CASE("gaussian_radii per axis") {
  GridSpec g = toy_grid();
  OutputGrid og = OutputGrid::from(g, 4, 4);

  SUBCASE("tiny footprints floor at tau") {
    CylBox tiny;
    tiny.r_center = 20.0;
    tiny.w = tiny.l = 0.3;
    GaussianSpec gs = gaussian_radii(tiny, og);
    CHECK(gs.sigma_r == 2.0);
    CHECK(gs.sigma_theta == 2.0);
  }
  SUBCASE("theta radius shrinks with range, radial radius does not change") {
    // Full-scale grid and strides; the toy arc widths floor both at tau.
    GridSpec paper = make_grid_spec(1.0, 53.8, 0.075, kPi / 600.0, -3.0, 5.0, 0.2);
    OutputGrid pog = OutputGrid::from(paper, 8, 4);
    CylBox near;
    near.r_center = 5.0;
    near.w = 1.9;
    near.l = 4.6;
    CylBox far = near;
    far.r_center = 50.0;
    GaussianSpec gn = gaussian_radii(near, pog);
    GaussianSpec gf = gaussian_radii(far, pog);
    CHECK(gn.sigma_theta > gf.sigma_theta);
    CHECK(gn.sigma_theta > 2.0);  // near range escapes the tau floor
    CHECK(gn.sigma_r == doctest::Approx(gf.sigma_r));
  }
  SUBCASE("footprints are voxel-unit conversions of the box") {
    CylBox b;
    b.r_center = 10.0;
    b.w = 6.0;
    b.l = 12.0;
    GaussianSpec gs = gaussian_radii(b, og, 0.1, 0.01);
    const double w_vox = 6.0 / og.delta_r;
    const double l_vox = 12.0 / og.delta_r;
    CHECK(gs.sigma_r == doctest::Approx(std::max(radius_oracle(w_vox, l_vox, 0.1), 0.01)));
    const double arc = theta_voxel_arc(10.0, og.delta_theta);
    CHECK(gs.sigma_theta ==
          doctest::Approx(std::max(radius_oracle(6.0 / arc, 12.0 / arc, 0.1), 0.01)));
  }
}

TEST_CASE("render_heatmap") {
  GridSpec g = toy_grid();
  OutputGrid og = OutputGrid::from(g, 4, 4);

  SUBCASE("peak is exactly 1 and the sigma-offset cell is exp(-1/2)") {
    CylBox b;
    b.r_center = 20.0;
    b.theta_center = 0.0;
    b.w = 4.0;
    b.l = 8.0;
    b.class_id = 0;
    GaussianSpec gs = gaussian_radii(b, og);
    Tensor heat = render_heatmap({b}, og, 1);
    const int ci = static_cast<int>((b.r_center - og.r_min) / og.delta_r);
    const int cj = static_cast<int>((b.theta_center + kPi) / og.delta_theta);
    CHECK(heat(0, ci, cj) == 1.f);
    // Integer offset along r equal to round(sigma): value exp(-di^2/(2 s^2)).
    const int di = static_cast<int>(std::round(gs.sigma_r));
    const float expect = static_cast<float>(
        std::exp(-di * di / (2.0 * gs.sigma_r * gs.sigma_r)));
    CHECK(heat(0, ci + di, cj) == doctest::Approx(expect).epsilon(1e-6));
    for (float v : heat.data) {
      CHECK(v >= 0.f);
      CHECK(v <= 1.f);
    }
  }
  SUBCASE("a box at theta index 0 splats across the seam") {
    CylBox b;
    b.r_center = 20.0;
    b.theta_center = -kPi + og.delta_theta / 2.0;  // center of theta bin 0
    b.w = 4.0;
    b.l = 8.0;
    Tensor heat = render_heatmap({b}, og, 1);
    CHECK(heat(0, static_cast<int>((20.0 - og.r_min) / og.delta_r), og.n_theta - 1) > 0.f);
  }
  SUBCASE("max-splat makes duplicate boxes idempotent") {
    CylBox b;
    b.r_center = 15.0;
    b.theta_center = 1.0;
    b.w = 3.0;
    b.l = 3.0;
    Tensor once = render_heatmap({b}, og, 1);
    Tensor twice = render_heatmap({b, b}, og, 1);
    CHECK(cyldet::testing::max_abs_diff(once, twice) == 0.0);
  }
}

TEST_CASE("encode_regression") {
  GridSpec g = toy_grid();
  OutputGrid og = OutputGrid::from(g, 4, 4);
  Tensor reg, mask;
  std::vector<std::array<int, 3>> centers;

  SUBCASE("cell-centered box has zero offsets; unit sizes log to zero") {
    CylBox b;
    const int ci = 3, cj = 7;
    b.r_center = og.r_min + (ci + 0.5) * og.delta_r;
    b.theta_center = -kPi + (cj + 0.5) * og.delta_theta;
    b.z_center = -0.4;
    b.w = b.l = b.h = 1.0;
    b.theta_bar_dir = kPi / 2.0;
    b.v_r = 0.7;
    b.v_theta = -0.2;
    encode_regression({b}, og, reg, mask, centers);
    CHECK(mask(0, ci, cj) == 1.f);
    CHECK(reg(0, ci, cj) == doctest::Approx(0.f).scale(1.f));
    CHECK(reg(1, ci, cj) == doctest::Approx(0.f).scale(1.f));
    CHECK(reg(2, ci, cj) == 0.f);
    CHECK(reg(3, ci, cj) == 0.f);
    CHECK(reg(4, ci, cj) == 0.f);
    CHECK(reg(5, ci, cj) == doctest::Approx(-0.4f));
    CHECK(reg(6, ci, cj) == doctest::Approx(0.7f));
    CHECK(reg(7, ci, cj) == doctest::Approx(-0.2f));
    CHECK(reg(8, ci, cj) == doctest::Approx(0.f).scale(1.f));
    CHECK(reg(9, ci, cj) == doctest::Approx(1.f));
    REQUIRE(centers.size() == 1);
    CHECK(centers[0] == std::array<int, 3>{0, ci, cj});
    // Exactly one masked cell.
    float msum = 0.f;
    for (float v : mask.data) msum += v;
    CHECK(msum == 1.f);
  }
  SUBCASE("fractional offsets stay in [-0.5, 0.5)") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> rad(og.r_min + 0.1, 50.0), ang(-kPi, kPi);
    std::vector<CylBox> boxes;
    for (int i = 0; i < 50; ++i) {
      CylBox b;
      b.r_center = rad(rng);
      b.theta_center = wrap_angle(ang(rng));
      b.w = b.l = b.h = 1.0;
      boxes.push_back(b);
    }
    encode_regression(boxes, og, reg, mask, centers);
    for (const auto& [cls, i, j] : centers) {
      CHECK(reg(0, i, j) >= -0.5f);
      CHECK(reg(0, i, j) < 0.5f);
      CHECK(reg(1, i, j) >= -0.5f);
      CHECK(reg(1, i, j) < 0.5f);
    }
  }
  SUBCASE("collision at one cell: the larger footprint wins") {
    CylBox small, big;
    small.r_center = big.r_center = 20.0;
    small.theta_center = big.theta_center = 0.5;
    small.w = small.l = small.h = 1.0;
    big.w = 2.5;
    big.l = 7.0;
    big.h = 2.9;
    small.class_id = 1;
    big.class_id = 0;
    encode_regression({small, big}, og, reg, mask, centers);
    REQUIRE(centers.size() == 1);
    CHECK(centers[0][0] == 0);  // the big box's class
    const int i = centers[0][1], j = centers[0][2];
    CHECK(reg(2, i, j) == doctest::Approx(std::log(2.5f)));
    // Order independence of the tie-break.
    Tensor reg2, mask2;
    std::vector<std::array<int, 3>> centers2;
    encode_regression({big, small}, og, reg2, mask2, centers2);
    CHECK(cyldet::testing::max_abs_diff(reg, reg2) == 0.0);
  }
}

TEST_CASE("encode_targets groups remap class channels") {
  GridSpec g = toy_grid();
  OutputGrid og = OutputGrid::from(g, 4, 4);
  CylBox a;
  a.r_center = 20.0;
  a.theta_center = 0.3;
  a.w = a.l = a.h = 2.0;
  a.class_id = 3;
  CylBox b = a;
  b.theta_center = -2.0;
  b.class_id = 1;

  TargetSet t = encode_targets({a, b}, {1, 3}, og);
  CHECK(t.heatmap.dim(0) == 2);
  REQUIRE(t.centers.size() == 2);
  // Class 1 -> channel 0, class 3 -> channel 1.
  bool found_ch0 = false, found_ch1 = false;
  for (const auto& [ch, i, j] : t.centers) {
    if (ch == 0) found_ch0 = true;
    if (ch == 1) found_ch1 = true;
  }
  CHECK(found_ch0);
  CHECK(found_ch1);

  // A class outside the group is dropped.
  TargetSet only3 = encode_targets({a, b}, {3}, og);
  CHECK(only3.centers.size() == 1);
}

TEST_CASE("target encoding is equivariant to theta-bin rotations") {
  // 72 theta bins so the stride-4 output ring closes exactly (18 cells).
  GridSpec g = make_grid_spec(1.0, 53.8, 1.2, kTwoPi / 72.0, -3.0, 5.0, 1.0);
  OutputGrid og = OutputGrid::from(g, 4, 4);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> rad(3.0, 50.0), ang(-kPi, kPi), vel(-3.0, 3.0);

  std::vector<CylBox> boxes;
  std::vector<Box3D> world;
  for (int i = 0; i < 6; ++i) {
    Box3D b;
    const double r = rad(rng), theta = ang(rng);
    b.x = r * std::cos(theta);
    b.y = r * std::sin(theta);
    b.z = -0.5;
    b.w = 1.9;
    b.l = 4.6;
    b.h = 1.7;
    b.yaw = ang(rng);
    b.vx = vel(rng);
    b.vy = vel(rng);
    world.push_back(b);
    boxes.push_back(*box_to_cylbox(b, g.r_min, g.r_max));
  }
  TargetSet base = encode_targets(boxes, {0}, og);

  const int k = 5;  // output-bin rotation
  const double phi = k * og.delta_theta;
  std::vector<CylBox> rotated;
  for (const Box3D& b : world) {
    Box3D r = b;
    r.x = b.x * std::cos(phi) - b.y * std::sin(phi);
    r.y = b.x * std::sin(phi) + b.y * std::cos(phi);
    r.yaw = wrap_angle(b.yaw + phi);
    r.vx = b.vx * std::cos(phi) - b.vy * std::sin(phi);
    r.vy = b.vx * std::sin(phi) + b.vy * std::cos(phi);
    rotated.push_back(*box_to_cylbox(r, g.r_min, g.r_max));
  }
  TargetSet rot = encode_targets(rotated, {0}, og);

  // heatmap/reg/mask are [C, R, T] rank-3; roll along the last axis.
  auto roll3 = [&](const Tensor& x, int shift) {
    Tensor out(x.shape);
    const int64_t Tn = x.shape.back();
    const int64_t rows = x.numel() / Tn;
    for (int64_t row = 0; row < rows; ++row)
      for (int64_t t = 0; t < Tn; ++t)
        out.data[row * Tn + (t + shift) % Tn] = x.data[row * Tn + t];
    return out;
  };
  CHECK(cyldet::testing::max_abs_diff(rot.heatmap, roll3(base.heatmap, k)) < 1e-6);
  CHECK(cyldet::testing::max_abs_diff(rot.reg, roll3(base.reg, k)) < 1e-5);
  CHECK(cyldet::testing::max_abs_diff(rot.mask, roll3(base.mask, k)) == 0.0);
}

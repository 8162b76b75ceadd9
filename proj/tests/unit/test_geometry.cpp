#include <cmath>
#include <random>

#include <doctest.h>

#include "cyldet/geometry.hpp"

using namespace cyldet;

namespace {

// Independent wrap oracle: shift-and-fmod instead of remainder().
double ref_wrap(double a) {
  double x = std::fmod(a + kPi, kTwoPi);
  if (x <= 0.0) x += kTwoPi;
  return x - kPi;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi] with the -pi boundary on pi") {
  CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1).epsilon(1e-12));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(7.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0).epsilon(1e-12));
  CHECK(wrap_angle(kPi) == kPi);
  CHECK(wrap_angle(0.0) == 0.0);
}

TEST_CASE("wrap_angle is idempotent, 2pi-periodic and matches the fmod oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> big(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = big(rng);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(wrap_angle(w) == w);
    CHECK(wrap_angle(a + kTwoPi) == doctest::Approx(w).epsilon(1e-9));
    CHECK(std::abs(ref_wrap(w - a)) < 1e-9);  // w == a (mod 2pi)
  }
}

TEST_CASE("cart_to_cyl axis points and the atan2 oracle") {
  CylPoint a = cart_to_cyl({1, 0, 2});
  CHECK(a.r == doctest::Approx(1.0));
  CHECK(a.theta == doctest::Approx(0.0));
  CHECK(a.z == 2.0);

  CylPoint b = cart_to_cyl({0, 2, -1});
  CHECK(b.r == doctest::Approx(2.0));
  CHECK(b.theta == doctest::Approx(kPi / 2.0));

  CylPoint c = cart_to_cyl({-3, -4, 0});
  CHECK(c.r == doctest::Approx(5.0));
  CHECK(c.theta == doctest::Approx(-2.214297).epsilon(1e-6));

  // Origin maps to r=0, theta=0 by convention.
  CylPoint o = cart_to_cyl({0, 0, 0});
  CHECK(o.r == 0.0);
  CHECK(o.theta == 0.0);

  // The theta = -pi ray lands on +pi.
  CHECK(cart_to_cyl({-1, 0, 0}).theta == kPi);
}

TEST_CASE("cyl_to_cart trivial points and random round trips") {
  CartPoint a = cyl_to_cart({1, 0, 0});
  CHECK(a.x == doctest::Approx(1.0));
  CHECK(a.y == doctest::Approx(0.0));

  CartPoint b = cyl_to_cart({2, kPi / 2.0, 3});
  CHECK(b.x == doctest::Approx(0.0).scale(1.0));
  CHECK(b.y == doctest::Approx(2.0));
  CHECK(b.z == 3.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-60.0, 60.0);
  double max_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    CartPoint p{coord(rng), coord(rng), coord(rng)};
    CartPoint q = cyl_to_cart(cart_to_cyl(p));
    max_err = std::max({max_err, std::abs(p.x - q.x), std::abs(p.y - q.y), std::abs(p.z - q.z)});
  }
  CHECK(max_err < 1e-9);

  // And the other direction for r > 1e-6.
  std::uniform_real_distribution<double> rad(1e-3, 80.0);
  std::uniform_real_distribution<double> ang(-kPi + 1e-12, kPi);
  for (int i = 0; i < 10000; ++i) {
    CylPoint p{rad(rng), ang(rng), coord(rng)};
    CylPoint q = cart_to_cyl(cyl_to_cart(p));
    CHECK(std::abs(p.r - q.r) < 1e-9);
    CHECK(std::abs(ref_wrap(p.theta - q.theta)) < 1e-9);
  }
}

TEST_CASE("relative_heading examples and inverse") {
  CHECK(relative_heading(0.0, kPi / 2.0) == doctest::Approx(-kPi / 2.0));
  for (double a : {-3.0, -1.0, 0.0, 0.5, 3.0})
    CHECK(relative_heading(a, a) == doctest::Approx(0.0).scale(1.0));
  CHECK(relative_heading(-3.0, 3.0) == doctest::Approx(kTwoPi - 6.0).epsilon(1e-9));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double dir = ang(rng), center = ang(rng);
    const double back = relative_heading_inv(relative_heading(dir, center), center);
    CHECK(std::abs(ref_wrap(back - dir)) < 1e-9);
  }
}

TEST_CASE("relative_heading is exactly invariant under joint rotation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 10000; ++i) {
    const double dir = ang(rng), center = ang(rng), phi = ang(rng);
    // Identical angle arithmetic on both sides wraps to the same value.
    CHECK(relative_heading(dir, center) ==
          doctest::Approx(relative_heading(wrap_angle(dir + phi), wrap_angle(center + phi)))
              .epsilon(1e-12));
  }
}

TEST_CASE("heading_components on the unit circle") {
  double r, t;
  heading_components(0.0, r, t);
  CHECK(r == 1.0);
  CHECK(t == 0.0);
  heading_components(kPi / 2.0, r, t);
  CHECK(r == doctest::Approx(0.0).scale(1.0));
  CHECK(t == doctest::Approx(1.0));
  heading_components(1.0, r, t);
  CHECK(r == doctest::Approx(0.540302).epsilon(1e-6));
  CHECK(t == doctest::Approx(0.841471).epsilon(1e-6));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    heading_components(ang(rng), r, t);
    CHECK(std::abs(r * r + t * t - 1.0) < 1e-12);
  }
}

TEST_CASE("velocity_to_self: radial/tangential split consistent with the theta convention") {
  // Object on the +x axis moving (3, 4): radial component 3, tangential 4.
  VelocityView v = velocity_to_self(3.0, 4.0, 0.0);
  CHECK(v.v_r == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(v.v_theta == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(v.v_abs == doctest::Approx(5.0));

  // Rotating the viewpoint to theta_center = pi/2 is the same 3-4-5 vector
  // expressed in that frame: rotate (3, 4) by -pi/2 -> (4, -3).
  VelocityView w = velocity_to_self(3.0, 4.0, kPi / 2.0);
  CHECK(w.v_r == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(w.v_theta == doctest::Approx(-3.0).epsilon(1e-12));

  VelocityView z = velocity_to_self(0.0, 0.0, 1.7);
  CHECK(z.v_r == 0.0);
  CHECK(z.v_theta == 0.0);
  CHECK(z.v_abs == 0.0);
}

TEST_CASE("velocity invariant: v_abs^2 = vx^2 + vy^2 = v_r^2 + v_theta^2") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> vel(-30.0, 30.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 10000; ++i) {
    const double vx = vel(rng), vy = vel(rng);
    VelocityView v = velocity_to_self(vx, vy, ang(rng));
    const double a2 = vx * vx + vy * vy;
    CHECK(std::abs(v.v_abs * v.v_abs - a2) <= 1e-9 * std::max(1.0, a2));
    CHECK(std::abs(v.v_r * v.v_r + v.v_theta * v.v_theta - a2) <= 1e-9 * std::max(1.0, a2));
  }
}

TEST_CASE("velocity_from_self inverts velocity_to_self") {
  double vx, vy;
  velocity_from_self(3.0, 4.0, 0.0, vx, vy);
  CHECK(vx == doctest::Approx(3.0));
  CHECK(vy == doctest::Approx(4.0));
  velocity_from_self(0.0, 0.0, 1.2, vx, vy);
  CHECK(vx == 0.0);
  CHECK(vy == 0.0);

  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> vel(-30.0, 30.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  double max_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double vx0 = vel(rng), vy0 = vel(rng), c = ang(rng);
    VelocityView v = velocity_to_self(vx0, vy0, c);
    velocity_from_self(v.v_r, v.v_theta, c, vx, vy);
    max_err = std::max({max_err, std::abs(vx - vx0), std::abs(vy - vy0)});
  }
  CHECK(max_err < 1e-9);
}

TEST_CASE("velocity self-view is invariant under global rotation") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> vel(-30.0, 30.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 10000; ++i) {
    const double vx = vel(rng), vy = vel(rng), c = ang(rng), phi = ang(rng);
    VelocityView v0 = velocity_to_self(vx, vy, c);
    const double rx = vx * std::cos(phi) - vy * std::sin(phi);
    const double ry = vx * std::sin(phi) + vy * std::cos(phi);
    VelocityView v1 = velocity_to_self(rx, ry, wrap_angle(c + phi));
    CHECK(std::abs(v0.v_r - v1.v_r) < 1e-9);
    CHECK(std::abs(v0.v_theta - v1.v_theta) < 1e-9);
  }
}

TEST_CASE("theta_voxel_arc") {
  CHECK(theta_voxel_arc(0.0, 1.0) == 0.0);
  CHECK(theta_voxel_arc(10.0, kPi / 600.0) == doctest::Approx(0.0523598).epsilon(1e-5));
  CHECK(theta_voxel_arc(1.0, kPi) == doctest::Approx(2.0));
  // Matches the independent 2*r*sin(d/2) evaluation.
  CHECK(theta_voxel_arc(10.0, kPi / 600.0) ==
        doctest::Approx(2.0 * 10.0 * std::sin(kPi / 1200.0)).epsilon(1e-12));
}

#include "cyldet/geometry.hpp"

namespace cyldet {

double wrap_angle(double a) {
  // remainder() lands in [-pi, pi]; fold the open end onto pi.
  double r = std::remainder(a, kTwoPi);
  return r == -kPi ? kPi : r;
}

CylPoint cart_to_cyl(const CartPoint& p) {
  CylPoint c;
  c.r = std::hypot(p.x, p.y);
  c.theta = std::atan2(p.y, p.x);
  if (c.theta == -kPi) c.theta = kPi;
  c.z = p.z;
  return c;
}

CartPoint cyl_to_cart(const CylPoint& p) {
  return {p.r * std::cos(p.theta), p.r * std::sin(p.theta), p.z};
}

double relative_heading(double theta_dir, double theta_center) {
  return wrap_angle(theta_dir - theta_center);
}

double relative_heading_inv(double theta_bar_dir, double theta_center) {
  return wrap_angle(theta_bar_dir + theta_center);
}

Heading make_heading(double theta_dir, double theta_center) {
  Heading h;
  h.theta_dir = wrap_angle(theta_dir);
  h.theta_center = wrap_angle(theta_center);
  h.theta_bar_dir = relative_heading(theta_dir, theta_center);
  return h;
}

void heading_components(double theta_bar_dir, double& theta_r, double& theta_theta) {
  theta_r = std::cos(theta_bar_dir);
  theta_theta = std::sin(theta_bar_dir);
}

VelocityView velocity_to_self(double vx, double vy, double theta_center) {
  VelocityView v;
  v.vx = vx;
  v.vy = vy;
  v.v_abs = std::hypot(vx, vy);
  if (v.v_abs == 0.0) {
    // v_dir is undefined for a zero vector; pin everything to zero.
    return v;
  }
  v.v_dir = std::atan2(vy, vx);
  v.theta_bar_velocity = wrap_angle(v.v_dir - theta_center);
  v.v_r = v.v_abs * std::cos(v.theta_bar_velocity);
  v.v_theta = v.v_abs * std::sin(v.theta_bar_velocity);
  return v;
}

void velocity_from_self(double v_r, double v_theta, double theta_center, double& vx, double& vy) {
  double v_abs = std::hypot(v_r, v_theta);
  if (v_abs == 0.0) {
    vx = 0.0;
    vy = 0.0;
    return;
  }
  double v_dir = wrap_angle(std::atan2(v_theta, v_r) + theta_center);
  vx = v_abs * std::cos(v_dir);
  vy = v_abs * std::sin(v_dir);
}

double theta_voxel_arc(double r_center, double delta_theta) {
  return 2.0 * r_center * std::sin(delta_theta / 2.0);
}

}  // namespace cyldet

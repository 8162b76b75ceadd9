#pragma once

#include <cmath>
#include <numbers>

namespace cyldet {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CartPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct CylPoint {
  double r = 0.0;      // meters, >= 0
  double theta = 0.0;  // radians in (-pi, pi]
  double z = 0.0;      // meters
};

// An object's yaw paired with its azimuth as seen from the sensor.
struct Heading {
  double theta_dir = 0.0;      // world yaw
  double theta_center = 0.0;   // azimuth of the object center
  double theta_bar_dir = 0.0;  // yaw relative to the center azimuth
};

// A planar velocity in world axes and in the sensor-relative frame.
struct VelocityView {
  double vx = 0.0;
  double vy = 0.0;
  double v_abs = 0.0;
  double v_dir = 0.0;                // world direction angle of the velocity
  double theta_bar_velocity = 0.0;   // direction relative to the center azimuth
  double v_r = 0.0;                  // radial component (away from sensor)
  double v_theta = 0.0;              // tangential component
};

// Wraps any finite angle into (-pi, pi]; -pi maps to pi.
double wrap_angle(double a);

CylPoint cart_to_cyl(const CartPoint& p);
CartPoint cyl_to_cart(const CylPoint& p);

// Yaw relative to the object's azimuth, wrapped into (-pi, pi].
double relative_heading(double theta_dir, double theta_center);
double relative_heading_inv(double theta_bar_dir, double theta_center);

Heading make_heading(double theta_dir, double theta_center);

// Unit-circle split of a relative heading: (cos, sin).
void heading_components(double theta_bar_dir, double& theta_r, double& theta_theta);

// World-frame planar velocity expressed in the sensor-relative frame.
// Zero velocity maps to (0, 0) by convention.
VelocityView velocity_to_self(double vx, double vy, double theta_center);
void velocity_from_self(double v_r, double v_theta, double theta_center, double& vx, double& vy);

// Arc length of one voxel along the theta axis at a given radius:
// 2 * r * sin(delta_theta / 2).
double theta_voxel_arc(double r_center, double delta_theta);

}  // namespace cyldet

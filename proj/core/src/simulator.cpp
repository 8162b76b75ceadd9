#include "cyldet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cyldet/geometry.hpp"

namespace cyldet {

std::optional<double> ray_box_intersect(const double origin[3], const double dir[3],
                                        const Box3D& box) {
  // Slab test in the box frame: local x along the heading (length l),
  // local y across (width w).
  double c = std::cos(box.yaw), s = std::sin(box.yaw);
  double ox = origin[0] - box.x, oy = origin[1] - box.y, oz = origin[2] - box.z;
  double lo[3] = {ox * c + oy * s, -ox * s + oy * c, oz};
  double ld[3] = {dir[0] * c + dir[1] * s, -dir[0] * s + dir[1] * c, dir[2]};
  double half[3] = {box.l / 2.0, box.w / 2.0, box.h / 2.0};

  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::max();
  for (int ax = 0; ax < 3; ++ax) {
    if (ld[ax] == 0.0) {
      if (lo[ax] < -half[ax] || lo[ax] > half[ax]) return std::nullopt;
      continue;
    }
    double t0 = (-half[ax] - lo[ax]) / ld[ax];
    double t1 = (half[ax] - lo[ax]) / ld[ax];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near <= 0.0) return std::nullopt;  // origin inside or box behind
  return t_near;
}

const std::vector<ClassShape>& synthetic_class_shapes() {
  static const std::vector<ClassShape> shapes = {
      {1.9, 4.6, 1.7},  // car-like
      {0.7, 0.7, 1.8},  // pedestrian-like
      {2.5, 0.5, 1.0},  // barrier-like
      {2.5, 7.0, 2.9},  // truck-like
  };
  return shapes;
}

Scene simulate_scan(const std::vector<Box3D>& boxes, const ScannerSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double origin[3] = {0.0, 0.0, 0.0};

  Scene scene;
  scene.labels = boxes;
  for (double elev : spec.elevation_angles) {
    double ce = std::cos(elev), se = std::sin(elev);
    for (int i = 0; i < spec.n_azimuth; ++i) {
      double az = -kPi + (static_cast<double>(i) + 0.5) * kTwoPi / spec.n_azimuth;
      double dir[3] = {ce * std::cos(az), ce * std::sin(az), se};

      double t_hit = std::numeric_limits<double>::max();
      double intensity = 0.0;
      for (const Box3D& b : boxes) {
        if (auto t = ray_box_intersect(origin, dir, b); t && *t < t_hit) {
          t_hit = *t;
          intensity = 0.4 + 0.5 * static_cast<double>(b.class_id % 4) / 4.0;
        }
      }
      if (dir[2] < 0.0) {
        double t_ground = kGroundZ / dir[2];
        if (t_ground > 0.0 && t_ground < t_hit) {
          t_hit = t_ground;
          intensity = 0.15;
        }
      }
      if (t_hit > spec.max_range) continue;

      double range = t_hit;
      if (spec.noise_sigma > 0.0) range = std::max(0.01, t_hit + spec.noise_sigma * noise(rng));
      LidarPoint p;
      p.x = static_cast<float>(range * dir[0]);
      p.y = static_cast<float>(range * dir[1]);
      p.z = static_cast<float>(range * dir[2]);
      p.intensity = static_cast<float>(intensity);
      p.dt = 0.f;
      scene.cloud.points.push_back(p);
    }
  }
  return scene;
}

Scene random_scene(int n_boxes, double r_min, double r_max, const ScannerSpec& spec,
                   uint64_t seed, double v_max) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& shapes = synthetic_class_shapes();

  std::vector<Box3D> boxes;
  int attempts = 0;
  while (static_cast<int>(boxes.size()) < n_boxes && attempts++ < 100 * n_boxes) {
    Box3D b;
    b.class_id = static_cast<int>(unit(rng) * static_cast<double>(shapes.size()));
    b.class_id = std::min<int>(b.class_id, static_cast<int>(shapes.size()) - 1);
    const ClassShape& sh = shapes[b.class_id];
    b.w = sh.w;
    b.l = sh.l;
    b.h = sh.h;
    // Bias placement toward near range so small objects keep enough hits.
    double r = r_min + (r_max - r_min) * unit(rng) * unit(rng);
    double theta = -kPi + kTwoPi * unit(rng);
    b.x = r * std::cos(theta);
    b.y = r * std::sin(theta);
    b.z = kGroundZ + sh.h / 2.0;
    b.yaw = wrap_angle(-kPi + kTwoPi * unit(rng));
    b.vx = v_max * (2.0 * unit(rng) - 1.0);
    b.vy = v_max * (2.0 * unit(rng) - 1.0);

    // Reject overlaps with already placed boxes (coarse center distance).
    bool ok = true;
    for (const Box3D& other : boxes) {
      double d = std::hypot(b.x - other.x, b.y - other.y);
      if (d < 0.7 * (std::max(b.w, b.l) + std::max(other.w, other.l))) ok = false;
    }
    if (ok) boxes.push_back(b);
  }
  return simulate_scan(boxes, spec, seed);
}

}  // namespace cyldet

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cyldet/scene.hpp"

namespace cyldet {

// Ground plane height of the simulated world (sensor sits at the origin).
inline constexpr double kGroundZ = -1.8;

// Nearest positive hit distance of a ray from `origin` along unit `dir`
// against an oriented box, or nullopt.
std::optional<double> ray_box_intersect(const double origin[3], const double dir[3],
                                        const Box3D& box);

// Rotating-scanner simulation: one ray per (azimuth, elevation), nearest of
// box and ground-plane hits, Gaussian range noise. Deterministic given seed.
Scene simulate_scan(const std::vector<Box3D>& boxes, const ScannerSpec& spec, uint64_t seed);

// Default synthetic object library; classes 0..3 are car-, pedestrian-,
// barrier- and truck-like (w, l, h in meters).
struct ClassShape {
  double w, l, h;
};
const std::vector<ClassShape>& synthetic_class_shapes();

// Random scene of `n_boxes` labeled objects in [r_min, r_max], scanned with
// `spec`. Velocities are drawn in [-v_max, v_max] per axis.
Scene random_scene(int n_boxes, double r_min, double r_max, const ScannerSpec& spec,
                   uint64_t seed, double v_max = 2.0);

}  // namespace cyldet

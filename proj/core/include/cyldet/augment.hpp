#pragma once

#include <cstdint>
#include <vector>

#include "cyldet/geometry.hpp"
#include "cyldet/scene.hpp"

namespace cyldet {

struct AugmentParams {
  double rotation_min = -kPi / 8.0;  // global z-rotation range, radians
  double rotation_max = kPi / 8.0;
  double scale_min = 0.95;           // dimensionless, applied to coordinates and sizes
  double scale_max = 1.05;
  double translate = 0.2;            // uniform in [-translate, translate] per axis, meters
  double flip_x_prob = 0.5;          // mirror across the x-axis (negates y)
  double flip_y_prob = 0.5;          // mirror across the y-axis (negates x)
};

// Mirror across the x-axis: y -> -y, yaw -> -yaw, vy -> -vy.
Scene flip_x(const Scene& s);
// Mirror across the y-axis: x -> -x, yaw -> pi - yaw, vx -> -vx.
Scene flip_y(const Scene& s);

// Cartesian-space augmentation: flips, global rotation, global scaling,
// global translation, applied identically to points and labels.
// Deterministic given the seed; identity parameters leave the scene
// unchanged bitwise.
Scene augment(const Scene& s, uint64_t seed, const AugmentParams& params);

// Resampled epoch as indices into `scenes`, duplicating scenes that carry
// rare classes so per-class instance frequencies even out. Deterministic
// given the seed. Throws DataError on an empty dataset.
std::vector<size_t> balance_classes(const std::vector<Scene>& scenes, uint64_t seed);

}  // namespace cyldet

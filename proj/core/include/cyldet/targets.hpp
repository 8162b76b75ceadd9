#pragma once

#include <array>
#include <optional>
#include <vector>

#include "cyldet/scene.hpp"
#include "cyldet/tensor.hpp"
#include "cyldet/voxelizer.hpp"

namespace cyldet {

// Object in the network's self-oriented cylindrical view.
struct CylBox {
  double r_center = 0, theta_center = 0, z_center = 0;
  double w = 0, l = 0, h = 0;
  double theta_bar_dir = 0;
  double v_r = 0, v_theta = 0;
  int class_id = 0;
};

// Downsampled output grid the head predicts on.
struct OutputGrid {
  double r_min = 0;
  double delta_r = 0;      // input delta_r * stride_r
  double delta_theta = 0;  // input delta_theta * stride_theta
  int n_r = 0, n_theta = 0;
  int stride_r = 1, stride_theta = 1;

  static OutputGrid from(const GridSpec& spec, int stride_r, int stride_theta);
};

struct GaussianSpec {
  double sigma_r = 0;      // output voxels
  double sigma_theta = 0;  // output voxels
  double tau = 2.0;        // minimum radius
};

struct TargetSet {
  Tensor heatmap;  // [K, R, T] in [0, 1]
  Tensor reg;      // [10, R, T]: dr, dtheta, log w, log l, log h, z, v_r, v_theta, cos, sin
  Tensor mask;     // [1, R, T]
  std::vector<std::array<int, 3>> centers;  // (channel, i_r, i_theta)
};

// Rejects boxes whose center radius falls outside [r_min, r_max).
std::optional<CylBox> box_to_cylbox(const Box3D& b, double r_min, double r_max);

// Footprint-dependent Gaussian radius: minimum of the three overlap-condition
// roots for a w x l footprint (in voxels) at the given minimum overlap.
double cornernet_radius(double w_vox, double l_vox, double min_overlap);

// Per-axis radii from the box footprint in output-voxel units; the theta axis
// uses the arc width at the object's center radius.
GaussianSpec gaussian_radii(const CylBox& box, const OutputGrid& grid, double min_overlap = 0.1,
                            double tau = 2.0);

// Max-combined per-class Gaussian splats; the peak cell is exactly 1 and the
// theta axis wraps circularly.
Tensor render_heatmap(const std::vector<CylBox>& boxes, const OutputGrid& grid, int n_channels,
                      double min_overlap = 0.1, double tau = 2.0);

void encode_regression(const std::vector<CylBox>& boxes, const OutputGrid& grid, Tensor& reg,
                       Tensor& mask, std::vector<std::array<int, 3>>& centers);

// Full target set for one class group; box class ids are remapped to channel
// indices via `group_classes`, everything else is dropped.
TargetSet encode_targets(const std::vector<CylBox>& boxes, const std::vector<int>& group_classes,
                         const OutputGrid& grid, double min_overlap = 0.1, double tau = 2.0);

}  // namespace cyldet

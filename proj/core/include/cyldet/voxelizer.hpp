#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cyldet/geometry.hpp"
#include "cyldet/scene.hpp"
#include "cyldet/tensor.hpp"

namespace cyldet {

// Cylindrical binning geometry. theta covers the full ring (-pi, pi] and the
// ring must close exactly: n_theta * delta_theta = 2*pi within 1e-9.
struct GridSpec {
  double r_min = 1.0, r_max = 53.8, delta_r = 0.075;
  double delta_theta = 0.0;
  double z_min = -3.0, z_max = 5.0, delta_z = 0.2;
  int n_r = 0, n_theta = 0, n_z = 0;
  int max_points_per_voxel = 10;
  int max_voxels = 150000;

  double r_center(int i_r) const { return r_min + (i_r + 0.5) * delta_r; }
  double theta_center(int i_theta) const { return -kPi + (i_theta + 0.5) * delta_theta; }
  double z_center(int i_z) const { return z_min + (i_z + 0.5) * delta_z; }
};

// Validates ranges/sizes and derives the bin counts. Throws ConfigError on
// nonpositive sizes or a theta spacing that does not close the ring.
GridSpec make_grid_spec(double r_min, double r_max, double delta_r, double delta_theta,
                        double z_min, double z_max, double delta_z,
                        int max_points_per_voxel = 10, int max_voxels = 150000);

struct VoxelData {
  int i_r = 0, i_theta = 0, i_z = 0;
  std::array<float, 5> feature{};  // mean (dr, dtheta, dz, intensity, dt) offsets
  uint32_t count = 0;              // all in-range points of this voxel, before the cap
};

// Sparse voxel map in deterministic first-seen (file) order.
struct VoxelGrid {
  GridSpec spec;
  std::vector<VoxelData> voxels;
};

struct DenseInput {
  Tensor features;      // [5, n_z, n_r, n_theta]
  Tensor occupancy;     // [1, n_z, n_r, n_theta]
  Tensor range_matrix;  // [1, n_r, n_theta], voxel-center radius in meters
};

// Quantizes a cloud; out-of-range points are dropped, per-voxel features are
// the mean over the first max_points_per_voxel points in file order, and
// voxels beyond max_voxels are dropped in first-seen order. The result is
// independent of the worker count.
VoxelGrid voxelize(const PointCloud& cloud, const GridSpec& spec, int threads = 1);

DenseInput densify(const VoxelGrid& grid);

// Shifts every voxel k bins along theta (modulo n_theta).
VoxelGrid rotate_grid(const VoxelGrid& grid, int k);

// Cartesian grid used only by the voxel-statistics diagnostic.
struct CartGridSpec {
  double x_min, x_max, y_min, y_max, z_min, z_max;
  double dx, dy, dz;
  int nx, ny, nz;
};

// Cartesian grid covering the same volume with (about) the same voxel count.
CartGridSpec matched_cart_spec(const GridSpec& spec);

struct VoxelStatsRow {
  double range_m = 0.0;   // lower edge of the 1 m range bin
  double mean_cyl = 0.0;  // mean points per occupied cylindrical voxel
  double mean_cart = 0.0;
};

struct VoxelStatsAccumulator {
  struct Bin {
    double sum_cyl = 0, sum_cart = 0;
    int64_t voxels_cyl = 0, voxels_cart = 0;
  };
  std::vector<Bin> bins;

  void add(const PointCloud& cloud, const GridSpec& cyl, const CartGridSpec& cart);
  std::vector<VoxelStatsRow> rows() const;
};

// Per-1m-range-bin mean point count over occupied voxels, for a cylindrical
// and a Cartesian grid side by side.
std::vector<VoxelStatsRow> points_per_voxel_stats(const PointCloud& cloud, const GridSpec& cyl,
                                                  const CartGridSpec& cart);

// Coefficient of variation (std/mean) over the nonzero entries of one series.
double stats_coeff_variation(const std::vector<VoxelStatsRow>& rows, bool cylindrical);

}  // namespace cyldet

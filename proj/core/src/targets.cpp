#include "cyldet/targets.hpp"

#include <algorithm>
#include <cmath>

#include "cyldet/geometry.hpp"

namespace cyldet {

OutputGrid OutputGrid::from(const GridSpec& spec, int stride_r, int stride_theta) {
  OutputGrid g;
  g.r_min = spec.r_min;
  g.delta_r = spec.delta_r * stride_r;
  g.delta_theta = spec.delta_theta * stride_theta;
  g.n_r = (spec.n_r + stride_r - 1) / stride_r;
  g.n_theta = (spec.n_theta + stride_theta - 1) / stride_theta;
  g.stride_r = stride_r;
  g.stride_theta = stride_theta;
  return g;
}

std::optional<CylBox> box_to_cylbox(const Box3D& b, double r_min, double r_max) {
  CylPoint c = cart_to_cyl({b.x, b.y, b.z});
  if (c.r < r_min || c.r >= r_max) return std::nullopt;
  CylBox out;
  out.r_center = c.r;
  out.theta_center = c.theta;
  out.z_center = b.z;
  out.w = b.w;
  out.l = b.l;
  out.h = b.h;
  out.theta_bar_dir = relative_heading(b.yaw, c.theta);
  VelocityView v = velocity_to_self(b.vx, b.vy, c.theta);
  out.v_r = v.v_r;
  out.v_theta = v.v_theta;
  out.class_id = b.class_id;
  return out;
}

double cornernet_radius(double w, double l, double min_overlap) {
  const double t = min_overlap;
  // Both boxes shifted diagonally against each other.
  const double b1 = w + l;
  const double c1 = w * l * (1.0 - t) / (1.0 + t);
  const double r1 = (b1 - std::sqrt(std::max(0.0, b1 * b1 - 4.0 * c1))) / 2.0;
  // Shifted box shrunk inside the original.
  const double b2 = 2.0 * (w + l);
  const double c2 = (1.0 - t) * w * l;
  const double r2 = (b2 - std::sqrt(std::max(0.0, b2 * b2 - 16.0 * c2))) / 8.0;
  // Shifted box grown around the original.
  const double b3 = -2.0 * t * (w + l);
  const double c3 = (t - 1.0) * w * l;
  const double r3 = (b3 + std::sqrt(std::max(0.0, b3 * b3 - 16.0 * t * c3))) / (8.0 * t);
  return std::min({r1, r2, r3});
}

GaussianSpec gaussian_radii(const CylBox& box, const OutputGrid& grid, double min_overlap,
                            double tau) {
  GaussianSpec g;
  g.tau = tau;
  const double w_r = box.w / grid.delta_r;
  const double l_r = box.l / grid.delta_r;
  g.sigma_r = std::max(cornernet_radius(w_r, l_r, min_overlap), tau);
  const double arc = theta_voxel_arc(box.r_center, grid.delta_theta);
  const double w_t = box.w / arc;
  const double l_t = box.l / arc;
  g.sigma_theta = std::max(cornernet_radius(w_t, l_t, min_overlap), tau);
  return g;
}

namespace {

int center_r_index(const CylBox& b, const OutputGrid& g) {
  int i = static_cast<int>((b.r_center - g.r_min) / g.delta_r);
  return std::clamp(i, 0, g.n_r - 1);
}

int center_theta_index(const CylBox& b, const OutputGrid& g) {
  int i = static_cast<int>((b.theta_center + kPi) / g.delta_theta);
  return std::clamp(i, 0, g.n_theta - 1);
}

}  // namespace

Tensor render_heatmap(const std::vector<CylBox>& boxes, const OutputGrid& grid, int n_channels,
                      double min_overlap, double tau) {
  Tensor heat({n_channels, grid.n_r, grid.n_theta});
  for (const CylBox& b : boxes) {
    GaussianSpec g = gaussian_radii(b, grid, min_overlap, tau);
    const int ci = center_r_index(b, grid);
    const int cj = center_theta_index(b, grid);
    const int er = std::min(grid.n_r - 1, static_cast<int>(std::ceil(3.0 * g.sigma_r)));
    const int et = std::min(grid.n_theta / 2, static_cast<int>(std::ceil(3.0 * g.sigma_theta)));
    for (int di = -er; di <= er; ++di) {
      const int i = ci + di;
      if (i < 0 || i >= grid.n_r) continue;
      for (int dj = -et; dj <= et; ++dj) {
        const int j = (((cj + dj) % grid.n_theta) + grid.n_theta) % grid.n_theta;
        const float v = static_cast<float>(
            std::exp(-(di * di / (2.0 * g.sigma_r * g.sigma_r) +
                       dj * dj / (2.0 * g.sigma_theta * g.sigma_theta))));
        float& cell = heat(b.class_id, i, j);
        cell = std::max(cell, v);
      }
    }
  }
  return heat;
}

void encode_regression(const std::vector<CylBox>& boxes, const OutputGrid& grid, Tensor& reg,
                       Tensor& mask, std::vector<std::array<int, 3>>& centers) {
  reg = Tensor({10, grid.n_r, grid.n_theta});
  mask = Tensor({1, grid.n_r, grid.n_theta});
  centers.clear();
  // Collisions at a shared center cell: the larger BEV footprint wins.
  Tensor footprint({1, grid.n_r, grid.n_theta});
  std::vector<int> class_at(static_cast<size_t>(grid.n_r) * grid.n_theta, -1);
  for (const CylBox& b : boxes) {
    const int i = center_r_index(b, grid);
    const int j = center_theta_index(b, grid);
    const auto fp = static_cast<float>(b.w * b.l);
    if (mask(0, i, j) != 0.f && footprint(0, i, j) >= fp) continue;
    footprint(0, i, j) = fp;
    class_at[static_cast<size_t>(i) * grid.n_theta + j] = b.class_id;

    const double pr = (b.r_center - grid.r_min) / grid.delta_r;
    const double pt = (b.theta_center + kPi) / grid.delta_theta;
    reg(0, i, j) = static_cast<float>(pr - i - 0.5);
    reg(1, i, j) = static_cast<float>(pt - j - 0.5);
    reg(2, i, j) = static_cast<float>(std::log(b.w));
    reg(3, i, j) = static_cast<float>(std::log(b.l));
    reg(4, i, j) = static_cast<float>(std::log(b.h));
    reg(5, i, j) = static_cast<float>(b.z_center);
    reg(6, i, j) = static_cast<float>(b.v_r);
    reg(7, i, j) = static_cast<float>(b.v_theta);
    reg(8, i, j) = static_cast<float>(std::cos(b.theta_bar_dir));
    reg(9, i, j) = static_cast<float>(std::sin(b.theta_bar_dir));
    mask(0, i, j) = 1.f;
  }
  for (int i = 0; i < grid.n_r; ++i)
    for (int j = 0; j < grid.n_theta; ++j) {
      int cls = class_at[static_cast<size_t>(i) * grid.n_theta + j];
      if (cls >= 0) centers.push_back({cls, i, j});
    }
}

TargetSet encode_targets(const std::vector<CylBox>& boxes, const std::vector<int>& group_classes,
                         const OutputGrid& grid, double min_overlap, double tau) {
  std::vector<CylBox> group_boxes;
  for (const CylBox& b : boxes) {
    auto it = std::find(group_classes.begin(), group_classes.end(), b.class_id);
    if (it == group_classes.end()) continue;
    CylBox remapped = b;
    remapped.class_id = static_cast<int>(it - group_classes.begin());
    group_boxes.push_back(remapped);
  }
  TargetSet t;
  t.heatmap = render_heatmap(group_boxes, grid, static_cast<int>(group_classes.size()),
                             min_overlap, tau);
  encode_regression(group_boxes, grid, t.reg, t.mask, t.centers);
  return t;
}

}  // namespace cyldet

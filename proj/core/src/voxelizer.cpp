#include "cyldet/voxelizer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "cyldet/errors.hpp"
#include "cyldet/geometry.hpp"

namespace cyldet {

GridSpec make_grid_spec(double r_min, double r_max, double delta_r, double delta_theta,
                        double z_min, double z_max, double delta_z, int max_points_per_voxel,
                        int max_voxels) {
  if (delta_r <= 0.0 || delta_theta <= 0.0 || delta_z <= 0.0)
    throw ConfigError("grid voxel sizes must be positive");
  if (r_max <= r_min || z_max <= z_min) throw ConfigError("grid ranges must be nonempty");
  if (r_min < 0.0) throw ConfigError("grid r_min must be nonnegative");
  if (max_points_per_voxel < 1 || max_voxels < 1)
    throw ConfigError("grid caps must be positive");

  GridSpec spec;
  spec.r_min = r_min;
  spec.r_max = r_max;
  spec.delta_r = delta_r;
  spec.delta_theta = delta_theta;
  spec.z_min = z_min;
  spec.z_max = z_max;
  spec.delta_z = delta_z;
  spec.max_points_per_voxel = max_points_per_voxel;
  spec.max_voxels = max_voxels;

  double turns = kTwoPi / delta_theta;
  spec.n_theta = static_cast<int>(std::lround(turns));
  if (spec.n_theta < 1 || std::abs(spec.n_theta * delta_theta - kTwoPi) > 1e-9)
    throw ConfigError("delta_theta does not close the ring: 2*pi/delta_theta must be integral");
  spec.n_r = static_cast<int>(std::lround((r_max - r_min) / delta_r));
  spec.n_z = static_cast<int>(std::lround((z_max - z_min) / delta_z));
  if (spec.n_r < 1 || spec.n_z < 1) throw ConfigError("grid has no bins on r or z");
  return spec;
}

namespace {

struct PartialVoxel {
  // First <= cap contributions in chunk order, plus the total count.
  std::vector<std::array<double, 5>> feats;
  uint32_t count = 0;
};

struct ChunkResult {
  std::unordered_map<uint64_t, PartialVoxel> map;
  std::vector<uint64_t> order;  // first-seen within the chunk
};

ChunkResult bin_chunk(const LidarPoint* pts, size_t n, const GridSpec& spec) {
  ChunkResult res;
  res.map.reserve(n / 2 + 8);
  const size_t cap = static_cast<size_t>(spec.max_points_per_voxel);
  for (size_t i = 0; i < n; ++i) {
    const LidarPoint& p = pts[i];
    CylPoint c = cart_to_cyl({p.x, p.y, p.z});
    double pr = (c.r - spec.r_min) / spec.delta_r;
    double pz = (c.z - spec.z_min) / spec.delta_z;
    if (pr < 0.0 || pz < 0.0) continue;
    int i_r = static_cast<int>(pr);
    int i_z = static_cast<int>(pz);
    if (i_r >= spec.n_r || i_z >= spec.n_z) continue;
    int i_theta = static_cast<int>((c.theta + kPi) / spec.delta_theta);
    // theta == pi folds into the last bin.
    if (i_theta >= spec.n_theta) i_theta = spec.n_theta - 1;

    uint64_t key = (static_cast<uint64_t>(i_z) * spec.n_r + i_r) * spec.n_theta + i_theta;
    auto [it, inserted] = res.map.try_emplace(key);
    if (inserted) res.order.push_back(key);
    PartialVoxel& v = it->second;
    ++v.count;
    if (v.feats.size() < cap) {
      v.feats.push_back({c.r - spec.r_center(i_r), c.theta - spec.theta_center(i_theta),
                         c.z - spec.z_center(i_z), static_cast<double>(p.intensity),
                         static_cast<double>(p.dt)});
    }
  }
  return res;
}

}  // namespace

VoxelGrid voxelize(const PointCloud& cloud, const GridSpec& spec, int threads) {
  threads = std::max(1, threads);
  size_t n = cloud.points.size();
  size_t n_chunks = std::min<size_t>(threads, std::max<size_t>(n, 1));

  std::vector<ChunkResult> chunks(n_chunks);
  if (n_chunks == 1) {
    chunks[0] = bin_chunk(cloud.points.data(), n, spec);
  } else {
    std::vector<std::thread> workers;
    size_t per = (n + n_chunks - 1) / n_chunks;
    for (size_t c = 0; c < n_chunks; ++c) {
      size_t lo = std::min(n, c * per);
      size_t hi = std::min(n, lo + per);
      workers.emplace_back([&, c, lo, hi] {
        chunks[c] = bin_chunk(cloud.points.data() + lo, hi - lo, spec);
      });
    }
    for (auto& w : workers) w.join();
  }

  // Order-stable merge: voxel order is global first-seen order, features use
  // the first max_points_per_voxel points in file order across chunks.
  struct Merged {
    std::vector<std::array<double, 5>> feats;
    uint64_t count = 0;
    uint64_t key = 0;
  };
  std::unordered_map<uint64_t, size_t> index;
  std::vector<Merged> merged;
  const size_t cap = static_cast<size_t>(spec.max_points_per_voxel);
  const size_t max_voxels = static_cast<size_t>(spec.max_voxels);
  for (const ChunkResult& chunk : chunks) {
    for (uint64_t key : chunk.order) {
      auto it = index.find(key);
      if (it == index.end()) {
        if (merged.size() >= max_voxels) continue;  // later-seen voxels dropped
        index.emplace(key, merged.size());
        merged.push_back(Merged{{}, 0, key});
        it = index.find(key);
      }
      Merged& m = merged[it->second];
      const PartialVoxel& part = chunk.map.at(key);
      m.count += part.count;
      for (const auto& f : part.feats) {
        if (m.feats.size() >= cap) break;
        m.feats.push_back(f);
      }
    }
  }

  VoxelGrid grid;
  grid.spec = spec;
  grid.voxels.reserve(merged.size());
  for (const Merged& m : merged) {
    VoxelData v;
    v.i_theta = static_cast<int>(m.key % spec.n_theta);
    v.i_r = static_cast<int>((m.key / spec.n_theta) % spec.n_r);
    v.i_z = static_cast<int>(m.key / (static_cast<uint64_t>(spec.n_theta) * spec.n_r));
    v.count = static_cast<uint32_t>(m.count);
    std::array<double, 5> sum{};
    for (const auto& f : m.feats)
      for (int k = 0; k < 5; ++k) sum[k] += f[k];
    for (int k = 0; k < 5; ++k)
      v.feature[k] = static_cast<float>(sum[k] / static_cast<double>(m.feats.size()));
    grid.voxels.push_back(v);
  }
  return grid;
}

DenseInput densify(const VoxelGrid& grid) {
  const GridSpec& s = grid.spec;
  DenseInput d;
  d.features = Tensor({5, s.n_z, s.n_r, s.n_theta});
  d.occupancy = Tensor({1, s.n_z, s.n_r, s.n_theta});
  d.range_matrix = Tensor({1, s.n_r, s.n_theta});
  for (int i_r = 0; i_r < s.n_r; ++i_r) {
    float r = static_cast<float>(s.r_center(i_r));
    for (int i_t = 0; i_t < s.n_theta; ++i_t) d.range_matrix(0, i_r, i_t) = r;
  }
  for (const VoxelData& v : grid.voxels) {
    for (int c = 0; c < 5; ++c) d.features(c, v.i_z, v.i_r, v.i_theta) = v.feature[c];
    d.occupancy(0, v.i_z, v.i_r, v.i_theta) = 1.f;
  }
  return d;
}

VoxelGrid rotate_grid(const VoxelGrid& grid, int k) {
  VoxelGrid out = grid;
  int n = grid.spec.n_theta;
  int shift = ((k % n) + n) % n;
  for (VoxelData& v : out.voxels) v.i_theta = (v.i_theta + shift) % n;
  return out;
}

CartGridSpec matched_cart_spec(const GridSpec& spec) {
  CartGridSpec c{};
  c.x_min = c.y_min = -spec.r_max;
  c.x_max = c.y_max = spec.r_max;
  c.z_min = spec.z_min;
  c.z_max = spec.z_max;
  c.nz = spec.n_z;
  c.dz = spec.delta_z;
  int side = std::max(1, static_cast<int>(std::lround(
                             std::sqrt(static_cast<double>(spec.n_r) * spec.n_theta))));
  c.nx = c.ny = side;
  c.dx = (c.x_max - c.x_min) / side;
  c.dy = (c.y_max - c.y_min) / side;
  return c;
}

void VoxelStatsAccumulator::add(const PointCloud& cloud, const GridSpec& cyl,
                                const CartGridSpec& cart) {
  auto bin_of = [this](double range) -> Bin& {
    auto idx = static_cast<size_t>(std::max(0.0, range));
    if (idx >= bins.size()) bins.resize(idx + 1);
    return bins[idx];
  };

  VoxelGrid grid = voxelize(cloud, cyl, 1);
  for (const VoxelData& v : grid.voxels) {
    Bin& b = bin_of(cyl.r_center(v.i_r));
    b.sum_cyl += static_cast<double>(v.count);
    b.voxels_cyl += 1;
  }

  std::unordered_map<uint64_t, uint32_t> cart_counts;
  for (const LidarPoint& p : cloud.points) {
    double px = (p.x - cart.x_min) / cart.dx;
    double py = (p.y - cart.y_min) / cart.dy;
    double pz = (p.z - cart.z_min) / cart.dz;
    if (px < 0 || py < 0 || pz < 0) continue;
    int ix = static_cast<int>(px), iy = static_cast<int>(py), iz = static_cast<int>(pz);
    if (ix >= cart.nx || iy >= cart.ny || iz >= cart.nz) continue;
    uint64_t key = (static_cast<uint64_t>(iz) * cart.nx + ix) * cart.ny + iy;
    ++cart_counts[key];
  }
  for (const auto& [key, count] : cart_counts) {
    auto iy = static_cast<int>(key % cart.ny);
    auto ix = static_cast<int>((key / cart.ny) % cart.nx);
    double xc = cart.x_min + (ix + 0.5) * cart.dx;
    double yc = cart.y_min + (iy + 0.5) * cart.dy;
    Bin& b = bin_of(std::hypot(xc, yc));
    b.sum_cart += static_cast<double>(count);
    b.voxels_cart += 1;
  }
}

std::vector<VoxelStatsRow> VoxelStatsAccumulator::rows() const {
  std::vector<VoxelStatsRow> out;
  for (size_t i = 0; i < bins.size(); ++i) {
    const Bin& b = bins[i];
    if (b.voxels_cyl == 0 && b.voxels_cart == 0) continue;
    VoxelStatsRow row;
    row.range_m = static_cast<double>(i);
    row.mean_cyl = b.voxels_cyl ? b.sum_cyl / static_cast<double>(b.voxels_cyl) : 0.0;
    row.mean_cart = b.voxels_cart ? b.sum_cart / static_cast<double>(b.voxels_cart) : 0.0;
    out.push_back(row);
  }
  return out;
}

std::vector<VoxelStatsRow> points_per_voxel_stats(const PointCloud& cloud, const GridSpec& cyl,
                                                  const CartGridSpec& cart) {
  VoxelStatsAccumulator acc;
  acc.add(cloud, cyl, cart);
  return acc.rows();
}

double stats_coeff_variation(const std::vector<VoxelStatsRow>& rows, bool cylindrical) {
  std::vector<double> vals;
  for (const auto& r : rows) {
    double v = cylindrical ? r.mean_cyl : r.mean_cart;
    if (v > 0.0) vals.push_back(v);
  }
  if (vals.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vals.size());
  return std::sqrt(var) / mean;
}

}  // namespace cyldet

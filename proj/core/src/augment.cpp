#include "cyldet/augment.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "cyldet/errors.hpp"

namespace cyldet {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Scene flip_x(const Scene& s) {
  Scene out = s;
  for (auto& p : out.cloud.points) p.y = -p.y;
  for (auto& b : out.labels) {
    b.y = -b.y;
    b.yaw = wrap_angle(-b.yaw);
    b.vy = -b.vy;
  }
  return out;
}

Scene flip_y(const Scene& s) {
  Scene out = s;
  for (auto& p : out.cloud.points) p.x = -p.x;
  for (auto& b : out.labels) {
    b.x = -b.x;
    b.yaw = wrap_angle(kPi - b.yaw);
    b.vx = -b.vx;
  }
  return out;
}

Scene augment(const Scene& s, uint64_t seed, const AugmentParams& params) {
  std::mt19937_64 rng(seed);
  // Draw order is fixed so a seed pins the whole transform.
  bool do_flip_x = std::bernoulli_distribution(params.flip_x_prob)(rng);
  bool do_flip_y = std::bernoulli_distribution(params.flip_y_prob)(rng);
  double phi = uniform(rng, params.rotation_min, params.rotation_max);
  double scale = uniform(rng, params.scale_min, params.scale_max);
  double tx = uniform(rng, -params.translate, params.translate);
  double ty = uniform(rng, -params.translate, params.translate);
  double tz = uniform(rng, -params.translate, params.translate);

  Scene out = s;
  if (do_flip_x) out = flip_x(out);
  if (do_flip_y) out = flip_y(out);

  if (phi != 0.0) {
    double c = std::cos(phi), sn = std::sin(phi);
    for (auto& p : out.cloud.points) {
      double x = p.x, y = p.y;
      p.x = static_cast<float>(x * c - y * sn);
      p.y = static_cast<float>(x * sn + y * c);
    }
    for (auto& b : out.labels) {
      double x = b.x, y = b.y;
      b.x = x * c - y * sn;
      b.y = x * sn + y * c;
      b.yaw = wrap_angle(b.yaw + phi);
      double vx = b.vx, vy = b.vy;
      b.vx = vx * c - vy * sn;
      b.vy = vx * sn + vy * c;
    }
  }
  if (scale != 1.0) {
    for (auto& p : out.cloud.points) {
      p.x = static_cast<float>(p.x * scale);
      p.y = static_cast<float>(p.y * scale);
      p.z = static_cast<float>(p.z * scale);
    }
    for (auto& b : out.labels) {
      b.x *= scale;
      b.y *= scale;
      b.z *= scale;
      b.w *= scale;
      b.l *= scale;
      b.h *= scale;
    }
  }
  if (tx != 0.0 || ty != 0.0 || tz != 0.0) {
    for (auto& p : out.cloud.points) {
      p.x = static_cast<float>(p.x + tx);
      p.y = static_cast<float>(p.y + ty);
      p.z = static_cast<float>(p.z + tz);
    }
    for (auto& b : out.labels) {
      b.x += tx;
      b.y += ty;
      b.z += tz;
    }
  }
  return out;
}

std::vector<size_t> balance_classes(const std::vector<Scene>& scenes, uint64_t seed) {
  if (scenes.empty()) throw DataError("balance_classes: empty dataset");
  std::mt19937_64 rng(seed);

  std::map<int, int64_t> class_counts;
  for (const Scene& s : scenes)
    for (const Box3D& b : s.labels) ++class_counts[b.class_id];

  std::vector<size_t> order(scenes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int64_t max_count = 0;
  for (auto& [cls, n] : class_counts) max_count = std::max(max_count, n);

  bool balanced = true;
  for (auto& [cls, n] : class_counts)
    if (static_cast<double>(max_count - n) > 0.1 * static_cast<double>(max_count))
      balanced = false;

  if (balanced || class_counts.size() <= 1) {
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  // Duplicate each scene by the rarest class it carries; fractional copies
  // are rounded stochastically so expected frequencies hit the target.
  std::vector<size_t> epoch;
  for (size_t i = 0; i < scenes.size(); ++i) {
    double factor = 1.0;
    for (const Box3D& b : scenes[i].labels)
      factor = std::max(factor,
                        static_cast<double>(max_count) /
                            static_cast<double>(class_counts[b.class_id]));
    auto copies = static_cast<int64_t>(factor);
    double frac = factor - static_cast<double>(copies);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < frac) ++copies;
    for (int64_t c = 0; c < copies; ++c) epoch.push_back(i);
  }
  std::shuffle(epoch.begin(), epoch.end(), rng);
  return epoch;
}

}  // namespace cyldet

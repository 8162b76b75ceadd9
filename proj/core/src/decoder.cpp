#include "cyldet/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "cyldet/augment.hpp"
#include "cyldet/errors.hpp"
#include "cyldet/geometry.hpp"

namespace cyldet {

std::vector<Peak> extract_peaks(const Tensor& heatmap_prob, const DecodeConfig& cfg) {
  const int K = static_cast<int>(heatmap_prob.dim(0));
  const int R = static_cast<int>(heatmap_prob.dim(1));
  const int Tn = static_cast<int>(heatmap_prob.dim(2));
  std::vector<Peak> peaks;
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < Tn; ++j) {
        const float v = heatmap_prob(k, i, j);
        bool is_peak = true;
        for (int di = -1; di <= 1 && is_peak; ++di) {
          const int ni = i + di;
          if (ni < 0 || ni >= R) continue;
          for (int dj = -1; dj <= 1; ++dj) {
            if (di == 0 && dj == 0) continue;
            const int nj = (j + dj + Tn) % Tn;
            if (heatmap_prob(k, ni, nj) > v) {
              is_peak = false;
              break;
            }
          }
        }
        if (is_peak) peaks.push_back({k, i, j, v});
      }

  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (static_cast<int>(peaks.size()) > cfg.top_k) peaks.resize(cfg.top_k);
  std::erase_if(peaks, [&](const Peak& p) { return p.score < cfg.score_threshold; });
  return peaks;
}

Detection read_box(const Peak& peak, const Tensor& reg, const OutputGrid& grid, int class_id) {
  const int i = peak.i_r, j = peak.i_theta;
  const double dr = reg(0, i, j);
  const double dt = reg(1, i, j);
  const double r = grid.r_min + (i + dr + 0.5) * grid.delta_r;
  const double theta_center = wrap_angle(-kPi + (j + dt + 0.5) * grid.delta_theta);

  Detection d;
  d.class_id = class_id;
  d.score = peak.score;
  d.w = std::exp(std::min(20.0, static_cast<double>(reg(2, i, j))));
  d.l = std::exp(std::min(20.0, static_cast<double>(reg(3, i, j))));
  d.h = std::exp(std::min(20.0, static_cast<double>(reg(4, i, j))));
  d.z = reg(5, i, j);
  const double theta_bar = std::atan2(reg(9, i, j), reg(8, i, j));
  d.yaw = relative_heading_inv(theta_bar, theta_center);
  velocity_from_self(reg(6, i, j), reg(7, i, j), theta_center, d.vx, d.vy);
  CartPoint c = cyl_to_cart({r, theta_center, d.z});
  d.x = c.x;
  d.y = c.y;
  return d;
}

namespace {

using Poly = std::vector<std::array<double, 2>>;

Poly box_corners(const Detection& d) {
  const double c = std::cos(d.yaw), s = std::sin(d.yaw);
  const double hl = d.l / 2.0, hw = d.w / 2.0;  // local x along the heading
  Poly p(4);
  // Counter-clockwise so clip_edge keeps the interior.
  const double lx[4] = {hl, hl, -hl, -hl};
  const double ly[4] = {-hw, hw, hw, -hw};
  for (int i = 0; i < 4; ++i)
    p[i] = {d.x + lx[i] * c - ly[i] * s, d.y + lx[i] * s + ly[i] * c};
  return p;
}

double poly_area(const Poly& p) {
  double a = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const auto& u = p[i];
    const auto& v = p[(i + 1) % p.size()];
    a += u[0] * v[1] - v[0] * u[1];
  }
  return std::abs(a) / 2.0;
}

// Sutherland-Hodgman clip of `subject` by the half-plane left of (a, b).
Poly clip_edge(const Poly& subject, const std::array<double, 2>& a,
               const std::array<double, 2>& b) {
  Poly out;
  const double ex = b[0] - a[0], ey = b[1] - a[1];
  auto side = [&](const std::array<double, 2>& p) {
    return ex * (p[1] - a[1]) - ey * (p[0] - a[0]);
  };
  for (size_t i = 0; i < subject.size(); ++i) {
    const auto& cur = subject[i];
    const auto& prev = subject[(i + subject.size() - 1) % subject.size()];
    const double sc = side(cur), sp = side(prev);
    if (sc >= 0.0) {
      if (sp < 0.0) {
        const double t = sp / (sp - sc);
        out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
      }
      out.push_back(cur);
    } else if (sp >= 0.0) {
      const double t = sp / (sp - sc);
      out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
    }
  }
  return out;
}

}  // namespace

double bev_iou(const Detection& a, const Detection& b) {
  const double area_a = a.w * a.l;
  const double area_b = b.w * b.l;
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;

  Poly pa = box_corners(a);
  const Poly pb = box_corners(b);
  // Corners are counter-clockwise for positive yaw frames; clip a by b.
  Poly inter = pa;
  for (size_t i = 0; i < pb.size() && !inter.empty(); ++i)
    inter = clip_edge(inter, pb[i], pb[(i + 1) % pb.size()]);
  if (inter.size() < 3) return 0.0;
  const double ai = poly_area(inter);
  return ai / (area_a + area_b - ai);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold, int max_out) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const Detection& d : dets) {
    bool suppressed = false;
    for (const Detection& k : kept)
      if (bev_iou(d, k) > iou_threshold) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(d);
  }
  if (max_out >= 0 && static_cast<int>(kept.size()) > max_out) kept.resize(max_out);
  return kept;
}

std::vector<Detection> decode_frame(const std::vector<GroupDecodeInput>& groups,
                                    const std::vector<std::vector<int>>& group_classes,
                                    const OutputGrid& grid, const DecodeConfig& cfg) {
  struct Tagged {
    int group;
    Peak peak;
  };
  std::vector<Tagged> all;
  DecodeConfig unlimited = cfg;
  unlimited.top_k = std::numeric_limits<int>::max();
  unlimited.score_threshold = 0.0;
  for (size_t g = 0; g < groups.size(); ++g)
    for (const Peak& p : extract_peaks(groups[g].heatmap_prob, unlimited))
      all.push_back({static_cast<int>(g), p});

  // Global top_k across groups, then the score gate.
  std::stable_sort(all.begin(), all.end(),
                   [](const Tagged& a, const Tagged& b) { return a.peak.score > b.peak.score; });
  if (static_cast<int>(all.size()) > cfg.top_k) all.resize(cfg.top_k);
  std::erase_if(all, [&](const Tagged& t) { return t.peak.score < cfg.score_threshold; });

  std::vector<std::vector<Detection>> per_group(groups.size());
  for (const Tagged& t : all) {
    const int cls = group_classes[t.group][t.peak.channel];
    per_group[t.group].push_back(read_box(t.peak, groups[t.group].reg, grid, cls));
  }
  std::vector<Detection> out;
  for (auto& dets : per_group) {
    auto kept = nms(std::move(dets), cfg.nms_iou, cfg.max_per_group);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

namespace {

Detection unflip_y(Detection d) {
  d.x = -d.x;
  d.yaw = wrap_angle(kPi - d.yaw);
  d.vx = -d.vx;
  return d;
}

Detection merge_pair(const Detection& a, const Detection& b) {
  const double wa = a.score / (a.score + b.score);
  const double wb = 1.0 - wa;
  Detection m = a;
  m.score = std::max(a.score, b.score);
  m.x = wa * a.x + wb * b.x;
  m.y = wa * a.y + wb * b.y;
  m.z = wa * a.z + wb * b.z;
  m.w = wa * a.w + wb * b.w;
  m.l = wa * a.l + wb * b.l;
  m.h = wa * a.h + wb * b.h;
  m.yaw = wrap_angle(a.yaw + wb * wrap_angle(b.yaw - a.yaw));
  m.vx = wa * a.vx + wb * b.vx;
  m.vy = wa * a.vy + wb * b.vy;
  return m;
}

}  // namespace

std::vector<Detection> flip_test_aggregate(const Scene& scene, const ModelFn& model,
                                           const std::vector<std::vector<int>>& group_classes,
                                           const OutputGrid& grid, const DecodeConfig& cfg) {
  DecodeConfig pre = cfg;
  pre.nms_iou = cfg.nms_iou;
  std::vector<Detection> a = decode_frame(model(scene.cloud), group_classes, grid, pre);

  Scene flipped = flip_y(scene);
  std::vector<Detection> b_raw = decode_frame(model(flipped.cloud), group_classes, grid, pre);
  std::vector<Detection> b;
  b.reserve(b_raw.size());
  for (const Detection& d : b_raw) b.push_back(unflip_y(d));

  // Pair across passes per class at bev_iou > 0.5, best match first.
  std::vector<bool> used_b(b.size(), false);
  std::vector<Detection> merged;
  std::stable_sort(a.begin(), a.end(),
                   [](const Detection& x, const Detection& y) { return x.score > y.score; });
  for (const Detection& da : a) {
    int best = -1;
    double best_iou = 0.5;
    for (size_t i = 0; i < b.size(); ++i) {
      if (used_b[i] || b[i].class_id != da.class_id) continue;
      const double iou = bev_iou(da, b[i]);
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      used_b[static_cast<size_t>(best)] = true;
      merged.push_back(merge_pair(da, b[static_cast<size_t>(best)]));
    } else {
      merged.push_back(da);
    }
  }
  for (size_t i = 0; i < b.size(); ++i)
    if (!used_b[i]) merged.push_back(b[i]);

  // Final standard NMS per class group.
  std::vector<Detection> out;
  for (const auto& classes : group_classes) {
    std::vector<Detection> group;
    for (const Detection& d : merged)
      if (std::find(classes.begin(), classes.end(), d.class_id) != classes.end())
        group.push_back(d);
    auto kept = nms(std::move(group), cfg.nms_iou, cfg.max_per_group);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

void save_detections(const std::string& frame_id, const std::vector<Detection>& dets,
                     std::ostream& os) {
  for (const Detection& d : dets) {
    nlohmann::ordered_json j;
    j["frame"] = frame_id;
    j["class"] = d.class_id;
    j["score"] = d.score;
    j["center"] = {d.x, d.y, d.z};
    j["size"] = {d.w, d.l, d.h};
    j["yaw"] = d.yaw;
    j["velocity"] = {d.vx, d.vy};
    os << j.dump() << '\n';
  }
}

std::vector<std::pair<std::string, Detection>> load_detections(
    const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  std::vector<std::pair<std::string, Detection>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Detection d;
      d.class_id = j.at("class").get<int>();
      d.score = j.at("score").get<double>();
      d.x = j.at("center").at(0).get<double>();
      d.y = j.at("center").at(1).get<double>();
      d.z = j.at("center").at(2).get<double>();
      d.w = j.at("size").at(0).get<double>();
      d.l = j.at("size").at(1).get<double>();
      d.h = j.at("size").at(2).get<double>();
      d.yaw = j.at("yaw").get<double>();
      d.vx = j.at("velocity").at(0).get<double>();
      d.vy = j.at("velocity").at(1).get<double>();
      out.emplace_back(j.at("frame").get<std::string>(), d);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatError::Kind::BadValue,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace cyldet

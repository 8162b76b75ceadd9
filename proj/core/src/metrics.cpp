#include "cyldet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cyldet/errors.hpp"
#include "cyldet/geometry.hpp"

namespace cyldet {
namespace {

std::vector<size_t> score_order(const std::vector<DetRecord>& dets) {
  std::vector<size_t> order(dets.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return dets[a].det.score > dets[b].det.score;
  });
  return order;
}

}  // namespace

MatchResult match(const std::vector<DetRecord>& dets, const std::vector<GtRecord>& gts,
                  double threshold_m) {
  std::map<std::string, std::vector<size_t>> gts_by_frame;
  for (size_t i = 0; i < gts.size(); ++i) gts_by_frame[gts[i].frame].push_back(i);

  MatchResult res;
  std::vector<bool> gt_used(gts.size(), false);
  for (size_t di : score_order(dets)) {
    const DetRecord& d = dets[di];
    auto it = gts_by_frame.find(d.frame);
    double best = threshold_m;
    int best_gt = -1;
    if (it != gts_by_frame.end()) {
      for (size_t gi : it->second) {
        if (gt_used[gi]) continue;
        const double dist = std::hypot(d.det.x - gts[gi].box.x, d.det.y - gts[gi].box.y);
        if (dist < best) {
          best = dist;
          best_gt = static_cast<int>(gi);
        }
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<size_t>(best_gt)] = true;
      res.pairs.push_back({di, static_cast<size_t>(best_gt), best});
    } else {
      res.unmatched_dets.push_back(di);
    }
  }
  for (size_t gi = 0; gi < gts.size(); ++gi)
    if (!gt_used[gi]) res.unmatched_gts.push_back(gi);
  return res;
}

double average_precision(const std::vector<DetRecord>& dets, const std::vector<GtRecord>& gts,
                         double threshold_m) {
  if (gts.empty()) return 0.0;
  if (dets.empty()) return 0.0;

  std::map<std::string, std::vector<size_t>> gts_by_frame;
  for (size_t i = 0; i < gts.size(); ++i) gts_by_frame[gts[i].frame].push_back(i);
  std::vector<bool> gt_used(gts.size(), false);

  // Cumulative (recall, precision) samples in descending score order.
  std::vector<std::array<double, 2>> samples;
  int64_t tp = 0, fp = 0;
  for (size_t di : score_order(dets)) {
    const DetRecord& d = dets[di];
    double best = threshold_m;
    int best_gt = -1;
    if (auto it = gts_by_frame.find(d.frame); it != gts_by_frame.end()) {
      for (size_t gi : it->second) {
        if (gt_used[gi]) continue;
        const double dist = std::hypot(d.det.x - gts[gi].box.x, d.det.y - gts[gi].box.y);
        if (dist < best) {
          best = dist;
          best_gt = static_cast<int>(gi);
        }
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<size_t>(best_gt)] = true;
      ++tp;
    } else {
      ++fp;
    }
    samples.push_back({static_cast<double>(tp) / static_cast<double>(gts.size()),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }

  // Interpolated precision envelope: p(r) = max precision at recall >= r.
  std::vector<std::array<double, 2>> env;  // (recall breakpoint, precision on (prev, r])
  double run_max = 0.0;
  for (size_t i = samples.size(); i-- > 0;) {
    run_max = std::max(run_max, samples[i][1]);
    if (env.empty() || samples[i][0] < env.back()[0]) env.push_back({samples[i][0], run_max});
    else env.back() = {samples[i][0], run_max};
  }
  std::reverse(env.begin(), env.end());

  // Integrate max(p - 0.1, 0) over recall in [0.1, 1], normalized by 0.9^2.
  constexpr double kMinRecall = 0.1, kMinPrecision = 0.1;
  double integral = 0.0;
  double prev_r = 0.0;
  for (const auto& [r, p] : env) {
    const double lo = std::max(prev_r, kMinRecall);
    const double hi = std::min(r, 1.0);
    if (hi > lo) integral += (hi - lo) * std::max(p - kMinPrecision, 0.0);
    prev_r = r;
    if (prev_r >= 1.0) break;
  }
  const double ap = integral / ((1.0 - kMinRecall) * (1.0 - kMinPrecision));
  return std::clamp(ap, 0.0, 1.0);
}

TpErrors tp_metrics(const MatchResult& matches, const std::vector<DetRecord>& dets,
                    const std::vector<GtRecord>& gts) {
  TpErrors e;
  if (matches.pairs.empty()) return e;  // worst case 1.0 by convention
  double ate = 0, ase = 0, aoe = 0, ave = 0;
  for (const auto& pair : matches.pairs) {
    const Detection& d = dets[pair.det_idx].det;
    const Box3D& g = gts[pair.gt_idx].box;
    ate += pair.distance;
    // Aligned-box volume IOU from the size triples alone.
    const double inter = std::min(d.w, g.w) * std::min(d.l, g.l) * std::min(d.h, g.h);
    const double uni = d.w * d.l * d.h + g.w * g.l * g.h - inter;
    ase += 1.0 - (uni > 0.0 ? inter / uni : 0.0);
    aoe += std::abs(wrap_angle(d.yaw - g.yaw));
    ave += std::hypot(d.vx - g.vx, d.vy - g.vy);
  }
  const double n = static_cast<double>(matches.pairs.size());
  e.ate = ate / n;
  e.ase = ase / n;
  e.aoe = aoe / n;
  e.ave = ave / n;
  return e;
}

double nds(double mean_ap, const std::array<double, 5>& tp_errors) {
  double sum = 5.0 * mean_ap;
  for (double tp : tp_errors) sum += std::max(1.0 - tp, 0.0);
  return sum / 10.0;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json ap_json;
  for (const auto& [cls, by_thr] : ap) {
    nlohmann::ordered_json row;
    for (const auto& [thr, value] : by_thr) row[std::to_string(thr)] = value;
    ap_json[std::to_string(cls)] = row;
  }
  j["ap"] = ap_json;
  j["mAP"] = mean_ap;
  j["mATE"] = mate;
  j["mASE"] = mase;
  j["mAOE"] = maoe;
  j["mAVE"] = mave;
  j["mAAE"] = maae;
  j["NDS"] = nds_value;
  j["frames_without_detections"] = frames_without_detections;
  return j.dump(2);
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "mAP,mATE,mASE,mAOE,mAVE,mAAE,NDS\n";
  os << mean_ap << ',' << mate << ',' << mase << ',' << maoe << ',' << mave << ',' << maae
     << ',' << nds_value << '\n';
  return os.str();
}

MetricsReport evaluate(const std::vector<DetRecord>& dets, const std::vector<GtRecord>& gts,
                       double aae, double min_range, double max_range) {
  std::set<std::string> label_frames;
  for (const auto& g : gts) label_frames.insert(g.frame);
  std::set<std::string> unknown;
  for (const auto& d : dets)
    if (!label_frames.count(d.frame)) unknown.insert(d.frame);
  if (!unknown.empty()) {
    std::string msg = "detections reference frames absent from the labels:";
    for (const auto& f : unknown) msg += " " + f;
    throw DataError(msg);
  }

  auto in_range = [&](double x, double y) {
    const double r = std::hypot(x, y);
    return r >= min_range && r <= max_range;
  };
  std::vector<DetRecord> fdets;
  for (const auto& d : dets)
    if (in_range(d.det.x, d.det.y)) fdets.push_back(d);
  std::vector<GtRecord> fgts;
  for (const auto& g : gts)
    if (in_range(g.box.x, g.box.y)) fgts.push_back(g);

  std::set<int> classes;
  for (const auto& g : fgts) classes.insert(g.box.class_id);

  MetricsReport report;
  report.maae = aae;
  if (classes.empty()) {
    report.nds_value = nds(0.0, {1.0, 1.0, 1.0, 1.0, aae});
    return report;
  }

  double sum_ap = 0.0;
  double sum_ate = 0, sum_ase = 0, sum_aoe = 0, sum_ave = 0;
  for (int cls : classes) {
    std::vector<DetRecord> cdets;
    for (const auto& d : fdets)
      if (d.det.class_id == cls) cdets.push_back(d);
    std::vector<GtRecord> cgts;
    for (const auto& g : fgts)
      if (g.box.class_id == cls) cgts.push_back(g);

    for (double thr : kMatchThresholds) {
      const double ap = average_precision(cdets, cgts, thr);
      report.ap[cls][thr] = ap;
      sum_ap += ap;
    }
    const TpErrors tp = tp_metrics(match(cdets, cgts, 2.0), cdets, cgts);
    sum_ate += tp.ate;
    sum_ase += tp.ase;
    sum_aoe += tp.aoe;
    sum_ave += tp.ave;
  }
  const double n_cls = static_cast<double>(classes.size());
  report.mean_ap = sum_ap / (n_cls * static_cast<double>(kMatchThresholds.size()));
  report.mate = sum_ate / n_cls;
  report.mase = sum_ase / n_cls;
  report.maoe = sum_aoe / n_cls;
  report.mave = sum_ave / n_cls;
  report.nds_value =
      nds(report.mean_ap, {report.mate, report.mase, report.maoe, report.mave, report.maae});

  std::set<std::string> det_frames;
  for (const auto& d : dets) det_frames.insert(d.frame);
  for (const auto& f : label_frames)
    if (!det_frames.count(f)) report.frames_without_detections.push_back(f);
  return report;
}

}  // namespace cyldet

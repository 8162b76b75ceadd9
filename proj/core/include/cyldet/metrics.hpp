#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyldet/decoder.hpp"
#include "cyldet/scene.hpp"

namespace cyldet {

struct DetRecord {
  std::string frame;
  Detection det;
};

struct GtRecord {
  std::string frame;
  Box3D box;
};

struct MatchResult {
  struct Pair {
    size_t det_idx;
    size_t gt_idx;
    double distance;  // 2D ground-plane center distance, meters
  };
  std::vector<Pair> pairs;
  std::vector<size_t> unmatched_dets;
  std::vector<size_t> unmatched_gts;
};

// Greedy matching of one class: detections in descending score order each
// take the nearest unmatched ground truth of the same frame within the
// threshold. Ties in score break by detection index.
MatchResult match(const std::vector<DetRecord>& dets, const std::vector<GtRecord>& gts,
                  double threshold_m);

// Average precision of one class across frames: interpolated precision
// integrated over recall in [0.1, 1], floored at 0.1 and renormalized.
double average_precision(const std::vector<DetRecord>& dets, const std::vector<GtRecord>& gts,
                         double threshold_m);

struct TpErrors {
  double ate = 1.0;  // mean 2D center distance
  double ase = 1.0;  // mean (1 - aligned volume IOU)
  double aoe = 1.0;  // mean smallest absolute yaw difference
  double ave = 1.0;  // mean L2 velocity error
};

// True-positive errors over matched pairs; an empty match set reports the
// worst case 1.0 for every metric.
TpErrors tp_metrics(const MatchResult& matches, const std::vector<DetRecord>& dets,
                    const std::vector<GtRecord>& gts);

// NDS = (5 * mAP + sum_i max(1 - TP_i, 0)) / 10.
double nds(double mean_ap, const std::array<double, 5>& tp_errors);

struct MetricsReport {
  std::map<int, std::map<double, double>> ap;  // class -> threshold -> AP
  double mean_ap = 0.0;
  double mate = 1.0, mase = 1.0, maoe = 1.0, mave = 1.0;
  double maae = 1.0;  // externally supplied; no attribute head exists here
  double nds_value = 0.0;
  std::vector<std::string> frames_without_detections;

  std::string to_json() const;
  // One row in Table-style column order: mAP,mATE,mASE,mAOE,mAVE,mAAE,NDS.
  std::string to_csv() const;
};

inline const std::vector<double> kMatchThresholds = {0.5, 1.0, 2.0, 4.0};

// Full nuScenes-style evaluation. Classes are taken from the ground truth;
// range bounds filter both sides by center radius. Detections that reference
// frames absent from the labels are an error.
MetricsReport evaluate(const std::vector<DetRecord>& dets, const std::vector<GtRecord>& gts,
                       double aae = 1.0, double min_range = 0.0,
                       double max_range = std::numeric_limits<double>::infinity());

}  // namespace cyldet

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cyldet/scene.hpp"
#include "cyldet/targets.hpp"
#include "cyldet/tensor.hpp"
#include "cyldet/voxelizer.hpp"

namespace cyldet {

struct Detection {
  int class_id = 0;
  double score = 0.0;
  double x = 0, y = 0, z = 0;  // center, meters
  double w = 0, l = 0, h = 0;  // size, meters
  double yaw = 0.0;
  double vx = 0, vy = 0;
};

struct DecodeConfig {
  int top_k = 500;
  double score_threshold = 0.1;
  double nms_iou = 0.1;
  int max_per_group = 83;
};

struct Peak {
  int channel = 0;
  int i_r = 0, i_theta = 0;
  float score = 0.f;
};

// Cells that are maxima of their 3x3 neighborhood (theta wraps), sorted by
// score, truncated to top_k, then filtered by score_threshold.
std::vector<Peak> extract_peaks(const Tensor& heatmap_prob, const DecodeConfig& cfg);

// Regression read-out at a peak plus the inverse self-orientation transforms
// back to a Cartesian detection.
Detection read_box(const Peak& peak, const Tensor& reg, const OutputGrid& grid, int class_id);

// Rotated-rectangle intersection over union in the BEV plane via convex
// polygon clipping; degenerate rectangles give 0.
double bev_iou(const Detection& a, const Detection& b);

// Greedy score-descending suppression at iou > threshold, then a result cap.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold, int max_out);

// Per-group head output in probability space plus its regression map.
struct GroupDecodeInput {
  Tensor heatmap_prob;  // [K_g, R, T]
  Tensor reg;           // [10, R, T]
};

// Full frame decode: per-group peaks merged, global top_k + score filter,
// box read-out, then per-group NMS with the per-group cap.
std::vector<Detection> decode_frame(const std::vector<GroupDecodeInput>& groups,
                                    const std::vector<std::vector<int>>& group_classes,
                                    const OutputGrid& grid, const DecodeConfig& cfg);

using ModelFn = std::function<std::vector<GroupDecodeInput>(const PointCloud&)>;

// Test-time y-flip aggregation: run the model on the original and the
// y-flipped cloud, un-flip the latter's detections, average paired detections
// (bev_iou > 0.5, score-weighted) and run standard NMS on the merged set.
std::vector<Detection> flip_test_aggregate(const Scene& scene, const ModelFn& model,
                                           const std::vector<std::vector<int>>& group_classes,
                                           const OutputGrid& grid, const DecodeConfig& cfg);

// Detections as JSON lines with their frame id.
void save_detections(const std::string& frame_id, const std::vector<Detection>& dets,
                     std::ostream& os);
std::vector<std::pair<std::string, Detection>> load_detections(
    const std::filesystem::path& path);

}  // namespace cyldet

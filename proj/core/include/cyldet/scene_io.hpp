#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "cyldet/scene.hpp"

namespace cyldet {

// ".cpc" point clouds: magic "CYLP", u32 version = 1, u64 point count,
// then count records of five f32 (x, y, z, intensity, dt), little-endian.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_cloud(const std::filesystem::path& path);

// ".jsonl" labels: one JSON object per box,
// {"frame","class","center","size","yaw","velocity","attribute"}.
void save_labels(const std::string& frame_id, const std::vector<Box3D>& boxes,
                 const std::filesystem::path& path);
// Returns (frame, box) pairs in file order; a file may mix frames.
std::vector<std::pair<std::string, Box3D>> load_labels(const std::filesystem::path& path);

// Union of sweeps with each point's dt set to its sweep's lag time.
// The first sweep is the key frame and must have lag 0; lags must be
// nonnegative and nondecreasing, and at most max_sweeps sweeps are accepted.
PointCloud aggregate_sweeps(const std::vector<std::pair<PointCloud, double>>& sweeps,
                            int max_sweeps = 10);

}  // namespace cyldet

#pragma once

#include <filesystem>
#include <vector>

#include "cyldet/config.hpp"
#include "cyldet/decoder.hpp"
#include "cyldet/network.hpp"

namespace cyldet {

// Sigmoid-mapped head outputs of one scene, ready for decoding.
std::vector<GroupDecodeInput> model_outputs(Network<float>& net, const RunConfig& cfg,
                                            const GridSpec& grid, const PointCloud& cloud);

std::vector<Detection> detect_scene(Network<float>& net, const RunConfig& cfg,
                                    const GridSpec& grid, const OutputGrid& out_grid,
                                    const Scene& scene, bool flip_test);

// Full inference over a dataset directory into a detections .jsonl file.
void run_inference(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                   const std::filesystem::path& checkpoint,
                   const std::filesystem::path& out_jsonl, bool flip_test);

}  // namespace cyldet

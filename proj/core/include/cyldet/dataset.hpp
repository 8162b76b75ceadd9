#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cyldet/config.hpp"
#include "cyldet/scene.hpp"

namespace cyldet {

struct Dataset {
  std::vector<std::string> frames;
  std::vector<Scene> scenes;
};

// Scene files are <frame>.cpc + <frame>.jsonl pairs; frames sort by name.
void save_scene(const std::filesystem::path& dir, const std::string& frame_id, const Scene& s);
Dataset load_dataset(const std::filesystem::path& dir);

// Generates cfg.synth.scenes random scenes plus a manifest.json; byte-stable
// for a fixed seed.
void synthesize_dataset(const RunConfig& cfg, const std::filesystem::path& dir);

// Label records of a dataset directory (or of a single .jsonl file).
std::vector<std::pair<std::string, Box3D>> load_all_labels(const std::filesystem::path& path);

}  // namespace cyldet

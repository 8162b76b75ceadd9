#include "cyldet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cyldet/errors.hpp"
#include "cyldet/scene_io.hpp"
#include "cyldet/simulator.hpp"
#include "cyldet/version.hpp"

namespace cyldet {

void save_scene(const std::filesystem::path& dir, const std::string& frame_id, const Scene& s) {
  std::filesystem::create_directories(dir);
  PointCloud cloud = s.cloud;
  cloud.frame_id = frame_id;
  save_cloud(cloud, dir / (frame_id + ".cpc"));
  save_labels(frame_id, s.labels, dir / (frame_id + ".jsonl"));
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("dataset directory does not exist: " + dir.string());
  std::vector<std::filesystem::path> clouds;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".cpc") clouds.push_back(entry.path());
  std::sort(clouds.begin(), clouds.end());

  Dataset ds;
  for (const auto& cpc : clouds) {
    Scene s;
    s.cloud = load_cloud(cpc);
    auto labels_path = cpc;
    labels_path.replace_extension(".jsonl");
    if (std::filesystem::exists(labels_path))
      for (auto& [frame, box] : load_labels(labels_path)) s.labels.push_back(box);
    ds.frames.push_back(cpc.stem().string());
    ds.scenes.push_back(std::move(s));
  }
  return ds;
}

void synthesize_dataset(const RunConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ScannerSpec scanner;
  scanner.n_azimuth = cfg.synth.azimuth;
  scanner.elevation_angles = cfg.synth.elevations;
  scanner.max_range = cfg.synth.scan_range;
  scanner.noise_sigma = cfg.synth.noise_sigma;

  std::mt19937_64 rng(cfg.seed);
  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.snapshot();
  auto frames = nlohmann::ordered_json::array();

  for (int i = 0; i < cfg.synth.scenes; ++i) {
    const int span = cfg.synth.boxes_max - cfg.synth.boxes_min;
    const int n_boxes =
        cfg.synth.boxes_min + (span > 0 ? static_cast<int>(rng() % (span + 1)) : 0);
    const uint64_t scene_seed = rng();
    Scene s = random_scene(n_boxes, cfg.synth.r_min, cfg.synth.r_max, scanner, scene_seed,
                           cfg.synth.v_max);
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    save_scene(dir, name, s);
    frames.push_back(name);
  }
  manifest["frames"] = frames;
  std::ofstream os(dir / "manifest.json");
  if (!os) throw DataError("cannot write manifest in " + dir.string());
  os << manifest.dump(2) << '\n';
}

std::vector<std::pair<std::string, Box3D>> load_all_labels(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path))
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<std::pair<std::string, Box3D>> out;
    for (const auto& f : files)
      for (auto& rec : load_labels(f)) out.push_back(std::move(rec));
    return out;
  }
  return load_labels(path);
}

}  // namespace cyldet

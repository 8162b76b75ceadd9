#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cyldet/augment.hpp"
#include "cyldet/decoder.hpp"
#include "cyldet/network.hpp"
#include "cyldet/scene.hpp"
#include "cyldet/targets.hpp"
#include "cyldet/voxelizer.hpp"

namespace cyldet {

struct TrainConfig {
  int batch = 4;
  int steps = 300;
  double lr_max = 0.0035;
  double div_factor = 10.0;
  double final_div = 1e4;
  double pct_start = 0.4;
  double momentum_low = 0.85;
  double momentum_high = 0.95;
  double weight_decay = 0.01;
  double lambda_reg = 0.25;
  bool balance_classes = false;
  bool augment = false;
};

struct TargetConfig {
  double min_overlap = 0.1;
  double min_gauss_radius = 2.0;
};

struct SynthConfig {
  int scenes = 20;
  int boxes_min = 2;
  int boxes_max = 4;
  double r_min = 5.0;
  double r_max = 45.0;
  double v_max = 2.0;
  int azimuth = 1800;
  std::vector<double> elevations = {-0.30, -0.25, -0.20, -0.16, -0.12, -0.09,
                                    -0.06, -0.04, -0.02, 0.0,   0.02,  0.05};
  double scan_range = 60.0;
  double noise_sigma = 0.01;
};

// Whole-run configuration. Every field has a toy default that exercises the
// same code paths as the full-scale configuration; configs/paper.cfg selects
// the full-scale values.
struct RunConfig {
  uint64_t seed = 1;
  int threads = 1;

  // grid.*
  double grid_r_min = 1.0, grid_r_max = 53.8, grid_delta_r = 1.2;
  double grid_delta_theta = kTwoPi / 75.0;
  double grid_z_min = -3.0, grid_z_max = 5.0, grid_delta_z = 1.0;
  int grid_max_points_per_voxel = 10;
  int grid_max_voxels = 150000;

  NetworkSpec net;  // net.*
  TrainConfig train;
  TargetConfig target;
  DecodeConfig decode;
  SynthConfig synth;
  AugmentParams aug;

  GridSpec grid_spec() const;
  OutputGrid output_grid() const;

  // Canonical "key = value" snapshot of every field, in fixed order.
  std::string snapshot() const;
  // FNV-1a hash of the checkpoint-relevant subset (grid + network).
  uint32_t fingerprint() const;
};

RunConfig default_toy_config();

// Applies "key = value" lines (dotted keys, '#' comments); unknown keys and
// malformed values raise ConfigError.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

RunConfig load_config(const std::optional<std::filesystem::path>& path);

}  // namespace cyldet

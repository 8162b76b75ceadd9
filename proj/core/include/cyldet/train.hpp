#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "cyldet/config.hpp"
#include "cyldet/dataset.hpp"
#include "cyldet/network.hpp"

namespace cyldet {

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
  double first_loss = 0.0;
  double final_loss = 0.0;
};

// Trains on every scene of the dataset with the one-cycle schedule, writing
// checkpoint.cylw, loss.csv and manifest.json into out_dir. Aborts with
// NumericError on a non-finite loss.
//
// The schedule always spans cfg.train.steps; stop_after pauses the run early
// (checkpoint included), and resuming restores parameters and optimizer state
// exactly, continuing the identical step stream to cfg.train.steps.
TrainResult train_model(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                        const std::filesystem::path& out_dir,
                        const std::optional<std::filesystem::path>& resume = std::nullopt,
                        std::optional<int64_t> stop_after = std::nullopt);

// Checkpoint plumbing shared with inference.
void save_network_checkpoint(const std::filesystem::path& path, Network<float>& net,
                             const RunConfig& cfg, const class AdamW* optimizer,
                             int64_t step_count);
// Loads parameters into a configured network; fingerprint or shape mismatch
// raises SpecMismatchError. Returns the stored step count.
int64_t load_network_checkpoint(const std::filesystem::path& path, Network<float>& net,
                                const RunConfig& cfg, class AdamW* optimizer = nullptr);

}  // namespace cyldet

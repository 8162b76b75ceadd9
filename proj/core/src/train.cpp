#include "cyldet/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cyldet/augment.hpp"
#include "cyldet/errors.hpp"
#include "cyldet/loss.hpp"
#include "cyldet/optim.hpp"
#include "cyldet/targets.hpp"
#include "cyldet/tensor_io.hpp"
#include "cyldet/version.hpp"
#include "cyldet/voxelizer.hpp"

namespace cyldet {
namespace {

uint64_t mix(uint64_t a, uint64_t b) {
  uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  return x;
}

// Network input: voxel features with the occupancy plane appended.
Tensor scene_input(const Scene& s, const GridSpec& grid, int threads) {
  DenseInput d = densify(voxelize(s.cloud, grid, threads));
  const int64_t Z = grid.n_z, R = grid.n_r, Tn = grid.n_theta;
  Tensor x({6, Z, R, Tn});
  std::copy(d.features.data.begin(), d.features.data.end(), x.data.begin());
  std::copy(d.occupancy.data.begin(), d.occupancy.data.end(),
            x.data.begin() + 5 * Z * R * Tn);
  return x;
}

std::vector<CylBox> scene_cylboxes(const Scene& s, const GridSpec& grid) {
  std::vector<CylBox> out;
  for (const Box3D& b : s.labels)
    if (auto cb = box_to_cylbox(b, grid.r_min, grid.r_max)) out.push_back(*cb);
  return out;
}

struct BatchTargets {
  Tensor hm;    // [N, K_g, 1, R, T]
  Tensor reg;   // [N, 10, 1, R, T]
  Tensor mask;  // [N, 1, 1, R, T]
};

BatchTargets collate_targets(const std::vector<const TargetSet*>& sets, int n_channels) {
  const int64_t N = static_cast<int64_t>(sets.size());
  const int64_t R = sets[0]->heatmap.dim(1), Tn = sets[0]->heatmap.dim(2);
  BatchTargets b;
  b.hm = Tensor({N, n_channels, 1, R, Tn});
  b.reg = Tensor({N, 10, 1, R, Tn});
  b.mask = Tensor({N, 1, 1, R, Tn});
  for (int64_t n = 0; n < N; ++n) {
    std::copy(sets[n]->heatmap.data.begin(), sets[n]->heatmap.data.end(),
              b.hm.data.begin() + n * n_channels * R * Tn);
    std::copy(sets[n]->reg.data.begin(), sets[n]->reg.data.end(),
              b.reg.data.begin() + n * 10 * R * Tn);
    std::copy(sets[n]->mask.data.begin(), sets[n]->mask.data.end(),
              b.mask.data.begin() + n * R * Tn);
  }
  return b;
}

}  // namespace

void save_network_checkpoint(const std::filesystem::path& path, Network<float>& net,
                             const RunConfig& cfg, const AdamW* optimizer, int64_t step_count) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (auto& [name, p] : net.named_params()) tensors.emplace_back("param." + name, &p->value);

  Tensor meta_step({1});
  meta_step.data[0] = static_cast<float>(step_count);
  Tensor meta_fp({2});
  const uint32_t fp = cfg.fingerprint();
  meta_fp.data[0] = static_cast<float>(fp >> 16);
  meta_fp.data[1] = static_cast<float>(fp & 0xffffu);
  tensors.emplace_back("meta.step", &meta_step);
  tensors.emplace_back("meta.fingerprint", &meta_fp);

  std::vector<std::pair<std::string, const Tensor*>> opt_state;
  if (optimizer) {
    opt_state = optimizer->state_tensors();
    for (auto& t : opt_state) tensors.push_back(t);
  }
  write_checkpoint(path, tensors);
}

int64_t load_network_checkpoint(const std::filesystem::path& path, Network<float>& net,
                                const RunConfig& cfg, AdamW* optimizer) {
  auto tensors = read_checkpoint(path);

  auto fp_it = tensors.find("meta.fingerprint");
  if (fp_it == tensors.end()) throw SpecMismatchError("checkpoint has no fingerprint");
  const uint32_t stored = (static_cast<uint32_t>(fp_it->second.data[0]) << 16) |
                          static_cast<uint32_t>(fp_it->second.data[1]);
  if (stored != cfg.fingerprint())
    throw SpecMismatchError("checkpoint was trained with a different grid/network config");

  for (auto& [name, p] : net.named_params()) {
    auto it = tensors.find("param." + name);
    if (it == tensors.end()) throw SpecMismatchError("checkpoint is missing tensor " + name);
    if (!it->second.same_shape(p->value))
      throw SpecMismatchError("checkpoint tensor shape mismatch for " + name);
    p->value = it->second;
  }
  auto step_it = tensors.find("meta.step");
  const int64_t step_count =
      step_it == tensors.end() ? 0 : static_cast<int64_t>(step_it->second.data[0]);
  if (optimizer) optimizer->restore(tensors, step_count);
  return step_count;
}

TrainResult train_model(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                        const std::filesystem::path& out_dir,
                        const std::optional<std::filesystem::path>& resume,
                        std::optional<int64_t> stop_after) {
  Dataset ds = load_dataset(dataset_dir);
  if (ds.scenes.empty()) throw DataError("training dataset is empty: " + dataset_dir.string());
  const GridSpec grid = cfg.grid_spec();
  const OutputGrid out_grid = cfg.output_grid();
  const int threads = std::max(1, cfg.threads);

  Network<float> net(cfg.net);
  net.init(cfg.seed, grid.n_z);

  AdamW adam(net.named_params(), cfg.train.weight_decay);
  OneCycle sched;
  sched.lr_max = cfg.train.lr_max;
  sched.div_factor = cfg.train.div_factor;
  sched.final_div = cfg.train.final_div;
  sched.pct_start = cfg.train.pct_start;
  sched.momentum_low = cfg.train.momentum_low;
  sched.momentum_high = cfg.train.momentum_high;

  int64_t start_step = 0;
  if (resume) start_step = load_network_checkpoint(*resume, net, cfg, &adam);

  // Inputs and targets are cached unless augmentation resamples them per use.
  const bool cache = !cfg.train.augment;
  Tensor range_matrix;
  {
    VoxelGrid empty;
    empty.spec = grid;
    range_matrix = densify(empty).range_matrix;
  }
  std::vector<Tensor> cached_inputs(ds.scenes.size());
  std::vector<std::vector<TargetSet>> cached_targets(ds.scenes.size());
  auto targets_of = [&](const Scene& s) {
    std::vector<TargetSet> per_group;
    auto boxes = scene_cylboxes(s, grid);
    for (const auto& group : cfg.net.head_groups)
      per_group.push_back(encode_targets(boxes, group, out_grid, cfg.target.min_overlap,
                                         cfg.target.min_gauss_radius));
    return per_group;
  };
  if (cache) {
    for (size_t i = 0; i < ds.scenes.size(); ++i) {
      cached_inputs[i] = scene_input(ds.scenes[i], grid, threads);
      cached_targets[i] = targets_of(ds.scenes[i]);
    }
  }

  // Stateless scene ordering: epoch e draws a fresh (optionally balanced)
  // permutation keyed by (seed, e), so resume replays the identical stream.
  std::vector<size_t> epoch_order;
  int64_t epoch_cached = -1;
  auto order_for_epoch = [&](int64_t epoch) -> const std::vector<size_t>& {
    if (epoch == epoch_cached) return epoch_order;
    const uint64_t es = mix(cfg.seed, static_cast<uint64_t>(epoch));
    if (cfg.train.balance_classes) {
      epoch_order = balance_classes(ds.scenes, es);
    } else {
      epoch_order.resize(ds.scenes.size());
      for (size_t i = 0; i < epoch_order.size(); ++i) epoch_order[i] = i;
      std::mt19937_64 rng(es);
      std::shuffle(epoch_order.begin(), epoch_order.end(), rng);
    }
    epoch_cached = epoch;
    return epoch_order;
  };

  std::filesystem::create_directories(out_dir);
  std::ofstream loss_csv(out_dir / "loss.csv",
                         resume ? std::ios::app : std::ios::out);
  if (!resume) loss_csv << "step,lr,loss,loss_heatmap,loss_reg\n";

  TrainResult result;
  const int64_t total_steps = cfg.train.steps;
  const int64_t end_step = stop_after ? std::min<int64_t>(*stop_after, total_steps)
                                      : total_steps;
  const int64_t batch = std::max(1, cfg.train.batch);
  int64_t cursor = start_step * batch;
  double epoch_loss_sum = 0.0;
  int64_t epoch_loss_count = 0;
  int64_t last_epoch = cursor / std::max<int64_t>(1, ds.scenes.size());

  for (int64_t step = start_step; step < end_step; ++step) {
    // Assemble the batch.
    std::vector<Tensor> inputs(batch);
    std::vector<std::vector<TargetSet>> targets(batch);
    for (int64_t j = 0; j < batch; ++j, ++cursor) {
      const int64_t n = static_cast<int64_t>(ds.scenes.size());
      const int64_t epoch = cursor / n;
      const auto& order = order_for_epoch(epoch);
      const size_t idx = order[cursor % n];
      if (cache) {
        inputs[j] = cached_inputs[idx];
        targets[j] = cached_targets[idx];
      } else {
        Scene aug = augment(ds.scenes[idx],
                            mix(cfg.seed ^ 0xa9ull, static_cast<uint64_t>(cursor)), cfg.aug);
        inputs[j] = scene_input(aug, grid, threads);
        targets[j] = targets_of(aug);
      }
    }
    const int64_t Z = grid.n_z, R = grid.n_r, Tn = grid.n_theta;
    Tensor x({batch, 6, Z, R, Tn});
    for (int64_t j = 0; j < batch; ++j)
      std::copy(inputs[j].data.begin(), inputs[j].data.end(),
                x.data.begin() + j * 6 * Z * R * Tn);

    auto outs = net.forward(x, range_matrix, threads);

    double loss_hm = 0.0, loss_reg = 0.0;
    std::vector<HeadOutput<float>> grads(outs.size());
    for (size_t g = 0; g < outs.size(); ++g) {
      std::vector<const TargetSet*> sets;
      for (int64_t j = 0; j < batch; ++j) sets.push_back(&targets[j][g]);
      BatchTargets bt = collate_targets(sets, static_cast<int>(cfg.net.head_groups[g].size()));

      auto focal = focal_loss(outs[g].hm, bt.hm);
      loss_hm += focal.value;
      grads[g].hm = std::move(focal.grad);

      auto reg = reg_loss(outs[g].reg, bt.reg, bt.mask);
      loss_reg += reg.value;
      grads[g].reg = std::move(reg.grad);
      const auto lambda = static_cast<float>(cfg.train.lambda_reg);
      for (auto& v : grads[g].reg.data) v *= lambda;
    }
    const double total = loss_hm + cfg.train.lambda_reg * loss_reg;
    if (!std::isfinite(total))
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         " (heatmap=" + std::to_string(loss_hm) +
                         ", reg=" + std::to_string(loss_reg) + ")");

    net.zero_grads();
    net.backward(grads, threads);

    const double t = total_steps > 1
                         ? static_cast<double>(step) / static_cast<double>(total_steps - 1)
                         : 1.0;
    adam.step(sched.lr(t), sched.momentum(t));

    loss_csv << step << ',' << sched.lr(t) << ',' << total << ',' << loss_hm << ','
             << loss_reg << '\n';
    result.step_losses.push_back(total);
    if (step == start_step) result.first_loss = total;
    result.final_loss = total;

    epoch_loss_sum += total;
    ++epoch_loss_count;
    const int64_t epoch_now = cursor / std::max<int64_t>(1, ds.scenes.size());
    if (epoch_now != last_epoch) {
      result.epoch_losses.push_back(epoch_loss_sum / static_cast<double>(epoch_loss_count));
      epoch_loss_sum = 0.0;
      epoch_loss_count = 0;
      last_epoch = epoch_now;
    }
  }
  if (epoch_loss_count > 0)
    result.epoch_losses.push_back(epoch_loss_sum / static_cast<double>(epoch_loss_count));

  result.checkpoint = out_dir / "checkpoint.cylw";
  save_network_checkpoint(result.checkpoint, net, cfg, &adam, end_step);

  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.snapshot();
  manifest["dataset"] = dataset_dir.string();
  manifest["steps"] = end_step;
  manifest["epoch_losses"] = result.epoch_losses;
  manifest["final_loss"] = result.final_loss;
  manifest["checkpoint"] = result.checkpoint.string();
  manifest["loss_csv"] = (out_dir / "loss.csv").string();
  std::ofstream mos(out_dir / "manifest.json");
  mos << manifest.dump(2) << '\n';
  return result;
}

}  // namespace cyldet

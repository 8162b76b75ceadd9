#include "cyldet/infer.hpp"

#include <fstream>

#include "cyldet/dataset.hpp"
#include "cyldet/errors.hpp"
#include "cyldet/loss.hpp"
#include "cyldet/train.hpp"
#include "cyldet/voxelizer.hpp"

namespace cyldet {

std::vector<GroupDecodeInput> model_outputs(Network<float>& net, const RunConfig& cfg,
                                            const GridSpec& grid, const PointCloud& cloud) {
  const int threads = std::max(1, cfg.threads);
  DenseInput d = densify(voxelize(cloud, grid, threads));
  const int64_t Z = grid.n_z, R = grid.n_r, Tn = grid.n_theta;
  Tensor x({1, 6, Z, R, Tn});
  std::copy(d.features.data.begin(), d.features.data.end(), x.data.begin());
  std::copy(d.occupancy.data.begin(), d.occupancy.data.end(), x.data.begin() + 5 * Z * R * Tn);

  auto outs = net.forward(x, d.range_matrix, threads);
  std::vector<GroupDecodeInput> result;
  for (auto& o : outs) {
    GroupDecodeInput g;
    Tensor prob = sigmoid(o.hm);  // [1, K, 1, R, T]
    g.heatmap_prob = Tensor({prob.dim(1), prob.dim(3), prob.dim(4)});
    g.heatmap_prob.data = std::move(prob.data);
    g.reg = Tensor({o.reg.dim(1), o.reg.dim(3), o.reg.dim(4)});
    g.reg.data = std::move(o.reg.data);
    result.push_back(std::move(g));
  }
  return result;
}

std::vector<Detection> detect_scene(Network<float>& net, const RunConfig& cfg,
                                    const GridSpec& grid, const OutputGrid& out_grid,
                                    const Scene& scene, bool flip_test) {
  if (flip_test) {
    ModelFn model = [&](const PointCloud& cloud) {
      return model_outputs(net, cfg, grid, cloud);
    };
    return flip_test_aggregate(scene, model, cfg.net.head_groups, out_grid, cfg.decode);
  }
  return decode_frame(model_outputs(net, cfg, grid, scene.cloud), cfg.net.head_groups, out_grid,
                      cfg.decode);
}

void run_inference(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                   const std::filesystem::path& checkpoint,
                   const std::filesystem::path& out_jsonl, bool flip_test) {
  Dataset ds = load_dataset(dataset_dir);
  const GridSpec grid = cfg.grid_spec();
  const OutputGrid out_grid = cfg.output_grid();

  Network<float> net(cfg.net);
  net.bind_input_depth(grid.n_z);
  load_network_checkpoint(checkpoint, net, cfg);

  std::ofstream os(out_jsonl);
  if (!os) throw DataError("cannot open for writing: " + out_jsonl.string());
  for (size_t i = 0; i < ds.scenes.size(); ++i) {
    auto dets = detect_scene(net, cfg, grid, out_grid, ds.scenes[i], flip_test);
    save_detections(ds.frames[i], dets, os);
  }
}

}  // namespace cyldet

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cyldet/config.hpp"
#include "cyldet/dataset.hpp"
#include "cyldet/errors.hpp"
#include "cyldet/infer.hpp"
#include "cyldet/metrics.hpp"
#include "cyldet/stats_report.hpp"
#include "cyldet/train.hpp"
#include "cyldet/version.hpp"

namespace {

using namespace cyldet;

struct GlobalOpts {
  std::optional<std::filesystem::path> config;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
};

RunConfig make_config(const GlobalOpts& g) {
  RunConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  return cfg;
}

std::vector<GtRecord> to_gt_records(const std::vector<std::pair<std::string, Box3D>>& labels) {
  std::vector<GtRecord> out;
  out.reserve(labels.size());
  for (const auto& [frame, box] : labels) out.push_back({frame, box});
  return out;
}

std::vector<DetRecord> to_det_records(
    const std::vector<std::pair<std::string, Detection>>& dets) {
  std::vector<DetRecord> out;
  out.reserve(dets.size());
  for (const auto& [frame, det] : dets) out.push_back({frame, det});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cyldet: cylindrical-coordinate 3D object detection for rotating LiDAR"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GlobalOpts g;
  std::filesystem::path opt_path;
  app.add_option_function<std::string>(
         "--config", [&](const std::string& p) { g.config = p; },
         "Shared key = value configuration file");
  app.add_option_function<uint64_t>(
      "--seed", [&](uint64_t s) { g.seed = s; }, "Override the config seed");
  app.add_option_function<int>(
      "--threads", [&](int t) { g.threads = t; },
      "Worker threads; 1 guarantees bit determinism");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scanned dataset");
  std::filesystem::path synth_out;
  std::optional<int> synth_n;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option_function<int>(
      "--scenes", [&](int n) { synth_n = n; }, "Override synth.scenes");

  // train
  auto* train = app.add_subcommand("train", "Train the detector on a dataset");
  std::filesystem::path train_data, train_out;
  std::optional<std::filesystem::path> train_resume;
  std::optional<int> train_steps;
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  std::optional<int64_t> train_stop_after;
  train->add_option_function<std::string>(
      "--resume", [&](const std::string& p) { train_resume = p; },
      "Resume from a checkpoint");
  train->add_option_function<int>(
      "--steps", [&](int s) { train_steps = s; }, "Override train.steps");
  train->add_option_function<int64_t>(
      "--stop-after", [&](int64_t s) { train_stop_after = s; },
      "Pause after this step (checkpoint kept resumable)");

  // infer
  auto* infer = app.add_subcommand("infer", "Run detection on a dataset");
  std::filesystem::path infer_data, infer_ckpt, infer_out;
  bool flip_test = false;
  infer->add_option("--data", infer_data, "Dataset directory")->required();
  infer->add_option("--checkpoint", infer_ckpt, "Checkpoint file")->required();
  infer->add_option("--out", infer_out, "Output detections .jsonl")->required();
  infer->add_flag("--flip-test", flip_test, "Aggregate predictions over a y-flipped pass");

  // eval
  auto* eval = app.add_subcommand("eval", "nuScenes-style evaluation");
  std::filesystem::path eval_dets, eval_labels, eval_out_json, eval_out_csv;
  double eval_min_range = 0.0;
  double eval_max_range = std::numeric_limits<double>::infinity();
  double eval_aae = 1.0;
  std::optional<double> nds_map;
  std::vector<double> nds_tp;
  eval->add_option("--detections", eval_dets, "Detections .jsonl");
  eval->add_option("--labels", eval_labels, "Labels .jsonl file or dataset directory");
  eval->add_option("--out", eval_out_json, "Metrics JSON output path");
  eval->add_option("--csv", eval_out_csv, "Metrics CSV output path");
  eval->add_option("--min-range", eval_min_range, "Keep only centers with radius >= this");
  eval->add_option("--max-range", eval_max_range, "Keep only centers with radius <= this");
  eval->add_option("--aae", eval_aae, "Externally supplied attribute error (default 1.0)");
  eval->add_option_function<double>(
      "--map", [&](double v) { nds_map = v; },
      "Metrics-only mode: compute NDS from printed components");
  eval->add_option("--tp", nds_tp,
                   "Metrics-only mode: the five TP errors (ATE ASE AOE AVE AAE)")
      ->expected(5);

  // stats
  auto* stats = app.add_subcommand("stats", "Points-per-voxel statistics (CSV + SVG)");
  std::filesystem::path stats_data, stats_csv, stats_svg_path;
  stats->add_option("--data", stats_data, "Dataset directory")->required();
  stats->add_option("--out-csv", stats_csv, "CSV output path")->required();
  stats->add_option("--out-svg", stats_svg_path, "SVG output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*synth) {
      RunConfig cfg = make_config(g);
      if (synth_n) cfg.synth.scenes = *synth_n;
      synthesize_dataset(cfg, synth_out);
    } else if (*train) {
      RunConfig cfg = make_config(g);
      if (train_steps) cfg.train.steps = *train_steps;
      TrainResult res = train_model(cfg, train_data, train_out, train_resume, train_stop_after);
      std::printf("trained %d steps, final loss %.6f -> %s\n", cfg.train.steps,
                  res.final_loss, res.checkpoint.string().c_str());
    } else if (*infer) {
      RunConfig cfg = make_config(g);
      run_inference(cfg, infer_data, infer_ckpt, infer_out, flip_test);
    } else if (*eval) {
      MetricsReport report;
      if (nds_map) {
        if (nds_tp.size() != 5)
          throw ConfigError("--map needs --tp with the five TP errors");
        report.mean_ap = *nds_map;
        report.mate = nds_tp[0];
        report.mase = nds_tp[1];
        report.maoe = nds_tp[2];
        report.mave = nds_tp[3];
        report.maae = nds_tp[4];
        report.nds_value = nds(report.mean_ap, {report.mate, report.mase, report.maoe,
                                                report.mave, report.maae});
      } else {
        if (eval_dets.empty() || eval_labels.empty())
          throw ConfigError("eval needs --detections and --labels (or --map/--tp)");
        auto dets = to_det_records(load_detections(eval_dets));
        auto gts = to_gt_records(load_all_labels(eval_labels));
        report = evaluate(dets, gts, eval_aae, eval_min_range, eval_max_range);
      }
      const std::string json = report.to_json();
      std::cout << json << '\n';
      if (!eval_out_json.empty()) {
        std::ofstream os(eval_out_json);
        os << json << '\n';
      }
      if (!eval_out_csv.empty()) {
        std::ofstream os(eval_out_csv);
        os << report.to_csv();
      }
    } else if (*stats) {
      RunConfig cfg = make_config(g);
      Dataset ds = load_dataset(stats_data);
      const GridSpec grid = cfg.grid_spec();
      const CartGridSpec cart = matched_cart_spec(grid);
      VoxelStatsAccumulator acc;
      for (const Scene& s : ds.scenes) acc.add(s.cloud, grid, cart);
      auto rows = acc.rows();
      std::ofstream csv(stats_csv);
      if (!csv) throw DataError("cannot open for writing: " + stats_csv.string());
      write_stats_csv(rows, csv);
      std::ofstream svg(stats_svg_path);
      if (!svg) throw DataError("cannot open for writing: " + stats_svg_path.string());
      svg << stats_svg(rows);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const SpecMismatchError& e) {
    std::cerr << "error: spec-mismatch: " << e.what() << '\n';
    return 5;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << '\n';
    return 4;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

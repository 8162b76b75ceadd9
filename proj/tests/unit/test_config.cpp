#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "cyldet/config.hpp"
#include "cyldet/errors.hpp"
#include "cyldet/tensor_io.hpp"

using namespace cyldet;

namespace {

std::filesystem::path repo_config(const char* name) {
  // Tests run from the build tree; configs live beside the sources.
  return std::filesystem::path(CYLDET_SOURCE_DIR) / "configs" / name;
}

}  // namespace

TEST_CASE("toy defaults: grid 44 x 75 x 8, output 11 x 19") {
  RunConfig cfg = default_toy_config();
  GridSpec g = cfg.grid_spec();
  CHECK(g.n_r == 44);
  CHECK(g.n_theta == 75);
  CHECK(g.n_z == 8);
  OutputGrid og = cfg.output_grid();
  CHECK(og.n_r == 11);
  CHECK(og.n_theta == 19);
}

TEST_CASE("config text parsing") {
  RunConfig cfg = default_toy_config();

  SUBCASE("values, comments and blank lines") {
    apply_config_text(cfg, "seed = 9\n\n# comment\ntrain.batch = 8 # trailing\n", "t");
    CHECK(cfg.seed == 9);
    CHECK(cfg.train.batch == 8);
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(apply_config_text(cfg, "grid.bogus = 1\n", "t"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "grd.r_min = 1\n", "t"), ConfigError);
  }
  SUBCASE("malformed values are rejected") {
    CHECK_THROWS_AS(apply_config_text(cfg, "train.batch = four\n", "t"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "grid.r_min = 1.0x\n", "t"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "train.augment = maybe\n", "t"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "no equals sign\n", "t"), ConfigError);
  }
  SUBCASE("head groups parse '|' and ','") {
    apply_config_text(cfg, "net.num_classes = 10\nnet.head_groups = 0|1,2|3,4|5|6,7|8,9\n",
                      "t");
    REQUIRE(cfg.net.head_groups.size() == 6);
    CHECK(cfg.net.head_groups[1] == std::vector<int>{1, 2});
    CHECK(cfg.net.head_groups[3] == std::vector<int>{5});
    cfg.net.validate();
  }
  SUBCASE("stage lists resize the stage plan") {
    apply_config_text(cfg,
                      "net.stage_channels = 8,16\nnet.stage_stride_r = 2,1\n"
                      "net.stage_stride_theta = 2,2\nnet.stage_stride_z = 1,2\n"
                      "net.stage_guided = 1,0\n",
                      "t");
    REQUIRE(cfg.net.stages.size() == 2);
    CHECK(cfg.net.stages[0].channels == 8);
    CHECK(cfg.net.stages[0].guided);
    CHECK(cfg.net.stages[1].stride_z == 2);
  }
}

TEST_CASE("repository config files load and validate") {
  SUBCASE("toy.cfg reproduces the defaults") {
    RunConfig cfg = load_config(repo_config("toy.cfg"));
    CHECK(cfg.grid_spec().n_r == 44);
    CHECK(cfg.grid_spec().n_theta == 75);
    CHECK(cfg.output_grid().n_r == 11);
    CHECK(cfg.output_grid().n_theta == 19);
    CHECK(cfg.snapshot() == default_toy_config().snapshot());
  }
  SUBCASE("paper.cfg yields the full-scale shapes") {
    RunConfig cfg = load_config(repo_config("paper.cfg"));
    GridSpec g = cfg.grid_spec();
    CHECK(g.n_r == 704);
    CHECK(g.n_theta == 1200);
    CHECK(g.n_z == 40);
    OutputGrid og = cfg.output_grid();
    CHECK(og.n_r == 88);
    CHECK(og.n_theta == 300);
    CHECK(cfg.net.theta_kernel == 5);
    REQUIRE(cfg.net.head_groups.size() == 6);
    std::vector<size_t> widths;
    for (const auto& g2 : cfg.net.head_groups) widths.push_back(g2.size());
    CHECK(widths == std::vector<size_t>{1, 2, 2, 1, 2, 2});
  }
}

TEST_CASE("snapshot round-trips through the parser") {
  RunConfig cfg = default_toy_config();
  cfg.seed = 77;
  cfg.train.lambda_reg = 0.125;
  cfg.net.theta_kernel = 5;
  RunConfig reparsed = default_toy_config();
  apply_config_text(reparsed, cfg.snapshot(), "snapshot");
  CHECK(reparsed.snapshot() == cfg.snapshot());
  CHECK(reparsed.fingerprint() == cfg.fingerprint());
}

TEST_CASE("fingerprint tracks grid and network changes only") {
  RunConfig a = default_toy_config();
  RunConfig b = a;
  b.train.steps = 999;  // training knobs do not invalidate checkpoints
  CHECK(a.fingerprint() == b.fingerprint());
  b.grid_delta_r = 0.6;
  CHECK(a.fingerprint() != b.fingerprint());
  RunConfig c = a;
  c.net.rpn_channels = 99;
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("tensor file round trip and failure kinds") {
  auto dir = std::filesystem::temp_directory_path() / "cyldet_tensor_io";
  std::filesystem::create_directories(dir);

  Tensor t({2, 3, 4});
  for (int64_t i = 0; i < t.numel(); ++i) t.data[i] = static_cast<float>(i) * 0.25f;
  write_tensor(dir / "t.cylt", t);
  Tensor r = read_tensor(dir / "t.cylt");
  CHECK(r.shape == t.shape);
  CHECK(r.data == t.data);

  {
    std::ofstream os(dir / "bad.cylt", std::ios::binary);
    os << "NOPE";
  }
  try {
    read_tensor(dir / "bad.cylt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind == FormatError::Kind::BadMagic);
  }

  // Checkpoint with two tensors.
  Tensor u({5});
  u.fill(1.5f);
  write_checkpoint(dir / "c.cylw", {{"a", &t}, {"b", &u}});
  auto loaded = read_checkpoint(dir / "c.cylw");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("a").data == t.data);
  CHECK(loaded.at("b").shape == std::vector<int64_t>{5});

  // Truncated checkpoint.
  {
    std::ifstream is(dir / "c.cylw", std::ios::binary);
    std::vector<char> bytes{std::istreambuf_iterator<char>(is),
                            std::istreambuf_iterator<char>()};
    bytes.resize(bytes.size() / 2);
    std::ofstream os(dir / "trunc.cylw", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    read_checkpoint(dir / "trunc.cylw");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.kind == FormatError::Kind::Truncated);
  }
}

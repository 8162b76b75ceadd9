#include "cyldet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cyldet/errors.hpp"

namespace cyldet {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
  }
}

int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  for (const auto& part : split(v, ','))
    if (!part.empty()) out.push_back(static_cast<int>(parse_int(part, key)));
  return out;
}

std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& part : split(v, ','))
    if (!part.empty()) out.push_back(parse_double(part, key));
  return out;
}

// Groups separated by '|', class ids by ','; e.g. "0|1,2|3".
std::vector<std::vector<int>> parse_groups(const std::string& v, const std::string& key) {
  std::vector<std::vector<int>> out;
  for (const auto& group : split(v, '|')) {
    auto ids = parse_int_list(group, key);
    if (!ids.empty()) out.push_back(ids);
  }
  return out;
}

std::string format_groups(const std::vector<std::vector<int>>& groups) {
  std::string out;
  for (size_t g = 0; g < groups.size(); ++g) {
    if (g) out += '|';
    for (size_t i = 0; i < groups[g].size(); ++i) {
      if (i) out += ',';
      out += std::to_string(groups[g][i]);
    }
  }
  return out;
}

template <class T>
std::string format_list(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

std::string format_stage_field(const std::vector<StageSpec>& stages,
                               const std::function<int(const StageSpec&)>& get) {
  std::vector<int> vals;
  for (const auto& s : stages) vals.push_back(get(s));
  return format_list(vals);
}

void resize_stages(std::vector<StageSpec>& stages, size_t n) {
  if (stages.size() < n) stages.resize(n);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = static_cast<uint64_t>(parse_int(v, k));
       }},
      {"threads", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.threads = static_cast<int>(parse_int(v, k));
       }},
      {"grid.r_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_r_min = parse_double(v, k);
       }},
      {"grid.r_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_r_max = parse_double(v, k);
       }},
      {"grid.delta_r", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_delta_r = parse_double(v, k);
       }},
      {"grid.delta_theta", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_delta_theta = parse_double(v, k);
       }},
      {"grid.n_theta", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_delta_theta = kTwoPi / static_cast<double>(parse_int(v, k));
       }},
      {"grid.z_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_z_min = parse_double(v, k);
       }},
      {"grid.z_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_z_max = parse_double(v, k);
       }},
      {"grid.delta_z", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_delta_z = parse_double(v, k);
       }},
      {"grid.max_points_per_voxel", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_max_points_per_voxel = static_cast<int>(parse_int(v, k));
       }},
      {"grid.max_voxels", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.grid_max_voxels = static_cast<int>(parse_int(v, k));
       }},
      {"net.stage_channels", [](RunConfig& c, const std::string& k, const std::string& v) {
         auto vals = parse_int_list(v, k);
         resize_stages(c.net.stages, vals.size());
         c.net.stages.resize(vals.size());
         for (size_t i = 0; i < vals.size(); ++i) c.net.stages[i].channels = vals[i];
       }},
      {"net.stage_stride_z", [](RunConfig& c, const std::string& k, const std::string& v) {
         auto vals = parse_int_list(v, k);
         resize_stages(c.net.stages, vals.size());
         for (size_t i = 0; i < vals.size(); ++i) c.net.stages[i].stride_z = vals[i];
       }},
      {"net.stage_stride_r", [](RunConfig& c, const std::string& k, const std::string& v) {
         auto vals = parse_int_list(v, k);
         resize_stages(c.net.stages, vals.size());
         for (size_t i = 0; i < vals.size(); ++i) c.net.stages[i].stride_r = vals[i];
       }},
      {"net.stage_stride_theta", [](RunConfig& c, const std::string& k, const std::string& v) {
         auto vals = parse_int_list(v, k);
         resize_stages(c.net.stages, vals.size());
         for (size_t i = 0; i < vals.size(); ++i) c.net.stages[i].stride_theta = vals[i];
       }},
      {"net.stage_guided", [](RunConfig& c, const std::string& k, const std::string& v) {
         auto vals = parse_int_list(v, k);
         resize_stages(c.net.stages, vals.size());
         for (size_t i = 0; i < vals.size(); ++i) c.net.stages[i].guided = vals[i] != 0;
       }},
      {"net.kernel", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.kernel = static_cast<int>(parse_int(v, k));
       }},
      {"net.theta_kernel", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.theta_kernel = static_cast<int>(parse_int(v, k));
       }},
      {"net.guide_mid", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.guide_mid = static_cast<int>(parse_int(v, k));
       }},
      {"net.rpn_channels", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.rpn_channels = static_cast<int>(parse_int(v, k));
       }},
      {"net.head_shared", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.head_shared = static_cast<int>(parse_int(v, k));
       }},
      {"net.num_classes", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.num_classes = static_cast<int>(parse_int(v, k));
       }},
      {"net.head_groups", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.net.head_groups = parse_groups(v, k);
       }},
      {"train.batch", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.batch = static_cast<int>(parse_int(v, k));
       }},
      {"train.steps", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.steps = static_cast<int>(parse_int(v, k));
       }},
      {"train.lr_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.lr_max = parse_double(v, k);
       }},
      {"train.div_factor", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.div_factor = parse_double(v, k);
       }},
      {"train.final_div", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.final_div = parse_double(v, k);
       }},
      {"train.pct_start", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.pct_start = parse_double(v, k);
       }},
      {"train.momentum_low", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.momentum_low = parse_double(v, k);
       }},
      {"train.momentum_high", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.momentum_high = parse_double(v, k);
       }},
      {"train.weight_decay", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.weight_decay = parse_double(v, k);
       }},
      {"train.lambda_reg", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.lambda_reg = parse_double(v, k);
       }},
      {"train.balance_classes", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.balance_classes = parse_bool(v, k);
       }},
      {"train.augment", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.augment = parse_bool(v, k);
       }},
      {"target.min_overlap", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.target.min_overlap = parse_double(v, k);
       }},
      {"target.min_gauss_radius", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.target.min_gauss_radius = parse_double(v, k);
       }},
      {"decode.top_k", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.decode.top_k = static_cast<int>(parse_int(v, k));
       }},
      {"decode.score_threshold", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.decode.score_threshold = parse_double(v, k);
       }},
      {"decode.nms_iou", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.decode.nms_iou = parse_double(v, k);
       }},
      {"decode.max_per_group", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.decode.max_per_group = static_cast<int>(parse_int(v, k));
       }},
      {"synth.scenes", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.scenes = static_cast<int>(parse_int(v, k));
       }},
      {"synth.boxes_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.boxes_min = static_cast<int>(parse_int(v, k));
       }},
      {"synth.boxes_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.boxes_max = static_cast<int>(parse_int(v, k));
       }},
      {"synth.r_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.r_min = parse_double(v, k);
       }},
      {"synth.r_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.r_max = parse_double(v, k);
       }},
      {"synth.v_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.v_max = parse_double(v, k);
       }},
      {"synth.azimuth", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.azimuth = static_cast<int>(parse_int(v, k));
       }},
      {"synth.elevations", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.elevations = parse_double_list(v, k);
       }},
      {"synth.scan_range", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.scan_range = parse_double(v, k);
       }},
      {"synth.noise_sigma", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth.noise_sigma = parse_double(v, k);
       }},
      {"aug.rotation_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.rotation_min = parse_double(v, k);
       }},
      {"aug.rotation_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.rotation_max = parse_double(v, k);
       }},
      {"aug.scale_min", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.scale_min = parse_double(v, k);
       }},
      {"aug.scale_max", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.scale_max = parse_double(v, k);
       }},
      {"aug.translate", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.translate = parse_double(v, k);
       }},
      {"aug.flip_x_prob", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.flip_x_prob = parse_double(v, k);
       }},
      {"aug.flip_y_prob", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.aug.flip_y_prob = parse_double(v, k);
       }},
  };
  return table;
}

}  // namespace

GridSpec RunConfig::grid_spec() const {
  return make_grid_spec(grid_r_min, grid_r_max, grid_delta_r, grid_delta_theta, grid_z_min,
                        grid_z_max, grid_delta_z, grid_max_points_per_voxel, grid_max_voxels);
}

OutputGrid RunConfig::output_grid() const {
  return OutputGrid::from(grid_spec(), net.total_stride_r(), net.total_stride_theta());
}

RunConfig default_toy_config() { return RunConfig{}; }

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  apply_config_text(cfg, buf.str(), path.string());
}

RunConfig load_config(const std::optional<std::filesystem::path>& path) {
  RunConfig cfg = default_toy_config();
  if (path) apply_config_file(cfg, *path);
  cfg.net.validate();
  (void)cfg.grid_spec();  // validates the grid early
  return cfg;
}

std::string RunConfig::snapshot() const {
  std::ostringstream os;
  os.precision(17);
  os << "seed = " << seed << '\n';
  os << "threads = " << threads << '\n';
  os << "grid.r_min = " << grid_r_min << '\n';
  os << "grid.r_max = " << grid_r_max << '\n';
  os << "grid.delta_r = " << grid_delta_r << '\n';
  os << "grid.delta_theta = " << grid_delta_theta << '\n';
  os << "grid.z_min = " << grid_z_min << '\n';
  os << "grid.z_max = " << grid_z_max << '\n';
  os << "grid.delta_z = " << grid_delta_z << '\n';
  os << "grid.max_points_per_voxel = " << grid_max_points_per_voxel << '\n';
  os << "grid.max_voxels = " << grid_max_voxels << '\n';
  os << "net.stage_channels = "
     << format_stage_field(net.stages, [](const StageSpec& s) { return s.channels; }) << '\n';
  os << "net.stage_stride_z = "
     << format_stage_field(net.stages, [](const StageSpec& s) { return s.stride_z; }) << '\n';
  os << "net.stage_stride_r = "
     << format_stage_field(net.stages, [](const StageSpec& s) { return s.stride_r; }) << '\n';
  os << "net.stage_stride_theta = "
     << format_stage_field(net.stages, [](const StageSpec& s) { return s.stride_theta; }) << '\n';
  os << "net.stage_guided = "
     << format_stage_field(net.stages, [](const StageSpec& s) { return s.guided ? 1 : 0; })
     << '\n';
  os << "net.kernel = " << net.kernel << '\n';
  os << "net.theta_kernel = " << net.theta_kernel << '\n';
  os << "net.guide_mid = " << net.guide_mid << '\n';
  os << "net.rpn_channels = " << net.rpn_channels << '\n';
  os << "net.head_shared = " << net.head_shared << '\n';
  os << "net.num_classes = " << net.num_classes << '\n';
  os << "net.head_groups = " << format_groups(net.head_groups) << '\n';
  os << "train.batch = " << train.batch << '\n';
  os << "train.steps = " << train.steps << '\n';
  os << "train.lr_max = " << train.lr_max << '\n';
  os << "train.div_factor = " << train.div_factor << '\n';
  os << "train.final_div = " << train.final_div << '\n';
  os << "train.pct_start = " << train.pct_start << '\n';
  os << "train.momentum_low = " << train.momentum_low << '\n';
  os << "train.momentum_high = " << train.momentum_high << '\n';
  os << "train.weight_decay = " << train.weight_decay << '\n';
  os << "train.lambda_reg = " << train.lambda_reg << '\n';
  os << "train.balance_classes = " << (train.balance_classes ? "true" : "false") << '\n';
  os << "train.augment = " << (train.augment ? "true" : "false") << '\n';
  os << "target.min_overlap = " << target.min_overlap << '\n';
  os << "target.min_gauss_radius = " << target.min_gauss_radius << '\n';
  os << "decode.top_k = " << decode.top_k << '\n';
  os << "decode.score_threshold = " << decode.score_threshold << '\n';
  os << "decode.nms_iou = " << decode.nms_iou << '\n';
  os << "decode.max_per_group = " << decode.max_per_group << '\n';
  os << "synth.scenes = " << synth.scenes << '\n';
  os << "synth.boxes_min = " << synth.boxes_min << '\n';
  os << "synth.boxes_max = " << synth.boxes_max << '\n';
  os << "synth.r_min = " << synth.r_min << '\n';
  os << "synth.r_max = " << synth.r_max << '\n';
  os << "synth.v_max = " << synth.v_max << '\n';
  os << "synth.azimuth = " << synth.azimuth << '\n';
  os << "synth.elevations = " << format_list(synth.elevations) << '\n';
  os << "synth.scan_range = " << synth.scan_range << '\n';
  os << "synth.noise_sigma = " << synth.noise_sigma << '\n';
  os << "aug.rotation_min = " << aug.rotation_min << '\n';
  os << "aug.rotation_max = " << aug.rotation_max << '\n';
  os << "aug.scale_min = " << aug.scale_min << '\n';
  os << "aug.scale_max = " << aug.scale_max << '\n';
  os << "aug.translate = " << aug.translate << '\n';
  os << "aug.flip_x_prob = " << aug.flip_x_prob << '\n';
  os << "aug.flip_y_prob = " << aug.flip_y_prob << '\n';
  return os.str();
}

uint32_t RunConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << grid_r_min << '|' << grid_r_max << '|' << grid_delta_r << '|' << grid_delta_theta << '|'
     << grid_z_min << '|' << grid_z_max << '|' << grid_delta_z << '|';
  for (const auto& s : net.stages)
    os << s.channels << ',' << s.stride_z << ',' << s.stride_r << ',' << s.stride_theta << ','
       << s.guided << ';';
  os << net.kernel << '|' << net.theta_kernel << '|' << net.guide_mid << '|' << net.rpn_channels
     << '|' << net.head_shared << '|' << net.num_classes << '|' << format_groups(net.head_groups);
  uint32_t h = 2166136261u;
  for (char c : os.str()) {
    h ^= static_cast<uint8_t>(c);
    h *= 16777619u;
  }
  return h;
}

}  // namespace cyldet

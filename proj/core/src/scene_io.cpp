#include "cyldet/scene_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "cyldet/errors.hpp"

namespace cyldet {

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write("CYLP", 4);
  uint32_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t count = cloud.points.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  static_assert(sizeof(LidarPoint) == 5 * sizeof(float));
  os.write(reinterpret_cast<const char*>(cloud.points.data()),
           static_cast<std::streamsize>(count * sizeof(LidarPoint)));
  if (!os) throw DataError("write failed: " + path.string());
}

PointCloud load_cloud(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated point-cloud header");
  if (std::memcmp(magic, "CYLP", 4) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "bad point-cloud magic");
  uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated point-cloud header");
  if (version != 1)
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported point-cloud version " + std::to_string(version));
  uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated point-cloud header");
  PointCloud cloud;
  cloud.frame_id = path.stem().string();
  cloud.points.resize(count);
  is.read(reinterpret_cast<char*>(cloud.points.data()),
          static_cast<std::streamsize>(count * sizeof(LidarPoint)));
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated point-cloud record");
  return cloud;
}

void save_labels(const std::string& frame_id, const std::vector<Box3D>& boxes,
                 const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  for (const Box3D& b : boxes) {
    nlohmann::ordered_json j;
    j["frame"] = frame_id;
    j["class"] = b.class_id;
    j["center"] = {b.x, b.y, b.z};
    j["size"] = {b.w, b.l, b.h};
    j["yaw"] = b.yaw;
    j["velocity"] = {b.vx, b.vy};
    if (b.attribute_id)
      j["attribute"] = *b.attribute_id;
    else
      j["attribute"] = nullptr;
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write failed: " + path.string());
}

std::vector<std::pair<std::string, Box3D>> load_labels(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  std::vector<std::pair<std::string, Box3D>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatError::Kind::BadValue,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      Box3D b;
      b.class_id = j.at("class").get<int>();
      const auto& c = j.at("center");
      b.x = c.at(0).get<double>();
      b.y = c.at(1).get<double>();
      b.z = c.at(2).get<double>();
      const auto& s = j.at("size");
      b.w = s.at(0).get<double>();
      b.l = s.at(1).get<double>();
      b.h = s.at(2).get<double>();
      b.yaw = j.at("yaw").get<double>();
      const auto& v = j.at("velocity");
      b.vx = v.at(0).get<double>();
      b.vy = v.at(1).get<double>();
      if (j.contains("attribute") && !j.at("attribute").is_null())
        b.attribute_id = j.at("attribute").get<int>();
      out.emplace_back(j.at("frame").get<std::string>(), b);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatError::Kind::BadValue,
                        path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

PointCloud aggregate_sweeps(const std::vector<std::pair<PointCloud, double>>& sweeps,
                            int max_sweeps) {
  if (static_cast<int>(sweeps.size()) > max_sweeps)
    throw DataError("too many sweeps: " + std::to_string(sweeps.size()) + " > cap " +
                    std::to_string(max_sweeps));
  PointCloud out;
  double prev_lag = 0.0;
  for (size_t i = 0; i < sweeps.size(); ++i) {
    const auto& [cloud, lag] = sweeps[i];
    if (i == 0) {
      out.frame_id = cloud.frame_id;
      if (lag != 0.0) throw DataError("key-frame sweep must have lag 0");
    }
    if (lag < 0.0 || lag < prev_lag)
      throw DataError("sweep lags must be nonnegative and nondecreasing");
    prev_lag = lag;
    for (LidarPoint p : cloud.points) {
      p.dt = static_cast<float>(lag);
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace cyldet

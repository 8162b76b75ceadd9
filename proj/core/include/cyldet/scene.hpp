#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cyldet {

struct LidarPoint {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;  // [0, 1]
  float dt = 0.f;         // seconds of lag behind the key frame
};

struct PointCloud {
  std::string frame_id;
  std::vector<LidarPoint> points;  // stable file order
};

// Annotated object in Cartesian world coordinates.
struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;  // center
  double w = 0.0, l = 0.0, h = 0.0;  // size, strictly positive
  double yaw = 0.0;                  // radians in (-pi, pi]
  double vx = 0.0, vy = 0.0;         // m/s
  int class_id = 0;
  std::optional<int> attribute_id;
};

struct Scene {
  PointCloud cloud;
  std::vector<Box3D> labels;
};

struct ScannerSpec {
  int n_azimuth = 720;                     // rays per revolution, >= 4
  std::vector<double> elevation_angles;    // radians
  double max_range = 70.0;                 // meters
  double noise_sigma = 0.01;               // meters, Gaussian range noise
};

}  // namespace cyldet

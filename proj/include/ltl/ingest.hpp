#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ltl/types.hpp"

namespace ltl {

struct Calibration {
  Eigen::Matrix<double, 3, 4> projection = Eigen::Matrix<double, 3, 4>::Identity();
  Eigen::Matrix4d rect = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d lidar_to_cam = Eigen::Matrix4d::Identity();
  int image_width = 1242;
  int image_height = 375;
};

struct FrameBundle {
  PointCloud cloud;
  std::vector<Detection2D> detections;
  Calibration calib;
};

struct CloudReadStats {
  std::size_t rejected_records = 0;    // non-finite coordinates
  std::size_t clamped_intensities = 0; // intensity outside [0,1]
};

// KITTI velodyne layout: 16 bytes per point, little-endian float32 x,y,z,intensity.
PointCloud read_cloud(const std::filesystem::path& path, CloudReadStats* stats = nullptr);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);
std::vector<std::uint8_t> encode_cloud(std::span<const Point> points);
std::vector<Point> decode_cloud(std::span<const std::uint8_t> bytes, CloudReadStats* stats = nullptr);

struct DetectionReadOptions {
  double score_threshold = 0.5;  // inclusive
  bool has_header = false;
};

using DetectionMap = std::map<std::int64_t, std::vector<Detection2D>>;

struct DetectionReadStats {
  std::size_t below_threshold = 0;
  std::size_t unknown_class = 0;
};

// CSV: frame_id,class,score,u_min,v_min,u_max,v_max
DetectionMap read_detections(const std::filesystem::path& path,
                             const DetectionReadOptions& options = {},
                             DetectionReadStats* stats = nullptr);

// JSON lines: {"frame_id":..,"class":..,"score":..,"box":[u_min,v_min,u_max,v_max]}
DetectionMap read_detections_jsonl(const std::filesystem::path& path,
                                   const DetectionReadOptions& options = {},
                                   DetectionReadStats* stats = nullptr);

void write_detections(const std::filesystem::path& path, const DetectionMap& detections);

Calibration read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, const Calibration& calib);

std::vector<FrameBundle> synchronize(std::vector<PointCloud> clouds, const DetectionMap& detections,
                                     const Calibration& calib);

}  // namespace ltl

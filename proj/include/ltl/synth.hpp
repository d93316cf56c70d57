#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string_view>
#include <vector>

#include "ltl/descriptor.hpp"
#include "ltl/ingest.hpp"
#include "ltl/segmentation.hpp"

namespace ltl {

struct SceneParams {
  std::size_t frames = 300;
  double frame_period = 0.1;
  std::size_t concurrent_objects = 8;
  std::array<double, kNumClasses> class_mix{0.4, 0.3, 0.3};
  std::size_t clutter_objects = 6;
  std::size_t noise_points = 30;
  double max_range = 40.0;
  double spawn_min_range = 6.0;
  double point_density = 4000.0;  // returns per m^2 of facing surface at 1 m
  double point_noise = 0.02;      // m

  double camera_range = 35.0;       // detector sees objects up to this distance
  double detection_dropout = 0.3;
  double class_confusion = 0.02;    // detections carrying a wrong class
  double score_min = 0.4;
  double score_max = 0.98;
  double box_jitter = 0.02;         // fraction of box size
  std::uint64_t seed = 1;
};

// Named presets: "default" (300 frames), "small" (80 frames), "test" (held-out stream).
SceneParams scenario(std::string_view name);

struct ObjectTruth {
  std::int64_t object_id = 0;
  ObjectClass label = ObjectClass::Car;
  double x = 0.0, y = 0.0;  // footprint centre
  double yaw = 0.0;
  double length = 0.0, width = 0.0, height = 0.0;
};

struct SynthFrame {
  PointCloud cloud;
  std::vector<std::int64_t> point_owner;  // object id per point, -1 for clutter and noise
  std::vector<ObjectTruth> objects;
  std::vector<Detection2D> detections;
};

class SceneGenerator {
 public:
  explicit SceneGenerator(SceneParams params);

  const Calibration& calibration() const { return calib_; }
  SynthFrame next();

  static Calibration kitti_like_calibration();
  static constexpr double kSensorHeight = 1.73;

 private:
  struct Mover {
    ObjectTruth truth;
    double speed = 0.0;
    double yaw_rate = 0.0;
  };
  struct Static {
    double x, y, length, width, height, yaw;
  };

  Mover spawn_mover();
  bool in_camera_view(const ObjectTruth& o) const;
  void sample_box(const ObjectTruth& box, double intensity_mean, double intensity_std, std::int64_t owner,
                  SynthFrame& frame);

  SceneParams params_;
  Calibration calib_;
  std::mt19937_64 rng_;
  std::vector<Mover> movers_;
  std::vector<Static> statics_;
  std::int64_t frame_index_ = 0;
  std::int64_t next_object_id_ = 0;
};

std::vector<SynthFrame> generate_scene(const SceneParams& params);

struct LabelledFeatures {
  std::vector<FeatureVector> features;
  std::vector<ObjectClass> labels;
};

// Clusters of every `stride`-th frame that pass the filter and are owned (>= 80% of points)
// by one object, labelled with that object's class.
LabelledFeatures ground_truth_features(const std::vector<SynthFrame>& frames, const ClusterParams& cluster,
                                       const VolumetricFilter& filter, std::size_t stride = 1);

// Writes velodyne/, detections.csv, calib.txt, timestamps.txt and labels.csv under `dir`.
void write_sequence(const std::filesystem::path& dir, const std::vector<SynthFrame>& frames,
                    const Calibration& calib);

}  // namespace ltl

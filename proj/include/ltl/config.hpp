#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>

#include "ltl/annotate.hpp"
#include "ltl/discriminator.hpp"
#include "ltl/ingest.hpp"
#include "ltl/orf.hpp"
#include "ltl/segmentation.hpp"
#include "ltl/tracker.hpp"

namespace ltl {

enum class RunMode { Full, NoTracker, VolumetricOnly, OrfOnly };

std::string_view to_string(RunMode m);
RunMode parse_mode(std::string_view s);

enum class DetectionFormat { Csv, JsonLines };

struct RunConfig {
  std::filesystem::path train_dir;       // velodyne/, detections.csv, calib.txt, timestamps.txt
  std::filesystem::path test_features;   // labelled feature CSV
  std::filesystem::path train_features;  // labelled feature CSV, orf-only mode
  DetectionFormat detection_format = DetectionFormat::Csv;
  DetectionReadOptions detections;

  ClusterParams cluster;
  VolumetricFilter filter;
  MatchThresholds match;

  // Tracker knobs; the model set is built from these by tracker_params().
  bool ctrv = true;
  double stay_probability = 0.9;
  MotionNoise motion;
  double measurement_std = 0.2;
  double detection_probability = 0.9;
  double clutter_density = 1e-3;
  double gate_threshold = 9.21;
  int confirm_hits = 3;
  int max_misses = 5;

  DiscriminatorParams discriminator;
  ForestParams forest;

  std::size_t checkpoint_interval = 100;
  std::size_t undersample_window = 100;
  std::array<std::size_t, kNumClasses> undersample_caps{34, 34, 34};
  double template_score = 0.9;  // pre-label score in volumetric-only mode
  double frame_period = 0.1;    // seconds, when timestamps are absent
  RunMode mode = RunMode::Full;
  std::filesystem::path checkpoint_dir;
  std::filesystem::path feature_dump;  // debug: every learned sample as a feature CSV row

  TrackerParams tracker_params() const;
  void validate() const;
};

// Flat "key = value" lines; '#' starts a comment. Relative data paths resolve against the
// directory holding the config file. Unknown keys are an error.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
std::string format_config(const RunConfig& config);

}  // namespace ltl

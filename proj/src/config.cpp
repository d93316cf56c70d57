#include "ltl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace ltl {

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::Full: return "full";
    case RunMode::NoTracker: return "no-tracker";
    case RunMode::VolumetricOnly: return "volumetric-only";
    case RunMode::OrfOnly: return "orf-only";
  }
  return "?";
}

RunMode parse_mode(std::string_view s) {
  if (s == "full") return RunMode::Full;
  if (s == "no-tracker") return RunMode::NoTracker;
  if (s == "volumetric-only") return RunMode::VolumetricOnly;
  if (s == "orf-only") return RunMode::OrfOnly;
  throw FormatError("unknown mode '" + std::string(s) + "'");
}

TrackerParams RunConfig::tracker_params() const {
  TrackerParams p;
  p.model_set = ctrv ? MotionModelSet::cv_ctrv(motion, stay_probability) : MotionModelSet::cv_only(motion);
  p.measurement_noise = Eigen::Matrix2d::Identity() * (measurement_std * measurement_std);
  p.detection_probability = detection_probability;
  p.clutter_density = clutter_density;
  p.gate_threshold = gate_threshold;
  p.confirm_hits = confirm_hits;
  p.max_misses = max_misses;
  return p;
}

void RunConfig::validate() const {
  if (checkpoint_interval < 1) throw ContractError("run.checkpoint_interval must be >= 1");
  if (undersample_window < 1) throw ContractError("undersample.window must be >= 1");
  if (!(cluster.distance > 0.0)) throw ContractError("cluster.distance_d must be > 0");
  for (const auto* r : {&filter.w, &filter.d, &filter.h})
    if (r->min > r->max) throw ContractError("volumetric range has min > max");
  if (discriminator.flush_interval < 1) throw ContractError("disc.flush_interval must be >= 1");
  if (!(discriminator.threshold > 0.0 && discriminator.threshold < 1.0))
    throw ContractError("disc.threshold must lie in (0, 1)");
  if (!(discriminator.score_floor > 0.0 && discriminator.score_floor < discriminator.score_ceiling &&
        discriminator.score_ceiling < 1.0))
    throw ContractError("disc score clamp must satisfy 0 < floor < ceiling < 1");
  if (!(detection_probability > 0.0 && detection_probability <= 1.0))
    throw ContractError("tracker.detection_probability must lie in (0, 1]");
  if (clutter_density < 0.0) throw ContractError("tracker.clutter_density must be >= 0");
  if (confirm_hits < 1 || max_misses < 1) throw ContractError("tracker lifecycle counts must be >= 1");
  for (auto cap : undersample_caps)
    if (cap < 1) throw ContractError("undersample.caps must be >= 1");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T number(const std::string& key, const std::string& v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw FormatError("config key " + key + ": bad number '" + v + "'");
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError("config key " + key + ": expected a boolean");
}

Range range(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  std::string a, b, extra;
  if (!(in >> a >> b) || (in >> extra)) throw FormatError("config key " + key + ": expected 'min max'");
  return Range{number<double>(key, a), number<double>(key, b)};
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_relative() && !base.empty() ? base / p : p;
}

const std::map<std::string, Setter, std::less<>>& setters() {
  using K = const std::string&;
  using B = const std::filesystem::path&;
  static const std::map<std::string, Setter, std::less<>> table = {
      {"data.train_dir", [](RunConfig& c, K, K v, B b) { c.train_dir = resolve(b, v); }},
      {"data.test_features", [](RunConfig& c, K, K v, B b) { c.test_features = resolve(b, v); }},
      {"data.train_features", [](RunConfig& c, K, K v, B b) { c.train_features = resolve(b, v); }},
      {"data.detections_format",
       [](RunConfig& c, K k, K v, B) {
         if (v == "csv") c.detection_format = DetectionFormat::Csv;
         else if (v == "jsonl") c.detection_format = DetectionFormat::JsonLines;
         else throw FormatError("config key " + k + ": expected csv or jsonl");
       }},
      {"data.detections_header", [](RunConfig& c, K k, K v, B) { c.detections.has_header = boolean(k, v); }},
      {"detect.score_threshold",
       [](RunConfig& c, K k, K v, B) { c.detections.score_threshold = number<double>(k, v); }},
      {"cluster.distance_d", [](RunConfig& c, K k, K v, B) { c.cluster.distance = number<double>(k, v); }},
      {"filter.w_range", [](RunConfig& c, K k, K v, B) { c.filter.w = range(k, v); }},
      {"filter.d_range", [](RunConfig& c, K k, K v, B) { c.filter.d = range(k, v); }},
      {"filter.h_range", [](RunConfig& c, K k, K v, B) { c.filter.h = range(k, v); }},
      {"filter.ground_z", [](RunConfig& c, K k, K v, B) { c.cluster.ground_z = number<double>(k, v); }},
      {"match.iou_car", [](RunConfig& c, K k, K v, B) { c.match.car = number<double>(k, v); }},
      {"match.iou_ped", [](RunConfig& c, K k, K v, B) { c.match.pedestrian = number<double>(k, v); }},
      {"match.iou_cyc", [](RunConfig& c, K k, K v, B) { c.match.cyclist = number<double>(k, v); }},
      {"tracker.models",
       [](RunConfig& c, K k, K v, B) {
         if (v == "cv+ctrv") c.ctrv = true;
         else if (v == "cv") c.ctrv = false;
         else throw FormatError("config key " + k + ": expected cv or cv+ctrv");
       }},
      {"tracker.stay_probability", [](RunConfig& c, K k, K v, B) { c.stay_probability = number<double>(k, v); }},
      {"tracker.accel_std", [](RunConfig& c, K k, K v, B) { c.motion.accel_std = number<double>(k, v); }},
      {"tracker.yaw_accel_std", [](RunConfig& c, K k, K v, B) { c.motion.yaw_accel_std = number<double>(k, v); }},
      {"tracker.measurement_std", [](RunConfig& c, K k, K v, B) { c.measurement_std = number<double>(k, v); }},
      {"tracker.p_d", [](RunConfig& c, K k, K v, B) { c.detection_probability = number<double>(k, v); }},
      {"tracker.clutter_density", [](RunConfig& c, K k, K v, B) { c.clutter_density = number<double>(k, v); }},
      {"tracker.gate", [](RunConfig& c, K k, K v, B) { c.gate_threshold = number<double>(k, v); }},
      {"tracker.confirm_hits", [](RunConfig& c, K k, K v, B) { c.confirm_hits = number<int>(k, v); }},
      {"tracker.max_misses", [](RunConfig& c, K k, K v, B) { c.max_misses = number<int>(k, v); }},
      {"disc.threshold", [](RunConfig& c, K k, K v, B) { c.discriminator.threshold = number<double>(k, v); }},
      {"disc.score_floor", [](RunConfig& c, K k, K v, B) { c.discriminator.score_floor = number<double>(k, v); }},
      {"disc.score_ceiling",
       [](RunConfig& c, K k, K v, B) { c.discriminator.score_ceiling = number<double>(k, v); }},
      {"disc.flush_interval",
       [](RunConfig& c, K k, K v, B) { c.discriminator.flush_interval = number<int>(k, v); }},
      {"orf.trees", [](RunConfig& c, K k, K v, B) { c.forest.num_trees = number<std::size_t>(k, v); }},
      {"orf.depth", [](RunConfig& c, K k, K v, B) { c.forest.max_depth = number<std::size_t>(k, v); }},
      {"orf.epochs", [](RunConfig& c, K k, K v, B) { c.forest.epochs = number<std::size_t>(k, v); }},
      {"orf.split_threshold",
       [](RunConfig& c, K k, K v, B) { c.forest.split_threshold = number<double>(k, v); }},
      {"orf.min_gain", [](RunConfig& c, K k, K v, B) { c.forest.min_gain = number<double>(k, v); }},
      {"orf.candidates",
       [](RunConfig& c, K k, K v, B) { c.forest.candidates_per_leaf = number<std::size_t>(k, v); }},
      {"orf.warmup", [](RunConfig& c, K k, K v, B) { c.forest.threshold_warmup = number<std::size_t>(k, v); }},
      {"orf.seed", [](RunConfig& c, K k, K v, B) { c.forest.seed = number<std::uint64_t>(k, v); }},
      {"run.mode", [](RunConfig& c, K, K v, B) { c.mode = parse_mode(v); }},
      {"run.checkpoint_interval",
       [](RunConfig& c, K k, K v, B) { c.checkpoint_interval = number<std::size_t>(k, v); }},
      {"run.checkpoint_dir", [](RunConfig& c, K, K v, B b) { c.checkpoint_dir = resolve(b, v); }},
      {"run.feature_dump", [](RunConfig& c, K, K v, B b) { c.feature_dump = resolve(b, v); }},
      {"run.frame_period", [](RunConfig& c, K k, K v, B) { c.frame_period = number<double>(k, v); }},
      {"run.template_score", [](RunConfig& c, K k, K v, B) { c.template_score = number<double>(k, v); }},
      {"undersample.window",
       [](RunConfig& c, K k, K v, B) { c.undersample_window = number<std::size_t>(k, v); }},
      {"undersample.caps",
       [](RunConfig& c, K k, K v, B) {
         std::istringstream in(v);
         for (auto& cap : c.undersample_caps) {
           std::string tok;
           if (!(in >> tok)) throw FormatError("config key " + k + ": expected one cap per class");
           cap = number<std::size_t>(k, tok);
         }
       }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw FormatError("config line " + std::to_string(line_no) + ": unknown key " + key);
    it->second(config, key, value, base_dir);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "data.train_dir = " << c.train_dir.string() << '\n';
  if (!c.test_features.empty()) out << "data.test_features = " << c.test_features.string() << '\n';
  if (!c.train_features.empty()) out << "data.train_features = " << c.train_features.string() << '\n';
  out << "cluster.distance_d = " << c.cluster.distance << '\n';
  out << "filter.w_range = " << c.filter.w.min << ' ' << c.filter.w.max << '\n';
  out << "filter.d_range = " << c.filter.d.min << ' ' << c.filter.d.max << '\n';
  out << "filter.h_range = " << c.filter.h.min << ' ' << c.filter.h.max << '\n';
  out << "match.iou_car = " << c.match.car << '\n';
  out << "match.iou_ped = " << c.match.pedestrian << '\n';
  out << "match.iou_cyc = " << c.match.cyclist << '\n';
  out << "detect.score_threshold = " << c.detections.score_threshold << '\n';
  out << "tracker.models = " << (c.ctrv ? "cv+ctrv" : "cv") << '\n';
  out << "disc.threshold = " << c.discriminator.threshold << '\n';
  out << "orf.trees = " << c.forest.num_trees << '\n';
  out << "orf.depth = " << c.forest.max_depth << '\n';
  out << "orf.epochs = " << c.forest.epochs << '\n';
  out << "orf.split_threshold = " << c.forest.split_threshold << '\n';
  out << "orf.min_gain = " << c.forest.min_gain << '\n';
  out << "orf.seed = " << c.forest.seed << '\n';
  out << "run.mode = " << to_string(c.mode) << '\n';
  out << "run.checkpoint_interval = " << c.checkpoint_interval << '\n';
  out << "undersample.window = " << c.undersample_window << '\n';
  out << "undersample.caps = " << c.undersample_caps[0] << ' ' << c.undersample_caps[1] << ' '
      << c.undersample_caps[2] << '\n';
  return out.str();
}

}  // namespace ltl

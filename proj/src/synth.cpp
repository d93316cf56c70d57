#include "ltl/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>

namespace ltl {

SceneParams scenario(std::string_view name) {
  SceneParams p;
  if (name == "default") return p;
  if (name == "small") {
    p.frames = 80;
    p.concurrent_objects = 5;
    p.clutter_objects = 3;
    return p;
  }
  if (name == "test") {
    p.frames = 150;
    p.seed = 7919;
    return p;
  }
  throw ContractError("unknown scenario '" + std::string(name) + "'");
}

namespace {

struct ClassShape {
  double length_lo, length_hi, width_lo, width_hi, height_lo, height_hi;
  double speed_lo, speed_hi;
  double intensity_mean, intensity_std;
};

const ClassShape& shape_of(ObjectClass c) {
  static const ClassShape car{3.8, 4.8, 1.6, 1.95, 1.35, 1.55, 4.0, 11.0, 0.72, 0.10};
  static const ClassShape ped{0.5, 0.8, 0.5, 0.7, 1.6, 1.9, 0.8, 1.8, 0.15, 0.06};
  static const ClassShape cyc{1.6, 1.9, 0.5, 0.7, 1.65, 1.9, 3.0, 6.0, 0.40, 0.07};
  switch (c) {
    case ObjectClass::Car: return car;
    case ObjectClass::Pedestrian: return ped;
    case ObjectClass::Cyclist: return cyc;
  }
  return car;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Corners of an oriented box in the sensor frame.
std::array<Eigen::Vector3d, 8> corners(const ObjectTruth& o) {
  std::array<Eigen::Vector3d, 8> out;
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  const double z0 = -SceneGenerator::kSensorHeight;
  for (int k = 0; k < 8; ++k) {
    const double lx = ((k & 1) ? 0.5 : -0.5) * o.length;
    const double ly = ((k & 2) ? 0.5 : -0.5) * o.width;
    out[static_cast<std::size_t>(k)] =
        Eigen::Vector3d(o.x + c * lx - s * ly, o.y + s * lx + c * ly, z0 + ((k & 4) ? o.height : 0.0));
  }
  return out;
}

}  // namespace

Calibration SceneGenerator::kitti_like_calibration() {
  Calibration calib;
  calib.projection << 721.5377, 0.0, 609.5593, 44.85728, 0.0, 721.5377, 172.854, 0.2163791, 0.0, 0.0, 1.0,
      0.002745884;
  calib.rect.setIdentity();
  calib.rect.topLeftCorner<3, 3>() << 0.9999239, 0.00983776, -0.007445048, -0.009869795, 0.9999421,
      -0.004278459, 0.007402527, 0.004351614, 0.9999631;
  calib.lidar_to_cam.setIdentity();
  calib.lidar_to_cam.topLeftCorner<3, 4>() << 7.533745e-03, -9.999714e-01, -6.166020e-04, -4.069766e-03,
      1.480249e-02, 7.280733e-04, -9.998902e-01, -7.631618e-02, 9.998621e-01, 7.523790e-03, 1.480755e-02,
      -2.717806e-01;
  calib.image_width = 1242;
  calib.image_height = 375;
  return calib;
}

SceneGenerator::SceneGenerator(SceneParams params)
    : params_(params), calib_(kitti_like_calibration()), rng_(params.seed) {
  for (std::size_t i = 0; i < params_.clutter_objects; ++i) {
    Static s{};
    const double r = uniform(rng_, params_.spawn_min_range, params_.max_range - 5.0);
    const double a = uniform(rng_, -std::numbers::pi, std::numbers::pi);
    s.x = r * std::cos(a);
    s.y = r * std::sin(a);
    s.yaw = uniform(rng_, -std::numbers::pi, std::numbers::pi);
    switch (i % 3) {
      case 0:  // pole
        s.length = s.width = 0.25;
        s.height = uniform(rng_, 2.5, 4.0);
        break;
      case 1:  // hedge
        s.length = uniform(rng_, 0.8, 2.0);
        s.width = uniform(rng_, 0.8, 2.0);
        s.height = uniform(rng_, 0.5, 1.2);
        break;
      default:  // bin
        s.length = s.width = 0.6;
        s.height = 1.1;
        break;
    }
    statics_.push_back(s);
  }
  for (std::size_t i = 0; i < params_.concurrent_objects; ++i) movers_.push_back(spawn_mover());
}

SceneGenerator::Mover SceneGenerator::spawn_mover() {
  std::discrete_distribution<int> pick_class(params_.class_mix.begin(), params_.class_mix.end());
  Mover m;
  m.truth.object_id = next_object_id_++;
  m.truth.label = static_cast<ObjectClass>(pick_class(rng_));
  const auto& shape = shape_of(m.truth.label);
  m.truth.length = uniform(rng_, shape.length_lo, shape.length_hi);
  m.truth.width = uniform(rng_, shape.width_lo, shape.width_hi);
  m.truth.height = uniform(rng_, shape.height_lo, shape.height_hi);
  m.speed = uniform(rng_, shape.speed_lo, shape.speed_hi);
  m.yaw_rate = uniform(rng_, 0.0, 1.0) < 0.3 ? uniform(rng_, -0.15, 0.15) : 0.0;

  for (int attempt = 0; attempt < 100; ++attempt) {
    const double r = uniform(rng_, params_.spawn_min_range, params_.max_range - 5.0);
    const double a = uniform(rng_, -std::numbers::pi, std::numbers::pi);
    m.truth.x = r * std::cos(a);
    m.truth.y = r * std::sin(a);
    m.truth.yaw = uniform(rng_, -std::numbers::pi, std::numbers::pi);
    bool clear = true;
    for (const auto& other : movers_)
      if (std::hypot(other.truth.x - m.truth.x, other.truth.y - m.truth.y) < 6.0) clear = false;
    for (const auto& s : statics_)
      if (std::hypot(s.x - m.truth.x, s.y - m.truth.y) < 4.0) clear = false;
    if (clear) break;
  }
  return m;
}

bool SceneGenerator::in_camera_view(const ObjectTruth& o) const {
  if (std::hypot(o.x, o.y) > params_.camera_range) return false;
  const Eigen::Vector4d centre(o.x, o.y, -kSensorHeight + 0.5 * o.height, 1.0);
  const Eigen::Vector4d cam = calib_.rect * calib_.lidar_to_cam * centre;
  if (cam.z() <= 1.0) return false;
  const Eigen::Vector3d img = calib_.projection * cam;
  const double u = img.x() / img.z();
  return u >= 0.0 && u <= calib_.image_width;
}

void SceneGenerator::sample_box(const ObjectTruth& o, double intensity_mean, double intensity_std,
                                std::int64_t owner, SynthFrame& frame) {
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  const Eigen::Vector3d centre(o.x, o.y, -kSensorHeight + 0.5 * o.height);
  const Eigen::Vector3d ax(c, s, 0.0), ay(-s, c, 0.0), az(0.0, 0.0, 1.0);
  const double half[3] = {0.5 * o.length, 0.5 * o.width, 0.5 * o.height};
  const Eigen::Vector3d axes[3] = {ax, ay, az};

  std::normal_distribution<double> jitter(0.0, params_.point_noise);
  std::normal_distribution<double> reflect(intensity_mean, intensity_std);
  // Faces: +/- each axis, bottom face excluded (it rests on the ground).
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {1, -1}) {
      if (axis == 2 && sign < 0) continue;
      const Eigen::Vector3d normal = sign * axes[axis];
      const Eigen::Vector3d face_centre = centre + sign * half[axis] * axes[axis];
      const double dist = face_centre.norm();
      const double facing = -normal.dot(face_centre) / dist;
      if (facing <= 0.0) continue;
      const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
      const double area = 4.0 * half[u_axis] * half[v_axis];
      const double expected = std::min(1500.0, params_.point_density * area * facing / (dist * dist));
      const int count = std::poisson_distribution<int>(expected)(rng_);
      for (int k = 0; k < count; ++k) {
        const Eigen::Vector3d p = face_centre + uniform(rng_, -1.0, 1.0) * half[u_axis] * axes[u_axis] +
                                  uniform(rng_, -1.0, 1.0) * half[v_axis] * axes[v_axis];
        Point pt;
        pt.x = static_cast<float>(p.x() + jitter(rng_));
        pt.y = static_cast<float>(p.y() + jitter(rng_));
        pt.z = static_cast<float>(p.z() + jitter(rng_));
        pt.intensity = static_cast<float>(std::clamp(reflect(rng_), 0.0, 1.0));
        frame.cloud.points.push_back(pt);
        frame.point_owner.push_back(owner);
      }
    }
  }
}

SynthFrame SceneGenerator::next() {
  SynthFrame frame;
  frame.cloud.frame_id = frame_index_;
  frame.cloud.timestamp = static_cast<double>(frame_index_) * params_.frame_period;

  if (frame_index_ > 0) {
    for (auto& m : movers_) {
      m.truth.yaw += m.yaw_rate * params_.frame_period;
      m.truth.x += m.speed * std::cos(m.truth.yaw) * params_.frame_period;
      m.truth.y += m.speed * std::sin(m.truth.yaw) * params_.frame_period;
    }
    for (auto& m : movers_) {
      const double r = std::hypot(m.truth.x, m.truth.y);
      if (r > params_.max_range || r < 3.0) m = spawn_mover();
    }
  }

  for (const auto& s : statics_) {
    ObjectTruth o;
    o.x = s.x;
    o.y = s.y;
    o.yaw = s.yaw;
    o.length = s.length;
    o.width = s.width;
    o.height = s.height;
    sample_box(o, 0.3, 0.15, -1, frame);
  }
  for (const auto& m : movers_) {
    const auto& shape = shape_of(m.truth.label);
    sample_box(m.truth, shape.intensity_mean, shape.intensity_std, m.truth.object_id, frame);
    frame.objects.push_back(m.truth);
  }
  for (std::size_t i = 0; i < params_.noise_points; ++i) {
    const double r = uniform(rng_, 3.0, params_.max_range);
    const double a = uniform(rng_, -std::numbers::pi, std::numbers::pi);
    Point pt;
    pt.x = static_cast<float>(r * std::cos(a));
    pt.y = static_cast<float>(r * std::sin(a));
    pt.z = static_cast<float>(uniform(rng_, -kSensorHeight, 1.0));
    pt.intensity = static_cast<float>(uniform(rng_, 0.0, 1.0));
    frame.cloud.points.push_back(pt);
    frame.point_owner.push_back(-1);
  }

  const Eigen::Matrix4d to_cam = calib_.rect * calib_.lidar_to_cam;
  for (const auto& o : frame.objects) {
    if (!in_camera_view(o)) continue;
    if (uniform(rng_, 0.0, 1.0) < params_.detection_dropout) continue;
    Box2D box{1e18, 1e18, -1e18, -1e18};
    bool behind = false;
    for (const auto& corner : corners(o)) {
      const Eigen::Vector4d cam = to_cam * corner.homogeneous();
      if (cam.z() <= 0.1) {
        behind = true;
        break;
      }
      const Eigen::Vector3d img = calib_.projection * cam;
      box.u_min = std::min(box.u_min, img.x() / img.z());
      box.u_max = std::max(box.u_max, img.x() / img.z());
      box.v_min = std::min(box.v_min, img.y() / img.z());
      box.v_max = std::max(box.v_max, img.y() / img.z());
    }
    if (behind) continue;
    std::normal_distribution<double> du(0.0, params_.box_jitter * box.width());
    std::normal_distribution<double> dv(0.0, params_.box_jitter * box.height());
    box.u_min += du(rng_);
    box.u_max += du(rng_);
    box.v_min += dv(rng_);
    box.v_max += dv(rng_);
    box.u_min = std::clamp(box.u_min, 0.0, static_cast<double>(calib_.image_width));
    box.u_max = std::clamp(box.u_max, 0.0, static_cast<double>(calib_.image_width));
    box.v_min = std::clamp(box.v_min, 0.0, static_cast<double>(calib_.image_height));
    box.v_max = std::clamp(box.v_max, 0.0, static_cast<double>(calib_.image_height));
    if (box.width() < 2.0 || box.height() < 2.0) continue;

    Detection2D det;
    det.box = box;
    det.class_label = o.label;
    if (uniform(rng_, 0.0, 1.0) < params_.class_confusion) {
      const auto shift = std::uniform_int_distribution<std::size_t>(1, kNumClasses - 1)(rng_);
      det.class_label = static_cast<ObjectClass>((index_of(o.label) + shift) % kNumClasses);
    }
    det.score = uniform(rng_, params_.score_min, params_.score_max);
    frame.detections.push_back(det);
  }
  ++frame_index_;
  return frame;
}

std::vector<SynthFrame> generate_scene(const SceneParams& params) {
  SceneGenerator gen(params);
  std::vector<SynthFrame> frames;
  frames.reserve(params.frames);
  for (std::size_t i = 0; i < params.frames; ++i) frames.push_back(gen.next());
  return frames;
}

LabelledFeatures ground_truth_features(const std::vector<SynthFrame>& frames, const ClusterParams& cluster,
                                       const VolumetricFilter& filter, std::size_t stride) {
  LabelledFeatures out;
  if (stride == 0) stride = 1;
  for (std::size_t f = 0; f < frames.size(); f += stride) {
    const auto& frame = frames[f];
    std::map<std::int64_t, ObjectClass> label_of;
    for (const auto& o : frame.objects) label_of[o.object_id] = o.label;
    const auto clusters = volumetric_filter(euclidean_cluster(frame.cloud, cluster), filter);
    for (const auto& c : clusters) {
      std::map<std::int64_t, std::size_t> votes;
      for (auto i : c.point_indices) ++votes[frame.point_owner[i]];
      const auto best = std::max_element(votes.begin(), votes.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
      if (best->first < 0) continue;
      if (static_cast<double>(best->second) < 0.8 * static_cast<double>(c.point_indices.size())) continue;
      out.features.push_back(extract(c, frame.cloud));
      out.labels.push_back(label_of.at(best->first));
    }
  }
  return out;
}

void write_sequence(const std::filesystem::path& dir, const std::vector<SynthFrame>& frames,
                    const Calibration& calib) {
  std::filesystem::create_directories(dir / "velodyne");
  DetectionMap detections;
  std::ofstream stamps(dir / "timestamps.txt");
  std::ofstream labels(dir / "labels.csv");
  stamps << std::setprecision(17);
  labels << std::setprecision(9) << "frame_id,object_id,class,x,y,yaw,length,width,height\n";
  for (const auto& f : frames) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << f.cloud.frame_id << ".bin";
    write_cloud(dir / "velodyne" / name.str(), f.cloud);
    if (!f.detections.empty()) detections[f.cloud.frame_id] = f.detections;
    stamps << f.cloud.timestamp << '\n';
    for (const auto& o : f.objects)
      labels << f.cloud.frame_id << ',' << o.object_id << ',' << to_string(o.label) << ',' << o.x << ',' << o.y
             << ',' << o.yaw << ',' << o.length << ',' << o.width << ',' << o.height << '\n';
  }
  write_detections(dir / "detections.csv", detections);
  write_calibration(dir / "calib.txt", calib);
}

}  // namespace ltl

#include "ltl/annotate.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

namespace ltl {

std::optional<Box2D> project_bbox(const Box3D& box, const Calibration& calib) {
  const Eigen::Matrix4d to_cam = calib.rect * calib.lidar_to_cam;
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box2D hull{inf, inf, -inf, -inf};
  int in_front = 0;
  for (int corner = 0; corner < 8; ++corner) {
    const Eigen::Vector4d p((corner & 1) ? box.max_x : box.min_x, (corner & 2) ? box.max_y : box.min_y,
                            (corner & 4) ? box.max_z : box.min_z, 1.0);
    const Eigen::Vector4d cam = to_cam * p;
    if (cam.z() <= 0.0) continue;
    const Eigen::Vector3d img = calib.projection * cam;
    if (img.z() <= 0.0) continue;
    const double u = img.x() / img.z();
    const double v = img.y() / img.z();
    hull.u_min = std::min(hull.u_min, u);
    hull.v_min = std::min(hull.v_min, v);
    hull.u_max = std::max(hull.u_max, u);
    hull.v_max = std::max(hull.v_max, v);
    ++in_front;
  }
  if (in_front < 2) return std::nullopt;
  hull.u_min = std::clamp(hull.u_min, 0.0, static_cast<double>(calib.image_width));
  hull.u_max = std::clamp(hull.u_max, 0.0, static_cast<double>(calib.image_width));
  hull.v_min = std::clamp(hull.v_min, 0.0, static_cast<double>(calib.image_height));
  hull.v_max = std::clamp(hull.v_max, 0.0, static_cast<double>(calib.image_height));
  if (hull.area() <= 0.0) return std::nullopt;
  return hull;
}

double iou(const Box2D& a, const Box2D& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

std::vector<std::optional<PreLabel>> match(std::span<const Cluster> clusters,
                                           std::span<const std::optional<Box2D>> boxes,
                                           std::span<const Detection2D> detections,
                                           const MatchThresholds& thresholds) {
  if (clusters.size() != boxes.size()) throw ContractError("match: clusters and boxes differ in length");

  struct Pair {
    double overlap;
    int cluster_id;
    std::size_t cluster_pos;
    std::size_t detection;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (!boxes[c]) continue;
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double o = iou(*boxes[c], detections[d].box);
      if (o > 0.0 && o >= thresholds.for_class(detections[d].class_label))
        pairs.push_back(Pair{o, clusters[c].id, c, d});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return std::tie(a.cluster_id, a.detection) < std::tie(b.cluster_id, b.detection);
  });

  std::vector<std::optional<PreLabel>> labels(clusters.size());
  std::vector<bool> used(detections.size(), false);
  for (const auto& p : pairs) {
    if (labels[p.cluster_pos] || used[p.detection]) continue;
    used[p.detection] = true;
    const auto& det = detections[p.detection];
    labels[p.cluster_pos] = PreLabel{det.class_label, det.score, p.detection};
  }
  return labels;
}

}  // namespace ltl

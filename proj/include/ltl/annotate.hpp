#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ltl/ingest.hpp"
#include "ltl/types.hpp"

namespace ltl {

struct PreLabel {
  ObjectClass class_label = ObjectClass::Car;
  double score = 0.0;
  std::size_t source_detection = 0;
};

struct MatchThresholds {
  double car = 0.7;
  double pedestrian = 0.5;
  double cyclist = 0.5;

  double for_class(ObjectClass c) const {
    switch (c) {
      case ObjectClass::Car: return car;
      case ObjectClass::Pedestrian: return pedestrian;
      case ObjectClass::Cyclist: return cyclist;
    }
    return car;
  }
};

// Image-space hull of the box corners that lie in front of the camera, clipped to the image.
std::optional<Box2D> project_bbox(const Box3D& box, const Calibration& calib);
inline std::optional<Box2D> project_bbox(const Cluster& cluster, const Calibration& calib) {
  return project_bbox(cluster.bbox, calib);
}

double iou(const Box2D& a, const Box2D& b);

// Greedy one-to-one assignment in descending IoU order. Exact ties go to the lower
// cluster id, then the lower detection index.
std::vector<std::optional<PreLabel>> match(std::span<const Cluster> clusters,
                                           std::span<const std::optional<Box2D>> boxes,
                                           std::span<const Detection2D> detections,
                                           const MatchThresholds& thresholds = {});

}  // namespace ltl

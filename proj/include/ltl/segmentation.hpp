#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ltl/types.hpp"

namespace ltl {

struct ClusterParams {
  double distance = 0.5;                // meters, on the ground plane
  std::optional<double> ground_z;       // drop points with z below this, when set
};

// Builds a cluster over `indices` with a tight 3D box and centroid.
Cluster make_cluster(const PointCloud& cloud, std::vector<std::size_t> indices, int id);

// Connected components of the (x,y) projection under "distance < d" adjacency.
// Clusters come out ordered by their smallest point index, with sorted indices.
std::vector<Cluster> euclidean_cluster(const PointCloud& cloud, const ClusterParams& params);

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool contains(double v) const { return v >= min && v <= max; }
};

struct VolumetricFilter {
  Range w{0.1, 5.0};  // x extent
  Range d{0.1, 5.0};  // y extent
  Range h{0.3, 5.0};  // z extent

  bool accepts(const Box3D& box) const {
    return w.contains(box.extent_x()) && d.contains(box.extent_y()) && h.contains(box.extent_z());
  }
};

std::vector<Cluster> volumetric_filter(std::span<const Cluster> clusters, const VolumetricFilter& filter);

}  // namespace ltl

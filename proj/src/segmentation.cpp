#include "ltl/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace ltl {

Cluster make_cluster(const PointCloud& cloud, std::vector<std::size_t> indices, int id) {
  if (indices.empty()) throw ContractError("make_cluster: empty index set");
  Cluster c;
  c.id = id;
  constexpr double inf = std::numeric_limits<double>::infinity();
  Box3D b{inf, -inf, inf, -inf, inf, -inf};
  double sx = 0, sy = 0, sz = 0;
  for (auto i : indices) {
    const auto& p = cloud.points.at(i);
    b.min_x = std::min<double>(b.min_x, p.x);
    b.max_x = std::max<double>(b.max_x, p.x);
    b.min_y = std::min<double>(b.min_y, p.y);
    b.max_y = std::max<double>(b.max_y, p.y);
    b.min_z = std::min<double>(b.min_z, p.z);
    b.max_z = std::max<double>(b.max_z, p.z);
    sx += p.x;
    sy += p.y;
    sz += p.z;
  }
  const double n = static_cast<double>(indices.size());
  c.bbox = b;
  c.centroid = Vec3{sx / n, sy / n, sz / n};
  c.point_indices = std::move(indices);
  return c;
}

namespace {

struct CellKey {
  std::int64_t ix;
  std::int64_t iy;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<std::int64_t>{}(k.ix * 73856093LL ^ k.iy * 19349663LL);
  }
};

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  // Keeps the smaller index as root so components are labelled by their first point.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Cluster> euclidean_cluster(const PointCloud& cloud, const ClusterParams& params) {
  if (!(params.distance > 0.0)) throw ContractError("euclidean_cluster: distance must be > 0");
  const double d = params.distance;
  const double d2 = d * d;

  std::vector<std::size_t> active;
  active.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (!params.ground_z || cloud.points[i].z >= *params.ground_z) active.push_back(i);
  if (active.empty()) return {};

  // Cell size d: every neighbor within d lies in the 3x3 block around a point's cell.
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  grid.reserve(active.size());
  auto cell_of = [d](const Point& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x / d)),
                   static_cast<std::int64_t>(std::floor(p.y / d))};
  };
  for (std::size_t k = 0; k < active.size(); ++k) grid[cell_of(cloud.points[active[k]])].push_back(k);

  DisjointSet sets(active.size());
  for (const auto& [key, members] : grid) {
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(CellKey{key.ix + dx, key.iy + dy});
        if (it == grid.end()) continue;
        for (auto a : members) {
          const auto& pa = cloud.points[active[a]];
          for (auto b : it->second) {
            if (b <= a) continue;
            const auto& pb = cloud.points[active[b]];
            const double ex = static_cast<double>(pa.x) - pb.x;
            const double ey = static_cast<double>(pa.y) - pb.y;
            if (ex * ex + ey * ey < d2) sets.unite(a, b);
          }
        }
      }
    }
  }

  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> group_of_root(active.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto root = sets.find(k);
    if (group_of_root[root] == std::numeric_limits<std::size_t>::max()) {
      group_of_root[root] = groups.size();
      groups.emplace_back();
    }
    groups[group_of_root[root]].push_back(active[k]);
  }

  std::vector<Cluster> clusters;
  clusters.reserve(groups.size());
  for (auto& g : groups) clusters.push_back(make_cluster(cloud, std::move(g), static_cast<int>(clusters.size())));
  return clusters;
}

std::vector<Cluster> volumetric_filter(std::span<const Cluster> clusters, const VolumetricFilter& filter) {
  std::vector<Cluster> kept;
  for (const auto& c : clusters)
    if (filter.accepts(c.bbox)) kept.push_back(c);
  return kept;
}

}  // namespace ltl

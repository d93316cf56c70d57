#include "ltl/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ltl {

FeatureVector extract(std::span<const Point> points) {
  using namespace feature;
  if (points.empty()) throw ContractError("extract: empty cluster");
  FeatureVector f{};
  const double n = static_cast<double>(points.size());
  f[kPointCount] = n;

  double min_range = std::numeric_limits<double>::infinity();
  double cx = 0, cy = 0, cz = 0;
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    const double x = p.x, y = p.y, z = p.z;
    min_range = std::min(min_range, std::sqrt(x * x + y * y + z * z));
    cx += x;
    cy += y;
    cz += z;
    zmin = std::min(zmin, z);
    zmax = std::max(zmax, z);
  }
  f[kMinRange] = min_range;
  cx /= n;
  cy /= n;
  cz /= n;

  double sxx = 0, sxy = 0, sxz = 0, syy = 0, syz = 0, szz = 0;
  for (const auto& p : points) {
    const double dx = p.x - cx, dy = p.y - cy, dz = p.z - cz;
    sxx += dx * dx;
    sxy += dx * dy;
    sxz += dx * dz;
    syy += dy * dy;
    syz += dy * dz;
    szz += dz * dz;
  }
  sxx /= n, sxy /= n, sxz /= n, syy /= n, syz /= n, szz /= n;

  const double cov[6] = {sxx, sxy, sxz, syy, syz, szz};
  std::copy(std::begin(cov), std::end(cov), f.begin() + kCovariance);

  // Inertia tensor of unit point masses about the centroid, per point.
  const double inertia[6] = {syy + szz, -sxy, -sxz, sxx + szz, -syz, sxx + syy};
  std::copy(std::begin(inertia), std::end(inertia), f.begin() + kInertia);

  struct Extent {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -std::numeric_limits<double>::infinity();
    double lo_y = std::numeric_limits<double>::infinity(), hi_y = -std::numeric_limits<double>::infinity();
    bool empty = true;
  };
  std::array<Extent, kNumSlices> slices{};
  const double height = zmax - zmin;
  for (const auto& p : points) {
    std::size_t k = 0;
    if (height > 0.0) {
      const double t = (p.z - zmin) / height * static_cast<double>(kNumSlices);
      k = std::min(static_cast<std::size_t>(t), kNumSlices - 1);
    }
    auto& s = slices[k];
    s.lo_x = std::min<double>(s.lo_x, p.x);
    s.hi_x = std::max<double>(s.hi_x, p.x);
    s.lo_y = std::min<double>(s.lo_y, p.y);
    s.hi_y = std::max<double>(s.hi_y, p.y);
    s.empty = false;
  }
  for (std::size_t k = 0; k < kNumSlices; ++k) {
    if (slices[k].empty) continue;
    f[kSlices + 2 * k] = slices[k].hi_x - slices[k].lo_x;
    f[kSlices + 2 * k + 1] = slices[k].hi_y - slices[k].lo_y;
  }

  double mean = 0.0;
  for (const auto& p : points) {
    const double v = std::clamp<double>(p.intensity, 0.0, 1.0);
    const auto bin = std::min(static_cast<std::size_t>(v * static_cast<double>(kNumIntensityBins)),
                              kNumIntensityBins - 1);
    f[kIntensityHist + bin] += 1.0;
    mean += v;
  }
  mean /= n;
  double var = 0.0;
  for (const auto& p : points) {
    const double dv = std::clamp<double>(p.intensity, 0.0, 1.0) - mean;
    var += dv * dv;
  }
  for (std::size_t b = 0; b < kNumIntensityBins; ++b) f[kIntensityHist + b] /= n;
  f[kIntensityMean] = mean;
  f[kIntensityStd] = std::sqrt(var / n);
  return f;
}

FeatureVector extract(const Cluster& cluster, const PointCloud& cloud) {
  std::vector<Point> members;
  members.reserve(cluster.point_indices.size());
  for (auto i : cluster.point_indices) members.push_back(cloud.points.at(i));
  return extract(members);
}

}  // namespace ltl

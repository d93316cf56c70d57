#pragma once

#include <array>
#include <span>

#include "ltl/types.hpp"

namespace ltl {

inline constexpr std::size_t kFeatureDim = 61;

using FeatureVector = std::array<double, kFeatureDim>;

// Layout of the descriptor. Offsets index into FeatureVector.
namespace feature {
inline constexpr std::size_t kPointCount = 0;     // 1
inline constexpr std::size_t kMinRange = 1;       // 1
inline constexpr std::size_t kCovariance = 2;     // 6: xx xy xz yy yz zz
inline constexpr std::size_t kInertia = 8;        // 6: xx xy xz yy yz zz
inline constexpr std::size_t kSlices = 14;        // 20: (x extent, y extent) per z slice
inline constexpr std::size_t kIntensityHist = 34; // 25 bins
inline constexpr std::size_t kIntensityMean = 59;
inline constexpr std::size_t kIntensityStd = 60;

inline constexpr std::size_t kNumSlices = 10;
inline constexpr std::size_t kNumIntensityBins = 25;
}  // namespace feature

FeatureVector extract(std::span<const Point> points);
FeatureVector extract(const Cluster& cluster, const PointCloud& cloud);

}  // namespace ltl

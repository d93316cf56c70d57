#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ltl {

// Malformed input files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated preconditions on API calls (wrong dimensions, empty inputs).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Factorization or normalization failures inside the filters.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ObjectClass : std::uint8_t { Car = 0, Pedestrian = 1, Cyclist = 2 };

inline constexpr std::size_t kNumClasses = 3;

inline constexpr std::array<ObjectClass, kNumClasses> kAllClasses = {
    ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist};

constexpr std::size_t index_of(ObjectClass c) { return static_cast<std::size_t>(c); }

std::string_view to_string(ObjectClass c);

// Case-insensitive; accepts KITTI spellings ("Car", "Pedestrian", "Cyclist").
std::optional<ObjectClass> parse_class(std::string_view s);

struct Point {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;
  float intensity = 0.f;
};

struct PointCloud {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  std::vector<Point> points;
};

struct Box2D {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const {
    return (u_max > u_min && v_max > v_min) ? width() * height() : 0.0;
  }
};

struct Detection2D {
  ObjectClass class_label = ObjectClass::Car;
  double score = 0.0;
  Box2D box;
};

struct Box3D {
  double min_x = 0.0, max_x = 0.0;
  double min_y = 0.0, max_y = 0.0;
  double min_z = 0.0, max_z = 0.0;

  double extent_x() const { return max_x - min_x; }
  double extent_y() const { return max_y - min_y; }
  double extent_z() const { return max_z - min_z; }
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

struct Cluster {
  int id = 0;
  std::vector<std::size_t> point_indices;
  Box3D bbox;
  Vec3 centroid;
};

}  // namespace ltl

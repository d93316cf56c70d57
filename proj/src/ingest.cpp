#include "ltl/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <Eigen/LU>
#include <json.hpp>

namespace ltl {

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return "Car";
    case ObjectClass::Pedestrian: return "Pedestrian";
    case ObjectClass::Cyclist: return "Cyclist";
  }
  return "?";
}

std::optional<ObjectClass> parse_class(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "car") return ObjectClass::Car;
  if (lower == "pedestrian") return ObjectClass::Pedestrian;
  if (lower == "cyclist") return ObjectClass::Cyclist;
  return std::nullopt;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "point cloud codec assumes a little-endian host");

constexpr std::size_t kRecordBytes = 16;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void accept_detection(std::int64_t frame_id, std::string_view cls, double score, const Box2D& box,
                      const DetectionReadOptions& options, DetectionReadStats& stats,
                      DetectionMap& out, const std::string& where) {
  if (!(box.u_min < box.u_max) || !(box.v_min < box.v_max))
    throw FormatError(where + ": degenerate box");
  if (!(score >= 0.0 && score <= 1.0)) throw FormatError(where + ": score outside [0,1]");
  auto label = parse_class(cls);
  if (!label) {
    ++stats.unknown_class;
    return;
  }
  if (score < options.score_threshold) {
    ++stats.below_threshold;
    return;
  }
  out[frame_id].push_back(Detection2D{*label, score, box});
}

}  // namespace

std::vector<Point> decode_cloud(std::span<const std::uint8_t> bytes, CloudReadStats* stats) {
  if (bytes.size() % kRecordBytes != 0)
    throw FormatError("point cloud truncated: " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16");
  CloudReadStats local;
  std::vector<Point> points;
  points.reserve(bytes.size() / kRecordBytes);
  for (std::size_t off = 0; off < bytes.size(); off += kRecordBytes) {
    float v[4];
    std::memcpy(v, bytes.data() + off, kRecordBytes);
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2]) ||
        !std::isfinite(v[3])) {
      ++local.rejected_records;
      continue;
    }
    float intensity = v[3];
    if (intensity < 0.f || intensity > 1.f) {
      ++local.clamped_intensities;
      intensity = std::clamp(intensity, 0.f, 1.f);
    }
    points.push_back(Point{v[0], v[1], v[2], intensity});
  }
  if (stats) *stats = local;
  return points;
}

std::vector<std::uint8_t> encode_cloud(std::span<const Point> points) {
  std::vector<std::uint8_t> bytes(points.size() * kRecordBytes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const float v[4] = {points[i].x, points[i].y, points[i].z, points[i].intensity};
    std::memcpy(bytes.data() + i * kRecordBytes, v, kRecordBytes);
  }
  return bytes;
}

PointCloud read_cloud(const std::filesystem::path& path, CloudReadStats* stats) {
  std::string raw = read_file(path);
  PointCloud cloud;
  cloud.points = decode_cloud(
      std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()), stats);
  std::int64_t id = 0;
  if (parse_number(path.stem().string(), id)) cloud.frame_id = id;
  return cloud;
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  auto bytes = encode_cloud(cloud.points);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DetectionMap read_detections(const std::filesystem::path& path, const DetectionReadOptions& options,
                             DetectionReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  DetectionReadStats local;
  DetectionMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (line_no == 1 && options.has_header) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    auto fields = split(body, ',');
    if (fields.size() != 7) throw FormatError(where + ": expected 7 fields");
    std::int64_t frame_id = 0;
    double nums[5];
    bool ok = parse_number(fields[0], frame_id);
    for (int k = 0; k < 5 && ok; ++k) ok = parse_number(fields[2 + k], nums[k]);
    if (!ok) throw FormatError(where + ": malformed number");
    accept_detection(frame_id, fields[1], nums[0], Box2D{nums[1], nums[2], nums[3], nums[4]},
                     options, local, out, where);
  }
  if (stats) *stats = local;
  return out;
}

DetectionMap read_detections_jsonl(const std::filesystem::path& path,
                                   const DetectionReadOptions& options, DetectionReadStats* stats) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  DetectionReadStats local;
  DetectionMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    try {
      auto j = nlohmann::json::parse(line);
      const auto& b = j.at("box");
      if (!b.is_array() || b.size() != 4) throw FormatError(where + ": box needs 4 numbers");
      accept_detection(j.at("frame_id").get<std::int64_t>(), j.at("class").get<std::string>(),
                       j.at("score").get<double>(),
                       Box2D{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                             b[3].get<double>()},
                       options, local, out, where);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  if (stats) *stats = local;
  return out;
}

void write_detections(const std::filesystem::path& path, const DetectionMap& detections) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& [frame, dets] : detections)
    for (const auto& d : dets)
      out << frame << ',' << to_string(d.class_label) << ',' << d.score << ',' << d.box.u_min << ','
          << d.box.v_min << ',' << d.box.u_max << ',' << d.box.v_max << '\n';
}

namespace {

const std::vector<std::string_view> kProjectionKeys = {"P2", "P_rect_02", "projection"};
const std::vector<std::string_view> kRectKeys = {"R0_rect", "R_rect_00", "rect"};
const std::vector<std::string_view> kRigidKeys = {"Tr_velo_to_cam", "Tr_velo_cam", "lidar_to_cam"};

const std::vector<double>* find_row(const std::map<std::string, std::vector<double>, std::less<>>& rows,
                                    const std::vector<std::string_view>& keys) {
  for (auto k : keys) {
    auto it = rows.find(k);
    if (it != rows.end()) return &it->second;
  }
  return nullptr;
}

}  // namespace

Calibration read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::map<std::string, std::vector<double>, std::less<>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key(trim(std::string_view(line).substr(0, colon)));
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> nums;
    std::string tok;
    while (values >> tok) {
      double v = 0.0;
      if (!parse_number(std::string_view(tok), v))
        throw FormatError("calibration row " + key + ": malformed number '" + tok + "'");
      nums.push_back(v);
    }
    rows[key] = std::move(nums);
  }

  Calibration calib;
  const auto* proj = find_row(rows, kProjectionKeys);
  if (!proj) throw FormatError("missing projection");
  if (proj->size() != 12) throw FormatError("projection needs 12 values");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) calib.projection(r, c) = (*proj)[static_cast<std::size_t>(r * 4 + c)];

  const auto* rect = find_row(rows, kRectKeys);
  if (!rect) throw FormatError("missing rectification");
  if (rect->size() != 9) throw FormatError("rectification needs 9 values");
  calib.rect.setIdentity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) calib.rect(r, c) = (*rect)[static_cast<std::size_t>(r * 3 + c)];

  const auto* rigid = find_row(rows, kRigidKeys);
  if (!rigid) throw FormatError("missing lidar_to_cam");
  if (rigid->size() != 12) throw FormatError("lidar_to_cam needs 12 values");
  calib.lidar_to_cam.setIdentity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) calib.lidar_to_cam(r, c) = (*rigid)[static_cast<std::size_t>(r * 4 + c)];

  if (auto it = rows.find("image_size"); it != rows.end()) {
    if (it->second.size() != 2) throw FormatError("image_size needs 2 values");
    calib.image_width = static_cast<int>(it->second[0]);
    calib.image_height = static_cast<int>(it->second[1]);
  }
  if (Eigen::FullPivLU<Eigen::Matrix<double, 3, 4>>(calib.projection).rank() != 3)
    throw FormatError("projection is rank deficient");
  return calib;
}

void write_calibration(const std::filesystem::path& path, const Calibration& calib) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "P2:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out << ' ' << calib.projection(r, c);
  out << "\nR0_rect:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << ' ' << calib.rect(r, c);
  out << "\nTr_velo_to_cam:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out << ' ' << calib.lidar_to_cam(r, c);
  out << "\nimage_size: " << calib.image_width << ' ' << calib.image_height << '\n';
}

std::vector<FrameBundle> synchronize(std::vector<PointCloud> clouds, const DetectionMap& detections,
                                     const Calibration& calib) {
  std::vector<FrameBundle> bundles;
  bundles.reserve(clouds.size());
  for (auto& cloud : clouds) {
    FrameBundle b;
    if (auto it = detections.find(cloud.frame_id); it != detections.end()) b.detections = it->second;
    b.cloud = std::move(cloud);
    b.calib = calib;
    bundles.push_back(std::move(b));
  }
  return bundles;
}

}  // namespace ltl

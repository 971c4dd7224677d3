#ifndef LFP_KITTI_HPP_
#define LFP_KITTI_HPP_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfp/cad.hpp"
#include "lfp/errors.hpp"
#include "lfp/geometry.hpp"

namespace lfp {

static_assert(std::endian::native == std::endian::little,
              "velodyne decoding assumes a little-endian host");

/// One object row of a KITTI label/prediction file. Location is the bottom
/// face center in the camera frame; dims are (h, w, l).
struct KittiLabel {
  std::string type = "Car";
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  double bbox_left = 0.0;
  double bbox_top = 0.0;
  double bbox_right = 0.0;
  double bbox_bottom = 0.0;
  double height = 0.0;
  double width = 0.0;
  double length = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rotation_y = 0.0;
  std::optional<double> score;
};

struct CalibrationSet {
  Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d r0_rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> tr_velo_to_cam = Eigen::Matrix<double, 3, 4>::Zero();
};

enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2, kIgnored = 3 };

inline const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
    default: return "ignored";
  }
}

struct VelodyneScan {
  std::vector<Point3> points;
  std::vector<float> reflectance;
};

// ---------------------------------------------------------------------------
// velodyne binary
// ---------------------------------------------------------------------------

/// Reads a .bin scan of little-endian float quads (x, y, z, reflectance).
inline VelodyneScan parse_velodyne(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open velodyne file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) {
    throw TruncatedFileError(path + ": " + std::to_string(bytes.size()) +
                             " bytes is not a multiple of 16");
  }
  VelodyneScan scan;
  const std::size_t n = bytes.size() / 16;
  scan.points.reserve(n);
  scan.reflectance.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float quad[4];
    std::memcpy(quad, bytes.data() + 16 * i, 16);
    scan.points.push_back({quad[0], quad[1], quad[2]});
    scan.reflectance.push_back(quad[3]);
  }
  return scan;
}

inline void write_velodyne(const VelodyneScan& scan, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const float quad[4] = {static_cast<float>(scan.points[i].x),
                           static_cast<float>(scan.points[i].y),
                           static_cast<float>(scan.points[i].z),
                           i < scan.reflectance.size() ? scan.reflectance[i] : 0.0f};
    out.write(reinterpret_cast<const char*>(quad), 16);
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// label text files
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_double_field(const std::string& token, const std::string& path,
                                 std::size_t line_no) {
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &consumed);
  } catch (const std::exception&) {
    throw ParseError(path, line_no, "not a number: '" + token + "'");
  }
  if (consumed != token.size()) {
    throw ParseError(path, line_no, "trailing characters in '" + token + "'");
  }
  return v;
}

}  // namespace detail

/// Parses one object per line, 15 or 16 space-separated fields.
inline std::vector<KittiLabel> parse_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);
  std::vector<KittiLabel> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;  // blank line
    if (tok.size() != 15 && tok.size() != 16) {
      throw ParseError(path, line_no,
                       "expected 15 or 16 fields, got " + std::to_string(tok.size()));
    }
    KittiLabel l;
    l.type = tok[0];
    l.truncated = detail::parse_double_field(tok[1], path, line_no);
    l.occluded = static_cast<int>(detail::parse_double_field(tok[2], path, line_no));
    l.alpha = detail::parse_double_field(tok[3], path, line_no);
    l.bbox_left = detail::parse_double_field(tok[4], path, line_no);
    l.bbox_top = detail::parse_double_field(tok[5], path, line_no);
    l.bbox_right = detail::parse_double_field(tok[6], path, line_no);
    l.bbox_bottom = detail::parse_double_field(tok[7], path, line_no);
    l.height = detail::parse_double_field(tok[8], path, line_no);
    l.width = detail::parse_double_field(tok[9], path, line_no);
    l.length = detail::parse_double_field(tok[10], path, line_no);
    l.x = detail::parse_double_field(tok[11], path, line_no);
    l.y = detail::parse_double_field(tok[12], path, line_no);
    l.z = detail::parse_double_field(tok[13], path, line_no);
    l.rotation_y = detail::parse_double_field(tok[14], path, line_no);
    if (tok.size() == 16) l.score = detail::parse_double_field(tok[15], path, line_no);
    labels.push_back(l);
  }
  return labels;
}

inline std::string format_label(const KittiLabel& l) {
  char buf[512];
  int n = std::snprintf(buf, sizeof buf,
                        "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f",
                        l.type.c_str(), l.truncated, l.occluded, l.alpha, l.bbox_left,
                        l.bbox_top, l.bbox_right, l.bbox_bottom, l.height, l.width, l.length,
                        l.x, l.y, l.z, l.rotation_y);
  std::string out(buf, static_cast<std::size_t>(n));
  if (l.score) {
    n = std::snprintf(buf, sizeof buf, " %.2f", *l.score);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

inline void write_labels(const std::vector<KittiLabel>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const KittiLabel& l : labels) out << format_label(l) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

/// Parses "KEY: v1 v2 ..." lines; requires P2, R0_rect and Tr_velo_to_cam.
inline CalibrationSet parse_calib(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calib file: " + path);
  CalibrationSet calib;
  bool seen_p2 = false, seen_r0 = false, seen_tr = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    std::istringstream ss(line.substr(colon + 1));
    std::vector<double> vals;
    for (std::string t; ss >> t;) vals.push_back(detail::parse_double_field(t, path, line_no));
    auto expect = [&](std::size_t n) {
      if (vals.size() != n) {
        throw ParseError(path, line_no, key + ": expected " + std::to_string(n) +
                                            " values, got " + std::to_string(vals.size()));
      }
    };
    if (key == "P2") {
      expect(12);
      for (int i = 0; i < 12; ++i) calib.p2(i / 4, i % 4) = vals[static_cast<std::size_t>(i)];
      seen_p2 = true;
    } else if (key == "R0_rect") {
      expect(9);
      for (int i = 0; i < 9; ++i) calib.r0_rect(i / 3, i % 3) = vals[static_cast<std::size_t>(i)];
      seen_r0 = true;
    } else if (key == "Tr_velo_to_cam") {
      expect(12);
      for (int i = 0; i < 12; ++i)
        calib.tr_velo_to_cam(i / 4, i % 4) = vals[static_cast<std::size_t>(i)];
      seen_tr = true;
    }
    // other keys (P0, P1, P3, Tr_imu_to_velo, ...) are ignored
  }
  if (!seen_p2) throw MissingCalibrationError(path + ": missing P2");
  if (!seen_r0) throw MissingCalibrationError(path + ": missing R0_rect");
  if (!seen_tr) throw MissingCalibrationError(path + ": missing Tr_velo_to_cam");
  return calib;
}

inline void write_calib(const CalibrationSet& calib, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[64];
  auto emit = [&](const char* key, const double* data, int n) {
    out << key << ':';
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, " %.12e", data[i]);
      out << buf;
    }
    out << '\n';
  };
  // Eigen stores column-major; emit row-major as the format requires.
  Eigen::Matrix<double, 3, 4, Eigen::RowMajor> p2 = calib.p2;
  Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r0 = calib.r0_rect;
  Eigen::Matrix<double, 3, 4, Eigen::RowMajor> tr = calib.tr_velo_to_cam;
  emit("P2", p2.data(), 12);
  emit("R0_rect", r0.data(), 9);
  emit("Tr_velo_to_cam", tr.data(), 12);
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// frame conversion
// ---------------------------------------------------------------------------

namespace detail {

inline void check_invertible(const CalibrationSet& calib) {
  const Eigen::Matrix3d rot = calib.tr_velo_to_cam.block<3, 3>(0, 0);
  if (std::fabs(rot.determinant()) < 1e-9 || std::fabs(calib.r0_rect.determinant()) < 1e-9) {
    throw InvalidCalibrationError("calibration rotation block is singular");
  }
}

}  // namespace detail

/// Maps a camera-frame label to a LiDAR-frame box: location through the
/// rectification and velo-to-cam inverses, center lifted from the bottom face
/// by h/2, yaw = -rotation_y - pi/2, size reordered to [w, l, h].
inline OrientedBox3 camera_to_lidar_box(const KittiLabel& label, const CalibrationSet& calib) {
  detail::check_invertible(calib);
  const Eigen::Matrix3d rot = calib.tr_velo_to_cam.block<3, 3>(0, 0);
  const Eigen::Vector3d trans = calib.tr_velo_to_cam.col(3);
  const Eigen::Vector3d p_rect(label.x, label.y, label.z);
  const Eigen::Vector3d p_ref = calib.r0_rect.inverse() * p_rect;
  const Eigen::Vector3d p_velo = rot.inverse() * (p_ref - trans);
  OrientedBox3 box;
  box.center = {p_velo.x(), p_velo.y(), p_velo.z() + label.height / 2.0};
  box.size = {label.width, label.length, label.height};
  box.yaw = normalize_angle(-label.rotation_y - kPi / 2.0);
  return box;
}

/// Inverse of camera_to_lidar_box, filling image-plane fields by projecting
/// the box corners through P2 (clamped to the image; empty when behind the
/// camera). Default image size matches the KITTI object benchmark.
inline KittiLabel lidar_to_camera_label(const OrientedBox3& box, const CalibrationSet& calib,
                                        const std::string& type = "Car",
                                        std::optional<double> score = std::nullopt,
                                        double image_width = 1242.0,
                                        double image_height = 375.0) {
  detail::check_invertible(calib);
  const Eigen::Matrix3d rot = calib.tr_velo_to_cam.block<3, 3>(0, 0);
  const Eigen::Vector3d trans = calib.tr_velo_to_cam.col(3);
  auto to_rect = [&](const Point3& p) -> Eigen::Vector3d {
    return calib.r0_rect * (rot * Eigen::Vector3d(p.x, p.y, p.z) + trans);
  };

  KittiLabel label;
  label.type = type;
  label.score = score;
  label.height = box.size.h;
  label.width = box.size.w;
  label.length = box.size.l;
  const Eigen::Vector3d bottom =
      to_rect({box.center.x, box.center.y, box.center.z - box.size.h / 2.0});
  label.x = bottom.x();
  label.y = bottom.y();
  label.z = bottom.z();
  label.rotation_y = normalize_angle(-box.yaw - kPi / 2.0);
  label.alpha = normalize_angle(label.rotation_y - std::atan2(label.x, label.z));

  // 2D bbox from the projected corners; the caller owns truncation/occlusion.
  const double hw = box.size.w / 2.0, hl = box.size.l / 2.0, hh = box.size.h / 2.0;
  double u_min = 1e300, v_min = 1e300, u_max = -1e300, v_max = -1e300;
  bool in_front = true;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        const Point3 local{sx * hl, sy * hw, sz * hh};
        const Point3 corner = yaw_rotate(local, box.yaw) + box.center;
        const Eigen::Vector3d rect = to_rect(corner);
        Eigen::Vector3d img = calib.p2 * rect.homogeneous();
        if (img.z() <= 0.1) {
          in_front = false;
          continue;
        }
        img /= img.z();
        u_min = std::min(u_min, img.x());
        u_max = std::max(u_max, img.x());
        v_min = std::min(v_min, img.y());
        v_max = std::max(v_max, img.y());
      }
    }
  }
  if (u_min <= u_max) {
    label.bbox_left = std::max(0.0, u_min);
    label.bbox_top = std::max(0.0, v_min);
    label.bbox_right = std::min(image_width, u_max);
    label.bbox_bottom = std::min(image_height, v_max);
  }
  if (!in_front) label.truncated = 1.0;
  return label;
}

/// KITTI devkit difficulty rule on (pixel height, occlusion, truncation);
/// DontCare rows are always Ignored.
inline Difficulty assign_difficulty(const KittiLabel& label) {
  if (label.type == "DontCare") return Difficulty::kIgnored;
  const double px = label.bbox_bottom - label.bbox_top;
  if (px >= 40.0 && label.occluded <= 0 && label.truncated <= 0.15) return Difficulty::kEasy;
  if (px >= 25.0 && label.occluded <= 1 && label.truncated <= 0.30) return Difficulty::kModerate;
  if (px >= 25.0 && label.occluded <= 2 && label.truncated <= 0.50) return Difficulty::kHard;
  return Difficulty::kIgnored;
}

}  // namespace lfp

#endif  // LFP_KITTI_HPP_

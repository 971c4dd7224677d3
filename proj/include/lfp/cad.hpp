#ifndef LFP_CAD_HPP_
#define LFP_CAD_HPP_

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lfp/errors.hpp"
#include "lfp/geometry.hpp"

namespace lfp {

/// Box extents in meters. `l` runs along the heading (+x in the box frame),
/// `w` across it (+y), `h` up (+z).
struct Size3 {
  double w = 0.0;
  double l = 0.0;
  double h = 0.0;
};

/// Oriented 3D box in the LiDAR frame: volumetric center, extents, yaw about z.
struct OrientedBox3 {
  Point3 center;
  Size3 size;
  double yaw = 0.0;
};

/// One scored detector output.
struct Detection {
  OrientedBox3 box;
  double score = 0.0;
  std::string label = "Car";
};

/// Canonical car point cloud: origin-centered, length along +x, width along
/// +y, height along +z. `size` holds the axis-aligned bounding-box extents.
struct CadModel {
  std::vector<Point3> points;
  Size3 size;

  std::size_t point_count() const { return points.size(); }
};

/// Scale adjusting the CAD model against the predicted box so that near-miss
/// but correct boxes survive filtering.
inline constexpr double kDefaultKappa = 0.82;

/// Point budget the canonical model is reduced to.
inline constexpr std::size_t kDefaultCadPointCount = 500;

/// Reads a CAD point cloud file: one "x y z" triple per line (meters,
/// single-space separated), `#` starts a comment line, blank lines ignored.
inline std::vector<Point3> load_cad(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CAD file: " + path);

  std::vector<Point3> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Point3 p;
    std::string extra;
    if (!(ss >> p.x >> p.y >> p.z)) {
      // whitespace-only lines are not points, everything else must be a triple
      std::istringstream probe(line);
      std::string token;
      if (!(probe >> token)) continue;
      throw ParseError(path, line_no, "expected three numbers, got \"" + line + "\"");
    }
    if (ss >> extra) {
      throw ParseError(path, line_no, "trailing content after point: \"" + extra + "\"");
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw ParseError(path, line_no, "non-finite coordinate");
    }
    points.push_back(p);
  }
  if (points.size() < 3) {
    throw InsufficientModelError("CAD file holds " + std::to_string(points.size()) +
                                 " points, need at least 3: " + path);
  }
  return points;
}

/// Centers the cloud so its axis-aligned bounding-box center sits at the
/// origin and records the extents. The input is expected to already be
/// axis-aligned with the vehicle length along +x; that orientation is not
/// corrected here.
inline CadModel canonicalize(const std::vector<Point3>& points) {
  if (points.size() < 3) {
    throw InsufficientModelError("need at least 3 points, got " + std::to_string(points.size()));
  }
  Point3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  Point3 hi = -1.0 * lo;
  for (const Point3& p : points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
  const Point3 extent = hi - lo;
  if (extent.x <= 0.0 || extent.y <= 0.0 || extent.z <= 0.0) {
    throw DegenerateModelError("model has zero extent on some axis");
  }
  const Point3 center = 0.5 * (lo + hi);
  CadModel model;
  model.points.reserve(points.size());
  for (const Point3& p : points) model.points.push_back(p - center);
  model.size = {extent.y, extent.x, extent.z};
  return model;
}

/// Farthest-point downsampling to min(n, current count) points, seeded at the
/// point of maximum norm. Deterministic; ties break to the lowest index. The
/// result is re-centered so the CadModel invariants keep holding.
inline CadModel downsample(const CadModel& model, std::size_t n = kDefaultCadPointCount) {
  if (n < 3) throw std::invalid_argument("downsample target must be at least 3");
  const std::vector<Point3>& pts = model.points;
  if (n >= pts.size()) return model;

  std::size_t seed = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = pts[i].squared_norm();
    if (d > best) {
      best = d;
      seed = i;
    }
  }

  std::vector<double> dist(pts.size(), std::numeric_limits<double>::infinity());
  std::vector<Point3> picked;
  picked.reserve(n);
  std::size_t current = seed;
  for (std::size_t k = 0; k < n; ++k) {
    picked.push_back(pts[current]);
    const Point3& c = pts[current];
    std::size_t next = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = std::min(dist[i], (pts[i] - c).squared_norm());
      dist[i] = d;
      if (d > far) {
        far = d;
        next = i;
      }
    }
    current = next;
  }
  return canonicalize(picked);
}

/// Places the canonical model inside a predicted box: per-axis scale by
/// kappa times the box-to-model size ratio, yaw rotation, then translation
/// to the box center. Point count and order are preserved.
inline std::vector<Point3> align_cad(const CadModel& model, const OrientedBox3& box,
                                     double kappa = kDefaultKappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("kappa must lie in (0, 1]");
  }
  const double sx = kappa * box.size.l / model.size.l;
  const double sy = kappa * box.size.w / model.size.w;
  const double sz = kappa * box.size.h / model.size.h;
  std::vector<Point3> aligned;
  aligned.reserve(model.points.size());
  for (const Point3& p : model.points) {
    aligned.push_back(yaw_rotate({sx * p.x, sy * p.y, sz * p.z}, box.yaw) + box.center);
  }
  return aligned;
}

/// Sedan silhouette parameters in the unit box frame ([-0.5, 0.5] per axis,
/// length along +x, front at +x). The solid is the union of the body slab and
/// the cabin wedge; both are convex and the union is star-shaped about the
/// origin, which the penetration test relies on.
struct SedanProfile {
  double body_top = 0.10;
  double cabin_half_width = 0.40;
  double windshield_base_x = 0.15;
  double windshield_top_x = -0.05;
  double rear_window_base_x = -0.45;
  double rear_window_top_x = -0.30;
};

namespace detail {

inline void sample_grid(std::vector<Point3>& out, int nu, int nv,
                        const Point3& origin, const Point3& du, const Point3& dv) {
  for (int i = 0; i < nu; ++i) {
    const double u = nu > 1 ? static_cast<double>(i) / (nu - 1) : 0.5;
    for (int j = 0; j < nv; ++j) {
      const double v = nv > 1 ? static_cast<double>(j) / (nv - 1) : 0.5;
      out.push_back(origin + u * du + v * dv);
    }
  }
}

inline int grid_steps(double span, double density) {
  return std::max(2, static_cast<int>(std::lround(span * density)) + 1);
}

}  // namespace detail

/// Procedurally samples the sedan surface (body box plus cabin wedge) on
/// edge-inclusive grids, in the unit frame, then scales to `dims`. Roughly
/// `target_count` points before any downsampling.
inline std::vector<Point3> make_sedan_cloud(std::size_t target_count = 2000,
                                            Size3 dims = {1.8, 4.5, 1.5},
                                            const SedanProfile& profile = {}) {
  using detail::grid_steps;
  using detail::sample_grid;
  const SedanProfile& s = profile;

  // total surface area in the unit frame drives the grid density
  const double body_height = s.body_top + 0.5;
  const double cabin_height = 0.5 - s.body_top;
  const double windshield_len =
      std::hypot(s.windshield_base_x - s.windshield_top_x, cabin_height);
  const double rear_len = std::hypot(s.rear_window_top_x - s.rear_window_base_x, cabin_height);
  const double roof_len = s.windshield_top_x - s.rear_window_top_x;
  const double cabin_side_area =
      0.5 * (roof_len + (s.windshield_base_x - s.rear_window_base_x)) * cabin_height;
  const double area = 1.0                                       // bottom
                      + 1.0                                     // top (ring sampled from it)
                      + 2.0 * body_height + 2.0 * body_height   // body sides
                      + (windshield_len + rear_len + roof_len) * 2.0 * s.cabin_half_width +
                      2.0 * cabin_side_area;
  const double density = std::sqrt(static_cast<double>(target_count) / area);

  std::vector<Point3> cloud;
  cloud.reserve(target_count + target_count / 4);

  const int nx = grid_steps(1.0, density);
  const int ny = grid_steps(1.0, density);
  const int nz_body = grid_steps(body_height, density);
  const int nc = grid_steps(2.0 * s.cabin_half_width, density);
  const int nzc = grid_steps(cabin_height, density);

  // body bottom and top; top samples under the cabin footprint are skipped
  sample_grid(cloud, nx, ny, {-0.5, -0.5, -0.5}, {1, 0, 0}, {0, 1, 0});
  {
    std::vector<Point3> top;
    sample_grid(top, nx, ny, {-0.5, -0.5, s.body_top}, {1, 0, 0}, {0, 1, 0});
    for (const Point3& p : top) {
      const bool under_cabin = p.x > s.rear_window_base_x && p.x < s.windshield_base_x &&
                               std::fabs(p.y) < s.cabin_half_width;
      if (!under_cabin) cloud.push_back(p);
    }
  }
  // body sides
  sample_grid(cloud, ny, nz_body, {0.5, -0.5, -0.5}, {0, 1, 0}, {0, 0, body_height});
  sample_grid(cloud, ny, nz_body, {-0.5, -0.5, -0.5}, {0, 1, 0}, {0, 0, body_height});
  sample_grid(cloud, nx, nz_body, {-0.5, 0.5, -0.5}, {1, 0, 0}, {0, 0, body_height});
  sample_grid(cloud, nx, nz_body, {-0.5, -0.5, -0.5}, {1, 0, 0}, {0, 0, body_height});
  // windshield, rear window, roof
  sample_grid(cloud, grid_steps(windshield_len, density), nc,
              {s.windshield_base_x, -s.cabin_half_width, s.body_top},
              {s.windshield_top_x - s.windshield_base_x, 0, cabin_height},
              {0, 2.0 * s.cabin_half_width, 0});
  sample_grid(cloud, grid_steps(rear_len, density), nc,
              {s.rear_window_base_x, -s.cabin_half_width, s.body_top},
              {s.rear_window_top_x - s.rear_window_base_x, 0, cabin_height},
              {0, 2.0 * s.cabin_half_width, 0});
  sample_grid(cloud, grid_steps(roof_len, density), nc,
              {s.rear_window_top_x, -s.cabin_half_width, 0.5}, {roof_len, 0, 0},
              {0, 2.0 * s.cabin_half_width, 0});
  // cabin sides: trapezoids between the two window planes
  for (double side : {-s.cabin_half_width, s.cabin_half_width}) {
    for (int k = 0; k < nzc; ++k) {
      const double f = nzc > 1 ? static_cast<double>(k) / (nzc - 1) : 0.5;
      const double z = s.body_top + f * cabin_height;
      const double x_rear = s.rear_window_base_x + f * (s.rear_window_top_x - s.rear_window_base_x);
      const double x_front = s.windshield_base_x + f * (s.windshield_top_x - s.windshield_base_x);
      const int nrow = grid_steps(x_front - x_rear, density);
      for (int i = 0; i < nrow; ++i) {
        const double u = nrow > 1 ? static_cast<double>(i) / (nrow - 1) : 0.5;
        cloud.push_back({x_rear + u * (x_front - x_rear), side, z});
      }
    }
  }

  for (Point3& p : cloud) {
    p.x *= dims.l;
    p.y *= dims.w;
    p.z *= dims.h;
  }
  return cloud;
}

/// The model shipped as the default: procedural sedan surface, canonicalized
/// and reduced to the default point budget.
inline CadModel default_cad_model() {
  return downsample(canonicalize(make_sedan_cloud()), kDefaultCadPointCount);
}

}  // namespace lfp

#endif  // LFP_CAD_HPP_

#ifndef LFP_SEARCH_AREA_HPP_
#define LFP_SEARCH_AREA_HPP_

#include <array>
#include <cstddef>
#include <vector>

#include "lfp/cad.hpp"
#include "lfp/errors.hpp"
#include "lfp/geometry.hpp"

namespace lfp {

/// Spherical-coordinate extent of a box as seen from the sensor origin.
/// theta_min/theta_max are unwrapped about the box-center azimuth, so they
/// may leave [-pi, pi) for boxes straddling the seam; theta_min <= theta_max
/// always holds.
struct SphericalExtent {
  double r_max = 0.0;
  double theta_min = 0.0;
  double theta_max = 0.0;
  double phi_min = 0.0;
  double phi_max = 0.0;

  /// Strict interior test per the search-area inequalities. Boundary points
  /// are excluded.
  bool contains(const SphericalCoord& s) const {
    if (!(s.r > r_max)) return false;
    if (!(s.phi > phi_min && s.phi < phi_max)) return false;
    // the unwrapped interval lives within one turn of its midpoint, so one
    // shifted copy of theta is enough to test membership across the seam
    return (s.theta > theta_min && s.theta < theta_max) ||
           (s.theta + 2.0 * kPi > theta_min && s.theta + 2.0 * kPi < theta_max) ||
           (s.theta - 2.0 * kPi > theta_min && s.theta - 2.0 * kPi < theta_max);
  }
};

/// The 8 vertices of an oriented box.
inline std::array<Point3, 8> box_corners(const OrientedBox3& box) {
  std::array<Point3, 8> corners;
  std::size_t k = 0;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        const Point3 local{0.5 * sx * box.size.l, 0.5 * sy * box.size.w, 0.5 * sz * box.size.h};
        corners[k++] = yaw_rotate(local, box.yaw) + box.center;
      }
    }
  }
  return corners;
}

/// True when `p` lies inside or on the closed box.
inline bool box_contains(const OrientedBox3& box, const Point3& p) {
  const Point3 local = yaw_rotate(p - box.center, -box.yaw);
  return std::fabs(local.x) <= 0.5 * box.size.l && std::fabs(local.y) <= 0.5 * box.size.w &&
         std::fabs(local.z) <= 0.5 * box.size.h;
}

/// Min/max spherical coordinates over the box corners, the finite proxy for
/// "points on the box". Azimuths are unwrapped about the box-center azimuth
/// before taking the interval.
inline SphericalExtent box_spherical_extent(const OrientedBox3& box) {
  if (box_contains(box, {0.0, 0.0, 0.0})) {
    throw InvalidGeometryError("sensor origin lies inside the box");
  }
  const double center_azimuth = std::atan2(box.center.y, box.center.x);
  SphericalExtent e;
  e.theta_min = e.phi_min = std::numeric_limits<double>::infinity();
  e.theta_max = e.phi_max = -std::numeric_limits<double>::infinity();
  for (const Point3& c : box_corners(box)) {
    const SphericalCoord s = cartesian_to_spherical(c);
    const double theta = unwrap_about(s.theta, center_azimuth);
    e.r_max = std::max(e.r_max, s.r);
    e.theta_min = std::min(e.theta_min, theta);
    e.theta_max = std::max(e.theta_max, theta);
    e.phi_min = std::min(e.phi_min, s.phi);
    e.phi_max = std::max(e.phi_max, s.phi);
  }
  return e;
}

/// A scene cloud converted to spherical coordinates once, shared across all
/// boxes of a frame. Points at the exact sensor origin carry r = 0 and can
/// never enter a search area.
struct SphericalCloud {
  std::vector<SphericalCoord> coords;

  static SphericalCloud from(const std::vector<Point3>& cloud) {
    SphericalCloud out;
    out.coords.reserve(cloud.size());
    for (const Point3& p : cloud) {
      if (p.x == 0.0 && p.y == 0.0 && p.z == 0.0) {
        out.coords.push_back({0.0, 0.0, 0.0});
      } else {
        out.coords.push_back(cartesian_to_spherical(p));
      }
    }
    return out;
  }
};

/// Indices (ascending) of the points behind the box: strictly farther than
/// every corner and strictly inside the corner azimuth/elevation ranges.
inline std::vector<std::size_t> crop_search_area(const SphericalCloud& cloud,
                                                 const SphericalExtent& extent) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < cloud.coords.size(); ++i) {
    if (extent.contains(cloud.coords[i])) indices.push_back(i);
  }
  return indices;
}

inline std::vector<std::size_t> crop_search_area(const std::vector<Point3>& cloud,
                                                 const OrientedBox3& box) {
  return crop_search_area(SphericalCloud::from(cloud), box_spherical_extent(box));
}

}  // namespace lfp

#endif  // LFP_SEARCH_AREA_HPP_

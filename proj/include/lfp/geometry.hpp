#ifndef LFP_GEOMETRY_HPP_
#define LFP_GEOMETRY_HPP_

#include <cmath>

#include "lfp/errors.hpp"

namespace lfp {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// 3D point in the LiDAR frame: x forward, y left, z up, meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Point3 operator*(double k) const { return {k * x, k * y, k * z}; }

  double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }
};

inline Point3 operator*(double k, const Point3& p) { return p * k; }

/// Spherical coordinates of a LiDAR-frame point. `theta` is the azimuth in
/// [-pi, pi), `phi` the elevation over the horizontal plane in [-pi/2, pi/2].
struct SphericalCoord {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

/// A point on the (theta, phi) projection plane, radial distance discarded.
struct PlanePoint {
  double theta = 0.0;
  double phi = 0.0;
};

/// Polar form of a projection-plane point: radial coordinate `rho` and
/// angular coordinate `t` in [-pi, pi).
struct PolarPlanePoint {
  double rho = 0.0;
  double t = 0.0;
};

/// Wraps an angle into [-pi, pi).
inline double normalize_angle(double a) {
  double wrapped = a - 2.0 * kPi * std::floor((a + kPi) / (2.0 * kPi));
  // floor rounding can land exactly on +pi for inputs just below the seam
  if (wrapped >= kPi) wrapped -= 2.0 * kPi;
  return wrapped;
}

/// Re-expresses angle `a` on the branch centered at `center`, i.e. the
/// representative of `a` in (center - pi, center + pi].
inline double unwrap_about(double a, double center) {
  return center + std::remainder(a - center, 2.0 * kPi);
}

/// Minimum gap between two angles on the circle, in [0, pi].
inline double angular_gap(double a, double b) {
  return std::fabs(std::remainder(a - b, 2.0 * kPi));
}

inline SphericalCoord cartesian_to_spherical(const Point3& p) {
  const double r = p.norm();
  if (r == 0.0) {
    throw DegeneratePointError("cannot convert the origin to spherical coordinates");
  }
  const double horizontal = std::hypot(p.x, p.y);
  return {r, normalize_angle(std::atan2(p.y, p.x)), std::atan2(p.z, horizontal)};
}

inline Point3 spherical_to_cartesian(const SphericalCoord& s) {
  const double c = std::cos(s.phi);
  return {s.r * c * std::cos(s.theta), s.r * c * std::sin(s.theta), s.r * std::sin(s.phi)};
}

/// Rotates (x, y) by `theta` about the z axis; z is untouched.
inline Point3 yaw_rotate(const Point3& p, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

/// Converts a projection-plane point to polar form about `origin`.
/// A point coincident with the origin gets t = 0.
inline PolarPlanePoint plane_to_polar(const PlanePoint& p, const PlanePoint& origin) {
  const double dx = p.theta - origin.theta;
  const double dy = p.phi - origin.phi;
  const double rho = std::hypot(dx, dy);
  if (rho == 0.0) return {0.0, 0.0};
  return {rho, normalize_angle(std::atan2(dy, dx))};
}

}  // namespace lfp

#endif  // LFP_GEOMETRY_HPP_

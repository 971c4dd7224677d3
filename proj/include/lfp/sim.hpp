#ifndef LFP_SIM_HPP_
#define LFP_SIM_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfp/cad.hpp"
#include "lfp/classifier.hpp"
#include "lfp/errors.hpp"
#include "lfp/geometry.hpp"
#include "lfp/kitti.hpp"
#include "lfp/search_area.hpp"

namespace lfp {

// ---------------------------------------------------------------------------
// scene primitives
// ---------------------------------------------------------------------------

/// Points p with dot(normal, p) <= offset are inside.
struct Halfspace {
  Point3 normal;
  double offset = 0.0;
};

struct ConvexSolid {
  std::vector<Halfspace> faces;
};

/// Bounded square patch of the plane axis=offset, |other coords| <= extent.
struct PlanePatch {
  int axis = 0;  // 0 = x, 1 = y, 2 = z
  double offset = 0.0;
  double extent = 1.0;
};

struct SceneObject {
  std::string id;
  std::vector<ConvexSolid> solids;
  std::optional<PlanePatch> patch;
  std::optional<OrientedBox3> car_box;  // set for car instances (the true box)
};

struct Scene {
  std::vector<SceneObject> objects;
};

/// Six halfspaces of an oriented box.
inline ConvexSolid make_box_solid(const OrientedBox3& box) {
  ConvexSolid solid;
  const Point3 axes[3] = {yaw_rotate({1, 0, 0}, box.yaw), yaw_rotate({0, 1, 0}, box.yaw),
                          {0, 0, 1}};
  const double half[3] = {box.size.l / 2.0, box.size.w / 2.0, box.size.h / 2.0};
  for (int a = 0; a < 3; ++a) {
    for (double sign : {1.0, -1.0}) {
      const Point3 n = sign * axes[a];
      solid.faces.push_back({n, half[a] + n.x * box.center.x + n.y * box.center.y +
                                    n.z * box.center.z});
    }
  }
  return solid;
}

namespace detail {

// Maps a unit-frame halfspace n.q <= d of the sedan profile through the
// scale/rotate/translate pose of `box` into a world-frame halfspace.
inline Halfspace posed_halfspace(const Point3& n_unit, double d_unit, const OrientedBox3& box) {
  const Point3 scaled{n_unit.x / box.size.l, n_unit.y / box.size.w, n_unit.z / box.size.h};
  const Point3 n = yaw_rotate(scaled, box.yaw);
  return {n, d_unit + n.x * box.center.x + n.y * box.center.y + n.z * box.center.z};
}

}  // namespace detail

/// Opaque sedan as two convex solids (body slab + cabin wedge) in the pose
/// and dimensions of `box`. Built from the same profile the CAD surface cloud
/// is sampled from, so the solid contains every aligned CAD point whenever
/// kappa <= 1: the profile is star-shaped about its center (every face plane
/// misses the center), hence closed under shrinking.
inline std::vector<ConvexSolid> make_sedan_solids(const OrientedBox3& box,
                                                  const SedanProfile& profile = {}) {
  using detail::posed_halfspace;
  const SedanProfile& s = profile;
  const double ch = 0.5 - s.body_top;  // cabin height in the unit frame

  ConvexSolid body;
  body.faces.push_back(posed_halfspace({1, 0, 0}, 0.5, box));
  body.faces.push_back(posed_halfspace({-1, 0, 0}, 0.5, box));
  body.faces.push_back(posed_halfspace({0, 1, 0}, 0.5, box));
  body.faces.push_back(posed_halfspace({0, -1, 0}, 0.5, box));
  body.faces.push_back(posed_halfspace({0, 0, 1}, s.body_top, box));
  body.faces.push_back(posed_halfspace({0, 0, -1}, 0.5, box));

  ConvexSolid cabin;
  cabin.faces.push_back(posed_halfspace({0, 1, 0}, s.cabin_half_width, box));
  cabin.faces.push_back(posed_halfspace({0, -1, 0}, s.cabin_half_width, box));
  cabin.faces.push_back(posed_halfspace({0, 0, 1}, 0.5, box));
  cabin.faces.push_back(posed_halfspace({0, 0, -1}, -s.body_top, box));
  // windshield: through (windshield_base_x, body_top) and (windshield_top_x, 0.5)
  cabin.faces.push_back(posed_halfspace(
      {ch, 0, s.windshield_base_x - s.windshield_top_x},
      ch * s.windshield_base_x - (s.windshield_top_x - s.windshield_base_x) * s.body_top, box));
  // rear window: through (rear_window_base_x, body_top) and (rear_window_top_x, 0.5)
  cabin.faces.push_back(posed_halfspace(
      {-ch, 0, s.rear_window_top_x - s.rear_window_base_x},
      -(ch * s.rear_window_base_x - (s.rear_window_top_x - s.rear_window_base_x) * s.body_top),
      box));
  return {body, cabin};
}

inline SceneObject make_car_object(std::string id, const OrientedBox3& box) {
  SceneObject obj;
  obj.id = std::move(id);
  obj.solids = make_sedan_solids(box);
  obj.car_box = box;
  return obj;
}

inline SceneObject make_box_object(std::string id, const OrientedBox3& box) {
  SceneObject obj;
  obj.id = std::move(id);
  obj.solids.push_back(make_box_solid(box));
  return obj;
}

inline SceneObject make_wall_object(std::string id, const PlanePatch& patch) {
  SceneObject obj;
  obj.id = std::move(id);
  obj.patch = patch;
  return obj;
}

// ---------------------------------------------------------------------------
// ray casting
// ---------------------------------------------------------------------------

/// Regular scan pattern: closed elevation range, half-open azimuth range (so
/// a full sweep does not duplicate the seam ray).
struct LidarGrid {
  double az_min = -kPi;
  double az_max = kPi;
  double az_step = 0.003;
  double el_min = -0.43;
  double el_max = 0.06;
  double el_step = (0.06 + 0.43) / 63.0;  // 64 beams over the default range
  double max_range = 120.0;

  void validate() const {
    if (!(az_step > 0.0) || !(el_step > 0.0)) throw InvalidGeometryError("grid step must be > 0");
    if (!(az_max > az_min) || !(el_max >= el_min) || !(max_range > 0.0)) {
      throw InvalidGeometryError("grid ranges must be non-empty");
    }
  }

  std::vector<double> azimuth_samples() const {
    std::vector<double> az;
    for (double a = az_min; a < az_max - 1e-12; a += az_step) az.push_back(a);
    return az;
  }

  std::vector<double> elevation_samples() const {
    std::vector<double> el;
    for (double e = el_min; e <= el_max + 1e-12; e += el_step) el.push_back(e);
    return el;
  }
};

namespace detail {

inline constexpr double kRayEps = 1e-9;

// Entry parameter of the ray t*dir (t > 0) into a convex solid, if any.
inline std::optional<double> ray_solid_entry(const Point3& dir, const ConvexSolid& solid) {
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  for (const Halfspace& f : solid.faces) {
    const double denom = f.normal.x * dir.x + f.normal.y * dir.y + f.normal.z * dir.z;
    if (std::fabs(denom) < 1e-15) {
      if (f.offset < 0.0) return std::nullopt;  // parallel and origin outside
      continue;
    }
    const double t = f.offset / denom;
    if (denom > 0.0) {
      t_far = std::min(t_far, t);
    } else {
      t_near = std::max(t_near, t);
    }
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near <= kRayEps) return std::nullopt;  // origin inside or behind
  return t_near;
}

inline std::optional<double> ray_patch_entry(const Point3& dir, const PlanePatch& patch) {
  const double d[3] = {dir.x, dir.y, dir.z};
  const double along = d[patch.axis];
  if (std::fabs(along) < 1e-15) return std::nullopt;
  const double t = patch.offset / along;
  if (t <= kRayEps) return std::nullopt;
  const double u = d[(patch.axis + 1) % 3] * t;
  const double v = d[(patch.axis + 2) % 3] * t;
  if (std::fabs(u) > patch.extent || std::fabs(v) > patch.extent) return std::nullopt;
  return t;
}

}  // namespace detail

struct RaycastResult {
  std::vector<Point3> points;
  std::vector<std::size_t> object_index;  // into scene.objects, parallel to points
};

/// One ray per grid cell from the origin; each return is the nearest surface
/// intersection within max range. Rays that hit nothing produce no return, so
/// by construction no return lies strictly behind a hit surface on its ray.
inline RaycastResult raycast(const Scene& scene, const LidarGrid& grid) {
  grid.validate();
  RaycastResult result;
  const std::vector<double> elevations = grid.elevation_samples();
  const std::vector<double> azimuths = grid.azimuth_samples();
  for (double el : elevations) {
    const double ce = std::cos(el), se = std::sin(el);
    for (double az : azimuths) {
      const Point3 dir{ce * std::cos(az), ce * std::sin(az), se};
      double best = grid.max_range;
      std::size_t hit = scene.objects.size();
      for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
        const SceneObject& obj = scene.objects[oi];
        for (const ConvexSolid& solid : obj.solids) {
          if (auto t = detail::ray_solid_entry(dir, solid); t && *t <= best) {
            best = *t;
            hit = oi;
          }
        }
        if (obj.patch) {
          if (auto t = detail::ray_patch_entry(dir, *obj.patch); t && *t <= best) {
            best = *t;
            hit = oi;
          }
        }
      }
      if (hit < scene.objects.size()) {
        result.points.push_back(best * dir);
        result.object_index.push_back(hit);
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// scene description files
// ---------------------------------------------------------------------------

struct SceneDescription {
  Scene scene;
  LidarGrid grid;
};

namespace detail {

struct Record {
  std::map<std::string, std::string> kv;
  const std::string* path;
  std::size_t line_no;

  bool has(const std::string& key) const { return kv.count(key) != 0; }

  double number(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(*path, line_no, "missing key '" + key + "'");
    return parse_double_field(it->second, *path, line_no);
  }

  double number_or(const std::string& key, double fallback) const {
    return kv.count(key) ? number(key) : fallback;
  }

  std::string text_or(const std::string& key, std::string fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  }
};

}  // namespace detail

/// Parses the line-based scene format: one `kind key=value ...` record per
/// line, `#` starts a comment. Kinds: box, wall, car, lidar.
inline SceneDescription parse_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file: " + path);
  SceneDescription desc;
  std::string line;
  std::size_t line_no = 0;
  std::size_t auto_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind) || kind[0] == '#') continue;
    detail::Record rec;
    rec.path = &path;
    rec.line_no = line_no;
    for (std::string tok; ss >> tok;) {
      const std::size_t eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ParseError(path, line_no, "expected key=value, got '" + tok + "'");
      }
      rec.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    const std::string id = rec.text_or("id", kind + std::to_string(auto_id++));
    for (const SceneObject& obj : desc.scene.objects) {
      if (obj.id == id) throw ParseError(path, line_no, "duplicate object id '" + id + "'");
    }

    if (kind == "box" || kind == "car") {
      OrientedBox3 box;
      box.center = {rec.number("cx"), rec.number("cy"), rec.number("cz")};
      box.yaw = rec.number_or("yaw", 0.0);
      if (kind == "car") {
        if (rec.text_or("cad", "sedan") != "sedan") {
          throw ParseError(path, line_no, "only the built-in sedan surface is available");
        }
        box.size = {rec.number_or("w", 1.8), rec.number_or("l", 4.5), rec.number_or("h", 1.5)};
      } else {
        box.size = {rec.number("w"), rec.number("l"), rec.number("h")};
      }
      if (!(box.size.w > 0.0 && box.size.l > 0.0 && box.size.h > 0.0)) {
        throw ParseError(path, line_no, "object extents must be positive");
      }
      desc.scene.objects.push_back(kind == "car" ? make_car_object(id, box)
                                                 : make_box_object(id, box));
    } else if (kind == "wall") {
      const std::string axis = rec.text_or("axis", "");
      PlanePatch patch;
      if (axis == "x") {
        patch.axis = 0;
      } else if (axis == "y") {
        patch.axis = 1;
      } else if (axis == "z") {
        patch.axis = 2;
      } else {
        throw ParseError(path, line_no, "wall axis must be x, y or z");
      }
      patch.offset = rec.number("offset");
      patch.extent = rec.number("extent");
      if (!(patch.extent > 0.0)) throw ParseError(path, line_no, "wall extent must be positive");
      desc.scene.objects.push_back(make_wall_object(id, patch));
    } else if (kind == "lidar") {
      --auto_id;  // grid records carry no object id
      desc.grid.az_min = rec.number_or("az_min", desc.grid.az_min);
      desc.grid.az_max = rec.number_or("az_max", desc.grid.az_max);
      desc.grid.az_step = rec.number_or("az_step", desc.grid.az_step);
      desc.grid.el_min = rec.number_or("el_min", desc.grid.el_min);
      desc.grid.el_max = rec.number_or("el_max", desc.grid.el_max);
      desc.grid.el_step = rec.number_or("el_step", desc.grid.el_step);
      desc.grid.max_range = rec.number_or("range", desc.grid.max_range);
      try {
        desc.grid.validate();
      } catch (const InvalidGeometryError& e) {
        throw ParseError(path, line_no, e.what());
      }
    } else {
      throw ParseError(path, line_no, "unknown record kind '" + kind + "'");
    }
  }
  return desc;
}

// ---------------------------------------------------------------------------
// convex silhouette oracle
// ---------------------------------------------------------------------------

namespace detail {

inline double cross2(const PlanePoint& o, const PlanePoint& a, const PlanePoint& b) {
  return (a.theta - o.theta) * (b.phi - o.phi) - (a.phi - o.phi) * (b.theta - o.theta);
}

}  // namespace detail

/// Convex hull (counter-clockwise, collinear points dropped) of plane points.
inline std::vector<PlanePoint> convex_hull(std::vector<PlanePoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const PlanePoint& a, const PlanePoint& b) {
    return a.theta < b.theta || (a.theta == b.theta && a.phi < b.phi);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const PlanePoint& a, const PlanePoint& b) {
                          return a.theta == b.theta && a.phi == b.phi;
                        }),
            pts.end());
  if (pts.size() < 3) throw DegenerateModelError("hull needs at least 3 distinct points");
  std::vector<PlanePoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {  // lower chain
    while (k >= 2 && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {  // upper chain
    while (k >= lower && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw DegenerateModelError("hull is degenerate (collinear points)");
  return hull;
}

/// Exact point-in-convex-polygon test; the boundary counts as inside.
inline bool oracle_in_silhouette(const PlanePoint& query, const std::vector<PlanePoint>& hull) {
  if (hull.size() < 3) throw DegenerateModelError("hull needs at least 3 vertices");
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const PlanePoint& a = hull[i];
    const PlanePoint& b = hull[(i + 1) % hull.size()];
    if (detail::cross2(a, b, query) < 0.0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// synthetic false-positive scenarios
// ---------------------------------------------------------------------------

/// KITTI-like calibration: velodyne +x forward maps to camera +z, +y left to
/// camera -x, +z up to camera -y, with a small translation and the public
/// benchmark camera intrinsics.
inline CalibrationSet nominal_calibration() {
  CalibrationSet calib;
  calib.tr_velo_to_cam << 0, -1, 0, -0.01, 0, 0, -1, -0.08, 1, 0, 0, -0.27;
  calib.r0_rect = Eigen::Matrix3d::Identity();
  calib.p2 << 721.5377, 0, 609.5593, 44.85728, 0, 721.5377, 172.854, 0.2163791, 0, 0, 1,
      0.002745884;
  return calib;
}

namespace detail {

/// splitmix64: tiny deterministic generator, identical on every platform.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform(double lo, double hi) {
    return lo + static_cast<double>(next() >> 11) * 0x1.0p-53 * (hi - lo);
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

struct AzimuthInterval {
  double lo, hi;
};

inline bool overlaps(const std::vector<AzimuthInterval>& used, double lo, double hi) {
  for (const AzimuthInterval& iv : used) {
    if (lo < iv.hi && iv.lo < hi) return true;
  }
  return false;
}

}  // namespace detail

/// A seeded scene: real cars (opaque sedans exactly enclosed by their true
/// boxes) plus spurious boxes planted in free space, each backed by an opaque
/// slab spanning the box's whole angular extent. Objects occupy disjoint
/// azimuth sectors, so nothing ever shows up behind a true car.
struct FpScenario {
  Scene scene;
  LidarGrid grid;
  CalibrationSet calib;
  Frame frame;  // cloud filled by ray casting; detections = cars + spurious
  std::vector<OrientedBox3> true_boxes;
  std::vector<std::size_t> spurious_indices;  // into frame.detections
};

inline FpScenario make_fp_scenario(std::uint64_t seed) {
  detail::SplitMix64 rng(seed);
  FpScenario sc;
  sc.calib = nominal_calibration();
  sc.grid.az_min = -1.5;
  sc.grid.az_max = 1.5;
  sc.grid.max_range = 120.0;

  std::vector<detail::AzimuthInterval> used;
  const std::size_t car_target = 1 + rng.index(3);
  const std::size_t spurious_target = 1 + rng.index(3);
  const double pad = 0.06;

  auto place_car = [&](bool required) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      OrientedBox3 box;
      const double bearing = rng.uniform(-1.15, 1.15);
      const double range = rng.uniform(12.0, 26.0);
      box.center = {range * std::cos(bearing), range * std::sin(bearing),
                    rng.uniform(-0.9, -0.5)};
      box.size = {rng.uniform(1.7, 1.9), rng.uniform(4.3, 4.7), rng.uniform(1.4, 1.6)};
      box.yaw = rng.uniform(-kPi, kPi);
      const SphericalExtent ext = box_spherical_extent(box);
      const double lo = ext.theta_min - pad, hi = ext.theta_max + pad;
      if (detail::overlaps(used, lo, hi)) continue;
      used.push_back({lo, hi});
      sc.scene.objects.push_back(
          make_car_object("car" + std::to_string(sc.true_boxes.size()), box));
      sc.true_boxes.push_back(box);
      return;
    }
    if (required) throw InvalidGeometryError("could not place a car in the scene");
  };

  auto place_spurious = [&](bool required) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      OrientedBox3 box;
      const double bearing = rng.uniform(-1.1, 1.1);
      const double range = rng.uniform(14.0, 28.0);
      box.center = {range * std::cos(bearing), range * std::sin(bearing),
                    rng.uniform(-0.9, -0.5)};
      box.size = {rng.uniform(1.7, 1.9), rng.uniform(4.3, 4.7), rng.uniform(1.4, 1.6)};
      box.yaw = rng.uniform(-kPi, kPi);
      const SphericalExtent ext = box_spherical_extent(box);
      const SphericalCoord c = cartesian_to_spherical(box.center);

      // opaque slab centered on the box bearing, wide enough to span the
      // whole corner extent with generous margin
      const double dist = ext.r_max + rng.uniform(4.0, 8.0);
      OrientedBox3 slab;
      slab.center = spherical_to_cartesian({dist + 0.5, c.theta, c.phi});
      // heading along the bearing: w spans across it, l is the thickness
      slab.size = {1.7 * 2.0 * dist * std::tan((ext.theta_max - ext.theta_min) / 2.0) + 1.0,
                   0.4,
                   1.7 * 2.0 * dist * std::tan((ext.phi_max - ext.phi_min) / 2.0) + 1.0};
      slab.yaw = c.theta;
      const SphericalExtent slab_ext = box_spherical_extent(slab);

      const double lo = std::min(ext.theta_min, slab_ext.theta_min) - pad;
      const double hi = std::max(ext.theta_max, slab_ext.theta_max) + pad;
      if (lo < -1.45 || hi > 1.45 || detail::overlaps(used, lo, hi)) continue;
      used.push_back({lo, hi});
      const std::size_t n = sc.spurious_indices.size();
      sc.scene.objects.push_back(make_box_object("backstop" + std::to_string(n), slab));
      sc.spurious_indices.push_back(sc.true_boxes.size() + n);  // fixed up below
      sc.frame.detections.push_back({box, 0.0, "Car"});
      return;
    }
    if (required) throw InvalidGeometryError("could not place a spurious box in the scene");
  };

  place_car(true);
  place_spurious(true);
  for (std::size_t i = 1; i < car_target; ++i) place_car(false);
  for (std::size_t i = 1; i < spurious_target; ++i) place_spurious(false);

  // detections: cars first (high scores), then the spurious boxes
  std::vector<Detection> spurious = std::move(sc.frame.detections);
  sc.frame.detections.clear();
  for (std::size_t i = 0; i < sc.true_boxes.size(); ++i) {
    sc.frame.detections.push_back({sc.true_boxes[i], 0.95 - 0.01 * static_cast<double>(i)});
  }
  for (std::size_t j = 0; j < spurious.size(); ++j) {
    spurious[j].score = 0.60 - 0.01 * static_cast<double>(j);
    sc.spurious_indices[j] = sc.frame.detections.size();
    sc.frame.detections.push_back(spurious[j]);
  }

  char idbuf[16];
  std::snprintf(idbuf, sizeof idbuf, "%06llu", static_cast<unsigned long long>(seed % 1000000));
  sc.frame.id = idbuf;
  sc.frame.cloud = raycast(sc.scene, sc.grid).points;
  return sc;
}

/// One narrow opaque strip behind a floating car-sized box, strip moved
/// laterally per variant. Whether the strip falls inside the silhouette
/// depends on kappa, so removal counts over the suite rise with kappa.
struct PlanarTarget {
  Scene scene;
  LidarGrid grid;
  CalibrationSet calib;
  Detection detection;  // the planted box under test
};

inline PlanarTarget make_planar_target(std::size_t variant, std::size_t total = 10) {
  if (total < 2 || variant >= total) throw std::invalid_argument("bad planar-target variant");
  PlanarTarget t;
  t.calib = nominal_calibration();
  t.grid.az_min = -0.4;
  t.grid.az_max = 0.4;
  t.grid.max_range = 50.0;

  OrientedBox3 box;
  box.center = {12.0, 0.0, -0.6};
  box.size = {1.8, 4.5, 1.5};
  box.yaw = 0.0;  // heading +x: the narrow face looks at the sensor
  t.detection = {box, 0.90, "Car"};

  const double offset =
      0.70 + 0.85 * static_cast<double>(variant) / static_cast<double>(total - 1);
  OrientedBox3 strip;
  strip.center = {20.0, offset, -0.75};
  strip.size = {0.12, 0.3, 3.5};
  strip.yaw = 0.0;
  t.scene.objects.push_back(make_box_object("strip", strip));
  return t;
}

// ---------------------------------------------------------------------------
// KITTI-format emission
// ---------------------------------------------------------------------------

inline std::string frame_name(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

/// Writes one scenario frame into the canonical directory layout:
/// velodyne/XXXXXX.bin, label_2/XXXXXX.txt (true cars), calib/XXXXXX.txt and
/// pred/XXXXXX.txt (all detections, scored).
inline void write_scenario_frame(const FpScenario& sc, const std::string& root,
                                 std::size_t index) {
  namespace fs = std::filesystem;
  const std::string name = frame_name(index);
  for (const char* sub : {"velodyne", "label_2", "calib", "pred"}) {
    fs::create_directories(fs::path(root) / sub);
  }

  VelodyneScan scan;
  scan.points = sc.frame.cloud;
  scan.reflectance.assign(scan.points.size(), 0.0f);
  write_velodyne(scan, (fs::path(root) / "velodyne" / (name + ".bin")).string());

  std::vector<KittiLabel> gts;
  for (const OrientedBox3& box : sc.true_boxes) {
    gts.push_back(lidar_to_camera_label(box, sc.calib, "Car"));
  }
  write_labels(gts, (fs::path(root) / "label_2" / (name + ".txt")).string());

  std::vector<KittiLabel> preds;
  for (const Detection& det : sc.frame.detections) {
    preds.push_back(lidar_to_camera_label(det.box, sc.calib, det.label, det.score));
  }
  write_labels(preds, (fs::path(root) / "pred" / (name + ".txt")).string());

  write_calib(sc.calib, (fs::path(root) / "calib" / (name + ".txt")).string());
}

}  // namespace lfp

#endif  // LFP_SIM_HPP_

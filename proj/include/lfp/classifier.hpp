#ifndef LFP_CLASSIFIER_HPP_
#define LFP_CLASSIFIER_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lfp/cad.hpp"
#include "lfp/errors.hpp"
#include "lfp/geometry.hpp"
#include "lfp/search_area.hpp"

namespace lfp {

/// 2D-polar image of an aligned CAD cloud on the (theta, phi) plane, centered
/// at the projection of the box center. Carries a sorted angular index so the
/// nearest-angle query is O(log n).
class Silhouette {
 public:
  static Silhouette from_polar(std::vector<PolarPlanePoint> points, PlanePoint center) {
    Silhouette sil;
    sil.points_ = std::move(points);
    sil.center_ = center;
    sil.by_angle_.reserve(sil.points_.size());
    for (std::size_t i = 0; i < sil.points_.size(); ++i) {
      sil.by_angle_.emplace_back(sil.points_[i].t, i);
    }
    std::sort(sil.by_angle_.begin(), sil.by_angle_.end());
    return sil;
  }

  const std::vector<PolarPlanePoint>& points() const { return points_; }
  const PlanePoint& center() const { return center_; }
  std::size_t size() const { return points_.size(); }

  /// Projects a spherical point onto the plane and re-centers it, using the
  /// same azimuth branch the silhouette was built with.
  PolarPlanePoint to_polar(const SphericalCoord& s) const {
    return plane_to_polar({unwrap_about(s.theta, center_.theta), s.phi}, center_);
  }

  /// Index of the point whose angular coordinate is closest to `t` on the
  /// circle; gap ties resolve to the lowest index.
  std::size_t nearest_angle(double t) const {
    const double q = normalize_angle(t);
    const std::size_t n = by_angle_.size();
    auto it = std::lower_bound(by_angle_.begin(), by_angle_.end(), q,
                               [](const std::pair<double, std::size_t>& e, double v) {
                                 return e.first < v;
                               });
    const std::size_t succ = static_cast<std::size_t>(it - by_angle_.begin()) % n;
    const std::size_t pred = (succ + n - 1) % n;

    const auto [gap_succ, idx_succ] = run_candidate(succ, q);
    const auto [gap_pred, idx_pred] = run_candidate(pred, q);
    if (gap_pred < gap_succ) return idx_pred;
    if (gap_succ < gap_pred) return idx_succ;
    return std::min(idx_pred, idx_succ);
  }

 private:
  // gap to the angle at sorted position `pos`, and the lowest original index
  // among the run of entries sharing that exact angle
  std::pair<double, std::size_t> run_candidate(std::size_t pos, double q) const {
    const double t = by_angle_[pos].first;
    std::size_t lo = pos;
    while (lo > 0 && by_angle_[lo - 1].first == t) --lo;
    return {angular_gap(q, t), by_angle_[lo].second};
  }

  std::vector<PolarPlanePoint> points_;
  PlanePoint center_;
  std::vector<std::pair<double, std::size_t>> by_angle_;
};

/// Projects the aligned CAD cloud onto the (theta, phi) plane, translates by
/// the projected box center and converts to 2D polar coordinates.
inline Silhouette build_silhouette(const std::vector<Point3>& aligned_cad,
                                   const OrientedBox3& box) {
  if (aligned_cad.empty()) throw std::invalid_argument("aligned CAD cloud is empty");
  if (box_contains(box, {0.0, 0.0, 0.0})) {
    throw InvalidGeometryError("sensor origin lies inside the box");
  }
  const SphericalCoord c = cartesian_to_spherical(box.center);
  const PlanePoint center{c.theta, c.phi};
  std::vector<PolarPlanePoint> polar;
  polar.reserve(aligned_cad.size());
  for (const Point3& p : aligned_cad) {
    const SphericalCoord s = cartesian_to_spherical(p);
    polar.push_back(plane_to_polar({unwrap_about(s.theta, center.theta), s.phi}, center));
  }
  return Silhouette::from_polar(std::move(polar), center);
}

struct PenetrationTest {
  bool penetrated = false;
  std::size_t cad_index = 0;
};

/// The radial test: a search-area point is penetrated when the CAD point with
/// the closest angular coordinate lies radially beyond it.
inline PenetrationTest is_penetrated(const PolarPlanePoint& sa_point, const Silhouette& sil) {
  const std::size_t j = sil.nearest_angle(sa_point.t);
  return {sil.points()[j].rho > sa_point.rho, j};
}

/// One LiDAR scan with its scored detections.
struct Frame {
  std::string id;
  std::vector<Point3> cloud;
  std::vector<Detection> detections;
};

struct FilterOptions {
  double kappa = kDefaultKappa;
  /// Keep scanning after the first penetrated point and record all of them.
  bool collect_all_penetrated = false;
};

/// Evidence for one removal: which scene point penetrated, where it sits on
/// the silhouette plane, and the CAD point it was tested against.
struct PenetratedPoint {
  std::size_t cloud_index = 0;
  PolarPlanePoint polar;
  std::size_t cad_index = 0;
};

struct RemovedDetection {
  Detection detection;
  std::size_t detection_index = 0;
  std::vector<PenetratedPoint> evidence;  // front() is the first penetrated point
};

struct BoxDiagnostic {
  std::size_t detection_index = 0;
  std::string message;
};

/// Partition of a frame's detections; kept and removed are disjoint and
/// together restore the input (order preserved within each).
struct FilterOutcome {
  std::vector<Detection> kept;
  std::vector<std::size_t> kept_indices;
  std::vector<RemovedDetection> removed;
  std::vector<BoxDiagnostic> diagnostics;
};

/// Deletes every detection with a penetrated point behind it. Detections are
/// treated independently; per-box geometry errors become diagnostics and the
/// box is kept (no evidence, no deletion).
inline FilterOutcome filter_detections(const Frame& frame, const CadModel& cad,
                                       const FilterOptions& options = {}) {
  if (!(options.kappa > 0.0 && options.kappa <= 1.0)) {
    throw std::invalid_argument("kappa must lie in (0, 1]");
  }
  const SphericalCloud spherical = SphericalCloud::from(frame.cloud);

  FilterOutcome outcome;
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const Detection& det = frame.detections[i];
    try {
      const SphericalExtent extent = box_spherical_extent(det.box);
      const std::vector<std::size_t> search = crop_search_area(spherical, extent);
      std::vector<PenetratedPoint> evidence;
      if (!search.empty()) {
        const Silhouette sil = build_silhouette(align_cad(cad, det.box, options.kappa), det.box);
        for (std::size_t idx : search) {
          const PolarPlanePoint q = sil.to_polar(spherical.coords[idx]);
          const PenetrationTest test = is_penetrated(q, sil);
          if (test.penetrated) {
            evidence.push_back({idx, q, test.cad_index});
            if (!options.collect_all_penetrated) break;
          }
        }
      }
      if (evidence.empty()) {
        outcome.kept.push_back(det);
        outcome.kept_indices.push_back(i);
      } else {
        outcome.removed.push_back({det, i, std::move(evidence)});
      }
    } catch (const Error& e) {
      outcome.diagnostics.push_back({i, e.what()});
      outcome.kept.push_back(det);
      outcome.kept_indices.push_back(i);
    }
  }
  return outcome;
}

inline FilterOutcome filter_detections(const Frame& frame, const CadModel& cad, double kappa) {
  FilterOptions options;
  options.kappa = kappa;
  return filter_detections(frame, cad, options);
}

}  // namespace lfp

#endif  // LFP_CLASSIFIER_HPP_

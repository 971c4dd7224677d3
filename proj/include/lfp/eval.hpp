#ifndef LFP_EVAL_HPP_
#define LFP_EVAL_HPP_

#include <algorithm>
#include <array>
#include <cstdio>
#include <deque>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/geometry.hpp>

#include "lfp/cad.hpp"
#include "lfp/errors.hpp"
#include "lfp/geometry.hpp"
#include "lfp/kitti.hpp"

namespace lfp {

enum class MetricKind { kBev = 0, k3d = 1 };

inline const char* metric_name(MetricKind m) { return m == MetricKind::kBev ? "bev" : "3d"; }

inline constexpr int kRecallPositions = 40;
inline constexpr double kIouThreshold = 0.7;

// ---------------------------------------------------------------------------
// oriented IoU
// ---------------------------------------------------------------------------

namespace detail {

using BoostPolygon =
    boost::geometry::model::polygon<boost::geometry::model::d2::point_xy<double>>;

inline BoostPolygon bev_polygon(const OrientedBox3& box) {
  const double hl = box.size.l / 2.0, hw = box.size.w / 2.0;
  BoostPolygon poly;
  for (const auto& [cx, cy] : {std::pair{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}}) {
    const Point3 p = yaw_rotate({cx, cy, 0.0}, box.yaw) + box.center;
    boost::geometry::append(poly, boost::geometry::model::d2::point_xy<double>(p.x, p.y));
  }
  boost::geometry::correct(poly);  // closes the ring and fixes orientation
  return poly;
}

inline double bev_intersection_area(const OrientedBox3& a, const OrientedBox3& b) {
  std::deque<BoostPolygon> pieces;
  boost::geometry::intersection(bev_polygon(a), bev_polygon(b), pieces);
  double area = 0.0;
  for (const auto& piece : pieces) area += boost::geometry::area(piece);
  return area;
}

}  // namespace detail

/// Intersection over union of the yaw-rotated ground rectangles.
inline double iou_bev(const OrientedBox3& a, const OrientedBox3& b) {
  const double inter = detail::bev_intersection_area(a, b);
  const double uni = a.size.w * a.size.l + b.size.w * b.size.l - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// BEV intersection area times vertical overlap, over the volume union.
inline double iou_3d(const OrientedBox3& a, const OrientedBox3& b) {
  const double z_lo = std::max(a.center.z - a.size.h / 2.0, b.center.z - b.size.h / 2.0);
  const double z_hi = std::min(a.center.z + a.size.h / 2.0, b.center.z + b.size.h / 2.0);
  const double inter = detail::bev_intersection_area(a, b) * std::max(0.0, z_hi - z_lo);
  const double uni =
      a.size.w * a.size.l * a.size.h + b.size.w * b.size.l * b.size.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline double box_iou(const OrientedBox3& a, const OrientedBox3& b, MetricKind metric) {
  return metric == MetricKind::kBev ? iou_bev(a, b) : iou_3d(a, b);
}

// ---------------------------------------------------------------------------
// per-frame greedy matching
// ---------------------------------------------------------------------------

/// Ground truth box for matching; ignored entries absorb overlapping
/// predictions without counting either way.
struct EvalGroundTruth {
  OrientedBox3 box;
  bool ignored = false;
};

enum class PredFlag { kTp, kFp, kIgnored };

struct FrameMatch {
  std::vector<PredFlag> flags;  // one per prediction, input order
  std::size_t valid_gt_count = 0;
};

/// Visits predictions in descending score; each claims the unmatched valid
/// ground truth with the highest IoU >= threshold (TP). Failing that, an
/// overlapping ignored ground truth absorbs it; otherwise it is an FP.
inline FrameMatch match_frame(const std::vector<Detection>& preds,
                              const std::vector<EvalGroundTruth>& gts,
                              double threshold = kIouThreshold,
                              MetricKind metric = MetricKind::k3d) {
  FrameMatch result;
  result.flags.assign(preds.size(), PredFlag::kFp);
  for (const EvalGroundTruth& gt : gts) {
    if (!gt.ignored) ++result.valid_gt_count;
  }

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });

  std::vector<bool> claimed(gts.size(), false);
  for (std::size_t pi : order) {
    double best_valid = -1.0, best_ignored = -1.0;
    std::size_t valid_gt = 0, ignored_gt = 0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi]) continue;
      const double iou = box_iou(preds[pi].box, gts[gi].box, metric);
      if (iou < threshold) continue;
      if (!gts[gi].ignored && iou > best_valid) {
        best_valid = iou;
        valid_gt = gi;
      } else if (gts[gi].ignored && iou > best_ignored) {
        best_ignored = iou;
        ignored_gt = gi;
      }
    }
    if (best_valid >= threshold) {
      claimed[valid_gt] = true;
      result.flags[pi] = PredFlag::kTp;
    } else if (best_ignored >= threshold) {
      claimed[ignored_gt] = true;
      result.flags[pi] = PredFlag::kIgnored;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// precision-recall over 40 recall positions
// ---------------------------------------------------------------------------

struct ScoredFlag {
  double score = 0.0;
  bool tp = false;
};

/// State of one recall sample k/40: the right-interpolated precision and the
/// cumulative TP/FP counts at the first operating point reaching the sample.
struct PrPosition {
  bool reachable = false;
  double precision = 0.0;
  long cum_tp = 0;
  long cum_fp = 0;
};

struct PrCurve {
  std::array<PrPosition, kRecallPositions> positions{};
  double max_recall = 0.0;
};

struct ApResult {
  PrCurve curve;
  double ap_percent = 0.0;
};

/// Sweeps score thresholds over the pooled flags and interpolates precision
/// to the right at each recall sample; AP is the mean over the 40 samples
/// with unreachable samples contributing zero.
inline ApResult pr_and_ap(std::vector<ScoredFlag> flags, std::size_t gt_count) {
  if (gt_count == 0) throw UndefinedRecallError("no ground truths: recall is undefined");
  std::stable_sort(flags.begin(), flags.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });

  // one operating point per distinct score (prefix including all ties)
  struct Operating {
    double recall, precision;
    long tp, fp;
  };
  std::vector<Operating> ops;
  long tp = 0, fp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    flags[i].tp ? ++tp : ++fp;
    if (i + 1 < flags.size() && flags[i + 1].score == flags[i].score) continue;
    ops.push_back({static_cast<double>(tp) / static_cast<double>(gt_count),
                   static_cast<double>(tp) / static_cast<double>(tp + fp), tp, fp});
  }

  ApResult result;
  if (!ops.empty()) result.curve.max_recall = ops.back().recall;
  double ap_sum = 0.0;
  for (int k = 1; k <= kRecallPositions; ++k) {
    const double sample = static_cast<double>(k) / kRecallPositions;
    PrPosition& pos = result.curve.positions[static_cast<std::size_t>(k - 1)];
    for (const Operating& op : ops) {
      if (op.recall + 1e-12 < sample) continue;
      if (!pos.reachable) {  // first crossing fixes the counts
        pos.reachable = true;
        pos.cum_tp = op.tp;
        pos.cum_fp = op.fp;
      }
      pos.precision = std::max(pos.precision, op.precision);
    }
    if (pos.reachable) ap_sum += pos.precision;
  }
  result.ap_percent = ap_sum / kRecallPositions * 100.0;
  return result;
}

/// Precision at the largest reachable recall sample, in percent.
inline double hr_precision(const PrCurve& curve) {
  for (int k = kRecallPositions - 1; k >= 0; --k) {
    const PrPosition& pos = curve.positions[static_cast<std::size_t>(k)];
    if (pos.reachable) return pos.precision * 100.0;
  }
  throw UndefinedRecallError("no reachable recall sample");
}

// ---------------------------------------------------------------------------
// whole-run evaluation
// ---------------------------------------------------------------------------

struct EvalFrame {
  std::vector<Detection> preds;
  std::vector<EvalGroundTruth> gts;
};

struct EvalReport {
  Difficulty difficulty = Difficulty::kModerate;
  MetricKind metric = MetricKind::k3d;
  std::size_t gt_count = 0;
  std::size_t pred_count = 0;
  PrCurve curve;
  double ap_percent = 0.0;
  double hr_precision_percent = 0.0;
  long fp_sum = 0;  // across the 40 recall positions
  long tp_sum = 0;
};

inline EvalReport evaluate_frames(const std::vector<EvalFrame>& frames, Difficulty difficulty,
                                  MetricKind metric, double threshold = kIouThreshold) {
  std::vector<ScoredFlag> flags;
  std::size_t gt_count = 0, pred_count = 0;
  for (const EvalFrame& frame : frames) {
    const FrameMatch match = match_frame(frame.preds, frame.gts, threshold, metric);
    gt_count += match.valid_gt_count;
    pred_count += frame.preds.size();
    for (std::size_t i = 0; i < frame.preds.size(); ++i) {
      if (match.flags[i] == PredFlag::kIgnored) continue;
      flags.push_back({frame.preds[i].score, match.flags[i] == PredFlag::kTp});
    }
  }
  const ApResult ap = pr_and_ap(std::move(flags), gt_count);
  EvalReport report;
  report.difficulty = difficulty;
  report.metric = metric;
  report.gt_count = gt_count;
  report.pred_count = pred_count;
  report.curve = ap.curve;
  report.ap_percent = ap.ap_percent;
  try {
    report.hr_precision_percent = hr_precision(ap.curve);
  } catch (const UndefinedRecallError&) {
    report.hr_precision_percent = 0.0;  // no TP anywhere: curve is empty
  }
  for (const PrPosition& pos : ap.curve.positions) {
    report.fp_sum += pos.cum_fp;
    report.tp_sum += pos.cum_tp;
  }
  return report;
}

// ---------------------------------------------------------------------------
// before/after decrement accounting
// ---------------------------------------------------------------------------

inline double decrement_percent(long before, long after) {
  if (before == 0) {
    if (after == 0) return 0.0;
    throw InvalidComparisonError("baseline count is zero but filtered count is not");
  }
  return static_cast<double>(after - before) / static_cast<double>(before) * 100.0;
}

struct DecrementSummary {
  long fp_before = 0, fp_after = 0;
  long tp_before = 0, tp_after = 0;
  double fp_decrement_percent = 0.0;
  double tp_decrement_percent = 0.0;
};

/// Compares the position-summed FP/TP counts of a baseline run against a
/// filtered run of the same frames and ground truths.
inline DecrementSummary fp_tp_sums(const EvalReport& before, const EvalReport& after) {
  if (before.difficulty != after.difficulty || before.metric != after.metric ||
      before.gt_count != after.gt_count) {
    throw InvalidComparisonError("reports cover different ground truths or settings");
  }
  DecrementSummary s;
  s.fp_before = before.fp_sum;
  s.fp_after = after.fp_sum;
  s.tp_before = before.tp_sum;
  s.tp_after = after.tp_sum;
  s.fp_decrement_percent = decrement_percent(s.fp_before, s.fp_after);
  s.tp_decrement_percent = decrement_percent(s.tp_before, s.tp_after);
  return s;
}

// ---------------------------------------------------------------------------
// report rendering
// ---------------------------------------------------------------------------

inline std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "metric: %s   difficulty: %s\n", metric_name(report.metric),
                difficulty_name(report.difficulty));
  out << buf;
  std::snprintf(buf, sizeof buf,
                "ground truths: %zu   predictions: %zu\nAP: %.4f   HR-Precision: %.4f\n"
                "FP sum over %d positions: %ld   TP sum: %ld\n",
                report.gt_count, report.pred_count, report.ap_percent,
                report.hr_precision_percent, kRecallPositions, report.fp_sum, report.tp_sum);
  out << buf;
  out << "  recall  precision     cum_tp     cum_fp\n";
  for (int k = 1; k <= kRecallPositions; ++k) {
    const PrPosition& pos = report.curve.positions[static_cast<std::size_t>(k - 1)];
    if (pos.reachable) {
      std::snprintf(buf, sizeof buf, "  %.4f   %.6f %10ld %10ld\n",
                    static_cast<double>(k) / kRecallPositions, pos.precision, pos.cum_tp,
                    pos.cum_fp);
    } else {
      std::snprintf(buf, sizeof buf, "  %.4f          -          -          -\n",
                    static_cast<double>(k) / kRecallPositions);
    }
    out << buf;
  }
  return out.str();
}

inline std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "recall,precision,cum_tp,cum_fp\n";
  char buf[96];
  for (int k = 1; k <= kRecallPositions; ++k) {
    const PrPosition& pos = report.curve.positions[static_cast<std::size_t>(k - 1)];
    if (pos.reachable) {
      std::snprintf(buf, sizeof buf, "%.4f,%.6f,%ld,%ld\n",
                    static_cast<double>(k) / kRecallPositions, pos.precision, pos.cum_tp,
                    pos.cum_fp);
    } else {
      std::snprintf(buf, sizeof buf, "%.4f,,0,0\n", static_cast<double>(k) / kRecallPositions);
    }
    out << buf;
  }
  return out.str();
}

}  // namespace lfp

#endif  // LFP_EVAL_HPP_

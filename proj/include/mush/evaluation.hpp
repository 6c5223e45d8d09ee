#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mush/detection.hpp"
#include "mush/errors.hpp"
#include "mush/localization.hpp"

namespace mush {

/// Exact intersection-over-union of two discs (lens formula for the partial
/// overlap case).
inline double circle_iou(const Circle& a, const Circle& b) {
  if (a.r <= 0.0 || b.r <= 0.0) throw InvalidCircleError("circle_iou: non-positive radius");
  const double d = std::hypot(a.cx - b.cx, a.cy - b.cy);
  const double r1 = a.r, r2 = b.r;
  const double a1 = std::numbers::pi * r1 * r1;
  const double a2 = std::numbers::pi * r2 * r2;
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) {
    const double inter = std::min(a1, a2);
    return inter / (a1 + a2 - inter);
  }
  const double d1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
  const double d2 = d - d1;
  const double seg1 = r1 * r1 * std::acos(std::clamp(d1 / r1, -1.0, 1.0)) -
                      d1 * std::sqrt(std::max(0.0, r1 * r1 - d1 * d1));
  const double seg2 = r2 * r2 * std::acos(std::clamp(d2 / r2, -1.0, 1.0)) -
                      d2 * std::sqrt(std::max(0.0, r2 * r2 - d2 * d2));
  const double inter = seg1 + seg2;
  return inter / (a1 + a2 - inter);
}

/// Harmonic mean of recall and precision.
inline double f_score(double recall, double precision) {
  if (recall + precision <= 0.0)
    throw UndefinedScoreError("f_score: recall + precision is zero");
  return 2.0 * recall * precision / (recall + precision);
}

struct DetectionMatch {
  int det = -1;
  int gt = -1;
  double iou = 0.0;
};

struct DetectionMetrics {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double recall = 0.0;
  double precision = 0.0;
  std::vector<DetectionMatch> matches;

  double fscore() const { return f_score(recall, precision); }
};

/// Greedy one-to-one matching: detections in descending score order each take
/// the unclaimed ground-truth circle of highest overlap at or above the
/// threshold. An empty side leaves the corresponding rate at its vacuous 1.
inline DetectionMetrics match_detections(const std::vector<Circle>& detections,
                                         const std::vector<Circle>& ground_truth,
                                         double iou_thresh = 0.5) {
  std::vector<int> order(detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return detections[x].score > detections[y].score;
  });

  DetectionMetrics m;
  std::vector<bool> gt_taken(ground_truth.size(), false);
  for (int di : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < ground_truth.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const double iou = circle_iou(detections[di], ground_truth[gi]);
      if (iou >= iou_thresh && iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      gt_taken[best_gt] = true;
      m.matches.push_back({di, best_gt, best_iou});
    }
  }
  m.tp = static_cast<int>(m.matches.size());
  m.fp = static_cast<int>(detections.size()) - m.tp;
  m.fn = static_cast<int>(ground_truth.size()) - m.tp;
  m.recall = ground_truth.empty() ? 1.0 : static_cast<double>(m.tp) / ground_truth.size();
  m.precision = detections.empty() ? 1.0 : static_cast<double>(m.tp) / detections.size();
  return m;
}

struct DepthAccuracy {
  double mean_m = 0.0;
  double std_m = 0.0;
  double min_m = 0.0;
  double max_m = 0.0;
  double range_m = 0.0;
  double offset_m = 0.0;  // ground truth minus measured mean
  int valid_count = 0;
};

/// Depth statistics over a square window centered on the image, against a
/// known flat-target distance. Missing readings are excluded.
inline DepthAccuracy depth_accuracy(const DepthImage& depth, const CameraIntrinsics& intr,
                                    double gt_depth_m, int window = 31) {
  if (window < 1) throw Error("depth_accuracy: window must be >= 1");
  const int cx = depth.width / 2;
  const int cy = depth.height / 2;
  const int half = window / 2;
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(window) * window);
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (int y = cy - half; y <= cy + half; ++y)
    for (int x = cx - half; x <= cx + half; ++x) {
      if (!depth.in_bounds(x, y) || depth.at(x, y) == 0) continue;
      const double z = depth.at(x, y) * intr.depth_scale;
      vals.push_back(z);
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
  if (vals.empty()) throw NoValidPixelsError("depth_accuracy: no valid depth in window");
  const int n = static_cast<int>(vals.size());
  DepthAccuracy a;
  a.valid_count = n;
  double sum = 0.0;
  for (double z : vals) sum += z;
  a.mean_m = sum / n;
  // Two-pass variance: the textbook E[z^2] - E[z]^2 form cancels
  // catastrophically on near-uniform targets.
  double sq = 0.0;
  for (double z : vals) sq += (z - a.mean_m) * (z - a.mean_m);
  a.std_m = std::sqrt(sq / n);
  a.min_m = lo;
  a.max_m = hi;
  a.range_m = hi - lo;
  a.offset_m = gt_depth_m - a.mean_m;
  return a;
}

}  // namespace mush

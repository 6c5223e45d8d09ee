#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mush/detection.hpp"
#include "mush/errors.hpp"
#include "mush/evaluation.hpp"
#include "mush/image.hpp"
#include "mush/io/json.hpp"
#include "mush/localization.hpp"
#include "mush/registration.hpp"
#include "mush/segmentation.hpp"

namespace mush {

struct PipelineConfig {
  ChanVeseParams chan_vese;
  int open_kernel_w = 10;
  int open_kernel_h = 10;
  DetectParams detect;
  double crop_radius_factor = 1.2;
  std::size_t min_cap_points = 50;  // pose stage needs this many cropped points
  PoseParams pose;
};

struct CapReport {
  Circle circle;
  Vec3 position = Vec3::Zero();
  double distance = 0.0;
  bool fill_used = false;
  DiameterEstimate diameter;
  bool has_pose = false;
  Quaternion rotation;
  Vec3 normal = Vec3::Zero();
  double pose_fitness = 0.0;
  double pose_inlier_rmse = 0.0;
};

struct RejectReport {
  Circle circle;
  std::string stage;
  std::string reason;
};

struct PipelineResult {
  std::vector<CapReport> caps;     // detection score order
  std::vector<RejectReport> rejects;
  BinaryMask segmentation;         // mask after contour evolution and opening
};

/// RGB-D frame -> per-cap reports. Detections that cannot be localized,
/// measured, or (when a model is given) posed are moved to the reject list,
/// so every detection is accounted for exactly once.
inline PipelineResult run_pipeline(const ImageRgb& rgb, const DepthImage& depth,
                                   const CameraIntrinsics& intr, const PipelineConfig& cfg,
                                   const PointCloud* model = nullptr) {
  if (rgb.width != depth.width || rgb.height != depth.height)
    throw Error("run_pipeline: rgb/depth shape mismatch");

  PipelineResult result;
  const ImageGray gray = to_grayscale(rgb);
  BinaryMask mask(rgb.width, rgb.height);
  try {
    const OtsuResult otsu = otsu_threshold(gray);
    mask = chan_vese_evolve(gray, otsu.mask, cfg.chan_vese);
  } catch (const ConstantImageError&) {
    result.segmentation = mask;  // featureless frame: nothing to detect
    return result;
  }
  mask = morphological_open(mask, StructuringElement::ellipse(cfg.open_kernel_w,
                                                              cfg.open_kernel_h));
  result.segmentation = mask;

  const std::vector<Circle> detections = detect_circles(mask, cfg.detect);
  for (const Circle& c : detections) {
    CapReport rep;
    rep.circle = c;
    try {
      const CapLocation loc = localize_circle(depth, intr, c);
      rep.position = loc.position;
      rep.distance = loc.distance;
      rep.fill_used = loc.fill_used;
    } catch (const Error& e) {
      result.rejects.push_back({c, "localize", e.what()});
      continue;
    }
    try {
      rep.diameter = estimate_diameter(depth, intr, c);
    } catch (const Error& e) {
      result.rejects.push_back({c, "diameter", e.what()});
      continue;
    }
    if (model) {
      const PointCloud cap_cloud = crop_cap_cloud(depth, intr, c, cfg.crop_radius_factor);
      if (cap_cloud.points.size() < cfg.min_cap_points) {
        result.rejects.push_back({c, "pose", "too few depth points on cap"});
        continue;
      }
      try {
        const PoseEstimate pose = estimate_pose(*model, cap_cloud, cfg.pose);
        rep.has_pose = true;
        rep.rotation = pose.rotation;
        rep.normal = pose.normal;
        rep.pose_fitness = pose.icp.fitness;
        rep.pose_inlier_rmse = pose.icp.inlier_rmse;
      } catch (const Error& e) {
        result.rejects.push_back({c, "pose", e.what()});
        continue;
      }
    }
    result.caps.push_back(rep);
  }
  return result;
}

inline Json pipeline_result_to_json(const PipelineResult& result, const CameraIntrinsics& intr) {
  Json j;
  j["image"] = {{"width", intr.width}, {"height", intr.height}};
  j["caps"] = Json::array();
  for (const CapReport& r : result.caps) {
    Json c;
    c["center_px"] = {r.circle.cx, r.circle.cy};
    c["radius_px"] = r.circle.r;
    c["score"] = r.circle.score;
    c["position_m"] = {r.position.x(), r.position.y(), r.position.z()};
    c["distance_m"] = r.distance;
    c["fill_used"] = r.fill_used;
    c["diameter_m"] = r.diameter.value_m;
    if (r.has_pose) {
      Json p;
      p["rotation_xyzw"] = {r.rotation.x, r.rotation.y, r.rotation.z, r.rotation.w};
      p["normal"] = {r.normal.x(), r.normal.y(), r.normal.z()};
      p["fitness"] = r.pose_fitness;
      p["inlier_rmse"] = r.pose_inlier_rmse;
      c["pose"] = p;
    } else {
      c["pose"] = nullptr;
    }
    j["caps"].push_back(c);
  }
  j["rejects"] = Json::array();
  for (const RejectReport& r : result.rejects) {
    Json c;
    c["center_px"] = {r.circle.cx, r.circle.cy};
    c["radius_px"] = r.circle.r;
    c["stage"] = r.stage;
    c["reason"] = r.reason;
    j["rejects"].push_back(c);
  }
  return j;
}

/// Detected circle outlines burned into a copy of the frame, one-pixel red.
inline ImageRgb draw_detections(const ImageRgb& rgb, const std::vector<Circle>& circles) {
  ImageRgb out = rgb;
  for (const Circle& c : circles) {
    const int steps = std::max(64, static_cast<int>(8.0 * c.r));
    for (int i = 0; i < steps; ++i) {
      const double th = 2.0 * std::numbers::pi * i / steps;
      const int x = static_cast<int>(std::lround(c.cx + c.r * std::cos(th)));
      const int y = static_cast<int>(std::lround(c.cy + c.r * std::sin(th)));
      if (x >= 0 && x < out.width && y >= 0 && y < out.height) out.at(x, y) = {255, 0, 0};
    }
  }
  return out;
}

}  // namespace mush

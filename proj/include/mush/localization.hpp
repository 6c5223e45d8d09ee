#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mush/detection.hpp"
#include "mush/errors.hpp"
#include "mush/geometry.hpp"
#include "mush/pointcloud.hpp"

namespace mush {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double depth_scale = 0.001;  // meters per raw depth unit
};

/// Raw sensor depth; value 0 marks a missing measurement.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint16_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

/// Pixel (u, v) at depth z meters -> camera-frame point, +Z forward.
inline Vec3 deproject(const CameraIntrinsics& intr, double u, double v, double z) {
  if (z <= 0.0) throw NonPositiveDepthError("deproject: depth must be positive");
  return {(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

struct FillResult {
  double z = 0.0;  // meters
  bool fill_used = false;
  std::vector<std::pair<int, int>> source_pixels;
};

/// Depth at the rounded pixel (u, v); when that reading is missing, take the
/// nearest valid pixels by exact Euclidean pixel distance within max_radius,
/// averaging all pixels tied at the winning distance.
inline FillResult depth_at_with_fill(const DepthImage& depth, const CameraIntrinsics& intr,
                                     double u, double v, int max_radius) {
  const int px = static_cast<int>(std::lround(u));
  const int py = static_cast<int>(std::lround(v));
  if (depth.in_bounds(px, py) && depth.at(px, py) != 0) {
    FillResult r;
    r.z = depth.at(px, py) * intr.depth_scale;
    r.fill_used = false;
    r.source_pixels = {{px, py}};
    return r;
  }
  // Offsets grouped by squared distance; std::map keeps the groups ascending.
  std::map<int, std::vector<std::pair<int, int>>> rings;
  for (int dy = -max_radius; dy <= max_radius; ++dy)
    for (int dx = -max_radius; dx <= max_radius; ++dx) {
      const int d2 = dx * dx + dy * dy;
      if (d2 == 0 || d2 > max_radius * max_radius) continue;
      rings[d2].emplace_back(dx, dy);
    }
  for (const auto& [d2, offsets] : rings) {
    double sum = 0.0;
    std::vector<std::pair<int, int>> used;
    for (const auto& [dx, dy] : offsets) {
      const int x = px + dx, y = py + dy;
      if (!depth.in_bounds(x, y) || depth.at(x, y) == 0) continue;
      sum += depth.at(x, y);
      used.emplace_back(x, y);
    }
    if (!used.empty()) {
      FillResult r;
      r.z = sum / static_cast<double>(used.size()) * intr.depth_scale;
      r.fill_used = true;
      r.source_pixels = std::move(used);
      return r;
    }
  }
  throw MissingDepthError("depth_at_with_fill: no valid depth within search radius");
}

struct CapLocation {
  Vec3 position = Vec3::Zero();  // camera frame, meters
  double distance = 0.0;         // |position|
  bool fill_used = false;
  std::vector<std::pair<int, int>> source_pixels;
};

/// 3-d position of a detected cap center. The contributing pixels (the center
/// itself, or the fill ring) are deprojected at their own depths and averaged,
/// so a filled reading stays on the surrounding surface.
inline CapLocation localize_circle(const DepthImage& depth, const CameraIntrinsics& intr,
                                   const Circle& circle, int fill_radius = -1) {
  if (circle.r <= 0.0) throw InvalidCircleError("localize_circle: non-positive radius");
  const int radius = fill_radius > 0 ? fill_radius
                                     : std::max(1, static_cast<int>(std::lround(circle.r)));
  const FillResult fr = depth_at_with_fill(depth, intr, circle.cx, circle.cy, radius);
  Vec3 pos = Vec3::Zero();
  for (const auto& [x, y] : fr.source_pixels)
    pos += deproject(intr, x, y, depth.at(x, y) * intr.depth_scale);
  pos /= static_cast<double>(fr.source_pixels.size());

  CapLocation loc;
  loc.position = pos;
  loc.distance = pos.norm();
  loc.fill_used = fr.fill_used;
  loc.source_pixels = fr.source_pixels;
  return loc;
}

struct DiameterEstimate {
  double value_m = 0.0;
  bool row_used = false;
  bool col_used = false;
};

/// Metric cap diameter from opposite points of the detected circle: each
/// endpoint pair is deprojected at its own (hole-filled) depth and the two
/// axis estimates are averaged. Falls back to a single axis when the other
/// has no recoverable depth.
inline DiameterEstimate estimate_diameter(const DepthImage& depth, const CameraIntrinsics& intr,
                                          const Circle& circle) {
  if (circle.r <= 0.0) throw InvalidCircleError("estimate_diameter: non-positive radius");
  const int fill_radius = std::max(1, static_cast<int>(std::lround(circle.r)));

  auto endpoint_distance = [&](double u0, double v0, double u1, double v1, double& out) {
    try {
      const FillResult a = depth_at_with_fill(depth, intr, u0, v0, fill_radius);
      const FillResult b = depth_at_with_fill(depth, intr, u1, v1, fill_radius);
      out = (deproject(intr, u0, v0, a.z) - deproject(intr, u1, v1, b.z)).norm();
      return true;
    } catch (const MissingDepthError&) {
      return false;
    }
  };

  DiameterEstimate est;
  double row = 0.0, col = 0.0;
  est.row_used = endpoint_distance(circle.cx - circle.r, circle.cy, circle.cx + circle.r,
                                   circle.cy, row);
  est.col_used = endpoint_distance(circle.cx, circle.cy - circle.r, circle.cx,
                                   circle.cy + circle.r, col);
  if (!est.row_used && !est.col_used)
    throw MissingDepthError("estimate_diameter: no depth at any circle endpoint");
  const int n = (est.row_used ? 1 : 0) + (est.col_used ? 1 : 0);
  est.value_m = (row + col) / n;
  return est;
}

/// All valid-depth pixels within `radius_factor * circle.r` of the center,
/// deprojected into the camera frame. Used to cut a per-cap cloud for pose
/// estimation.
inline PointCloud crop_cap_cloud(const DepthImage& depth, const CameraIntrinsics& intr,
                                 const Circle& circle, double radius_factor = 1.2) {
  if (circle.r <= 0.0) throw InvalidCircleError("crop_cap_cloud: non-positive radius");
  const double rr = circle.r * radius_factor;
  const int x0 = std::max(0, static_cast<int>(std::floor(circle.cx - rr)));
  const int x1 = std::min(depth.width - 1, static_cast<int>(std::ceil(circle.cx + rr)));
  const int y0 = std::max(0, static_cast<int>(std::floor(circle.cy - rr)));
  const int y1 = std::min(depth.height - 1, static_cast<int>(std::ceil(circle.cy + rr)));
  PointCloud out;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (depth.at(x, y) == 0) continue;
      const double dx = x - circle.cx, dy = y - circle.cy;
      if (dx * dx + dy * dy > rr * rr) continue;
      out.points.push_back(deproject(intr, x, y, depth.at(x, y) * intr.depth_scale));
    }
  return out;
}

}  // namespace mush

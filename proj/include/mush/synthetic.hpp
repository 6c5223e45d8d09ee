#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mush/detail/random.hpp"
#include "mush/detection.hpp"
#include "mush/errors.hpp"
#include "mush/geometry.hpp"
#include "mush/image.hpp"
#include "mush/localization.hpp"
#include "mush/pointcloud.hpp"

namespace mush {

/// Spherical cap resting with its center on the background plane; only the
/// near hemisphere faces the camera.
struct CapSpec {
  Vec3 center = Vec3::Zero();  // camera frame, meters
  double radius = 0.0;         // meters
};

struct HoleSpec {
  double cx = 0.0;  // pixels
  double cy = 0.0;
  double r = 0.0;
};

struct SceneSpec {
  CameraIntrinsics intrinsics;
  double plane_depth = 0.45;  // meters; <= 0 disables the background plane
  std::vector<CapSpec> caps;
  double cap_intensity = 200.0;
  double bg_intensity = 60.0;
  double intensity_noise = 5.0;  // gaussian sigma, gray levels
  double depth_noise = 0.0;      // gaussian sigma, meters, applied before quantization
  double hole_prob = 0.0;        // per-pixel dropout probability
  std::vector<HoleSpec> holes;
  std::uint64_t seed = 0;
};

struct GtCap {
  Vec3 position = Vec3::Zero();  // closest surface point to the camera
  double distance = 0.0;         // meters to that point
  double diameter = 0.0;         // meters
  Vec3 normal = Vec3::Zero();    // cap up axis (toward the camera)
};

struct SyntheticScene {
  ImageRgb rgb;
  DepthImage depth;
  std::vector<Circle> gt_circles;  // exact projected outlines, one per cap
  std::vector<GtCap> gt_caps;
};

namespace detail {

// Projected outline of a sphere: sample the tangent cone from the camera
// origin densely and summarize the resulting ellipse as a circle.
inline Circle project_sphere_outline(const CameraIntrinsics& intr, const Vec3& c, double radius) {
  const double d = c.norm();
  const Vec3 axis = c / d;
  const double half = std::asin(std::min(1.0, radius / d));
  Vec3 e1 = axis.cross(Vec3::UnitX());
  if (e1.norm() < 1e-6) e1 = axis.cross(Vec3::UnitY());
  e1.normalize();
  const Vec3 e2 = axis.cross(e1);

  constexpr int kSamples = 2048;
  double umin = std::numeric_limits<double>::max(), umax = std::numeric_limits<double>::lowest();
  double vmin = umin, vmax = umax;
  for (int i = 0; i < kSamples; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kSamples;
    const Vec3 dir = std::cos(half) * axis + std::sin(half) * (std::cos(th) * e1 + std::sin(th) * e2);
    if (dir.z() <= 1e-9) continue;
    const double u = intr.fx * dir.x() / dir.z() + intr.cx;
    const double v = intr.fy * dir.y() / dir.z() + intr.cy;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  Circle out;
  out.cx = (umin + umax) / 2.0;
  out.cy = (vmin + vmax) / 2.0;
  out.r = ((umax - umin) / 2.0 + (vmax - vmin) / 2.0) / 2.0;
  out.score = 1.0;
  return out;
}

}  // namespace detail

/// Render an RGB-D frame of spherical caps over a flat plane, by exact
/// per-pixel ray intersection. Depth is corrupted in order: gaussian noise,
/// quantization to depth units, then dropout (random and explicit disks).
/// Noise streams are seeded per row, so the output is reproducible.
inline SyntheticScene render_scene(const SceneSpec& spec) {
  const CameraIntrinsics& K = spec.intrinsics;
  if (K.fx <= 0.0 || K.fy <= 0.0 || K.width <= 0 || K.height <= 0 || K.depth_scale <= 0.0)
    throw Error("render_scene: invalid intrinsics");
  for (const CapSpec& cap : spec.caps) {
    if (cap.radius <= 0.0) throw Error("render_scene: non-positive cap radius");
    if (cap.center.z() - cap.radius <= 0.0)
      throw Error("render_scene: cap reaches behind the camera");
    if (spec.plane_depth > 0.0 && cap.center.z() - cap.radius >= spec.plane_depth)
      throw CapBehindPlaneError("render_scene: cap is fully occluded by the plane");
  }

  SyntheticScene scene;
  scene.rgb = ImageRgb(K.width, K.height);
  scene.depth = DepthImage(K.width, K.height);

  for (int y = 0; y < K.height; ++y) {
    detail::Rng rgb_rng(detail::derive_seed(spec.seed, 0, y));
    detail::Rng depth_rng(detail::derive_seed(spec.seed, 1, y));
    detail::Rng hole_rng(detail::derive_seed(spec.seed, 2, y));
    for (int x = 0; x < K.width; ++x) {
      const double xn = (x - K.cx) / K.fx;
      const double yn = (y - K.cy) / K.fy;
      // Ray through the pixel parameterized by depth z: (xn z, yn z, z).
      const double a = xn * xn + yn * yn + 1.0;
      double z = spec.plane_depth > 0.0 ? spec.plane_depth : 0.0;
      bool on_cap = false;
      for (const CapSpec& cap : spec.caps) {
        const Vec3& c = cap.center;
        const double b = -2.0 * (xn * c.x() + yn * c.y() + c.z());
        const double c0 = c.squaredNorm() - cap.radius * cap.radius;
        const double disc = b * b - 4.0 * a * c0;
        if (disc < 0.0) continue;
        const double zhit = (-b - std::sqrt(disc)) / (2.0 * a);
        if (zhit <= 0.0) continue;
        if (z > 0.0 && zhit >= z) continue;  // something nearer already hit
        z = zhit;
        on_cap = true;
      }

      const double base = on_cap ? spec.cap_intensity : spec.bg_intensity;
      const double noise = spec.intensity_noise > 0.0
                               ? rgb_rng.gaussian(0.0, spec.intensity_noise)
                               : 0.0;
      const auto level = static_cast<std::uint8_t>(
          std::clamp<long>(std::lround(base + noise), 0, 255));
      scene.rgb.at(x, y) = {level, level, level};

      double zm = z;
      if (zm > 0.0 && spec.depth_noise > 0.0) zm += depth_rng.gaussian(0.0, spec.depth_noise);
      std::uint16_t raw = 0;
      if (zm > 0.0)
        raw = static_cast<std::uint16_t>(
            std::clamp<long>(std::lround(zm / K.depth_scale), 1, 65535));
      if (spec.hole_prob > 0.0 && hole_rng.bernoulli(spec.hole_prob)) raw = 0;
      scene.depth.at(x, y) = raw;
    }
  }

  for (const HoleSpec& h : spec.holes) {
    const int x0 = std::max(0, static_cast<int>(std::floor(h.cx - h.r)));
    const int x1 = std::min(K.width - 1, static_cast<int>(std::ceil(h.cx + h.r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(h.cy - h.r)));
    const int y1 = std::min(K.height - 1, static_cast<int>(std::ceil(h.cy + h.r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - h.cx, dy = y - h.cy;
        if (dx * dx + dy * dy <= h.r * h.r) scene.depth.at(x, y) = 0;
      }
  }

  for (const CapSpec& cap : spec.caps) {
    scene.gt_circles.push_back(detail::project_sphere_outline(K, cap.center, cap.radius));
    GtCap gt;
    const double d = cap.center.norm();
    gt.position = cap.center * (1.0 - cap.radius / d);
    gt.distance = d - cap.radius;
    gt.diameter = 2.0 * cap.radius;
    gt.normal = -cap.center.normalized();
    scene.gt_caps.push_back(gt);
  }
  return scene;
}

/// Uniform random surface samples of an upright hemisphere of the given
/// radius (flat side down, apex at +Z), moved by `pose`, with isotropic
/// gaussian noise. Height is sampled uniformly, which is area-uniform on a
/// sphere.
inline PointCloud sample_cap_cloud(double radius, int count, const RigidTransform& pose = {},
                                   double noise_sigma = 0.0, std::uint64_t seed = 0) {
  if (radius <= 0.0) throw Error("sample_cap_cloud: radius must be positive");
  if (count <= 0) throw Error("sample_cap_cloud: count must be positive");
  detail::Rng rng(seed);
  PointCloud out;
  out.points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = rng.uniform(0.0, radius);
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rho = std::sqrt(std::max(0.0, radius * radius - z * z));
    Vec3 p(rho * std::cos(th), rho * std::sin(th), z);
    if (noise_sigma > 0.0)
      p += Vec3(rng.gaussian(0.0, noise_sigma), rng.gaussian(0.0, noise_sigma),
                rng.gaussian(0.0, noise_sigma));
    out.points.push_back(pose.apply(p));
  }
  return out;
}

}  // namespace mush

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "mush/errors.hpp"
#include "mush/pointcloud.hpp"

namespace mush {

/// 33-bin descriptor: three 11-bin angle histograms laid out [alpha | phi | theta].
using Fpfh33 = std::array<double, 33>;

namespace detail {

inline int fpfh_bin(double value, double lo, double hi) {
  const int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * 11.0));
  return std::clamp(b, 0, 10);
}

// Darboux-frame angles between an oriented source point and a target point.
// Returns false when the pair is degenerate (coincident points or a
// connecting line parallel to the source normal).
inline bool pair_angles(const Vec3& ps, const Vec3& ns, const Vec3& pt, const Vec3& nt,
                        double& alpha, double& phi, double& theta) {
  const Vec3 d = pt - ps;
  const double dist = d.norm();
  if (dist < 1e-12) return false;
  const Vec3 dn = d / dist;
  const Vec3& u = ns;
  Vec3 v = dn.cross(u);
  const double vn = v.norm();
  if (vn < 1e-12) return false;
  v /= vn;
  const Vec3 w = u.cross(v);
  alpha = v.dot(nt);
  phi = u.dot(dn);
  theta = std::atan2(w.dot(nt), u.dot(nt));
  return true;
}

}  // namespace detail

/// Fast point feature histograms over a radius neighborhood. Each point's
/// simplified histogram (its own pair angles against every neighbor) is
/// blended with its neighbors' histograms, inverse-distance weighted, and
/// every 11-bin block is scaled to sum 100.
inline std::vector<Fpfh33> compute_fpfh(const PointCloud& cloud, double radius) {
  if (cloud.points.empty()) throw EmptyCloudError("compute_fpfh: empty cloud");
  if (!cloud.has_normals()) throw Error("compute_fpfh: cloud has no normals");
  if (radius <= 0.0) throw Error("compute_fpfh: radius must be positive");

  const KdTree3 tree(cloud.points);
  const std::size_t n = cloud.points.size();
  std::vector<std::vector<int>> nbrs(n);
  std::vector<Fpfh33> spfh(n);
  for (auto& h : spfh) h.fill(0.0);

  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    auto found = tree.radius_search(cloud.points[i], radius);
    std::erase(found, static_cast<int>(i));
    nbrs[i] = std::move(found);
    for (int j : nbrs[i]) {
      double a, p, t;
      if (!detail::pair_angles(cloud.points[i], cloud.normals[i], cloud.points[j],
                               cloud.normals[j], a, p, t))
        continue;
      spfh[i][detail::fpfh_bin(a, -1.0, 1.0)] += 1.0;
      spfh[i][11 + detail::fpfh_bin(p, -1.0, 1.0)] += 1.0;
      spfh[i][22 + detail::fpfh_bin(t, -pi, pi)] += 1.0;
    }
  }

  std::vector<Fpfh33> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Fpfh33 h = spfh[i];
    double k = 0.0;
    Fpfh33 blend;
    blend.fill(0.0);
    for (int j : nbrs[i]) {
      const double w = (cloud.points[i] - cloud.points[j]).norm();
      if (w < 1e-12) continue;
      for (int b = 0; b < 33; ++b) blend[b] += spfh[j][b] / w;
      k += 1.0;
    }
    if (k > 0.0)
      for (int b = 0; b < 33; ++b) h[b] += blend[b] / k;
    for (int block = 0; block < 3; ++block) {
      double sum = 0.0;
      for (int b = 0; b < 11; ++b) sum += h[block * 11 + b];
      if (sum > 0.0)
        for (int b = 0; b < 11; ++b) h[block * 11 + b] *= 100.0 / sum;
    }
    out[i] = h;
  }
  return out;
}

}  // namespace mush

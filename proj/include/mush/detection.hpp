#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mush/errors.hpp"
#include "mush/image.hpp"

namespace mush {

struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
  double score = 0.0;
};

struct DetectParams {
  int rmin = 8;
  int rmax = 38;
  double score_thresh = 0.45;
  double nms_dist = -1.0;  // < 0 means "use rmin"
};

/// Foreground pixels with at least one background 4-neighbor; pixels outside
/// the image count as background, so the image border is a boundary.
inline std::vector<std::pair<int, int>> boundary_pixels(const BinaryMask& mask) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const bool edge = !mask.in_bounds(x - 1, y) || !mask.at(x - 1, y) ||
                        !mask.in_bounds(x + 1, y) || !mask.at(x + 1, y) ||
                        !mask.in_bounds(x, y - 1) || !mask.at(x, y - 1) ||
                        !mask.in_bounds(x, y + 1) || !mask.at(x, y + 1);
      if (edge) out.emplace_back(x, y);
    }
  }
  return out;
}

namespace detail {

/// Integer offsets whose Euclidean length rounds to r.
inline const std::vector<std::pair<int, int>>& annulus_offsets(int r) {
  static std::vector<std::vector<std::pair<int, int>>> cache;
  if (r >= static_cast<int>(cache.size())) cache.resize(r + 1);
  auto& entry = cache[r];
  if (entry.empty() && r > 0) {
    for (int dy = -r - 1; dy <= r + 1; ++dy)
      for (int dx = -r - 1; dx <= r + 1; ++dx)
        if (static_cast<int>(std::lround(std::hypot(dx, dy))) == r) entry.emplace_back(dx, dy);
  }
  return entry;
}

}  // namespace detail

/// Phase assigned to radius r on the log scale over [rmin, rmax].
inline double cht_phase(int r, int rmin, int rmax) {
  if (rmax == rmin) return 0.0;
  return 2.0 * std::numbers::pi * (std::log(static_cast<double>(r)) - std::log(rmin)) /
         (std::log(static_cast<double>(rmax)) - std::log(rmin));
}

/// Inverse of cht_phase: recover a (fractional) radius from a complex argument.
inline double cht_decode_radius(double arg, int rmin, int rmax) {
  if (rmax == rmin) return rmin;
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(arg, two_pi);
  if (a < 0.0) a += two_pi;
  return rmin * std::exp(a / two_pi * std::log(static_cast<double>(rmax) / rmin));
}

/// Complex Hough accumulator over circle centers. Every boundary pixel casts
/// one vote per radius onto the annulus of candidate centers at that radius;
/// votes carry the radius-coded phase and are normalized by the annulus pixel
/// count so a complete circle of any radius peaks near magnitude 1.
inline std::vector<std::complex<double>> cht_accumulate(
    const std::vector<std::pair<int, int>>& boundary, int width, int height, int rmin, int rmax) {
  if (rmin < 1 || rmax < rmin) throw Error("cht_accumulate: need 1 <= rmin <= rmax");
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(width) * height);
  for (int r = rmin; r <= rmax; ++r) {
    const auto& ring = detail::annulus_offsets(r);
    if (ring.empty()) continue;
    const double w = 1.0 / static_cast<double>(ring.size());
    const double phase = cht_phase(r, rmin, rmax);
    const std::complex<double> vote = std::polar(w, phase);
    for (const auto& [bx, by] : boundary) {
      for (const auto& [dx, dy] : ring) {
        const int cx = bx + dx;
        const int cy = by + dy;
        if (cx < 0 || cx >= width || cy < 0 || cy >= height) continue;
        acc[static_cast<std::size_t>(cy) * width + cx] += vote;
      }
    }
  }
  return acc;
}

/// Circle detection on a binary mask: accumulate phase-coded votes, pick
/// magnitude peaks, suppress close duplicates (score order, distance < nms
/// radius), decode the radius from the peak's phase, and refine the center
/// with a least-squares circle fit to the boundary pixels at that radius.
/// Results are sorted by descending score.
inline std::vector<Circle> detect_circles(const BinaryMask& mask, const DetectParams& params = {}) {
  const auto boundary = boundary_pixels(mask);
  if (boundary.empty()) return {};
  const int w = mask.width, h = mask.height;
  const auto acc = cht_accumulate(boundary, w, h, params.rmin, params.rmax);

  std::vector<double> mag(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) mag[i] = std::abs(acc[i]);
  auto m = [&](int x, int y) { return mag[static_cast<std::size_t>(y) * w + x]; };

  struct Peak {
    int x, y;
    double score;
  };
  std::vector<Peak> peaks;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = m(x, y);
      if (c < params.score_thresh) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1 && is_max; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int px = x + dx, py = y + dy;
          if (px < 0 || px >= w || py < 0 || py >= h) continue;
          if (m(px, py) > c) is_max = false;
        }
      if (is_max) peaks.push_back({x, y, c});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  const double nms = params.nms_dist < 0.0 ? static_cast<double>(params.rmin) : params.nms_dist;
  std::vector<Peak> kept;
  for (const auto& p : peaks) {
    bool ok = true;
    for (const auto& k : kept) {
      const double d = std::hypot(p.x - k.x, p.y - k.y);
      if (d < nms) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(p);
  }

  std::vector<Circle> out;
  out.reserve(kept.size());
  for (const auto& p : kept) {
    double cx = p.x, cy = p.y;
    const double r =
        cht_decode_radius(std::arg(acc[static_cast<std::size_t>(p.y) * w + p.x]),
                          params.rmin, params.rmax);
    // Sub-pixel center: least-squares circle through the boundary pixels at
    // the decoded radius. Cells next to the peak can out-vote it by mixing
    // adjacent radii coherently, so magnitude interpolation is off by up to a
    // cell; the boundary evidence itself is not.
    {
      double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, sxz = 0, syz = 0, sz = 0;
      std::size_t n = 0;
      for (const auto& [bx, by] : boundary) {
        const double dx = bx - p.x, dy = by - p.y;
        if (std::abs(std::hypot(dx, dy) - r) > 2.0) continue;
        const double z = dx * dx + dy * dy;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sx += dx;
        sy += dy;
        sxz += dx * z;
        syz += dy * z;
        sz += z;
        ++n;
      }
      // Normal equations of z = A dx + B dy + C; the center offset is (A, B)/2.
      const double nn = static_cast<double>(n);
      const double det = sxx * (syy * nn - sy * sy) - sxy * (sxy * nn - sy * sx) +
                         sx * (sxy * sy - syy * sx);
      if (n >= 8 && std::abs(det) > 1e-9) {
        const double a = (sxz * (syy * nn - sy * sy) - sxy * (syz * nn - sy * sz) +
                          sx * (syz * sy - syy * sz)) /
                         det / 2.0;
        const double b = (sxx * (syz * nn - sz * sy) - sxz * (sxy * nn - sy * sx) +
                          sx * (sxy * sz - syz * sx)) /
                         det / 2.0;
        if (std::hypot(a, b) <= 3.0) {
          cx = p.x + a;
          cy = p.y + b;
        }
      }
    }
    out.push_back({cx, cy, r, p.score});
  }
  return out;
}

}  // namespace mush

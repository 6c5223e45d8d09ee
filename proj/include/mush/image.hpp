#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mush/errors.hpp"

namespace mush {

/// 8-bit RGB image, row-major.
struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<std::array<std::uint8_t, 3>> data;

  ImageRgb() = default;
  ImageRgb(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::array<std::uint8_t, 3>& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const std::array<std::uint8_t, 3>& at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

/// Grayscale image with real-valued intensities in [0, 255].
struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ImageGray() = default;
  ImageGray(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
};

/// Per-pixel foreground indicator. Stored as uint8 (0/1) rather than
/// vector<bool> so rows can be addressed directly.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data) n += v != 0;
    return n;
  }

  bool operator==(const BinaryMask& o) const {
    return width == o.width && height == o.height && data == o.data;
  }
};

enum class SeShape { ellipse, rect };

/// Flat structuring element described by its in-kernel pixel offsets
/// relative to the anchor (w/2, h/2).
struct StructuringElement {
  SeShape shape = SeShape::ellipse;
  int width = 0;
  int height = 0;
  std::vector<std::pair<int, int>> offsets;

  /// Ellipse inscribed in a w x h bounding box; a pixel belongs to the
  /// kernel when its center lies inside the ellipse.
  static StructuringElement ellipse(int w, int h) {
    StructuringElement se;
    se.shape = SeShape::ellipse;
    se.width = w;
    se.height = h;
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double ax = w / 2.0;
    const double ay = h / 2.0;
    const int ox = w / 2;
    const int oy = h / 2;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = (x - cx) / ax;
        const double dy = (y - cy) / ay;
        if (dx * dx + dy * dy <= 1.0) se.offsets.emplace_back(x - ox, y - oy);
      }
    }
    return se;
  }

  static StructuringElement rect(int w, int h) {
    StructuringElement se;
    se.shape = SeShape::rect;
    se.width = w;
    se.height = h;
    const int ox = w / 2;
    const int oy = h / 2;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) se.offsets.emplace_back(x - ox, y - oy);
    return se;
  }
};

/// ITU-R BT.601 luma conversion.
inline ImageGray to_grayscale(const ImageRgb& img) {
  ImageGray out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const auto& p = img.data[i];
    out.data[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

struct OtsuResult {
  BinaryMask mask;
  double threshold = 0.0;
};

/// Otsu's automatic threshold over a 256-bin histogram. The mask is true
/// where intensity > threshold. Ties on the between-class variance pick the
/// smallest threshold.
inline OtsuResult otsu_threshold(const ImageGray& img) {
  std::array<std::int64_t, 256> hist{};
  for (double v : img.data) {
    int bin = static_cast<int>(std::lround(v));
    bin = std::clamp(bin, 0, 255);
    ++hist[bin];
  }

  int occupied = 0;
  for (auto h : hist) occupied += h > 0;
  if (occupied <= 1) throw ConstantImageError("otsu_threshold: single-bin histogram");

  const double total = static_cast<double>(img.data.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * hist[i];

  double best_var = -1.0;
  int best_t = 0;
  double w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    sum0 += static_cast<double>(t) * hist[t];
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }

  OtsuResult res;
  res.threshold = static_cast<double>(best_t);
  res.mask = BinaryMask(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) res.mask.data[i] = img.data[i] > res.threshold ? 1 : 0;
  return res;
}

/// Erosion with out-of-bounds treated as background.
inline BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool all = true;
      for (const auto& [ox, oy] : se.offsets) {
        const int px = x + ox;
        const int py = y + oy;
        if (!mask.in_bounds(px, py) || !mask.at(px, py)) {
          all = false;
          break;
        }
      }
      out.at(x, y) = all ? 1 : 0;
    }
  }
  return out;
}

inline BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (const auto& [ox, oy] : se.offsets) {
        const int px = x + ox;
        const int py = y + oy;
        if (mask.in_bounds(px, py)) out.at(px, py) = 1;
      }
    }
  }
  return out;
}

/// Opening: erosion followed by dilation. Equals the union of all translates
/// of the structuring element contained in the mask, independent of anchor.
inline BinaryMask morphological_open(const BinaryMask& mask, const StructuringElement& se) {
  return dilate(erode(mask, se), se);
}

}  // namespace mush

#pragma once

// Deterministic image and cloud fixtures shared across test files.

#include <cstdint>

#include "mush/detail/random.hpp"
#include "mush/geometry.hpp"
#include "mush/image.hpp"

namespace fixtures {

inline mush::BinaryMask disk_mask(int w, int h, double cx, double cy, double r) {
  mush::BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(x, y) = 1;
  return m;
}

/// Thin ring: exactly the pixels whose distance from the center rounds to r.
inline mush::BinaryMask ring_mask(int w, int h, int cx, int cy, int r) {
  mush::BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (static_cast<int>(std::lround(std::hypot(x - cx, y - cy))) == r) m.at(x, y) = 1;
  return m;
}

inline mush::ImageGray disk_image(int w, int h, double cx, double cy, double r, double fg,
                                  double bg, double noise_sigma, std::uint64_t seed) {
  mush::detail::Rng rng(seed);
  mush::ImageGray img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool in = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
      double v = in ? fg : bg;
      if (noise_sigma > 0.0) v += rng.gaussian(0.0, noise_sigma);
      img.at(x, y) = std::clamp(v, 0.0, 255.0);
    }
  return img;
}

inline mush::Mat3 random_rotation(mush::detail::Rng& rng, double max_angle_rad) {
  mush::Vec3 axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
  while (axis.norm() < 1e-6) axis = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
  return mush::axis_angle_to_matrix(axis, rng.uniform(0.0, max_angle_rad));
}

}  // namespace fixtures

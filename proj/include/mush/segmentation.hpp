#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mush/errors.hpp"
#include "mush/image.hpp"

namespace mush {

/// Signed implicit surface; phi >= 0 marks the inside of the contour.
struct LevelSetField {
  int width = 0;
  int height = 0;
  std::vector<double> phi;

  LevelSetField() = default;
  LevelSetField(int w, int h, double fill = 0.0)
      : width(w), height(h), phi(static_cast<std::size_t>(w) * h, fill) {}

  static LevelSetField from_mask(const BinaryMask& m) {
    LevelSetField f(m.width, m.height);
    for (std::size_t i = 0; i < m.data.size(); ++i) f.phi[i] = m.data[i] ? 1.0 : -1.0;
    return f;
  }

  double& at(int x, int y) { return phi[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return phi[static_cast<std::size_t>(y) * width + x]; }

  BinaryMask to_mask() const {
    BinaryMask m(width, height);
    for (std::size_t i = 0; i < phi.size(); ++i) m.data[i] = phi[i] >= 0.0 ? 1 : 0;
    return m;
  }
};

enum class CvBackend { pde, morphological };

struct ChanVeseParams {
  double mu = 0.05 * 255.0 * 255.0;  // length weight, small relative to the data terms
  double nu = 0.0;                   // area weight
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double p = 1.0;          // exponent on the length term
  double eps = 1.0;        // Heaviside/Dirac regularization width
  double dt = 0.5;         // explicit time step
  int max_iter = 500;
  double tol = 1e-4;       // stop when the fraction of sign flips per sweep drops below
  CvBackend backend = CvBackend::pde;
};

namespace detail {

inline double heaviside_reg(double z, double eps) {
  return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan(z / eps));
}

inline double dirac_reg(double z, double eps) {
  return (1.0 / std::numbers::pi) * eps / (eps * eps + z * z);
}

// Mean curvature of phi at (x, y), central differences, clamped borders.
inline double curvature_at(const LevelSetField& f, int x, int y) {
  auto v = [&](int px, int py) {
    px = std::clamp(px, 0, f.width - 1);
    py = std::clamp(py, 0, f.height - 1);
    return f.at(px, py);
  };
  const double c = v(x, y);
  const double fx = (v(x + 1, y) - v(x - 1, y)) / 2.0;
  const double fy = (v(x, y + 1) - v(x, y - 1)) / 2.0;
  const double fxx = v(x + 1, y) - 2.0 * c + v(x - 1, y);
  const double fyy = v(x, y + 1) - 2.0 * c + v(x, y - 1);
  const double fxy = (v(x + 1, y + 1) + v(x - 1, y - 1) - v(x + 1, y - 1) - v(x - 1, y + 1)) / 4.0;
  const double g2 = fx * fx + fy * fy;
  return (fxx * fy * fy - 2.0 * fx * fy * fxy + fyy * fx * fx) / (std::pow(g2, 1.5) + 1e-8);
}

inline double gradient_magnitude_at(const LevelSetField& f, int x, int y) {
  auto v = [&](int px, int py) {
    px = std::clamp(px, 0, f.width - 1);
    py = std::clamp(py, 0, f.height - 1);
    return f.at(px, py);
  };
  const double fx = (v(x + 1, y) - v(x - 1, y)) / 2.0;
  const double fy = (v(x, y + 1) - v(x, y - 1)) / 2.0;
  return std::sqrt(fx * fx + fy * fy);
}

}  // namespace detail

/// Region intensity averages: c1 over {phi >= 0}, c2 over {phi < 0}.
/// An empty region inherits the other region's mean.
inline std::pair<double, double> region_means(const ImageGray& img, const LevelSetField& phi) {
  double sum1 = 0.0, sum2 = 0.0;
  std::size_t n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (phi.phi[i] >= 0.0) {
      sum1 += img.data[i];
      ++n1;
    } else {
      sum2 += img.data[i];
      ++n2;
    }
  }
  double c1 = n1 ? sum1 / n1 : 0.0;
  double c2 = n2 ? sum2 / n2 : 0.0;
  if (n1 == 0) c1 = c2;
  if (n2 == 0) c2 = c1;
  return {c1, c2};
}

/// Discrete segmentation energy:
///   mu * (sum dirac_eps(phi) |grad phi|)^p  +  nu * sum heaviside_eps(phi)
///   + lambda1 * sum_{phi>=0} (I - c1)^2     +  lambda2 * sum_{phi<0} (I - c2)^2
/// The data terms use the sharp inside/outside split so that a perfect
/// piecewise-constant partition has zero residual.
inline double chan_vese_energy(const ImageGray& img, const LevelSetField& phi,
                               const ChanVeseParams& params) {
  const auto [c1, c2] = region_means(img, phi);
  double length = 0.0, area = 0.0, data1 = 0.0, data2 = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      const double z = phi.phi[i];
      length += detail::dirac_reg(z, params.eps) * detail::gradient_magnitude_at(phi, x, y);
      area += detail::heaviside_reg(z, params.eps);
      const double v = img.data[i];
      if (z >= 0.0)
        data1 += (v - c1) * (v - c1);
      else
        data2 += (v - c2) * (v - c2);
    }
  }
  return params.mu * std::pow(length, params.p) + params.nu * area + params.lambda1 * data1 +
         params.lambda2 * data2;
}

namespace detail {

inline BinaryMask chan_vese_pde(const ImageGray& img, const BinaryMask& init,
                                const ChanVeseParams& prm) {
  LevelSetField phi = LevelSetField::from_mask(init);
  std::vector<double> next(phi.phi.size());
  const std::size_t total = phi.phi.size();

  for (int iter = 0; iter < prm.max_iter; ++iter) {
    const auto [c1, c2] = region_means(img, phi);
    if (iter == 0 && std::abs(c1 - c2) < 1e-12 && prm.mu == 0.0 && prm.nu == 0.0)
      throw ConstantImageError("chan_vese_evolve: region means coincide and no length/area force");

    // p != 1 scales the length force by p * L^(p-1).
    double mu_eff = prm.mu;
    if (prm.p != 1.0) {
      double length = 0.0;
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          length += dirac_reg(phi.at(x, y), prm.eps) * gradient_magnitude_at(phi, x, y);
      mu_eff = prm.mu * prm.p * std::pow(length, prm.p - 1.0);
    }

    std::size_t flips = 0;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
        const double v = img.data[i];
        const double z = phi.phi[i];
        const double force = mu_eff * curvature_at(phi, x, y) - prm.nu -
                             prm.lambda1 * (v - c1) * (v - c1) +
                             prm.lambda2 * (v - c2) * (v - c2);
        // phi is kept in [-1, 1]; with the +-1 initialization this replaces
        // signed-distance reinitialization and keeps the Dirac factor alive.
        double nz = z + prm.dt * dirac_reg(z, prm.eps) * force;
        nz = std::clamp(nz, -1.0, 1.0);
        next[i] = nz;
        flips += (nz >= 0.0) != (z >= 0.0);
      }
    }
    phi.phi.swap(next);
    if (static_cast<double>(flips) / static_cast<double>(total) < prm.tol) break;
  }
  return phi.to_mask();
}

// Sup of infs over four 3-pixel line segments through each pixel (trims thin
// foreground structure); segments are truncated at the image border.
inline void sup_inf(const BinaryMask& in, BinaryMask& out) {
  static constexpr int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      std::uint8_t best = 0;
      for (const auto& d : dirs) {
        std::uint8_t seg_min = 1;
        for (int s = -1; s <= 1; ++s) {
          const int px = x + s * d[0];
          const int py = y + s * d[1];
          if (!in.in_bounds(px, py)) continue;
          seg_min = std::min<std::uint8_t>(seg_min, in.at(px, py) ? 1 : 0);
        }
        best = std::max(best, seg_min);
        if (best) break;
      }
      out.at(x, y) = best;
    }
  }
}

// Inf of sups (fills thin background structure).
inline void inf_sup(const BinaryMask& in, BinaryMask& out) {
  static constexpr int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      std::uint8_t worst = 1;
      for (const auto& d : dirs) {
        std::uint8_t seg_max = 0;
        for (int s = -1; s <= 1; ++s) {
          const int px = x + s * d[0];
          const int py = y + s * d[1];
          if (!in.in_bounds(px, py)) continue;
          seg_max = std::max<std::uint8_t>(seg_max, in.at(px, py) ? 1 : 0);
        }
        worst = std::min(worst, seg_max);
        if (!worst) break;
      }
      out.at(x, y) = worst;
    }
  }
}

inline BinaryMask chan_vese_morphological(const ImageGray& img, const BinaryMask& init,
                                          const ChanVeseParams& prm) {
  BinaryMask u = init;
  // One SI(IS(.)) smoothing pass per unit of mu, in units of the default mu.
  const double mu_unit = 0.05 * 255.0 * 255.0;
  const int passes = static_cast<int>(std::lround(prm.mu / mu_unit));
  const std::size_t total = u.data.size();

  BinaryMask tmp(u.width, u.height), smoothed(u.width, u.height);
  for (int iter = 0; iter < prm.max_iter; ++iter) {
    LevelSetField f = LevelSetField::from_mask(u);
    const auto [c1, c2] = region_means(img, f);
    if (iter == 0 && std::abs(c1 - c2) < 1e-12 && prm.mu == 0.0 && prm.nu == 0.0)
      throw ConstantImageError("chan_vese_evolve: region means coincide and no length/area force");

    BinaryMask next(u.width, u.height);
    for (std::size_t i = 0; i < total; ++i) {
      const double v = img.data[i];
      const double inside_cost = prm.lambda1 * (v - c1) * (v - c1) + prm.nu;
      const double outside_cost = prm.lambda2 * (v - c2) * (v - c2);
      next.data[i] = inside_cost < outside_cost ? 1 : (inside_cost > outside_cost ? 0 : u.data[i]);
    }
    for (int s = 0; s < passes; ++s) {
      inf_sup(next, tmp);
      sup_inf(tmp, smoothed);
      next.data.swap(smoothed.data);
    }

    std::size_t flips = 0;
    for (std::size_t i = 0; i < total; ++i) flips += next.data[i] != u.data[i];
    u.data.swap(next.data);
    if (static_cast<double>(flips) / static_cast<double>(total) < prm.tol) break;
  }
  return u;
}

}  // namespace detail

/// Two-phase active-contour segmentation from a binary initialization.
/// The PDE backend runs explicit gradient descent on the level-set energy;
/// the morphological backend alternates data-driven pixel flips with
/// sup-inf/inf-sup smoothing. Both return the foreground indicator.
inline BinaryMask chan_vese_evolve(const ImageGray& img, const BinaryMask& init,
                                   const ChanVeseParams& params = {}) {
  if (img.width != init.width || img.height != init.height)
    throw Error("chan_vese_evolve: image/mask shape mismatch");
  if (params.backend == CvBackend::pde) return detail::chan_vese_pde(img, init, params);
  return detail::chan_vese_morphological(img, init, params);
}

}  // namespace mush

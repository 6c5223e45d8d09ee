#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mush/detail/random.hpp"
#include "mush/errors.hpp"
#include "mush/features.hpp"
#include "mush/geometry.hpp"
#include "mush/pointcloud.hpp"

namespace mush {

struct RegistrationResult {
  RigidTransform transform;  // maps source points into the target frame
  double fitness = 0.0;      // fraction of source points with an inlier correspondence
  double inlier_rmse = 0.0;
  int iterations = 0;
  std::vector<double> objective_history;
};

namespace detail {

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

inline Mat3 rodrigues(const Vec3& w) {
  const double th = w.norm();
  if (th < 1e-12) return Mat3::Identity() + skew(w);
  return Eigen::AngleAxisd(th, w / th).toRotationMatrix();
}

/// Least-squares rigid fit of paired points (Kabsch/Umeyama, no scale).
/// The sign guard on the smallest singular direction rules out reflections.
inline RigidTransform fit_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt) {
  if (src.size() != tgt.size() || src.size() < 3)
    throw InsufficientCorrespondencesError("fit_rigid: need at least 3 paired points");
  Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    ct += tgt[i];
  }
  cs /= static_cast<double>(src.size());
  ct /= static_cast<double>(src.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (tgt[i] - ct).transpose();
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform out;
  out.R = svd.matrixV() * d * svd.matrixU().transpose();
  out.t = ct - out.R * cs;
  return out;
}

struct FitnessRmse {
  double fitness = 0.0;
  double rmse = 0.0;
};

inline FitnessRmse evaluate_alignment(const PointCloud& source, const KdTree3& target_tree,
                                      const RigidTransform& T, double max_dist) {
  std::size_t inliers = 0;
  double sq = 0.0;
  for (const Vec3& p : source.points) {
    const Vec3 tp = T.apply(p);
    const int j = target_tree.nearest(tp);
    const double d2 = (target_tree.points()[j] - tp).squaredNorm();
    if (d2 <= max_dist * max_dist) {
      ++inliers;
      sq += d2;
    }
  }
  FitnessRmse r;
  if (!source.points.empty()) r.fitness = static_cast<double>(inliers) / source.points.size();
  if (inliers) r.rmse = std::sqrt(sq / static_cast<double>(inliers));
  return r;
}

/// Center of the least-squares sphere through the points (linear system in
/// the center and the radius offset). False when the solve is unusable.
inline bool fit_sphere_center(const std::vector<Vec3>& pts, Vec3& center) {
  if (pts.size() < 4) return false;
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (const Vec3& p : pts) {
    const Eigen::Vector4d a(2.0 * p.x(), 2.0 * p.y(), 2.0 * p.z(), 1.0);
    m += a * a.transpose();
    rhs += a * p.squaredNorm();
  }
  const Eigen::Vector4d sol = m.ldlt().solve(rhs);
  if (!sol.allFinite()) return false;
  center = sol.head<3>();
  return true;
}

/// Coarse alignment seed that needs no features: each cloud's symmetry axis
/// is the direction from its fitted sphere center to its centroid (the
/// centroid sits on the patch side, which fixes the sign), and the seed
/// rotates one axis onto the other and aligns the centroids. Identity when
/// either fit degenerates.
inline RigidTransform axis_align_seed(const PointCloud& source, const PointCloud& target) {
  RigidTransform T;
  Vec3 cs, ct;
  if (!fit_sphere_center(source.points, cs) || !fit_sphere_center(target.points, ct)) return T;
  Vec3 ms = Vec3::Zero(), mt = Vec3::Zero();
  for (const Vec3& p : source.points) ms += p;
  ms /= static_cast<double>(source.points.size());
  for (const Vec3& p : target.points) mt += p;
  mt /= static_cast<double>(target.points.size());
  Vec3 u = ms - cs, v = mt - ct;
  if (u.norm() < 1e-12 || v.norm() < 1e-12) return T;
  u.normalize();
  v.normalize();
  const Vec3 ax = u.cross(v);
  const double s = ax.norm(), c = u.dot(v);
  if (s < 1e-12) {
    if (c < 0.0) {
      Vec3 perp = u.cross(Vec3::UnitX());
      if (perp.norm() < 1e-6) perp = u.cross(Vec3::UnitY());
      T.R = Eigen::AngleAxisd(std::numbers::pi, perp.normalized()).toRotationMatrix();
    }
  } else {
    T.R = Eigen::AngleAxisd(std::atan2(s, c), ax / s).toRotationMatrix();
  }
  T.t = mt - T.R * ms;
  return T;
}

}  // namespace detail

struct GlobalRegParams {
  int max_iter = 64;
  int iters_per_level = 4;      // Gauss-Newton steps before the scale anneals
  double division_factor = 2.0;
  double tuple_scale = 0.9;     // admissible edge-length ratio in the tuple test
  int max_tuples = 300;
  std::uint64_t seed = 0;
};

/// Feature-based coarse alignment: nearest-neighbor FPFH matches from both
/// directions are pruned with a random length-ratio tuple test, then a rigid
/// transform is estimated by graduated non-convexity on the scaled
/// Geman-McClure cost.
/// The scale starts at the squared source extent and anneals down to the
/// squared voxel size, so early iterations see a nearly quadratic problem.
/// On rotationally symmetric surfaces the features carry no orientation
/// signal at all, so the optimizer is seeded with a geometric sphere-axis
/// alignment, and its output is kept only when it explains the surfaces at
/// least as well as that seed (measured as inlier fitness, then rmse, at the
/// voxel scale).
inline RegistrationResult global_register(const PointCloud& source, const PointCloud& target,
                                          const std::vector<Fpfh33>& source_features,
                                          const std::vector<Fpfh33>& target_features,
                                          double voxel_size,
                                          const GlobalRegParams& params = {}) {
  if (source.points.empty() || target.points.empty())
    throw EmptyCloudError("global_register: empty cloud");
  if (source_features.size() != source.points.size() ||
      target_features.size() != target.points.size())
    throw Error("global_register: feature count does not match point count");
  if (voxel_size <= 0.0) throw Error("global_register: voxel_size must be positive");

  auto feat_dist2 = [](const Fpfh33& a, const Fpfh33& b) {
    double s = 0.0;
    for (int i = 0; i < 33; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  auto nearest_feature = [&](const Fpfh33& f, const std::vector<Fpfh33>& pool) {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const double d = feat_dist2(f, pool[j]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    return best;
  };

  std::vector<int> s2t(source.points.size());
  for (std::size_t i = 0; i < source.points.size(); ++i)
    s2t[i] = nearest_feature(source_features[i], target_features);
  std::vector<int> t2s(target.points.size());
  for (std::size_t j = 0; j < target.points.size(); ++j)
    t2s[j] = nearest_feature(target_features[j], source_features);

  // Candidate pool: nearest-neighbor matches from both directions. Mutual
  // pairs enter once. Reciprocity alone is not required: on rotationally
  // symmetric surfaces the features collapse onto a curve, reciprocal pairs
  // all but vanish, and the tuple test below is what actually prunes.
  std::vector<std::pair<int, int>> pool;
  pool.reserve(source.points.size() + target.points.size());
  for (std::size_t i = 0; i < source.points.size(); ++i)
    pool.emplace_back(static_cast<int>(i), s2t[i]);
  for (std::size_t j = 0; j < target.points.size(); ++j)
    if (s2t[t2s[j]] != static_cast<int>(j))
      pool.emplace_back(t2s[j], static_cast<int>(j));
  {
    std::vector<char> seen_s(source.points.size(), 0), seen_t(target.points.size(), 0);
    for (const auto& [si, ti] : pool) {
      seen_s[si] = 1;
      seen_t[ti] = 1;
    }
    const auto distinct = [](const std::vector<char>& v) {
      return std::count(v.begin(), v.end(), char(1));
    };
    if (distinct(seen_s) < 3 || distinct(seen_t) < 3)
      throw InsufficientCorrespondencesError("global_register: fewer than 3 usable matches");
  }

  // Tuple test: keep matches that appear in a random triple whose pairwise
  // distances agree between the two clouds within the tuple scale.
  std::vector<std::pair<int, int>> corr;
  {
    detail::Rng rng(params.seed);
    const double lo = params.tuple_scale, hi = 1.0 / params.tuple_scale;
    const int n = static_cast<int>(pool.size());
    const long trials = std::min<long>(100L * n, 100000L);
    int accepted = 0;
    for (long t = 0; t < trials && accepted < params.max_tuples; ++t) {
      const int a = rng.uniform_int(0, n - 1);
      const int b = rng.uniform_int(0, n - 1);
      const int c = rng.uniform_int(0, n - 1);
      if (a == b || b == c || a == c) continue;
      bool ok = true;
      const int tri[3] = {a, b, c};
      for (int e = 0; e < 3 && ok; ++e) {
        const auto& [s0, t0] = pool[tri[e]];
        const auto& [s1, t1] = pool[tri[(e + 1) % 3]];
        const double ds = (source.points[s0] - source.points[s1]).norm();
        const double dt = (target.points[t0] - target.points[t1]).norm();
        if (dt < 1e-12 || ds < lo * dt || ds > hi * dt) ok = false;
      }
      if (ok) {
        for (int e = 0; e < 3; ++e) corr.push_back(pool[tri[e]]);
        ++accepted;
      }
    }
    if (corr.size() < 3) corr = pool;  // degenerate geometry; fall back to raw matches
  }

  Vec3 min_p = source.points[0], max_p = source.points[0];
  for (const Vec3& p : source.points) {
    min_p = min_p.cwiseMin(p);
    max_p = max_p.cwiseMax(p);
  }
  double mu = (max_p - min_p).squaredNorm();
  const double mu_floor = voxel_size * voxel_size;
  mu = std::max(mu, mu_floor);

  const RigidTransform seed = detail::axis_align_seed(source, target);

  RegistrationResult result;
  RigidTransform T = seed;
  for (int iter = 0; iter < params.max_iter; ++iter) {
    if (iter > 0 && iter % params.iters_per_level == 0)
      mu = std::max(mu / params.division_factor, mu_floor);

    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    double objective = 0.0;
    for (const auto& [si, ti] : corr) {
      const Vec3 x = T.apply(source.points[si]);
      const Vec3 e = x - target.points[ti];
      const double r2 = e.squaredNorm();
      const double l = (mu / (mu + r2)) * (mu / (mu + r2));
      objective += mu * r2 / (mu + r2);
      Eigen::Matrix<double, 3, 6> J;
      J.leftCols<3>() = -detail::skew(x);
      J.rightCols<3>() = Mat3::Identity();
      H += l * J.transpose() * J;
      g += l * J.transpose() * e;
    }
    result.objective_history.push_back(objective);

    const Eigen::Matrix<double, 6, 1> xi = H.ldlt().solve(-g);
    if (!xi.allFinite()) break;
    const Mat3 R_inc = detail::rodrigues(xi.head<3>());
    T.R = R_inc * T.R;
    T.t = R_inc * T.t + xi.tail<3>();
    result.iterations = iter + 1;
    if (xi.norm() < 1e-12 && mu <= mu_floor) break;
  }

  const KdTree3 target_tree(target.points);
  const auto fr_gnc = detail::evaluate_alignment(source, target_tree, T, voxel_size);
  const auto fr_seed = detail::evaluate_alignment(source, target_tree, seed, voxel_size);
  const bool keep_gnc = fr_gnc.fitness > fr_seed.fitness ||
                        (fr_gnc.fitness == fr_seed.fitness && fr_gnc.rmse <= fr_seed.rmse);
  result.transform = keep_gnc ? T : seed;
  result.fitness = keep_gnc ? fr_gnc.fitness : fr_seed.fitness;
  result.inlier_rmse = keep_gnc ? fr_gnc.rmse : fr_seed.rmse;
  return result;
}

struct IcpParams {
  double max_corr_dist = 0.01;
  int max_iter = 30;
  double rel_tol = 1e-6;  // relative objective decrease treated as converged
};

namespace detail {

struct IcpCorr {
  std::vector<int> src;
  std::vector<int> tgt;
};

inline IcpCorr icp_correspondences(const PointCloud& source, const KdTree3& target_tree,
                                   const RigidTransform& T, double max_dist) {
  IcpCorr k;
  for (std::size_t i = 0; i < source.points.size(); ++i) {
    const Vec3 tp = T.apply(source.points[i]);
    const int j = target_tree.nearest(tp);
    if ((target_tree.points()[j] - tp).squaredNorm() <= max_dist * max_dist) {
      k.src.push_back(static_cast<int>(i));
      k.tgt.push_back(j);
    }
  }
  return k;
}

template <typename Objective, typename Solve>
RegistrationResult icp_loop(const PointCloud& source, const PointCloud& target,
                            const RigidTransform& init, const IcpParams& prm,
                            Objective&& objective, Solve&& solve) {
  if (source.points.empty() || target.points.empty())
    throw EmptyCloudError("icp: empty cloud");
  const KdTree3 target_tree(target.points);

  RegistrationResult result;
  RigidTransform T = init;
  RigidTransform T_prev = init;
  double fit_prev = -1.0, rmse_prev = -1.0;
  for (int k = 0;; ++k) {
    const IcpCorr corr = icp_correspondences(source, target_tree, T, prm.max_corr_dist);
    if (corr.src.empty())
      throw NoCorrespondencesError("icp: no correspondences within max_corr_dist");
    const double e = objective(corr, T);
    if (!result.objective_history.empty() &&
        e > result.objective_history.back() * (1.0 + 1e-12)) {
      // A linearized refit can overshoot once the correspondence set shifts
      // underneath it. Keep the previous iterate so the recorded objective
      // never increases.
      T = T_prev;
      break;
    }
    result.objective_history.push_back(e);

    double sq = 0.0;
    for (std::size_t i = 0; i < corr.src.size(); ++i)
      sq += (T.apply(source.points[corr.src[i]]) - target.points[corr.tgt[i]]).squaredNorm();
    const double fit = static_cast<double>(corr.src.size()) / source.points.size();
    const double rmse = std::sqrt(sq / static_cast<double>(corr.src.size()));
    if (k > 0) {
      const auto rel = [](double now, double prev) {
        return std::abs(now - prev) / std::max(prev, 1e-30);
      };
      if (rel(fit, fit_prev) < prm.rel_tol && rel(rmse, rmse_prev) < prm.rel_tol) break;
    }
    fit_prev = fit;
    rmse_prev = rmse;
    if (k >= prm.max_iter) break;
    T_prev = T;
    T = solve(corr, T);
  }

  result.transform = T;
  result.iterations = static_cast<int>(result.objective_history.size()) - 1;
  const auto fr = evaluate_alignment(source, target_tree, T, prm.max_corr_dist);
  result.fitness = fr.fitness;
  result.inlier_rmse = fr.rmse;
  return result;
}

}  // namespace detail

/// Iterative closest point with the point-to-point cost |T(p) - q|^2 over
/// matches, minimized in closed form each sweep. The recorded objective is
/// the mean over all source points of the squared nearest-target distance
/// saturated at the cutoff: re-matching can only lower each term, the SVD
/// refit can only lower the matched sum, and unmatched points stay capped,
/// so the sequence is non-increasing even as the matched set grows.
inline RegistrationResult icp_point_to_point(const PointCloud& source, const PointCloud& target,
                                             const RigidTransform& init = {},
                                             const IcpParams& params = {}) {
  return detail::icp_loop(
      source, target, init, params,
      [&](const detail::IcpCorr& corr, const RigidTransform& T) {
        const double cap = params.max_corr_dist * params.max_corr_dist;
        double e = static_cast<double>(source.points.size() - corr.src.size()) * cap;
        for (std::size_t i = 0; i < corr.src.size(); ++i)
          e += (T.apply(source.points[corr.src[i]]) - target.points[corr.tgt[i]]).squaredNorm();
        return e / static_cast<double>(source.points.size());
      },
      [&](const detail::IcpCorr& corr, const RigidTransform&) {
        std::vector<Vec3> s, t;
        s.reserve(corr.src.size());
        t.reserve(corr.src.size());
        for (std::size_t i = 0; i < corr.src.size(); ++i) {
          s.push_back(source.points[corr.src[i]]);
          t.push_back(target.points[corr.tgt[i]]);
        }
        return detail::fit_rigid(s, t);
      });
}

/// ICP with the point-to-plane cost sum of ((T(p) - q) . n_q)^2; one
/// linearized Gauss-Newton step per sweep. Requires target normals.
inline RegistrationResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                                             const RigidTransform& init = {},
                                             const IcpParams& params = {}) {
  if (!target.has_normals()) throw Error("icp_point_to_plane: target cloud has no normals");
  return detail::icp_loop(
      source, target, init, params,
      [&](const detail::IcpCorr& corr, const RigidTransform& T) {
        double e = 0.0;
        for (std::size_t i = 0; i < corr.src.size(); ++i) {
          const double d = (T.apply(source.points[corr.src[i]]) - target.points[corr.tgt[i]])
                               .dot(target.normals[corr.tgt[i]]);
          e += d * d;
        }
        return e;
      },
      [&](const detail::IcpCorr& corr, const RigidTransform& T) {
        Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        for (std::size_t i = 0; i < corr.src.size(); ++i) {
          const Vec3 x = T.apply(source.points[corr.src[i]]);
          const Vec3& n = target.normals[corr.tgt[i]];
          const double e = (x - target.points[corr.tgt[i]]).dot(n);
          Eigen::Matrix<double, 6, 1> J;
          J.head<3>() = x.cross(n);
          J.tail<3>() = n;
          H += J * J.transpose();
          g += J * e;
        }
        const Eigen::Matrix<double, 6, 1> xi = H.ldlt().solve(-g);
        RigidTransform out = T;
        if (xi.allFinite()) {
          const Mat3 R_inc = detail::rodrigues(xi.head<3>());
          out.R = R_inc * T.R;
          out.t = R_inc * T.t + xi.tail<3>();
        }
        return out;
      });
}

struct PoseParams {
  double voxel_size = 0.002;
  int normal_knn = 30;
  double feature_radius_factor = 5.0;  // FPFH radius in voxels
  double icp_dist_factor = 1.5;        // ICP correspondence cutoff in voxels
  int icp_max_iter = 30;
  Vec3 model_up = Vec3(0, 0, 1);
  GlobalRegParams global;
};

struct PoseEstimate {
  RigidTransform transform;  // model frame -> sample frame
  Quaternion rotation;
  Vec3 normal;               // model up axis carried through the rotation
  RegistrationResult global;
  RegistrationResult icp;
};

/// Full model-to-sample alignment: voxel downsample, estimate normals,
/// match FPFH features for a coarse transform, then refine with
/// point-to-point ICP on the original clouds.
inline PoseEstimate estimate_pose(const PointCloud& model, const PointCloud& sample,
                                  const PoseParams& params = {}) {
  const double v = params.voxel_size;
  PointCloud model_down = voxel_downsample(model, v);
  PointCloud sample_down = voxel_downsample(sample, v);
  model_down = estimate_normals(model_down, params.normal_knn);
  sample_down = estimate_normals(sample_down, params.normal_knn);

  const auto model_feat = compute_fpfh(model_down, params.feature_radius_factor * v);
  const auto sample_feat = compute_fpfh(sample_down, params.feature_radius_factor * v);

  PoseEstimate est;
  est.global =
      global_register(model_down, sample_down, model_feat, sample_feat, v, params.global);

  IcpParams icp_params;
  icp_params.max_corr_dist = params.icp_dist_factor * v;
  icp_params.max_iter = params.icp_max_iter;
  est.icp = icp_point_to_point(model, sample, est.global.transform, icp_params);

  est.transform = est.icp.transform;
  est.rotation = rotation_to_quaternion(est.transform.R);
  est.normal = cap_normal(est.transform.R, params.model_up);
  return est;
}

}  // namespace mush

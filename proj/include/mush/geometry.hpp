#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "mush/errors.hpp"

namespace mush {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }

  /// this ∘ other: apply `other` first, then this.
  RigidTransform compose(const RigidTransform& other) const {
    return {R * other.R, R * other.t + t};
  }

  RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
};

/// Unit quaternion, serialized as [qx, qy, qz, qw].
struct Quaternion {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
};

inline bool is_rotation(const Mat3& R, double tol = 1e-6) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

/// Rotation matrix -> unit quaternion with qw >= 0, via the largest-pivot
/// (Shepperd) branch so the division is always well conditioned.
inline Quaternion rotation_to_quaternion(const Mat3& R) {
  if (!is_rotation(R)) throw NotARotationError("rotation_to_quaternion: input is not a rotation");
  Quaternion q;
  const double tr = R.trace();
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (R(2, 1) - R(1, 2)) / s;
    q.y = (R(0, 2) - R(2, 0)) / s;
    q.z = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    const double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2.0;
    q.w = (R(2, 1) - R(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (R(0, 1) + R(1, 0)) / s;
    q.z = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) > R(2, 2)) {
    const double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2.0;
    q.w = (R(0, 2) - R(2, 0)) / s;
    q.x = (R(0, 1) + R(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (R(1, 2) + R(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2.0;
    q.w = (R(1, 0) - R(0, 1)) / s;
    q.x = (R(0, 2) + R(2, 0)) / s;
    q.y = (R(1, 2) + R(2, 1)) / s;
    q.z = 0.25 * s;
  }
  const double n = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w);
  q.x /= n;
  q.y /= n;
  q.z /= n;
  q.w /= n;
  if (q.w < 0.0) {
    q.x = -q.x;
    q.y = -q.y;
    q.z = -q.z;
    q.w = -q.w;
  }
  return q;
}

inline Mat3 quaternion_to_matrix(const Quaternion& q) {
  const double n = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w);
  if (n < 1e-12) throw ZeroMagnitudeError("quaternion_to_matrix: zero quaternion");
  const double x = q.x / n, y = q.y / n, z = q.z / n, w = q.w / n;
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
      2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
      2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return R;
}

inline Mat3 axis_angle_to_matrix(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n < 1e-12) throw ZeroVectorError("axis_angle_to_matrix: zero axis");
  return Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix();
}

/// Angle between two vectors in degrees, via the clamped normalized dot.
inline double angle_between(const Vec3& a, const Vec3& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) throw ZeroVectorError("angle_between: zero-length input");
  const double d = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(d) * 180.0 / std::numbers::pi;
}

/// Direction the model's up axis points after applying rotation R.
inline Vec3 cap_normal(const Mat3& R, const Vec3& model_up) {
  const double n = model_up.norm();
  if (n < 1e-12) throw ZeroVectorError("cap_normal: zero model up axis");
  return (R * (model_up / n)).normalized();
}

}  // namespace mush

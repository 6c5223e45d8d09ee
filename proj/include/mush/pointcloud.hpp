#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "mush/errors.hpp"
#include "mush/geometry.hpp"

namespace mush {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }
};

/// Static 3-d kd-tree over a copy of the input points. Neighbor queries order
/// ties by point index, so results do not depend on tree construction order.
class KdTree3 {
 public:
  KdTree3() = default;

  explicit KdTree3(std::vector<Vec3> pts) : pts_(std::move(pts)), order_(pts_.size()) {
    std::iota(order_.begin(), order_.end(), 0);
    if (!pts_.empty()) build(0, static_cast<int>(pts_.size()), 0);
  }

  explicit KdTree3(const PointCloud& cloud) : KdTree3(cloud.points) {}

  const std::vector<Vec3>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }

  int nearest(const Vec3& q) const {
    if (pts_.empty()) throw EmptyCloudError("KdTree3::nearest: empty tree");
    return knn(q, 1)[0];
  }

  /// Up to k nearest neighbors, sorted by (squared distance, index).
  std::vector<int> knn(const Vec3& q, int k) const {
    if (k <= 0 || pts_.empty()) return {};
    // Max-heap of (d2, idx); lexicographic order makes equal-distance ties stable.
    std::priority_queue<std::pair<double, int>> heap;
    knn_rec(q, k, 0, static_cast<int>(pts_.size()), 0, heap);
    std::vector<std::pair<double, int>> flat;
    flat.reserve(heap.size());
    while (!heap.empty()) {
      flat.push_back(heap.top());
      heap.pop();
    }
    std::sort(flat.begin(), flat.end());
    std::vector<int> out;
    out.reserve(flat.size());
    for (const auto& [d2, i] : flat) out.push_back(i);
    return out;
  }

  /// All points within `radius` of q, sorted by (squared distance, index).
  std::vector<int> radius_search(const Vec3& q, double radius) const {
    std::vector<std::pair<double, int>> found;
    if (!pts_.empty() && radius >= 0.0)
      radius_rec(q, radius * radius, 0, static_cast<int>(pts_.size()), 0, found);
    std::sort(found.begin(), found.end());
    std::vector<int> out;
    out.reserve(found.size());
    for (const auto& [d2, i] : found) out.push_back(i);
    return out;
  }

 private:
  // Implicit layout: the node for range [lo, hi) sits at the median slot
  // mid = (lo + hi) / 2 of order_, children own [lo, mid) and [mid+1, hi).
  void build(int lo, int hi, int depth) {
    if (hi - lo <= 1) return;
    const int mid = (lo + hi) / 2;
    const int axis = depth % 3;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                       return a < b;
                     });
    build(lo, mid, depth + 1);
    build(mid + 1, hi, depth + 1);
  }

  void knn_rec(const Vec3& q, int k, int lo, int hi, int depth,
               std::priority_queue<std::pair<double, int>>& heap) const {
    if (lo >= hi) return;
    const int mid = (lo + hi) / 2;
    const int idx = order_[mid];
    const double d2 = (pts_[idx] - q).squaredNorm();
    const std::pair<double, int> cand{d2, idx};
    if (static_cast<int>(heap.size()) < k)
      heap.push(cand);
    else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
    const int axis = depth % 3;
    const double delta = q[axis] - pts_[idx][axis];
    const bool left_first = delta < 0.0;
    const auto visit = [&](bool left) {
      if (left)
        knn_rec(q, k, lo, mid, depth + 1, heap);
      else
        knn_rec(q, k, mid + 1, hi, depth + 1, heap);
    };
    visit(left_first);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().first)
      visit(!left_first);
  }

  void radius_rec(const Vec3& q, double r2, int lo, int hi, int depth,
                  std::vector<std::pair<double, int>>& found) const {
    if (lo >= hi) return;
    const int mid = (lo + hi) / 2;
    const int idx = order_[mid];
    const double d2 = (pts_[idx] - q).squaredNorm();
    if (d2 <= r2) found.emplace_back(d2, idx);
    const int axis = depth % 3;
    const double delta = q[axis] - pts_[idx][axis];
    if (delta < 0.0 || delta * delta <= r2) radius_rec(q, r2, lo, mid, depth + 1, found);
    if (delta > 0.0 || delta * delta <= r2) radius_rec(q, r2, mid + 1, hi, depth + 1, found);
  }

  std::vector<Vec3> pts_;
  std::vector<int> order_;
};

/// Grid average: points sharing a voxel cell collapse to their centroid.
/// Output is ordered by voxel key, so equal inputs give equal outputs.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (voxel_size <= 0.0) throw Error("voxel_downsample: voxel_size must be positive");
  struct Acc {
    Vec3 p = Vec3::Zero();
    Vec3 n = Vec3::Zero();
    int count = 0;
  };
  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, Acc> cells;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const auto key = std::make_tuple(static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                                     static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                                     static_cast<std::int64_t>(std::floor(p.z() / voxel_size)));
    Acc& a = cells[key];
    a.p += p;
    if (cloud.has_normals()) a.n += cloud.normals[i];
    a.count += 1;
  }
  PointCloud out;
  out.points.reserve(cells.size());
  if (cloud.has_normals()) out.normals.reserve(cells.size());
  for (const auto& [key, a] : cells) {
    out.points.push_back(a.p / a.count);
    if (cloud.has_normals()) {
      const double n = a.n.norm();
      out.normals.push_back(n > 1e-12 ? Vec3(a.n / n) : Vec3::Zero());
    }
  }
  return out;
}

/// Per-point unit normals from the covariance of the k-nearest neighborhood,
/// oriented toward the viewpoint (sensor origin by default).
inline PointCloud estimate_normals(const PointCloud& cloud, int knn,
                                   const Vec3& viewpoint = Vec3::Zero()) {
  if (cloud.points.empty()) throw EmptyCloudError("estimate_normals: empty cloud");
  if (knn < 3) throw Error("estimate_normals: need knn >= 3");
  const KdTree3 tree(cloud.points);
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto nbrs = tree.knn(cloud.points[i], knn);
    if (nbrs.size() < 3)
      throw DegenerateNeighborhoodError("estimate_normals: fewer than 3 neighbors");
    Vec3 mean = Vec3::Zero();
    for (int j : nbrs) mean += cloud.points[j];
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (int j : nbrs) {
      const Vec3 d = cloud.points[j] - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    if (evals[2] <= 0.0 || evals[1] <= 1e-12 * evals[2])
      throw DegenerateNeighborhoodError("estimate_normals: collinear neighborhood");
    Vec3 n = eig.eigenvectors().col(0);
    if (n.dot(viewpoint - cloud.points[i]) < 0.0) n = -n;
    out.normals[i] = n.normalized();
  }
  return out;
}

}  // namespace mush

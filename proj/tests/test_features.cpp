#include <catch2/catch_amalgamated.hpp>

#include "mush/detail/random.hpp"
#include "mush/features.hpp"
#include "mush/geometry.hpp"
#include "support/fixtures.hpp"

using namespace mush;

namespace {

PointCloud noisy_patch(std::uint64_t seed, int n = 120) {
  detail::Rng rng(seed);
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-0.05, 0.05);
    const double y = rng.uniform(-0.05, 0.05);
    c.points.emplace_back(x, y, 0.02 * std::sin(40.0 * x) + 0.01 * y * y);
  }
  return estimate_normals(c, 10);
}

}  // namespace

TEST_CASE("descriptor blocks each sum to 100") {
  const PointCloud c = noisy_patch(3);
  const auto feats = compute_fpfh(c, 0.02);
  REQUIRE(feats.size() == c.points.size());
  for (const auto& f : feats) {
    for (int block = 0; block < 3; ++block) {
      double sum = 0.0;
      for (int b = 0; b < 11; ++b) sum += f[block * 11 + b];
      CHECK(sum == Catch::Approx(100.0).margin(1e-9));
    }
    for (double v : f) CHECK(v >= 0.0);
  }
}

TEST_CASE("descriptors are invariant to rigid motion") {
  const PointCloud c = noisy_patch(9);
  RigidTransform t;
  t.R = axis_angle_to_matrix(Vec3(0.3, -1.0, 0.7), 1.1);
  t.t = {0.4, -0.2, 0.9};
  PointCloud moved;
  moved.points.reserve(c.points.size());
  moved.normals.reserve(c.normals.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    moved.points.push_back(t.apply(c.points[i]));
    moved.normals.push_back(t.R * c.normals[i]);
  }
  const auto fa = compute_fpfh(c, 0.02);
  const auto fb = compute_fpfh(moved, 0.02);
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (int b = 0; b < 33; ++b) CHECK(fa[i][b] == Catch::Approx(fb[i][b]).margin(1e-6));
}

TEST_CASE("two coplanar points with parallel normals fill the middle bins") {
  // For a pair along +X with both normals +Z the Darboux angles are all zero,
  // which is the center (6th of 11) bin of every block.
  PointCloud c;
  c.points = {{0, 0, 0}, {0.01, 0, 0}};
  c.normals = {{0, 0, 1}, {0, 0, 1}};
  const auto f = compute_fpfh(c, 0.05);
  for (const auto& d : f) {
    CHECK(d[5] == Catch::Approx(100.0).margin(1e-9));
    CHECK(d[11 + 5] == Catch::Approx(100.0).margin(1e-9));
    CHECK(d[22 + 5] == Catch::Approx(100.0).margin(1e-9));
  }
}

TEST_CASE("isolated points get an all-zero descriptor") {
  PointCloud c;
  c.points = {{0, 0, 0}, {10, 0, 0}};
  c.normals = {{0, 0, 1}, {0, 0, 1}};
  const auto f = compute_fpfh(c, 0.5);
  for (const auto& d : f)
    for (double v : d) CHECK(v == 0.0);
}

TEST_CASE("feature input validation") {
  PointCloud no_normals;
  no_normals.points = {{0, 0, 0}};
  CHECK_THROWS_AS(compute_fpfh(no_normals, 0.1), Error);
  CHECK_THROWS_AS(compute_fpfh(PointCloud{}, 0.1), EmptyCloudError);
  PointCloud c;
  c.points = {{0, 0, 0}};
  c.normals = {{0, 0, 1}};
  CHECK_THROWS_AS(compute_fpfh(c, 0.0), Error);
}

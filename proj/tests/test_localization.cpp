#include <catch2/catch_amalgamated.hpp>

#include "mush/localization.hpp"

using namespace mush;

namespace {

const CameraIntrinsics kIntr{600.0, 600.0, 319.5, 239.5, 640, 480, 0.001};

DepthImage flat_depth(int w, int h, std::uint16_t raw) {
  DepthImage d(w, h);
  for (auto& v : d.data) v = raw;
  return d;
}

}  // namespace

TEST_CASE("deprojection inverts the pinhole model") {
  const Vec3 p = deproject(kIntr, kIntr.cx, kIntr.cy, 0.5);
  CHECK((p - Vec3(0, 0, 0.5)).norm() <= 1e-12);
  // One focal length off-center maps to X = Z.
  const Vec3 q = deproject(kIntr, kIntr.cx + kIntr.fx, kIntr.cy, 0.5);
  CHECK(q.x() == Catch::Approx(0.5).margin(1e-12));
  CHECK(q.z() == Catch::Approx(0.5).margin(1e-12));
  CHECK_THROWS_AS(deproject(kIntr, 0, 0, 0.0), NonPositiveDepthError);
  CHECK_THROWS_AS(deproject(kIntr, 0, 0, -1.0), NonPositiveDepthError);
}

TEST_CASE("depth lookup without a hole reads the pixel directly") {
  const DepthImage d = flat_depth(64, 64, 450);
  CameraIntrinsics intr = kIntr;
  intr.width = intr.height = 64;
  const FillResult r = depth_at_with_fill(d, intr, 31.6, 32.4, 5);
  CHECK_FALSE(r.fill_used);
  CHECK(r.z == Catch::Approx(0.450).margin(1e-12));
  REQUIRE(r.source_pixels.size() == 1);
  CHECK(r.source_pixels[0] == std::make_pair(32, 32));  // rounded center
}

TEST_CASE("hole filling averages the nearest valid ring") {
  DepthImage d = flat_depth(32, 32, 400);
  d.at(16, 16) = 0;
  SECTION("all four distance-1 neighbors") {
    d.at(15, 16) = 398;
    d.at(17, 16) = 402;
    d.at(16, 15) = 399;
    d.at(16, 17) = 401;
    const FillResult r = depth_at_with_fill(d, kIntr, 16, 16, 5);
    CHECK(r.fill_used);
    CHECK(r.source_pixels.size() == 4);
    CHECK(r.z == Catch::Approx(0.400).margin(1e-12));
  }
  SECTION("partial ring still averages only the valid members") {
    d.at(15, 16) = 0;
    d.at(16, 15) = 0;
    d.at(17, 16) = 410;
    d.at(16, 17) = 420;
    const FillResult r = depth_at_with_fill(d, kIntr, 16, 16, 5);
    CHECK(r.fill_used);
    CHECK(r.source_pixels.size() == 2);
    CHECK(r.z == Catch::Approx(0.415).margin(1e-12));
  }
}

TEST_CASE("ring order is euclidean, not chessboard") {
  DepthImage d(32, 32);  // all missing
  d.at(17, 17) = 500;    // distance sqrt(2) from (16,16)
  d.at(18, 16) = 300;    // distance 2
  const FillResult r = depth_at_with_fill(d, kIntr, 16, 16, 5);
  CHECK(r.fill_used);
  REQUIRE(r.source_pixels.size() == 1);
  CHECK(r.source_pixels[0] == std::make_pair(17, 17));
  CHECK(r.z == Catch::Approx(0.500).margin(1e-12));
}

TEST_CASE("missing depth beyond the search radius throws") {
  DepthImage d(32, 32);
  d.at(30, 30) = 100;
  CHECK_THROWS_AS(depth_at_with_fill(d, kIntr, 5, 5, 3), MissingDepthError);
}

TEST_CASE("localize reports the deprojected position and its norm") {
  DepthImage d = flat_depth(640, 480, 450);
  Circle c{400.0, 300.0, 15.0, 1.0};
  const CapLocation loc = localize_circle(d, kIntr, c);
  CHECK_FALSE(loc.fill_used);
  const Vec3 expect = deproject(kIntr, 400, 300, 0.45);
  CHECK((loc.position - expect).norm() <= 1e-12);
  CHECK(loc.distance == Catch::Approx(loc.position.norm()).margin(1e-15));

  Circle bad{10, 10, 0.0, 1.0};
  CHECK_THROWS_AS(localize_circle(d, kIntr, bad), InvalidCircleError);
}

TEST_CASE("localize with a small hole stays on the surrounding surface") {
  DepthImage d = flat_depth(640, 480, 450);
  for (int y = 298; y <= 302; ++y)
    for (int x = 398; x <= 402; ++x) d.at(x, y) = 0;
  Circle c{400.0, 300.0, 15.0, 1.0};
  const CapLocation loc = localize_circle(d, kIntr, c);
  CHECK(loc.fill_used);
  const Vec3 expect = deproject(kIntr, 400, 300, 0.45);
  CHECK((loc.position - expect).norm() <= 0.005);
}

TEST_CASE("diameter of a flat wall circle matches the pinhole formula") {
  DepthImage d = flat_depth(640, 480, 500);
  Circle c{320.0, 240.0, 30.0, 1.0};
  const DiameterEstimate est = estimate_diameter(d, kIntr, c);
  CHECK(est.row_used);
  CHECK(est.col_used);
  CHECK(est.value_m == Catch::Approx(2.0 * 30.0 * 0.5 / 600.0).margin(1e-9));
}

TEST_CASE("diameter falls back to one axis when the other has no depth") {
  DepthImage d = flat_depth(640, 480, 500);
  // Dead disks centered on the column endpoints, wider than the fill radius
  // (30), so filling fails there. The row endpoints sit 30*sqrt(2) from the
  // nearest dead center and still read directly.
  Circle c{320.0, 240.0, 30.0, 1.0};
  for (int y = 0; y < 480; ++y)
    for (int x = 0; x < 640; ++x)
      for (double ey : {210.0, 270.0})
        if ((x - 320.0) * (x - 320.0) + (y - ey) * (y - ey) <= 31.5 * 31.5) d.at(x, y) = 0;
  const DiameterEstimate est = estimate_diameter(d, kIntr, c);
  CHECK(est.row_used);
  CHECK_FALSE(est.col_used);
  CHECK(est.value_m == Catch::Approx(2.0 * 30.0 * 0.5 / 600.0).margin(1e-9));

  CHECK_THROWS_AS(estimate_diameter(d, kIntr, Circle{320, 240, -1, 1}), InvalidCircleError);
  DepthImage dead(640, 480);
  CHECK_THROWS_AS(estimate_diameter(dead, kIntr, c), MissingDepthError);
}

TEST_CASE("cap cloud crop keeps valid pixels inside the scaled radius") {
  DepthImage d = flat_depth(64, 64, 450);
  d.at(32, 32) = 0;
  CameraIntrinsics intr = kIntr;
  intr.width = intr.height = 64;
  Circle c{32.0, 32.0, 10.0, 1.0};
  const PointCloud cloud = crop_cap_cloud(d, intr, c, 1.0);
  // Count pixels in the disk minus the hole.
  std::size_t expect = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if ((x - 32.0) * (x - 32.0) + (y - 32.0) * (y - 32.0) <= 100.0) ++expect;
  CHECK(cloud.points.size() == expect - 1);
  for (const Vec3& p : cloud.points) CHECK(p.z() == Catch::Approx(0.45).margin(1e-12));
}

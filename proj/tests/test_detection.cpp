#include <catch2/catch_amalgamated.hpp>

#include "mush/detail/random.hpp"
#include "mush/detection.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mush;

TEST_CASE("boundary pixels are foreground with a background 4-neighbor") {
  BinaryMask m(5, 5);
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x <= 3; ++x) m.at(x, y) = 1;
  const auto b = boundary_pixels(m);
  CHECK(b.size() == 8);  // interior pixel (2,2) excluded
  CHECK(std::find(b.begin(), b.end(), std::make_pair(2, 2)) == b.end());

  // Foreground touching the image edge is boundary (outside is background).
  BinaryMask full(3, 3, true);
  CHECK(boundary_pixels(full).size() == 8);  // all but the center
}

TEST_CASE("phase coding is invertible over the radius range") {
  const int rmin = 8, rmax = 38;
  for (int r = rmin; r < rmax; ++r) {
    const double dec = cht_decode_radius(cht_phase(r, rmin, rmax), rmin, rmax);
    CHECK(dec == Catch::Approx(r).margin(1e-9));
  }
  CHECK(cht_phase(rmin, rmin, rmax) == 0.0);
  CHECK(cht_decode_radius(0.0, 10, 10) == 10.0);
}

TEST_CASE("a complete ideal ring votes with unit coherence at its center") {
  // The ring holds exactly the pixels whose distance rounds to r, so at the
  // true center every boundary pixel votes once, only at radius r, and all
  // phases agree: the accumulator cell there has magnitude exactly 1 and its
  // argument decodes back to r. Cells next to the center can collect votes
  // from adjacent radii whose weights differ, which lets their magnitude edge
  // slightly past 1, so the detected peak may interpolate a hair off center.
  for (int r : {8, 15, 23, 30, 37}) {
    const int c = 60;
    const BinaryMask m = fixtures::ring_mask(120, 120, c, c, r);
    INFO("r = " << r);

    const auto boundary = boundary_pixels(m);
    const auto acc = cht_accumulate(boundary, m.width, m.height, 8, 38);
    const std::complex<double> center = acc[static_cast<std::size_t>(c) * m.width + c];
    CHECK(std::abs(center) == Catch::Approx(1.0).margin(1e-9));
    CHECK(cht_decode_radius(std::arg(center), 8, 38) == Catch::Approx(r).margin(1e-6));

    const auto dets = detect_circles(m);
    REQUIRE_FALSE(dets.empty());
    CHECK(dets[0].score >= 1.0 - 1e-9);
    CHECK(std::abs(dets[0].cx - c) <= 1.5);
    CHECK(std::abs(dets[0].cy - c) <= 1.5);
    CHECK(std::abs(dets[0].r - r) <= 0.5);
  }
}

TEST_CASE("ring scores are size-invariant") {
  double smin = 2.0, smax = 0.0;
  for (int r : {9, 14, 20, 26, 33}) {
    const BinaryMask m = fixtures::ring_mask(120, 120, 60, 60, r);
    const auto dets = detect_circles(m);
    REQUIRE_FALSE(dets.empty());
    smin = std::min(smin, dets[0].score);
    smax = std::max(smax, dets[0].score);
  }
  CHECK((smax - smin) / smax < 0.10);
}

TEST_CASE("filled disks are recovered across the radius range") {
  // A disk boundary sits near half a pixel inside the ideal circle, so at
  // exactly rmin about half its votes round to rmin-1 and are dropped; the
  // usable band starts just above rmin.
  for (double r : {9.0, 12.0, 20.0, 31.0, 38.0}) {
    const BinaryMask m = fixtures::disk_mask(200, 200, 100, 100, r);
    const auto dets = detect_circles(m);
    REQUIRE_FALSE(dets.empty());
    INFO("r = " << r);
    CHECK(std::abs(dets[0].cx - 100.0) <= 1.5);
    CHECK(std::abs(dets[0].cy - 100.0) <= 1.5);
    CHECK(std::abs(dets[0].r - r) <= 2.0);
    CHECK(dets[0].score >= 0.45);
  }
}

TEST_CASE("accumulator peak matches the dense 3-d accumulator oracle") {
  detail::Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const double r = rng.uniform(9.0, 30.0);
    const double cx = rng.uniform(45.0, 115.0);
    const double cy = rng.uniform(45.0, 115.0);
    const BinaryMask m = fixtures::disk_mask(160, 160, cx, cy, r);
    const auto dets = detect_circles(m);
    const auto ref = oracle::hough3d_peak(m, 8, 38);
    REQUIRE_FALSE(dets.empty());
    INFO("trial " << trial << " r=" << r);
    CHECK(std::abs(dets[0].cx - ref.cx) <= 2.0);
    CHECK(std::abs(dets[0].cy - ref.cy) <= 2.0);
    CHECK(std::abs(dets[0].r - ref.r) <= 2.0);
  }
}

TEST_CASE("detection is translation-equivariant away from the borders") {
  const double r = 14;
  const auto d1 = detect_circles(fixtures::disk_mask(200, 200, 70, 80, r));
  const auto d2 = detect_circles(fixtures::disk_mask(200, 200, 130, 105, r));
  REQUIRE(d1.size() == 1);
  REQUIRE(d2.size() == 1);
  CHECK(d2[0].cx - d1[0].cx == Catch::Approx(60.0).margin(1e-9));
  CHECK(d2[0].cy - d1[0].cy == Catch::Approx(25.0).margin(1e-9));
  CHECK(d2[0].score == Catch::Approx(d1[0].score).margin(1e-12));
  CHECK(d2[0].r == Catch::Approx(d1[0].r).margin(1e-9));
}

TEST_CASE("nearby disks are separated, duplicates are suppressed") {
  BinaryMask m(160, 100);
  const auto a = fixtures::disk_mask(160, 100, 50, 50, 12);
  const auto b = fixtures::disk_mask(160, 100, 110, 50, 12);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = a.data[i] | b.data[i];
  const auto dets = detect_circles(m);
  REQUIRE(dets.size() == 2);
  const double got1 = std::min(dets[0].cx, dets[1].cx);
  const double got2 = std::max(dets[0].cx, dets[1].cx);
  CHECK(std::abs(got1 - 50.0) <= 1.5);
  CHECK(std::abs(got2 - 110.0) <= 1.5);
  // Scores are sorted descending.
  CHECK(dets[0].score >= dets[1].score);
}

TEST_CASE("empty and degenerate masks produce no detections") {
  CHECK(detect_circles(BinaryMask(50, 50)).empty());
  DetectParams tight;
  tight.score_thresh = 2.0;  // unreachable
  CHECK(detect_circles(fixtures::disk_mask(100, 100, 50, 50, 15), tight).empty());
}

TEST_CASE("invalid radius range is rejected") {
  const std::vector<std::pair<int, int>> b = {{5, 5}};
  CHECK_THROWS_AS(cht_accumulate(b, 10, 10, 0, 5), Error);
  CHECK_THROWS_AS(cht_accumulate(b, 10, 10, 9, 5), Error);
}

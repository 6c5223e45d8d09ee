#include <catch2/catch_amalgamated.hpp>

#include "mush/segmentation.hpp"
#include "support/fixtures.hpp"

using namespace mush;

namespace {

double mask_agreement(const BinaryMask& a, const BinaryMask& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) same += (a.data[i] != 0) == (b.data[i] != 0);
  return static_cast<double>(same) / static_cast<double>(a.data.size());
}

}  // namespace

TEST_CASE("region means split by the sign of the level set") {
  ImageGray img(4, 1);
  img.data = {10, 20, 100, 200};
  LevelSetField phi(4, 1, -1.0);
  phi.at(2, 0) = 1.0;
  phi.at(3, 0) = 1.0;
  const auto [c1, c2] = region_means(img, phi);
  CHECK(c1 == Catch::Approx(150.0));
  CHECK(c2 == Catch::Approx(15.0));

  LevelSetField all_in(4, 1, 1.0);
  const auto [d1, d2] = region_means(img, all_in);
  CHECK(d1 == Catch::Approx(82.5));
  CHECK(d2 == Catch::Approx(d1));  // empty region inherits the other mean
}

TEST_CASE("energy of a perfect piecewise-constant partition has zero data term") {
  const ImageGray img = fixtures::disk_image(32, 32, 16, 16, 9, 200, 60, 0.0, 0);
  const BinaryMask gt = fixtures::disk_mask(32, 32, 16, 16, 9);
  ChanVeseParams prm;
  prm.mu = 0.0;
  prm.nu = 0.0;
  CHECK(chan_vese_energy(img, LevelSetField::from_mask(gt), prm) == Catch::Approx(0.0).margin(1e-9));

  // Flipping one pixel into the wrong region must cost its squared residual.
  BinaryMask off = gt;
  off.at(0, 0) = 1;
  const double e = chan_vese_energy(img, LevelSetField::from_mask(off), prm);
  CHECK(e > 1000.0);  // (60 - c1)^2 with c1 near 200
}

TEST_CASE("area term follows the regularized heaviside") {
  ImageGray img(10, 10, 0.0);
  img.at(0, 0) = 255.0;  // non-constant so means are well defined
  ChanVeseParams prm;
  prm.mu = 0.0;
  prm.nu = 1.0;
  prm.lambda1 = 0.0;
  prm.lambda2 = 0.0;
  prm.eps = 1.0;
  LevelSetField phi(10, 10, 1.0);
  // H_eps(1) with eps=1 is 1/2 + atan(1)/pi = 3/4.
  CHECK(chan_vese_energy(img, phi, prm) == Catch::Approx(100.0 * 0.75).margin(1e-9));
}

TEST_CASE("both backends recover a noisy disk from the otsu initialization") {
  const ImageGray img = fixtures::disk_image(64, 64, 32, 32, 18, 200, 60, 5.0, 42);
  const BinaryMask gt = fixtures::disk_mask(64, 64, 32, 32, 18);
  const OtsuResult init = otsu_threshold(img);

  for (auto backend : {CvBackend::pde, CvBackend::morphological}) {
    ChanVeseParams prm;
    prm.backend = backend;
    const BinaryMask out = chan_vese_evolve(img, init.mask, prm);
    INFO((backend == CvBackend::pde ? "pde" : "morphological"));
    CHECK(mask_agreement(out, gt) >= 0.99);
  }
}

TEST_CASE("pde evolution does not increase the energy") {
  for (std::uint64_t seed : {7ull, 21ull}) {
    const ImageGray img = fixtures::disk_image(64, 64, 30, 34, 16, 200, 60, 5.0, seed);
    const OtsuResult init = otsu_threshold(img);
    ChanVeseParams prm;
    const BinaryMask out = chan_vese_evolve(img, init.mask, prm);
    const double e0 = chan_vese_energy(img, LevelSetField::from_mask(init.mask), prm);
    const double e1 = chan_vese_energy(img, LevelSetField::from_mask(out), prm);
    INFO("seed " << seed);
    CHECK(e1 <= e0 + 1e-6 * std::abs(e0));
  }
}

TEST_CASE("constant image with no length or area force is rejected") {
  const ImageGray img(16, 16, 99.0);
  BinaryMask init(16, 16);
  init.at(8, 8) = 1;
  ChanVeseParams prm;
  prm.mu = 0.0;
  prm.nu = 0.0;
  for (auto backend : {CvBackend::pde, CvBackend::morphological}) {
    prm.backend = backend;
    CHECK_THROWS_AS(chan_vese_evolve(img, init, prm), ConstantImageError);
  }
  // With a length force the evolution is still well posed.
  prm.mu = 0.05 * 255.0 * 255.0;
  prm.backend = CvBackend::pde;
  CHECK_NOTHROW(chan_vese_evolve(img, init, prm));
}

TEST_CASE("shape mismatch between image and initialization is rejected") {
  const ImageGray img(16, 16, 0.0);
  const BinaryMask init(8, 8);
  CHECK_THROWS_AS(chan_vese_evolve(img, init), Error);
}

TEST_CASE("morphological backend with zero mu does pure data flips") {
  const ImageGray img = fixtures::disk_image(48, 48, 24, 24, 14, 200, 60, 0.0, 0);
  const BinaryMask gt = fixtures::disk_mask(48, 48, 24, 24, 14);
  BinaryMask init(48, 48);
  for (int y = 20; y < 28; ++y)
    for (int x = 20; x < 28; ++x) init.at(x, y) = 1;
  ChanVeseParams prm;
  prm.backend = CvBackend::morphological;
  prm.mu = 0.0;
  const BinaryMask out = chan_vese_evolve(img, init, prm);
  CHECK(mask_agreement(out, gt) == 1.0);  // noise-free: exact recovery
}

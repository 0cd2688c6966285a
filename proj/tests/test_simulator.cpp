#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "molmap/simulator.hpp"

using namespace molmap;

namespace {

GroundTruth one_cluster(int n, int count, double p) {
  GroundTruth gt;
  gt.n = n;
  for (int j = 0; j < count; ++j) gt.molecules.push_back({n / 2, n / 2, p});
  return gt;
}

}  // namespace

TEST_CASE("pulse counts are conserved at every pixel") {
  auto gt = one_cluster(9, 5, 0.05);
  Psf psf = gaussian_psf(3.0, 11);
  auto img = simulate_image(gt, psf, 500, 4, 99);
  REQUIRE(img.planes.size() == 5);
  for (int p = 0; p < 81; ++p) {
    std::int64_t sum = 0;
    for (int k = 0; k <= 4; ++k) {
      CHECK(img.planes[k][p] >= 0);
      sum += img.planes[k][p];
    }
    CHECK(sum == 500);
  }
}

TEST_CASE("determinism and seed sensitivity") {
  auto gt = one_cluster(9, 3, 0.05);
  Psf psf = gaussian_psf(3.0, 11);
  auto a = simulate_image(gt, psf, 300, 4, 7);
  auto b = simulate_image(gt, psf, 300, 4, 7);
  auto c = simulate_image(gt, psf, 300, 4, 8);
  CHECK(a.planes == b.planes);
  CHECK(a.planes != c.planes);
}

TEST_CASE("empirical frequencies track the exact distribution") {
  auto gt = one_cluster(7, 8, 0.04);
  Psf psf = gaussian_psf(3.0, 9);
  std::int64_t t = 40000;
  auto img = simulate_image(gt, psf, t, 4, 31);
  auto expect = expected_detector_field(gt, psf, 4);
  for (int p = 0; p < 49; ++p) {
    for (int k = 0; k <= 4; ++k) {
      double mean = expect[p][k];
      double se = std::sqrt(std::max(mean * (1.0 - mean) / t, 1e-12));
      double emp = static_cast<double>(img.planes[k][p]) / t;
      CHECK(std::abs(emp - mean) < 6.0 * se + 1e-9);
    }
  }
}

TEST_CASE("background acts as an extra independent emitter") {
  GroundTruth empty;
  empty.n = 5;
  Psf psf = gaussian_psf(3.0, 9);
  double lambda = 0.01;
  std::int64_t t = 50000;
  auto img = simulate_image(empty, psf, t, 4, 3, lambda);
  auto expect = expected_detector_field(empty, psf, 4, lambda);
  CHECK(expect[0][1] == doctest::Approx(lambda).epsilon(1e-9));
  for (int p = 0; p < 25; ++p) {
    double emp = static_cast<double>(img.planes[1][p]) / t;
    double se = std::sqrt(lambda * (1.0 - lambda) / t);
    CHECK(std::abs(emp - lambda) < 6.0 * se);
  }
}

TEST_CASE("one-photon plane accessor") {
  auto gt = one_cluster(9, 3, 0.05);
  Psf psf = gaussian_psf(3.0, 11);
  auto img = simulate_image(gt, psf, 200, 4, 5);
  GridD y1 = img.one_photon();
  REQUIRE(y1.n == 9);
  for (int p = 0; p < 81; ++p)
    CHECK(y1[p] == static_cast<double>(img.planes[1][p]));
}

TEST_CASE("confocal / STED pair") {
  auto gt = one_cluster(11, 4, 0.05);
  Psf pc = gaussian_psf(5.0, 15, PsfMode::confocal);
  Psf ps = gaussian_psf(2.5, 9, PsfMode::sted);
  auto [confocal, sted] = simulate_pair(gt, pc, ps, 400, 600, 4, 17);
  CHECK(confocal.mode == PsfMode::confocal);
  CHECK(sted.mode == PsfMode::sted);
  CHECK(confocal.t == 400);
  CHECK(sted.t == 600);
  CHECK(confocal.planes != sted.planes);
}

TEST_CASE("input validation") {
  auto gt = one_cluster(9, 2, 0.05);
  Psf psf = gaussian_psf(3.0, 11);
  CHECK_THROWS(simulate_image(gt, psf, 0, 4, 1));
  CHECK_THROWS(simulate_image(gt, psf, 100, 1, 1));
  CHECK_THROWS(simulate_image(gt, psf, 100, 4, 1, 1.0));
  CHECK_THROWS(simulate_image(gt, psf, 100, 4, 1, -0.1));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "molmap/core_model.hpp"

using namespace molmap;

TEST_CASE("ground truth validation") {
  GroundTruth gt;
  gt.n = 16;
  gt.molecules = {{3, 4, 0.02}, {0, 15, 0.49}};
  CHECK_NOTHROW(gt.validate());

  GroundTruth off = gt;
  off.molecules.push_back({16, 3, 0.02});
  CHECK_THROWS(off.validate());

  GroundTruth dim = gt;
  dim.molecules.push_back({1, 1, 0.0});
  CHECK_THROWS(dim.validate());

  GroundTruth hot = gt;
  hot.molecules.push_back({1, 1, 0.5});
  CHECK_THROWS(hot.validate());
}

TEST_CASE("gaussian PSF shape") {
  double fwhm = 4.0;
  Psf psf = gaussian_psf(fwhm, 21);
  CHECK(psf.at_offset(0, 0) == 1.0);
  CHECK(psf.fwhm_px == fwhm);

  double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  for (int d = 1; d <= 4; ++d) {
    double expect = std::exp(-d * d / (2.0 * sigma * sigma));
    CHECK(psf.at_offset(d, 0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(psf.at_offset(0, -d) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(psf.at_offset(d, 0) == psf.at_offset(-d, 0));
  }
  // radial symmetry on the diagonal
  double r2 = 2.0;
  CHECK(psf.at_offset(1, 1) == doctest::Approx(std::exp(-r2 / (2 * sigma * sigma))));

  // tail truncation keeps the support compact
  int r = psf.radius();
  bool tiny_kept = false;
  for (int dx = -r; dx <= r; ++dx)
    for (int dy = -r; dy <= r; ++dy)
      if (psf.at_offset(dx, dy) > 0.0 && psf.at_offset(dx, dy) < 1e-6) tiny_kept = true;
  CHECK_FALSE(tiny_kept);

  CHECK_THROWS(gaussian_psf(0.0, 9));
  CHECK_THROWS(gaussian_psf(-2.0, 9));
  CHECK_THROWS(gaussian_psf(3.0, 8));  // even support has no center pixel
}

TEST_CASE("detection field: single molecule") {
  GroundTruth gt;
  gt.n = 21;
  gt.molecules = {{10, 10, 0.03}};
  Psf psf = gaussian_psf(4.0, 15);
  DetectionField f = detection_field(gt, psf);
  CHECK(f.n == 21);
  CHECK(f.n_molecules == 1);
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx) {
      int px = (10 + dy) * 21 + (10 + dx);
      CHECK(f.eps_at(px, 0) == doctest::Approx(0.03 * psf.at_offset(dx, dy)).epsilon(1e-12));
    }
  // outside the PSF support nothing is recorded
  CHECK(f.eps_at(0, 0) == 0.0);
}

TEST_CASE("detection field: superposition of two molecules") {
  GroundTruth gt;
  gt.n = 31;
  gt.molecules = {{15, 15, 0.02}, {17, 15, 0.04}};
  Psf psf = gaussian_psf(4.0, 15);
  DetectionField f = detection_field(gt, psf);
  int px = 15 * 31 + 16;
  CHECK(f.eps_at(px, 0) == doctest::Approx(0.02 * psf.at_offset(1, 0)));
  CHECK(f.eps_at(px, 1) == doctest::Approx(0.04 * psf.at_offset(-1, 0)));
}

TEST_CASE("PSF power sums") {
  Psf psf = gaussian_psf(3.0, 13);
  PsfPowerSums H = psf_power_sums(psf, 4);
  for (int l = 1; l <= 4; ++l) {
    double direct = 0.0;
    int r = psf.radius();
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) direct += std::pow(psf.at_offset(dx, dy), l);
    CHECK(H.at(l) == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(H.at(1) > H.at(2));  // kernel values lie in (0, 1]
  CHECK_THROWS(psf_power_sums(psf, 1));
}

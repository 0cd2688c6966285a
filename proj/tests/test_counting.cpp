#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "molmap/counting.hpp"
#include "molmap/photon_transform.hpp"
#include "molmap/simulator.hpp"

using namespace molmap;

namespace {

RoiSet single_region(int n, const std::vector<int>& pixels, bool validated = true) {
  RoiSet rois;
  rois.n = n;
  Roi roi;
  roi.id = 1;
  roi.pixels = pixels;
  if (validated) roi.validating_boxes.push_back(Box{0, 0, 1, 1});
  rois.rois.push_back(std::move(roi));
  return rois;
}

// Noise-free coincidence image: planes carry t * exact distribution.
CoincidenceImage exact_image(const GroundTruth& gt, const Psf& psf, std::int64_t t, int md,
                             double background = 0.0) {
  auto expect = expected_detector_field(gt, psf, md, background);
  CoincidenceImage img;
  img.n = gt.n;
  img.md = md;
  img.t = t;
  img.background_rate = background;
  img.planes.assign(md + 1, std::vector<std::int64_t>(gt.n * gt.n, 0));
  for (int p = 0; p < gt.n * gt.n; ++p)
    for (int k = 0; k <= md; ++k)
      img.planes[k][p] = static_cast<std::int64_t>(std::llround(expect[p][k] * t));
  return img;
}

std::vector<int> all_pixels(int n) {
  std::vector<int> px(n * n);
  for (int i = 0; i < n * n; ++i) px[i] = i;
  return px;
}

}  // namespace

TEST_CASE("region enlargement matches a brute-force distance transform") {
  int n = 20;
  RoiSet rois = single_region(n, {5 * n + 5, 5 * n + 6, 6 * n + 5});
  double eps = 2.5;
  auto enlarged = enlarge_regions(rois, eps);
  REQUIRE(enlarged.size() == 1);
  std::set<int> got(enlarged[0].pixels.begin(), enlarged[0].pixels.end());
  for (int p = 0; p < n * n; ++p) {
    double d2 = 1e18;
    for (int q : rois.rois[0].pixels) {
      double dx = p % n - q % n, dy = p / n - q / n;
      d2 = std::min(d2, dx * dx + dy * dy);
    }
    CHECK(got.count(p) == (d2 <= eps * eps ? 1u : 0u));
  }
  // base region always included
  for (int q : rois.rois[0].pixels) CHECK(got.count(q) == 1);
  CHECK_THROWS(enlarge_regions(rois, -1.0));
}

TEST_CASE("adjacent regions stay disjoint; the equidistant frontier is unassigned") {
  int n = 21;
  RoiSet rois;
  rois.n = n;
  Roi a, b;
  a.id = 1;
  b.id = 2;
  for (int y = 8; y <= 12; ++y) {
    a.pixels.push_back(y * n + 4);  // column x = 4
    b.pixels.push_back(y * n + 10);  // column x = 10
  }
  rois.rois = {a, b};
  auto enlarged = enlarge_regions(rois, 4.0);
  std::set<int> pa(enlarged[0].pixels.begin(), enlarged[0].pixels.end());
  std::set<int> pb(enlarged[1].pixels.begin(), enlarged[1].pixels.end());
  for (int p : pa) CHECK(pb.count(p) == 0);
  // x = 7 is equidistant from both columns: claimed by neither
  for (int y = 8; y <= 12; ++y) {
    CHECK(pa.count(y * n + 7) == 0);
    CHECK(pb.count(y * n + 7) == 0);
  }
  // x = 6 strictly nearer to region a
  CHECK(pa.count(10 * n + 6) == 1);
}

TEST_CASE("background estimate recovers a flat rate") {
  CoincidenceImage img;
  img.n = 16;
  img.md = 4;
  img.t = 10000;
  img.planes.assign(5, std::vector<std::int64_t>(256, 0));
  for (auto& v : img.planes[1]) v = 50;  // rate 0.005 everywhere
  double bg = estimate_background(img);
  CHECK(bg == doctest::Approx(0.005).epsilon(1e-9));
}

TEST_CASE("counts recovered from noise-free data") {
  int n = 25, N = 10;
  double p = 0.02;
  Psf psf = gaussian_psf(5.0, 23);
  GroundTruth gt;
  gt.n = n;
  for (int j = 0; j < N; ++j) gt.molecules.push_back({n / 2, n / 2, p});
  auto img = exact_image(gt, psf, 1000000000, 4);
  PsfPowerSums H = psf_power_sums(psf, 4);
  auto est = estimate_counts(img, enlarge_regions(single_region(n, all_pixels(n)), 0.0), H, 0.0);
  REQUIRE(est.size() == 1);
  CHECK(est[0].identified);
  CHECK(est[0].n_hat == doctest::Approx(N).epsilon(0.02));
  CHECK(est[0].p_hat == doctest::Approx(p).epsilon(0.02));

  // psi of the stored coincidence block reproduces the point estimate
  std::size_t npix = est[0].pixels.size();
  std::vector<double> d(npix * 4);
  for (std::size_t q = 0; q < npix; ++q)
    for (int k = 0; k < 4; ++k) d[q * 4 + k] = est[0].d_hat[q * 5 + k + 1];
  CHECK(psi_value(d, H, 4) == doctest::Approx(est[0].n_hat).epsilon(1e-12));
}

TEST_CASE("dark region is flagged non-identified") {
  int n = 9;
  GroundTruth empty;
  empty.n = n;
  Psf psf = gaussian_psf(3.0, 11);
  auto img = exact_image(empty, psf, 100000, 4);
  PsfPowerSums H = psf_power_sums(psf, 4);
  auto est = estimate_counts(img, enlarge_regions(single_region(n, all_pixels(n)), 0.0), H, 0.0);
  REQUIRE(est.size() == 1);
  CHECK_FALSE(est[0].identified);
  CHECK(est[0].degenerate_pixels == n * n);
  auto cis = confidence_intervals(est, img, H, 0.05, 1);
  CHECK(cis[0].ci_lo == 1.0);
  CHECK(cis[0].ci_hi == kUnboundedCi);
  CHECK(cis[0].flags == std::vector<std::string>{"degenerate-pixels", "non-identified"});
}

TEST_CASE("gradient matches a plain finite-difference oracle") {
  int md = 4;
  Psf psf = gaussian_psf(3.0, 11);
  PsfPowerSums H = psf_power_sums(psf, md);
  // two pixels with healthy coincidence mass, built from valid power sums
  std::vector<double> d;
  for (auto s : {std::vector<double>{0.06, 0.0015, 0.00004, 1.2e-6},
                 std::vector<double>{0.04, 0.0008, 0.00002, 5.0e-7}}) {
    auto D = forward_transform(s, md);
    d.insert(d.end(), D.begin() + 1, D.end());
  }
  auto grad = gradient_psi(d, H, md);
  REQUIRE(grad.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double h = 1e-7;
    auto dp = d, dm = d;
    dp[i] += h;
    dm[i] -= h;
    double oracle = (psi_value(dp, H, md) - psi_value(dm, H, md)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("normal quantile function") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-9));
  CHECK(normal_quantile(0.0013498980316300933) == doctest::Approx(-3.0).epsilon(1e-8));
  CHECK(normal_quantile(0.3) == doctest::Approx(-normal_quantile(0.7)).epsilon(1e-12));
  CHECK_THROWS(normal_quantile(0.0));
  CHECK_THROWS(normal_quantile(1.0));
}

TEST_CASE("interval construction: coverage of the noise-free truth, floors, widths") {
  int n = 21, N = 8;
  double p = 0.03;
  Psf psf = gaussian_psf(4.0, 19);
  GroundTruth gt;
  gt.n = n;
  for (int j = 0; j < N; ++j) gt.molecules.push_back({n / 2, n / 2, p});
  auto img = exact_image(gt, psf, 100000000, 4);
  PsfPowerSums H = psf_power_sums(psf, 4);
  auto regions = enlarge_regions(single_region(n, all_pixels(n)), 0.0);
  auto est = estimate_counts(img, regions, H, 0.0);
  auto cis = confidence_intervals(est, img, H, 0.1, 1);
  REQUIRE(cis.size() == 1);
  CHECK(cis[0].sigma > 0.0);
  CHECK(cis[0].ci_lo <= N);
  CHECK(cis[0].ci_hi >= N);
  CHECK(cis[0].ci_lo >= 1.0);  // box-validated floor

  // more simultaneous intervals -> wider intervals
  auto wide = confidence_intervals(est, img, H, 0.1, 20);
  CHECK(wide[0].ci_hi > cis[0].ci_hi);

  // quadrupled pulse count halves the interval half-width
  auto img4 = exact_image(gt, psf, 400000000, 4);
  auto est4 = estimate_counts(img4, regions, H, 0.0);
  auto cis4 = confidence_intervals(est4, img4, H, 0.1, 1);
  double half = cis[0].ci_hi - cis[0].n_hat;
  double half4 = cis4[0].ci_hi - cis4[0].n_hat;
  CHECK(half4 == doctest::Approx(half / 2.0).epsilon(0.01));
}

TEST_CASE("bias warning threshold scales with the detector count") {
  int n = 15;
  double p = 0.02;
  Psf psf = gaussian_psf(3.0, 13);
  GroundTruth gt;
  gt.n = n;
  for (int j = 0; j < 60; ++j) gt.molecules.push_back({n / 2, n / 2, p});
  auto img = exact_image(gt, psf, 1000000000, 4);
  PsfPowerSums H = psf_power_sums(psf, 4);
  auto est = estimate_counts(img, enlarge_regions(single_region(n, all_pixels(n)), 0.0), H, 0.0);
  auto cis = confidence_intervals(est, img, H, 0.1, 1);
  bool warned = false;
  for (const auto& f : cis[0].flags) warned |= f == "bias-warning";
  CHECK(warned);  // N_hat near 60 exceeds the md=4 threshold of 40
}

TEST_CASE("molecular map assembly validates ids") {
  RoiSet rois = single_region(10, {11, 12});
  CountEstimate ce;
  ce.id = 1;
  auto map = build_molecular_map(rois, {ce}, 0.1);
  CHECK(map.M == 1);
  CHECK(map.alpha == 0.1);
  ce.id = 2;
  CHECK_THROWS(build_molecular_map(rois, {ce}, 0.1));
  CHECK_THROWS(build_molecular_map(rois, {}, 0.1));
}

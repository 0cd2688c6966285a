#include "molmap/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "molmap/photon_transform.hpp"
#include "molmap/watershed.hpp"

namespace molmap {

namespace {

/// First two recovered power sums for one pixel given (D_1..D_md).
/// Degenerate pixels contribute zeros.
void pixel_s12(std::span<const double> d, int md, double& s1, double& s2, bool& degenerate) {
  std::vector<double> full(md + 1);
  double sum = 0.0;
  for (int k = 0; k < md; ++k) {
    full[k + 1] = d[k];
    sum += d[k];
  }
  full[0] = 1.0 - sum;
  auto inv = inverse_transform(full);
  degenerate = inv.degenerate;
  s1 = inv.s[0];
  s2 = inv.s[1];
}

struct BiasThreshold {
  static double value(int md) {
    if (md <= 4) return 40.0;
    if (md <= 6) return 100.0;
    return 150.0;
  }
};

}  // namespace

std::vector<EnlargedRegion> enlarge_regions(const RoiSet& rois, double eps_px) {
  if (eps_px < 0.0) throw std::invalid_argument("enlarge_regions: eps must be >= 0");
  int n = rois.n;
  std::vector<EnlargedRegion> out;
  out.reserve(rois.rois.size());
  for (const auto& roi : rois.rois) {
    EnlargedRegion er;
    er.id = roi.id;
    er.base_pixels = roi.pixels;
    er.eps_px = eps_px;
    er.box_validated = !roi.validating_boxes.empty() || roi.score != 0.0;
    out.push_back(std::move(er));
  }
  if (n == 0 || out.empty()) return out;

  // Distance from every pixel to every region; a pixel joins the strictly
  // nearest region within eps (equidistant frontier pixels stay unassigned).
  std::size_t npx = static_cast<std::size_t>(n) * n;
  double eps2 = eps_px * eps_px;
  std::vector<double> best(npx, std::numeric_limits<double>::infinity());
  std::vector<int> owner(npx, -1);  // -2 marks a tie
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t p = 0; p < npx; ++p) {
      int px = static_cast<int>(p) % n, py = static_cast<int>(p) / n;
      double d2 = std::numeric_limits<double>::infinity();
      for (int q : out[r].base_pixels) {
        int qx = q % n, qy = q / n;
        double dx = px - qx, dy = py - qy;
        d2 = std::min(d2, dx * dx + dy * dy);
        if (d2 == 0.0) break;
      }
      if (d2 > eps2) continue;
      if (d2 < best[p]) {
        best[p] = d2;
        owner[p] = static_cast<int>(r);
      } else if (d2 == best[p] && owner[p] != static_cast<int>(r)) {
        owner[p] = -2;
      }
    }
  }
  for (std::size_t p = 0; p < npx; ++p)
    if (owner[p] >= 0) out[owner[p]].pixels.push_back(static_cast<int>(p));
  for (auto& er : out) {
    // Base pixels always belong to their own region.
    er.pixels.insert(er.pixels.end(), er.base_pixels.begin(), er.base_pixels.end());
    std::sort(er.pixels.begin(), er.pixels.end());
    er.pixels.erase(std::unique(er.pixels.begin(), er.pixels.end()), er.pixels.end());
  }
  return out;
}

double estimate_background(const CoincidenceImage& confocal) {
  int n = confocal.n;
  GridD rate(n);
  for (std::size_t i = 0; i < rate.size(); ++i)
    rate[i] = static_cast<double>(confocal.planes[1][i]) / static_cast<double>(confocal.t);
  GridD smooth = gaussian_smooth(rate, std::max(4.0, n / 8.0));
  std::vector<double> v = smooth.v;
  std::sort(v.begin(), v.end());
  double q = v[static_cast<std::size_t>(0.2 * (v.size() - 1))];
  return std::max(q, 0.0);
}

std::vector<RegionEstimate> estimate_counts(const CoincidenceImage& confocal,
                                            const std::vector<EnlargedRegion>& regions,
                                            const PsfPowerSums& H, double background) {
  int md = confocal.md;
  double t = static_cast<double>(confocal.t);
  std::vector<RegionEstimate> out;
  out.reserve(regions.size());
  for (const auto& er : regions) {
    if (er.pixels.empty()) throw std::invalid_argument("estimate_counts: empty region");
    RegionEstimate est;
    est.id = er.id;
    est.pixels = er.pixels;
    est.box_validated = er.box_validated;
    est.d_hat.reserve(er.pixels.size() * (md + 1));
    double A = 0.0, B = 0.0;
    for (int p : er.pixels) {
      std::vector<double> d(md + 1);
      for (int k = 0; k <= md; ++k) d[k] = static_cast<double>(confocal.planes[k][p]) / t;
      // Single-photon background correction, renormalized into D_0.
      double corr = std::min(background, d[1]);
      d[1] -= corr;
      d[0] += corr;
      auto inv = inverse_transform(d);
      if (inv.degenerate) ++est.degenerate_pixels;
      A += inv.s[0];
      B += inv.s[1];
      est.d_hat.insert(est.d_hat.end(), d.begin(), d.end());
    }
    est.sum_s1 = A;
    est.sum_s2 = B;
    if (B > 0.0 && A > 0.0) {
      est.n_hat = (H.at(2) / (H.at(1) * H.at(1))) * (A * A) / B;
      est.p_hat = (H.at(1) * B) / (H.at(2) * A);
    } else {
      est.identified = false;
      est.n_hat = kUnboundedCi;
      est.p_hat = 0.0;
    }
    out.push_back(std::move(est));
  }
  return out;
}

double psi_value(std::span<const double> d, const PsfPowerSums& H, int md) {
  if (d.size() % md != 0) throw std::invalid_argument("psi_value: length not a multiple of md");
  double A = 0.0, B = 0.0;
  for (std::size_t off = 0; off < d.size(); off += md) {
    double s1, s2;
    bool deg;
    pixel_s12(d.subspan(off, md), md, s1, s2, deg);
    A += s1;
    B += s2;
  }
  if (!(B > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (H.at(2) / (H.at(1) * H.at(1))) * (A * A) / B;
}

std::vector<double> gradient_psi(std::span<const double> d, const PsfPowerSums& H, int md,
                                 bool* flagged) {
  if (d.size() % md != 0) throw std::invalid_argument("gradient_psi: length not a multiple of md");
  std::size_t npix = d.size() / md;
  if (flagged) *flagged = false;

  // Region sums decompose per pixel, so a coordinate perturbation only
  // touches its own pixel's contribution.
  std::vector<double> s1(npix), s2(npix);
  double A = 0.0, B = 0.0;
  for (std::size_t p = 0; p < npix; ++p) {
    bool deg;
    pixel_s12(d.subspan(p * md, md), md, s1[p], s2[p], deg);
    A += s1[p];
    B += s2[p];
  }
  double scale = H.at(2) / (H.at(1) * H.at(1));
  auto psi_from = [&](double a, double b) {
    if (!(b > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return scale * a * a / b;
  };
  double base = psi_from(A, B);

  std::vector<double> grad(d.size(), 0.0);
  std::vector<double> pert(md);
  auto eval_coord = [&](std::size_t p, int k, double step) {
    std::copy(d.begin() + p * md, d.begin() + (p + 1) * md, pert.begin());
    pert[k] += step;
    double ps1, ps2;
    bool deg;
    pixel_s12(pert, md, ps1, ps2, deg);
    return psi_from(A - s1[p] + ps1, B - s2[p] + ps2);
  };

  for (std::size_t p = 0; p < npix; ++p) {
    for (int k = 0; k < md; ++k) {
      double step = 1e-6;
      double g = std::numeric_limits<double>::quiet_NaN();
      for (int attempt = 0; attempt < 4; ++attempt) {
        double f1p = eval_coord(p, k, step), f1m = eval_coord(p, k, -step);
        double f2p = eval_coord(p, k, step / 2), f2m = eval_coord(p, k, -step / 2);
        if (std::isfinite(f1p) && std::isfinite(f1m) && std::isfinite(f2p) && std::isfinite(f2m)) {
          double g1 = (f1p - f1m) / (2.0 * step);
          double g2 = (f2p - f2m) / step;
          g = (4.0 * g2 - g1) / 3.0;
          break;
        }
        step /= 10.0;
      }
      if (!std::isfinite(g)) {
        g = 0.0;
        if (flagged) *flagged = true;
      }
      grad[p * md + k] = g;
    }
  }
  (void)base;
  return grad;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  // Acklam's rational approximation with one Halley refinement step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
  }
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

std::vector<CountEstimate> confidence_intervals(const std::vector<RegionEstimate>& estimates,
                                                const CoincidenceImage& confocal,
                                                const PsfPowerSums& H, double alpha, int M) {
  if (M < 1) throw std::invalid_argument("confidence_intervals: M must be >= 1");
  int md = confocal.md;
  double t = static_cast<double>(confocal.t);
  double z = normal_quantile(1.0 - alpha / (4.0 * M));

  std::vector<CountEstimate> out;
  out.reserve(estimates.size());
  for (const auto& est : estimates) {
    CountEstimate ce;
    ce.id = est.id;
    ce.n_hat = est.n_hat;
    ce.p_hat = est.p_hat;
    ce.degenerate_pixels = est.degenerate_pixels;
    if (est.degenerate_pixels > 0) ce.flags.push_back("degenerate-pixels");
    if (!est.identified) {
      ce.flags.push_back("non-identified");
      ce.sigma = 0.0;
      ce.ci_lo = 1.0;
      ce.ci_hi = kUnboundedCi;
      out.push_back(std::move(ce));
      continue;
    }

    // d_hat stores D_0..D_md; Psi takes the D_1..D_md blocks.
    std::size_t npix = est.pixels.size();
    std::vector<double> d(npix * md);
    for (std::size_t p = 0; p < npix; ++p)
      for (int k = 0; k < md; ++k) d[p * md + k] = est.d_hat[p * (md + 1) + k + 1];

    bool flagged = false;
    auto grad = gradient_psi(d, H, md, &flagged);
    if (flagged) ce.flags.push_back("gradient-fallback");

    double var = 0.0;
    for (std::size_t p = 0; p < npix; ++p) {
      const double* e = &d[p * md];
      const double* g = &grad[p * md];
      for (int j = 0; j < md; ++j)
        for (int k = 0; k < md; ++k) {
          double cov = (j == k) ? e[j] * (1.0 - e[j]) : -e[j] * e[k];
          var += g[j] * cov * g[k];
        }
    }
    ce.sigma = std::sqrt(std::max(var, 0.0));
    double half = z * ce.sigma / std::sqrt(t);
    ce.ci_lo = std::max(0.0, ce.n_hat - half);
    if (est.box_validated) ce.ci_lo = std::max(ce.ci_lo, 1.0);
    ce.ci_hi = ce.n_hat + half;
    if (ce.n_hat > BiasThreshold::value(md)) ce.flags.push_back("bias-warning");
    out.push_back(std::move(ce));
  }
  return out;
}

MolecularMap build_molecular_map(const RoiSet& rois, const std::vector<CountEstimate>& estimates,
                                 double alpha) {
  if (rois.rois.size() != estimates.size())
    throw std::invalid_argument("build_molecular_map: region/estimate count mismatch");
  for (std::size_t i = 0; i < estimates.size(); ++i)
    if (rois.rois[i].id != estimates[i].id)
      throw std::invalid_argument("build_molecular_map: mismatched region ids");
  MolecularMap map;
  map.alpha = alpha;
  map.M = static_cast<int>(estimates.size());
  map.rois = rois;
  map.estimates = estimates;
  return map;
}

}  // namespace molmap

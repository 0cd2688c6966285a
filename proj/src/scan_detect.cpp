#include "molmap/scan_detect.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <stdexcept>

#include "molmap/parallel.hpp"
#include "molmap/rng.hpp"

namespace molmap {

namespace {

std::mutex fftw_mutex;  // FFTW planning is not thread-safe

std::vector<std::complex<double>> fft2_r2c(int n, const std::vector<double>& in) {
  int nc = n / 2 + 1;
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n) * nc);
  std::vector<double> buf = in;
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    plan = fftw_plan_dft_r2c_2d(n, n, buf.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> ifft2_c2r(int n, std::vector<std::complex<double>> spec) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    plan = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(spec.data()), out.data(),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex);
    fftw_destroy_plan(plan);
  }
  double scale = 1.0 / (static_cast<double>(n) * n);
  for (double& v : out) v *= scale;
  return out;
}

double scale_penalty(int n, int h1, int h2) {
  return std::sqrt(2.0 * std::log(static_cast<double>(n) * n / (static_cast<double>(h1) * h2)));
}

constexpr double kNeverSelected = -1e30;

}  // namespace

int default_stride(int h1, int h2) { return std::max(1, std::min(h1, h2) / 2); }

std::vector<Box> build_box_system(int n, const std::vector<std::pair<int, int>>& scales,
                                  int stride) {
  if (scales.empty()) throw std::invalid_argument("build_box_system: no scales given");
  std::vector<Box> boxes;
  for (auto [h1, h2] : scales) {
    if (h1 < 1 || h2 < 1 || h1 > n || h2 > n)
      throw std::invalid_argument("build_box_system: scale outside [1, n]");
    int st = stride > 0 ? stride : default_stride(h1, h2);
    for (int y = 0; y + h2 <= n; y += st)
      for (int x = 0; x + h1 <= n; x += st) boxes.push_back(Box{x, y, h1, h2});
  }
  return boxes;
}

std::vector<std::pair<int, int>> default_scales(int n, double sted_fwhm_px) {
  std::vector<std::pair<int, int>> scales;
  int h = std::max(2, static_cast<int>(std::ceil(sted_fwhm_px)));
  while (h <= std::max(2, n / 4)) {
    scales.emplace_back(h, h);
    h *= 2;
  }
  if (scales.empty()) scales.emplace_back(std::min(2, n), std::min(2, n));
  return scales;
}

ProbeBank build_probe_bank(int n, const Psf& psf, const std::vector<std::pair<int, int>>& scales,
                           double tau_rel) {
  ProbeBank bank;
  bank.n = n;
  bank.scales = scales;

  // PSF on the torus, peak at (0,0)
  std::vector<double> hker(static_cast<std::size_t>(n) * n, 0.0);
  int r = psf.radius();
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      double v = psf.at_offset(dx, dy);
      if (v <= 0.0) continue;
      int x = ((dx % n) + n) % n;
      int y = ((dy % n) + n) % n;
      hker[static_cast<std::size_t>(y) * n + x] += v;
    }
  auto hspec = fft2_r2c(n, hker);
  double hmax = 0.0;
  for (auto& c : hspec) hmax = std::max(hmax, std::abs(c));
  double tau = tau_rel * hmax;

  for (auto [h1, h2] : scales) {
    // Smooth separable bump on the box at the origin.
    std::vector<double> phi(static_cast<std::size_t>(n) * n, 0.0);
    for (int y = 0; y < h2 && y < n; ++y) {
      double by = std::sin(M_PI * (y + 0.5) / h2);
      for (int x = 0; x < h1 && x < n; ++x) {
        double bx = std::sin(M_PI * (x + 0.5) / h1);
        phi[static_cast<std::size_t>(y) * n + x] = bx * bx * by * by;
      }
    }
    auto phispec = fft2_r2c(n, phi);
    // Tikhonov-regularized spectral division by the PSF.
    for (std::size_t i = 0; i < phispec.size(); ++i)
      phispec[i] = phispec[i] * std::conj(hspec[i]) / (std::norm(hspec[i]) + tau * tau);
    auto probe = ifft2_c2r(n, phispec);

    double sq = 0.0;
    for (double v : probe) sq += v * v;
    bank.probe_sq_norm.push_back(sq);
    auto spec = fft2_r2c(n, probe);
    for (auto& c : spec) c = std::conj(c);
    bank.probe_spec_conj.push_back(std::move(spec));
    bank.probes.push_back(std::move(probe));
  }
  return bank;
}

GridD correlation_image(const GridD& y1, std::int64_t t, double background, const ProbeBank& bank,
                        int scale_idx) {
  if (y1.n != bank.n) throw std::invalid_argument("correlation_image: size mismatch");
  std::vector<double> centered(y1.v);
  double off = static_cast<double>(t) * background;
  for (double& v : centered) v -= off;
  auto spec = fft2_r2c(bank.n, centered);
  const auto& pspec = bank.probe_spec_conj[scale_idx];
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= pspec[i];
  auto corr = ifft2_c2r(bank.n, std::move(spec));
  GridD out(bank.n);
  out.v = std::move(corr);
  return out;
}

double null_sigma(std::int64_t t, double background, const ProbeBank& bank, int scale_idx) {
  double var = static_cast<double>(t) * background * (1.0 - background) *
               bank.probe_sq_norm[scale_idx];
  return std::sqrt(std::max(var, 0.0));
}

double probe_statistic(const GridD& y1, std::int64_t t, const Psf& psf, const Box& box,
                       double background) {
  if (box.x < 0 || box.y < 0 || box.x + box.w > y1.n || box.y + box.h > y1.n)
    throw std::invalid_argument("probe_statistic: box outside image");
  auto bank = build_probe_bank(y1.n, psf, {{box.w, box.h}});
  auto corr = correlation_image(y1, t, background, bank, 0);
  double sigma = std::max(null_sigma(t, background, bank, 0), 1e-12);
  return corr.at(box.x, box.y) / sigma;
}

std::uint64_t calibration_key(int n, std::int64_t t, double background,
                              const std::vector<std::pair<int, int>>& scales, int stride) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  mix(static_cast<std::uint64_t>(n));
  mix(static_cast<std::uint64_t>(t));
  std::uint64_t bg_bits;
  static_assert(sizeof(bg_bits) == sizeof(background));
  std::memcpy(&bg_bits, &background, sizeof(bg_bits));
  mix(bg_bits);
  mix(static_cast<std::uint64_t>(stride));
  for (auto [a, b] : scales) {
    mix(static_cast<std::uint64_t>(a));
    mix(static_cast<std::uint64_t>(b));
  }
  return h;
}

double penalized_max(const GridD& y1, std::int64_t t, const ProbeBank& bank,
                     const std::vector<double>& omega, int stride, double background) {
  int n = bank.n;
  double best = kNeverSelected;
  for (std::size_t s = 0; s < bank.scales.size(); ++s) {
    auto [h1, h2] = bank.scales[s];
    int st = stride > 0 ? stride : default_stride(h1, h2);
    auto corr = correlation_image(y1, t, background, bank, static_cast<int>(s));
    double sigma = std::max(null_sigma(t, background, bank, static_cast<int>(s)), 1e-12);
    for (int y = 0; y + h2 <= n; y += st)
      for (int x = 0; x + h1 <= n; x += st) {
        double c = corr.at(x, y);
        if (c <= 0.0) continue;
        best = std::max(best, c / sigma - omega[s]);
      }
  }
  return best;
}

ScanCalibration calibrate_quantiles(int n, const Psf& psf,
                                    const std::vector<std::pair<int, int>>& scales, int stride,
                                    std::int64_t t, double background, double alpha, int n_sim,
                                    std::uint64_t seed) {
  if (n_sim < 1) throw std::invalid_argument("calibrate_quantiles: n_sim must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("calibrate_quantiles: alpha must lie in (0, 1)");

  auto bank = build_probe_bank(n, psf, scales);
  std::vector<double> omega;
  for (auto [h1, h2] : scales) omega.push_back(scale_penalty(n, h1, h2));

  // One-photon null probability: background modeled as a single pseudo-emitter.
  double p1 = background;

  std::vector<double> maxima(n_sim);
  parallel_for(n_sim, [&](std::int64_t rep) {
    auto rng = substream(seed, static_cast<std::uint64_t>(rep) + 0xabcdULL);
    GridD y1(n);
    if (p1 > 0.0) {
      std::binomial_distribution<std::int64_t> bin(t, p1);
      for (auto& v : y1.v) v = static_cast<double>(bin(rng));
    }
    maxima[rep] = penalized_max(y1, t, bank, omega, stride, background);
  });
  std::sort(maxima.begin(), maxima.end());
  int idx = std::clamp(static_cast<int>(std::ceil((1.0 - alpha) * n_sim)) - 1, 0, n_sim - 1);
  double c = maxima[idx];

  ScanCalibration cal;
  cal.n = n;
  cal.t = t;
  cal.background = background;
  cal.alpha = alpha;
  cal.n_sim = n_sim;
  cal.stride = stride;
  cal.scales = scales;
  cal.omega = omega;
  cal.c_global = c;
  for (double w : omega) cal.crit.push_back(c + w);
  cal.key = calibration_key(n, t, background, scales, stride);
  return cal;
}

BoxSet select_significant(const GridD& y1, std::int64_t t, const Psf& psf,
                          const ScanCalibration& cal) {
  if (y1.n != cal.n || t != cal.t)
    throw std::invalid_argument("select_significant: calibration does not match the image");
  auto bank = build_probe_bank(cal.n, psf, cal.scales);

  BoxSet out;
  for (std::size_t s = 0; s < cal.scales.size(); ++s) {
    auto [h1, h2] = cal.scales[s];
    int st = cal.stride > 0 ? cal.stride : default_stride(h1, h2);
    auto corr = correlation_image(y1, t, cal.background, bank, static_cast<int>(s));
    double sigma = std::max(null_sigma(t, cal.background, bank, static_cast<int>(s)), 1e-12);
    for (int y = 0; y + h2 <= cal.n; y += st)
      for (int x = 0; x + h1 <= cal.n; x += st) {
        double c = corr.at(x, y);
        if (c <= 0.0) continue;
        double stat = c / sigma;
        if (stat >= cal.crit[s])
          out.boxes.push_back(ScoredBox{Box{x, y, h1, h2}, stat - cal.omega[s] - cal.c_global});
      }
  }
  return out;
}

BoxSet prune_minimal(const BoxSet& bs) {
  BoxSet out;
  const auto& b = bs.boxes;
  for (std::size_t i = 0; i < b.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (i == j) continue;
      if (b[i].box.contains(b[j].box) && !(b[j].box == b[i].box)) {
        keep = false;
        break;
      }
    }
    if (keep) out.boxes.push_back(b[i]);
  }
  return out;
}

}  // namespace molmap

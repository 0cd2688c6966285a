#pragma once
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "molmap/core_model.hpp"
#include "molmap/grid.hpp"

namespace molmap {

/// Axis-aligned box; x,y = top-left pixel (0-based), w,h = side lengths.
struct Box {
  int x{0}, y{0}, w{0}, h{0};

  long area() const { return static_cast<long>(w) * h; }
  bool contains(int px, int py) const {
    return px >= x && py >= y && px < x + w && py < y + h;
  }
  bool contains(const Box& o) const {
    return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
  }
  bool intersects(const Box& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  bool operator==(const Box& o) const = default;
};

struct ScoredBox {
  Box box;
  double score{0.0};  // penalized statistic excess over the critical value
};

struct BoxSet {
  std::vector<ScoredBox> boxes;
};

/// All stride-translates of each scale fully inside [0,n)^2.
/// stride 0 selects the default max(1, min(h1,h2)/2) per scale.
std::vector<Box> build_box_system(int n, const std::vector<std::pair<int, int>>& scales,
                                  int stride = 0);

int default_stride(int h1, int h2);

/// Default dyadic scales from the STED FWHM up to n/4.
std::vector<std::pair<int, int>> default_scales(int n, double sted_fwhm_px);

/// PSF-adapted probes: smooth separable bump per scale, spectrum divided by
/// the PSF spectrum with a Tikhonov floor. Built on the n x n torus.
struct ProbeBank {
  int n{0};
  std::vector<std::pair<int, int>> scales;
  std::vector<std::vector<double>> probes;          // per scale, n*n, box at origin
  std::vector<double> probe_sq_norm;                // sum Phi^2 per scale
  std::vector<std::vector<std::complex<double>>> probe_spec_conj;  // r2c half-spectra
};

ProbeBank build_probe_bank(int n, const Psf& psf, const std::vector<std::pair<int, int>>& scales,
                           double tau_rel = 1e-3);

/// Raw correlation <Y - t*bg, Phi_{x,h}> for every top-left position x.
GridD correlation_image(const GridD& y1, std::int64_t t, double background, const ProbeBank& bank,
                        int scale_idx);

/// Null standard deviation of the correlation for one scale.
double null_sigma(std::int64_t t, double background, const ProbeBank& bank, int scale_idx);

/// Single-box statistic (correlation normalized to unit null variance).
double probe_statistic(const GridD& y1, std::int64_t t, const Psf& psf, const Box& box,
                       double background);

struct ScanCalibration {
  int n{0};
  std::int64_t t{0};
  double background{0.0};
  double alpha{0.0};
  int n_sim{0};
  int stride{0};
  std::vector<std::pair<int, int>> scales;
  std::vector<double> omega;  // scale penalties
  std::vector<double> crit;   // per-scale critical values c + omega
  double c_global{0.0};       // (1-alpha)-quantile of the penalized max
  std::uint64_t key{0};       // hash of (n, t, background, scales, stride)
};

std::uint64_t calibration_key(int n, std::int64_t t, double background,
                              const std::vector<std::pair<int, int>>& scales, int stride);

ScanCalibration calibrate_quantiles(int n, const Psf& psf,
                                    const std::vector<std::pair<int, int>>& scales, int stride,
                                    std::int64_t t, double background, double alpha, int n_sim,
                                    std::uint64_t seed);

/// Boxes whose statistic reaches the calibrated critical value.
BoxSet select_significant(const GridD& y1, std::int64_t t, const Psf& psf,
                          const ScanCalibration& cal);

/// Penalized maximum statistic of one image (used by calibration and tests).
double penalized_max(const GridD& y1, std::int64_t t, const ProbeBank& bank,
                     const std::vector<double>& omega, int stride, double background);

/// Keep only boxes that contain no other member as a strict subset.
BoxSet prune_minimal(const BoxSet& bs);

}  // namespace molmap

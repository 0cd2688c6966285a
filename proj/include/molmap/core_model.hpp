#pragma once
#include <utility>
#include <vector>

#include "molmap/grid.hpp"

namespace molmap {

struct Molecule {
  int x{0};  // column, 0-based
  int y{0};  // row, 0-based
  double p{0.0};  // per-pulse detection probability at peak illumination
};

/// The sample being imaged: molecule positions on an n x n pixel grid plus
/// individual brightness values.
struct GroundTruth {
  int n{0};
  std::vector<Molecule> molecules;

  /// Throws std::invalid_argument on off-grid positions or brightness
  /// outside (0, 0.5).
  void validate() const;
};

enum class PsfMode { confocal, sted };

/// Discrete point-spread kernel on an odd-sized square support, peak value 1
/// at the center.
struct Psf {
  GridD kernel;
  double fwhm_px{0.0};
  PsfMode mode{PsfMode::confocal};

  int radius() const { return kernel.n / 2; }
  double at_offset(int dx, int dy) const {
    int r = radius();
    if (dx < -r || dx > r || dy < -r || dy > r) return 0.0;
    return kernel.at(dx + r, dy + r);
  }
};

/// Peak-normalized Gaussian kernel, sigma = fwhm / (2 sqrt(2 ln 2)).
/// Values below 1e-6 of the peak are truncated to keep the support compact.
Psf gaussian_psf(double fwhm_px, int support, PsfMode mode = PsfMode::confocal);

/// Per-pixel sparse list of (molecule index, detection probability).
struct DetectionField {
  int n{0};
  int n_molecules{0};
  std::vector<std::vector<std::pair<int, double>>> entries;  // one list per pixel

  double eps_at(int pixel, int molecule) const {
    for (const auto& [j, e] : entries[pixel])
      if (j == molecule) return e;
    return 0.0;
  }
};

/// eps_j(x_i) = p_j * h(x_i - x_psi(j)). Throws on probability overflow.
DetectionField detection_field(const GroundTruth& gt, const Psf& psf);

struct PsfPowerSums {
  std::vector<double> H;  // H[l-1] = sum_i kernel(x_i)^l
  double at(int l) const { return H.at(static_cast<std::size_t>(l) - 1); }
};

PsfPowerSums psf_power_sums(const Psf& psf, int lmax);

}  // namespace molmap

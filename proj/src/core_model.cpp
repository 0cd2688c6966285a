#include "molmap/core_model.hpp"

#include <cmath>
#include <stdexcept>

namespace molmap {

void GroundTruth::validate() const {
  if (n <= 0) throw std::invalid_argument("GroundTruth: grid side must be positive");
  for (const auto& m : molecules) {
    if (m.x < 0 || m.y < 0 || m.x >= n || m.y >= n)
      throw std::invalid_argument("GroundTruth: molecule position off the grid");
    if (!(m.p > 0.0 && m.p < 0.5))
      throw std::invalid_argument("GroundTruth: brightness must lie in (0, 0.5)");
  }
}

Psf gaussian_psf(double fwhm_px, int support, PsfMode mode) {
  if (!(fwhm_px > 0.0)) throw std::invalid_argument("gaussian_psf: fwhm must be positive");
  if (support < 3 || support % 2 == 0)
    throw std::invalid_argument("gaussian_psf: support must be odd and >= 3");

  const double sigma = fwhm_px / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  Psf psf;
  psf.kernel = GridD(support);
  psf.fwhm_px = fwhm_px;
  psf.mode = mode;
  const int r = support / 2;
  for (int y = 0; y < support; ++y) {
    for (int x = 0; x < support; ++x) {
      double dx = x - r, dy = y - r;
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      psf.kernel.at(x, y) = (v < 1e-6) ? 0.0 : v;
    }
  }
  return psf;
}

DetectionField detection_field(const GroundTruth& gt, const Psf& psf) {
  gt.validate();
  DetectionField field;
  field.n = gt.n;
  field.n_molecules = static_cast<int>(gt.molecules.size());
  field.entries.resize(static_cast<std::size_t>(gt.n) * gt.n);

  const int r = psf.radius();
  for (int j = 0; j < field.n_molecules; ++j) {
    const auto& m = gt.molecules[j];
    if (m.p * psf.at_offset(0, 0) >= 1.0)
      throw std::domain_error("detection_field: detection probability >= 1");
    for (int dy = -r; dy <= r; ++dy) {
      int y = m.y + dy;
      if (y < 0 || y >= gt.n) continue;
      for (int dx = -r; dx <= r; ++dx) {
        int x = m.x + dx;
        if (x < 0 || x >= gt.n) continue;
        double h = psf.at_offset(dx, dy);
        if (h <= 0.0) continue;
        field.entries[static_cast<std::size_t>(y) * gt.n + x].emplace_back(j, m.p * h);
      }
    }
  }
  return field;
}

PsfPowerSums psf_power_sums(const Psf& psf, int lmax) {
  if (lmax < 2) throw std::invalid_argument("psf_power_sums: lmax must be >= 2");
  PsfPowerSums sums;
  sums.H.assign(lmax, 0.0);
  for (double h : psf.kernel.v) {
    if (h <= 0.0) continue;
    double hp = h;
    for (int l = 0; l < lmax; ++l) {
      sums.H[l] += hp;
      hp *= h;
    }
  }
  return sums;
}

}  // namespace molmap

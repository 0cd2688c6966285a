#pragma once
#include <vector>

#include "molmap/grid.hpp"

namespace molmap {

/// Disjoint label map; label 0 = unassigned, segments are 4-connected.
struct Segmentation {
  int n{0};
  GridI labels;
  std::vector<std::vector<int>> segment_pixels;  // per label-1, linear pixel indices

  int n_segments() const { return static_cast<int>(segment_pixels.size()); }
};

/// Gaussian smoothing (separable, sigma from FWHM). smooth_fwhm <= 0 skips it.
GridD gaussian_smooth(const GridD& img, double smooth_fwhm);

/// Watershed of the smoothed image: h-maxima suppression with depth hmin,
/// Meyer flooding from the remaining regional maxima. Pixels with smoothed
/// intensity below fg_threshold are left unassigned (label 0);
/// fg_threshold <= 0 keeps everything.
Segmentation watershed(const GridD& img, double smooth_fwhm, double hmin,
                       double fg_threshold = 0.0);

/// Default basin depth: Anscombe-motivated noise floor 2*sqrt(max intensity).
double default_hmin(const GridD& smoothed);

}  // namespace molmap

#pragma once
#include <span>
#include <string>
#include <vector>

#include "molmap/core_model.hpp"
#include "molmap/hybridize.hpp"
#include "molmap/simulator.hpp"

namespace molmap {

/// Sentinel for unbounded upper confidence limits.
inline constexpr double kUnboundedCi = 1e300;

struct EnlargedRegion {
  int id{0};
  std::vector<int> base_pixels;
  std::vector<int> pixels;  // base plus dilation, sorted
  double eps_px{0.0};
  bool box_validated{true};
};

/// Dilate each region by Euclidean distance eps_px; growth freezes at the
/// equidistant frontier between regions so enlargements stay disjoint.
std::vector<EnlargedRegion> enlarge_regions(const RoiSet& rois, double eps_px);

/// Per-pulse single-photon background rate: robust low quantile of the
/// heavily smoothed one-photon rate image.
double estimate_background(const CoincidenceImage& confocal);

struct RegionEstimate {
  int id{0};
  double n_hat{0.0};
  double p_hat{0.0};
  double sum_s1{0.0};
  double sum_s2{0.0};
  int degenerate_pixels{0};
  bool identified{true};
  bool box_validated{true};
  std::vector<int> pixels;
  std::vector<double> d_hat;  // background-corrected D_0..D_md per pixel, concatenated
};

std::vector<RegionEstimate> estimate_counts(const CoincidenceImage& confocal,
                                            const std::vector<EnlargedRegion>& regions,
                                            const PsfPowerSums& H, double background);

/// The count functional: d = (D_1..D_md) per pixel concatenated, region sums
/// of the first two recovered power-sum orders, ratio of the count identity.
double psi_value(std::span<const double> d, const PsfPowerSums& H, int md);

/// Central finite differences with Richardson refinement (base step 1e-6).
std::vector<double> gradient_psi(std::span<const double> d, const PsfPowerSums& H, int md,
                                 bool* flagged = nullptr);

struct CountEstimate {
  int id{0};
  double n_hat{0.0};
  double p_hat{0.0};
  double sigma{0.0};
  double ci_lo{0.0};
  double ci_hi{0.0};
  int degenerate_pixels{0};
  std::vector<std::string> flags;
};

/// Simultaneous two-sided intervals: z_{1 - alpha/(4M)} * sigma_R / sqrt(t),
/// lower bound clipped at 0 and floored at 1 for box-validated regions.
std::vector<CountEstimate> confidence_intervals(const std::vector<RegionEstimate>& estimates,
                                                const CoincidenceImage& confocal,
                                                const PsfPowerSums& H, double alpha, int M);

struct MolecularMap {
  double alpha{0.0};
  int M{0};
  RoiSet rois;
  std::vector<CountEstimate> estimates;
};

MolecularMap build_molecular_map(const RoiSet& rois, const std::vector<CountEstimate>& estimates,
                                 double alpha);

/// Standard normal quantile function.
double normal_quantile(double p);

}  // namespace molmap

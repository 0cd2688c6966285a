#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "molmap/core_model.hpp"

namespace molmap {

/// Per-pixel coincidence counts: planes[k][pixel] = number of pulses with
/// exactly k active detectors; sum_k planes[k][pixel] == t everywhere.
struct CoincidenceImage {
  int n{0};
  int md{0};
  std::int64_t t{0};
  PsfMode mode{PsfMode::confocal};
  double background_rate{0.0};
  std::vector<std::vector<std::int64_t>> planes;  // md+1 planes, each n*n

  /// One-photon plane as doubles (for scan statistics / segmentation).
  GridD one_photon() const;
};

CoincidenceImage simulate_image(const GroundTruth& gt, const Psf& psf, std::int64_t t, int md,
                                std::uint64_t seed, double background_rate = 0.0);

std::pair<CoincidenceImage, CoincidenceImage> simulate_pair(
    const GroundTruth& gt, const Psf& psf_confocal, const Psf& psf_sted, std::int64_t t_confocal,
    std::int64_t t_sted, int md, std::uint64_t seed, double background_rate = 0.0);

/// Exact per-pixel detector distributions D_0..D_md (the sampling
/// distribution before the multinomial draw).
std::vector<std::vector<double>> expected_detector_field(const GroundTruth& gt, const Psf& psf,
                                                         int md, double background_rate = 0.0);

}  // namespace molmap

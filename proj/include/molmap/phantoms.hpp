#pragma once
#include <cstdint>
#include <string>

#include "molmap/core_model.hpp"

namespace molmap {

/// Compact clusters of molecules, well separated on the grid.
GroundTruth clusters_phantom(int n, std::uint64_t seed, int n_clusters = 6,
                             int min_count = 5, int max_count = 25, double brightness = 0.02);

/// Curvilinear structures from smoothed random walks.
GroundTruth filaments_phantom(int n, std::uint64_t seed, int n_filaments = 3,
                              double brightness = 0.02);

GroundTruth phantom_by_name(const std::string& name, int n, std::uint64_t seed);

}  // namespace molmap

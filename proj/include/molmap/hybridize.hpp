#pragma once
#include <vector>

#include "molmap/scan_detect.hpp"
#include "molmap/watershed.hpp"

namespace molmap {

struct Roi {
  int id{0};
  std::vector<int> pixels;             // linear indices, sorted
  std::vector<Box> validating_boxes;   // boxes contained in this region
  double score{0.0};
};

struct RoiSet {
  int n{0};
  std::vector<Roi> rois;
};

/// Merge the FWER-controlled box set with a disjoint segmentation. Every
/// output region is disjoint from the others and contains at least one input
/// box, so the at-least-one-molecule guarantee carries over.
RoiSet hybridize(const BoxSet& boxes, const Segmentation& seg);

}  // namespace molmap

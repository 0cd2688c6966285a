#pragma once
#include <string>

#include "molmap/counting.hpp"
#include "molmap/hybridize.hpp"
#include "molmap/scan_detect.hpp"
#include "molmap/simulator.hpp"
#include "molmap/watershed.hpp"

namespace molmap {

// Ground truth: {"n": int, "molecules": [{"x": int, "y": int, "p": float}]},
// coordinates 1-based in files.
std::string ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const std::string& text);

// Coincidence data: {"n","md","t","mode","background_rate","planes":[...]},
// planes row-major, one array per coincidence order.
std::string coincidence_to_json(const CoincidenceImage& img);
CoincidenceImage coincidence_from_json(const std::string& text);
void coincidence_planes_to_csv(const CoincidenceImage& img, const std::string& path_prefix);

std::string calibration_to_json(const ScanCalibration& cal);
ScanCalibration calibration_from_json(const std::string& text);

std::string roi_set_to_json(const RoiSet& rois);
RoiSet roi_set_from_json(const std::string& text);

std::string molecular_map_to_json(const MolecularMap& map, const std::string& config_hash = "");
MolecularMap molecular_map_from_json(const std::string& text);

/// CSV table: segment id, estimate, lower, upper (truth column when known).
std::string molecular_map_to_csv(const MolecularMap& map, const GroundTruth* truth = nullptr);

/// 16-bit PGM label map.
void write_label_pgm(const GridI& labels, const std::string& path);
void write_label_csv(const GridI& labels, const std::string& path);

/// Grayscale density image, fill shade proportional to N_hat / area.
void write_density_pgm(const MolecularMap& map, const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace molmap

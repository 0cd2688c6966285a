// Python bindings for the main molmap operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "molmap/counting.hpp"
#include "molmap/hybridize.hpp"
#include "molmap/io.hpp"
#include "molmap/phantoms.hpp"
#include "molmap/photon_transform.hpp"
#include "molmap/scan_detect.hpp"
#include "molmap/simulator.hpp"
#include "molmap/watershed.hpp"

namespace py = pybind11;
using namespace molmap;

namespace {

GroundTruth make_truth(int n, const std::vector<std::tuple<int, int, double>>& molecules) {
  GroundTruth gt;
  gt.n = n;
  for (const auto& [x, y, p] : molecules) gt.molecules.push_back(Molecule{x, y, p});
  gt.validate();
  return gt;
}

std::vector<std::tuple<int, int, double>> truth_list(const GroundTruth& gt) {
  std::vector<std::tuple<int, int, double>> out;
  for (const auto& m : gt.molecules) out.emplace_back(m.x, m.y, m.p);
  return out;
}

// Full analysis of a simulated (sted, confocal) pair; returns the molecular
// map as a JSON string.
std::string analyze(const CoincidenceImage& sted, const CoincidenceImage& confocal,
                    double sted_fwhm, double confocal_fwhm, double alpha, int n_sim,
                    std::uint64_t calib_seed) {
  int support_s = 2 * (static_cast<int>(std::ceil(2.3 * sted_fwhm)) + 1) + 1;
  int support_c = 2 * (static_cast<int>(std::ceil(2.3 * confocal_fwhm)) + 1) + 1;
  Psf ps = gaussian_psf(sted_fwhm, support_s, PsfMode::sted);
  Psf pc = gaussian_psf(confocal_fwhm, support_c, PsfMode::confocal);

  auto scales = default_scales(sted.n, sted_fwhm);
  ScanCalibration cal = calibrate_quantiles(sted.n, ps, scales, 0, sted.t,
                                            sted.background_rate, alpha / 2.0, n_sim, calib_seed);
  GridD y1 = sted.one_photon();
  BoxSet boxes = prune_minimal(select_significant(y1, sted.t, ps, cal));
  GridD smoothed = gaussian_smooth(y1, sted_fwhm);
  Segmentation seg = watershed(y1, sted_fwhm, default_hmin(smoothed));
  RoiSet rois = hybridize(boxes, seg);

  auto regions = enlarge_regions(rois, confocal_fwhm);
  double background = confocal.background_rate > 0.0 ? confocal.background_rate
                                                     : estimate_background(confocal);
  PsfPowerSums H = psf_power_sums(pc, std::max(2, confocal.md));
  auto raw = estimate_counts(confocal, regions, H, background);
  int M = std::max<int>(1, static_cast<int>(raw.size()));
  auto cis = confidence_intervals(raw, confocal, H, alpha / 2.0, M);
  return molecular_map_to_json(build_molecular_map(rois, cis, alpha));
}

}  // namespace

PYBIND11_MODULE(_molmap, m) {
  m.doc() = "antibunching microscopy simulation and molecule counting";

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init(&make_truth), py::arg("n"), py::arg("molecules"))
      .def_readonly("n", &GroundTruth::n)
      .def_property_readonly("molecules", &truth_list)
      .def("to_json", &ground_truth_to_json)
      .def_static("from_json", &ground_truth_from_json);

  py::class_<CoincidenceImage>(m, "CoincidenceImage")
      .def_readonly("n", &CoincidenceImage::n)
      .def_readonly("md", &CoincidenceImage::md)
      .def_readonly("t", &CoincidenceImage::t)
      .def_readonly("planes", &CoincidenceImage::planes)
      .def("to_json", &coincidence_to_json)
      .def_static("from_json", &coincidence_from_json);

  m.def("clusters_phantom", &clusters_phantom, py::arg("n"), py::arg("seed"),
        py::arg("n_clusters") = 6, py::arg("min_count") = 5, py::arg("max_count") = 25,
        py::arg("brightness") = 0.02);

  m.def(
      "simulate",
      [](const GroundTruth& gt, double fwhm, std::int64_t t, int md, std::uint64_t seed,
         double background, bool sted) {
        int support = 2 * (static_cast<int>(std::ceil(2.3 * fwhm)) + 1) + 1;
        Psf psf = gaussian_psf(fwhm, support, sted ? PsfMode::sted : PsfMode::confocal);
        return simulate_image(gt, psf, t, md, seed, background);
      },
      py::arg("truth"), py::arg("fwhm"), py::arg("t"), py::arg("md"), py::arg("seed"),
      py::arg("background") = 0.0, py::arg("sted") = false);

  m.def(
      "forward_transform",
      [](const std::vector<double>& s, int md) { return forward_transform(s, md); },
      py::arg("power_sums"), py::arg("md"),
      "detector-count probabilities D_0..D_md from power sums");
  m.def(
      "inverse_transform",
      [](const std::vector<double>& D) {
        auto r = inverse_transform(D);
        return py::make_tuple(r.degenerate, r.s);
      },
      py::arg("D"), "(degenerate, power sums) recovered from D_0..D_md");
  m.def(
      "exact_detector_distribution",
      [](const std::vector<double>& eps, int md) { return exact_detector_distribution(eps, md); },
      py::arg("eps"), py::arg("md"));

  m.def(
      "watershed_labels",
      [](const CoincidenceImage& img, double smooth_fwhm) {
        GridD y1 = img.one_photon();
        Segmentation seg =
            watershed(y1, smooth_fwhm, default_hmin(gaussian_smooth(y1, smooth_fwhm)));
        return seg.labels.v;
      },
      py::arg("image"), py::arg("smooth_fwhm"), "row-major watershed label map");

  m.def("analyze", &analyze, py::arg("sted"), py::arg("confocal"), py::arg("sted_fwhm"),
        py::arg("confocal_fwhm"), py::arg("alpha") = 0.1, py::arg("n_sim") = 200,
        py::arg("calib_seed") = 12345,
        "segment + count a simulated pair; returns the molecular map as JSON");
}

// molmap — simulate antibunching coincidence data and compute molecular maps.
//
// Subcommands: simulate | segment | count | pipeline | experiment.
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "molmap/counting.hpp"
#include "molmap/hybridize.hpp"
#include "molmap/io.hpp"
#include "molmap/parallel.hpp"
#include "molmap/phantoms.hpp"
#include "molmap/rng.hpp"
#include "molmap/photon_transform.hpp"
#include "molmap/scan_detect.hpp"
#include "molmap/simulator.hpp"
#include "molmap/watershed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace molmap;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  int n = 64;
  std::string phantom = "clusters";  // ignored when truth_file set
  std::string truth_file;
  int md = 4;
  std::int64_t t_confocal = 3000;
  std::int64_t t_sted = 3000;
  double confocal_fwhm = 8.0;
  double sted_fwhm = 4.0;
  double background = 0.0;
  double alpha = 0.1;
  double alpha_split = 0.5;  // fraction of alpha spent on segmentation
  std::uint64_t seed = 1;
  std::string out = "out";

  // scan-detect
  int scan_n_sim = 400;
  int scan_stride = 0;  // 0 -> per-scale default
  std::vector<std::pair<int, int>> scan_scales;  // empty -> default dyadic set
  std::uint64_t calib_seed = 12345;

  // watershed
  double smooth_fwhm = 0.0;  // <= 0 -> STED FWHM
  double hmin = 0.0;         // <= 0 -> noise-floor default
  double fg_threshold = 0.0;

  // counting
  double enlarge_px = 0.0;  // <= 0 -> confocal FWHM

  // experiment
  std::string experiment;
  int replicates = 0;  // 0 -> per-experiment default

  std::string hash;  // hex digest of the parsed config
};

std::string fnv_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::vector<std::pair<int, int>> scales_from_json(const json& j) {
  std::vector<std::pair<int, int>> scales;
  for (const auto& e : j)
    scales.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  return scales;
}

PipelineConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override,
                           const std::string& out_override) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  PipelineConfig c;
  try {
    c.n = j.value("n", c.n);
    c.phantom = j.value("phantom", c.phantom);
    c.truth_file = j.value("truth_file", c.truth_file);
    c.md = j.value("md", c.md);
    c.t_confocal = j.value("t_confocal", c.t_confocal);
    c.t_sted = j.value("t_sted", c.t_sted);
    c.confocal_fwhm = j.value("confocal_fwhm", c.confocal_fwhm);
    c.sted_fwhm = j.value("sted_fwhm", c.sted_fwhm);
    c.background = j.value("background", c.background);
    c.alpha = j.value("alpha", c.alpha);
    c.alpha_split = j.value("alpha_split", c.alpha_split);
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    if (j.contains("scan")) {
      const auto& js = j["scan"];
      c.scan_n_sim = js.value("n_sim", c.scan_n_sim);
      c.scan_stride = js.value("stride", c.scan_stride);
      c.calib_seed = js.value("calib_seed", c.calib_seed);
      if (js.contains("scales")) c.scan_scales = scales_from_json(js["scales"]);
    }
    if (j.contains("watershed")) {
      const auto& jw = j["watershed"];
      c.smooth_fwhm = jw.value("smooth_fwhm", c.smooth_fwhm);
      c.hmin = jw.value("hmin", c.hmin);
      c.fg_threshold = jw.value("fg_threshold", c.fg_threshold);
    }
    if (j.contains("counting")) c.enlarge_px = j["counting"].value("enlarge_px", c.enlarge_px);
    if (j.contains("experiment")) {
      if (j["experiment"].is_string()) {
        c.experiment = j["experiment"].get<std::string>();
      } else {
        c.experiment = j["experiment"].value("name", c.experiment);
        c.replicates = j["experiment"].value("replicates", c.replicates);
      }
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  if (seed_override) {
    c.seed = *seed_override;
    j["seed"] = c.seed;
  }
  if (!out_override.empty()) c.out = out_override;

  if (c.n < 8 || c.n > 4096) throw ConfigError("n out of range [8, 4096]");
  if (c.md < 2 || c.md > 8) throw ConfigError("md out of range [2, 8]");
  if (c.t_confocal < 1 || c.t_sted < 1) throw ConfigError("pulse counts must be positive");
  if (c.confocal_fwhm <= 0.0 || c.sted_fwhm <= 0.0) throw ConfigError("FWHMs must be positive");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (!(c.alpha_split > 0.0 && c.alpha_split < 1.0))
    throw ConfigError("alpha_split must lie in (0,1)");
  if (c.background < 0.0 || c.background >= 1.0)
    throw ConfigError("background must lie in [0,1)");
  c.hash = fnv_hash(j.dump());
  return c;
}

int psf_support(double fwhm) {
  // Wide enough that the 1e-6 truncation, not the window, sets the support.
  int r = static_cast<int>(std::ceil(2.3 * fwhm)) + 1;
  return 2 * r + 1;
}

Psf confocal_psf(const PipelineConfig& c) {
  return gaussian_psf(c.confocal_fwhm, psf_support(c.confocal_fwhm), PsfMode::confocal);
}
Psf sted_psf(const PipelineConfig& c) {
  return gaussian_psf(c.sted_fwhm, psf_support(c.sted_fwhm), PsfMode::sted);
}

GroundTruth load_truth(const PipelineConfig& c) {
  if (!c.truth_file.empty()) {
    try {
      return ground_truth_from_json(read_text_file(c.truth_file));
    } catch (const std::exception& e) {
      throw DataError(std::string("ground truth: ") + e.what());
    }
  }
  try {
    return phantom_by_name(c.phantom, c.n, c.seed);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

// Re-dump a JSON document with the config hash added for provenance.
std::string with_hash(const std::string& text, const std::string& hash, int indent = -1) {
  json j = json::parse(text);
  j["config_hash"] = hash;
  return j.dump(indent);
}

void write_out(const PipelineConfig& c, const std::string& name, const std::string& content) {
  fs::create_directories(c.out);
  write_text_file((fs::path(c.out) / name).string(), content);
}

// ---------------------------------------------------------------------------
// Calibration cache: in-memory per process plus JSON files in the output dir.

std::mutex calib_mutex;
std::map<std::uint64_t, ScanCalibration> calib_cache;

ScanCalibration get_calibration(const PipelineConfig& c) {
  auto scales = c.scan_scales.empty() ? default_scales(c.n, c.sted_fwhm) : c.scan_scales;
  double alpha_seg = c.alpha * c.alpha_split;
  std::uint64_t key = calibration_key(c.n, c.t_sted, c.background, scales, c.scan_stride);
  key = splitmix64(key ^ splitmix64(static_cast<std::uint64_t>(alpha_seg * 1e9)) ^
                   splitmix64(static_cast<std::uint64_t>(c.scan_n_sim)));
  {
    std::lock_guard<std::mutex> lock(calib_mutex);
    auto it = calib_cache.find(key);
    if (it != calib_cache.end()) return it->second;
  }
  fs::path cache_file = fs::path(c.out) / ("calibration_" + std::to_string(key) + ".json");
  if (fs::exists(cache_file)) {
    try {
      ScanCalibration cal = calibration_from_json(read_text_file(cache_file.string()));
      std::lock_guard<std::mutex> lock(calib_mutex);
      calib_cache[key] = cal;
      return cal;
    } catch (const std::exception&) {
      // fall through to recalibration on a corrupt cache file
    }
  }
  ScanCalibration cal = calibrate_quantiles(c.n, sted_psf(c), scales, c.scan_stride, c.t_sted,
                                            c.background, alpha_seg, c.scan_n_sim, c.calib_seed);
  fs::create_directories(c.out);
  write_text_file(cache_file.string(), calibration_to_json(cal));
  std::lock_guard<std::mutex> lock(calib_mutex);
  calib_cache[key] = cal;
  return cal;
}

// ---------------------------------------------------------------------------
// Pipeline stages.

struct PipelineResult {
  GroundTruth truth;
  CoincidenceImage confocal;
  CoincidenceImage sted;
  RoiSet rois;
  std::vector<EnlargedRegion> regions;
  std::vector<RegionEstimate> raw_estimates;
  MolecularMap map;
};

RoiSet segment_image(const PipelineConfig& c, const CoincidenceImage& sted) {
  if (sted.n != c.n) throw DataError("STED image size does not match config");
  ScanCalibration cal = get_calibration(c);
  GridD y1 = sted.one_photon();
  Psf psf = sted_psf(c);
  BoxSet boxes = prune_minimal(select_significant(y1, sted.t, psf, cal));
  double smooth = c.smooth_fwhm > 0.0 ? c.smooth_fwhm : c.sted_fwhm;
  GridD smoothed = gaussian_smooth(y1, smooth);
  double hmin = c.hmin > 0.0 ? c.hmin : default_hmin(smoothed);
  Segmentation seg = watershed(y1, smooth, hmin, c.fg_threshold);
  return hybridize(boxes, seg);
}

MolecularMap count_regions(const PipelineConfig& c, const CoincidenceImage& confocal,
                           const RoiSet& rois, std::vector<EnlargedRegion>* regions_out = nullptr,
                           std::vector<RegionEstimate>* raw_out = nullptr) {
  if (confocal.n != rois.n && !rois.rois.empty())
    throw DataError("region set and confocal image sizes differ");
  double eps = c.enlarge_px > 0.0 ? c.enlarge_px : c.confocal_fwhm;
  auto regions = enlarge_regions(rois, eps);
  double background = c.background > 0.0 ? c.background : estimate_background(confocal);
  PsfPowerSums H = psf_power_sums(confocal_psf(c), std::max(2, c.md));
  auto raw = estimate_counts(confocal, regions, H, background);
  double alpha_ci = c.alpha * (1.0 - c.alpha_split);
  int M = std::max<int>(1, static_cast<int>(raw.size()));
  auto cis = confidence_intervals(raw, confocal, H, alpha_ci, M);
  MolecularMap map = build_molecular_map(rois, cis, c.alpha);
  if (regions_out) *regions_out = std::move(regions);
  if (raw_out) *raw_out = std::move(raw);
  return map;
}

PipelineResult run_pipeline(const PipelineConfig& c) {
  PipelineResult r;
  r.truth = load_truth(c);
  Psf pc = confocal_psf(c), ps = sted_psf(c);
  auto pair = simulate_pair(r.truth, pc, ps, c.t_confocal, c.t_sted, c.md, c.seed, c.background);
  r.confocal = std::move(pair.first);
  r.sted = std::move(pair.second);
  r.rois = segment_image(c, r.sted);
  r.map = count_regions(c, r.confocal, r.rois, &r.regions, &r.raw_estimates);
  return r;
}

// ---------------------------------------------------------------------------
// Subcommand implementations.

void write_simulation(const PipelineConfig& c, const GroundTruth& gt,
                      const CoincidenceImage& confocal, const CoincidenceImage& sted) {
  write_out(c, "truth.json", with_hash(ground_truth_to_json(gt), c.hash, 2));
  write_out(c, "confocal.json", with_hash(coincidence_to_json(confocal), c.hash));
  write_out(c, "sted.json", with_hash(coincidence_to_json(sted), c.hash));
}

void write_segmentation(const PipelineConfig& c, const RoiSet& rois) {
  write_out(c, "regions.json", with_hash(roi_set_to_json(rois), c.hash));
  GridI labels(rois.n > 0 ? rois.n : c.n, 0);
  for (const auto& roi : rois.rois)
    for (int p : roi.pixels) labels[p] = roi.id;
  write_label_pgm(labels, (fs::path(c.out) / "labels.pgm").string());
  write_label_csv(labels, (fs::path(c.out) / "labels.csv").string());
}

void write_map(const PipelineConfig& c, const MolecularMap& map, const GroundTruth* truth) {
  write_out(c, "map.json", molecular_map_to_json(map, c.hash));
  std::string csv = "# config_hash=" + c.hash + "\n" + molecular_map_to_csv(map, truth);
  write_out(c, "map.csv", csv);
  write_density_pgm(map, (fs::path(c.out) / "density.pgm").string());
}

int cmd_simulate(const PipelineConfig& c) {
  GroundTruth gt = load_truth(c);
  auto pair = simulate_pair(gt, confocal_psf(c), sted_psf(c), c.t_confocal, c.t_sted, c.md,
                            c.seed, c.background);
  write_simulation(c, gt, pair.first, pair.second);
  std::cout << "simulate: wrote truth.json, confocal.json, sted.json to " << c.out << "\n";
  return 0;
}

CoincidenceImage load_image(const PipelineConfig& c, const std::string& name) {
  fs::path path = fs::path(c.out) / name;
  try {
    return coincidence_from_json(read_text_file(path.string()));
  } catch (const std::exception& e) {
    throw DataError(name + ": " + e.what());
  }
}

int cmd_segment(const PipelineConfig& c) {
  CoincidenceImage sted = load_image(c, "sted.json");
  RoiSet rois = segment_image(c, sted);
  write_segmentation(c, rois);
  std::cout << "segment: " << rois.rois.size() << " regions -> " << c.out << "\n";
  return 0;
}

int cmd_count(const PipelineConfig& c) {
  CoincidenceImage confocal = load_image(c, "confocal.json");
  RoiSet rois;
  try {
    rois = roi_set_from_json(read_text_file((fs::path(c.out) / "regions.json").string()));
  } catch (const std::exception& e) {
    throw DataError(std::string("regions.json: ") + e.what());
  }
  MolecularMap map = count_regions(c, confocal, rois);
  std::optional<GroundTruth> truth;
  fs::path truth_path = fs::path(c.out) / "truth.json";
  if (fs::exists(truth_path))
    truth = ground_truth_from_json(read_text_file(truth_path.string()));
  write_map(c, map, truth ? &*truth : nullptr);
  std::cout << "count: " << map.estimates.size() << " segments -> " << c.out << "\n";
  return 0;
}

int cmd_pipeline(const PipelineConfig& c) {
  PipelineResult r = run_pipeline(c);
  write_simulation(c, r.truth, r.confocal, r.sted);
  write_segmentation(c, r.rois);
  write_map(c, r.map, &r.truth);
  std::cout << "pipeline: " << r.map.estimates.size() << " segments -> " << c.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Replicate studies.

GroundTruth central_cluster(int n, int count, double p) {
  GroundTruth gt;
  gt.n = n;
  for (int j = 0; j < count; ++j) gt.molecules.push_back(Molecule{n / 2, n / 2, p});
  return gt;
}

// Region sums of the recovered power sums over the whole grid.
std::vector<double> grid_power_sums(const CoincidenceImage& img) {
  std::vector<double> sums(img.md, 0.0);
  std::vector<double> d(img.md + 1);
  double inv_t = 1.0 / static_cast<double>(img.t);
  for (int p = 0; p < img.n * img.n; ++p) {
    for (int k = 0; k <= img.md; ++k) d[k] = img.planes[k][p] * inv_t;
    auto inv = inverse_transform(d);
    if (inv.degenerate) continue;
    for (int k = 0; k < img.md; ++k) sums[k] += inv.s[k];
  }
  return sums;
}

int experiment_figure4(const PipelineConfig& cfg) {
  int n = 25, N = 20, reps = cfg.replicates > 0 ? cfg.replicates : 300;
  double p = 0.02;
  std::int64_t t = 10000;
  Psf psf = gaussian_psf(4.0, psf_support(4.0));
  GroundTruth gt = central_cluster(n, N, p);
  PsfPowerSums H = psf_power_sums(psf, cfg.md);

  std::vector<std::vector<double>> rows(reps);
  parallel_for(reps, [&](std::int64_t r) {
    auto img = simulate_image(gt, psf, t, cfg.md, cfg.seed + r);
    rows[r] = grid_power_sums(img);
  });

  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash << "\nreplicate";
  for (int k = 1; k <= cfg.md; ++k) csv << ",S" << k;
  csv << '\n';
  std::vector<double> mean(cfg.md, 0.0);
  for (int r = 0; r < reps; ++r) {
    csv << r;
    for (int k = 0; k < cfg.md; ++k) {
      csv << ',' << rows[r][k];
      mean[k] += rows[r][k] / reps;
    }
    csv << '\n';
  }
  csv << "mean";
  for (int k = 0; k < cfg.md; ++k) csv << ',' << mean[k];
  csv << "\ntruth";
  for (int k = 1; k <= cfg.md; ++k) csv << ',' << N * std::pow(p, k) * H.at(k);
  csv << '\n';
  write_out(cfg, "figure4.csv", csv.str());
  std::cout << "figure4: " << reps << " replicates -> figure4.csv\n";
  return 0;
}

struct NpEstimate {
  double n_hat, p_hat;
  bool ok;
};

NpEstimate np_from_sums(const std::vector<double>& sums, const PsfPowerSums& H) {
  double A = sums[0], B = sums[1];
  if (A <= 0.0 || B <= 0.0) return {0.0, 0.0, false};
  double n_hat = H.at(2) / (H.at(1) * H.at(1)) * A * A / B;
  double p_hat = H.at(1) * B / (H.at(2) * A);
  return {n_hat, p_hat, true};
}

int experiment_figure5(const PipelineConfig& cfg) {
  int n = 25, N = 10, reps = cfg.replicates > 0 ? cfg.replicates : 300;
  double p = 0.02;
  std::int64_t t = 10000;
  Psf psf = gaussian_psf(4.0, psf_support(4.0));
  GroundTruth gt = central_cluster(n, N, p);
  PsfPowerSums H = psf_power_sums(psf, 2);

  std::vector<NpEstimate> est(reps);
  parallel_for(reps, [&](std::int64_t r) {
    auto img = simulate_image(gt, psf, t, cfg.md, cfg.seed + r);
    est[r] = np_from_sums(grid_power_sums(img), H);
  });

  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash << "\nreplicate,N_hat,p_hat\n";
  std::vector<double> nh;
  int in_band = 0, valid = 0;
  for (int r = 0; r < reps; ++r) {
    csv << r << ',' << est[r].n_hat << ',' << est[r].p_hat << '\n';
    if (!est[r].ok) continue;
    ++valid;
    nh.push_back(est[r].n_hat);
    if (std::abs(est[r].n_hat * est[r].p_hat - N * p) <= 0.05 * N * p) ++in_band;
  }
  std::sort(nh.begin(), nh.end());
  double median = nh.empty() ? 0.0 : nh[nh.size() / 2];
  csv << "median_N," << median << ",\nproduct_within_5pct,"
      << (valid ? static_cast<double>(in_band) / valid : 0.0) << ",\n";
  write_out(cfg, "figure5.csv", csv.str());
  std::cout << "figure5: median N_hat = " << median << " -> figure5.csv\n";
  return 0;
}

int experiment_figure6(const PipelineConfig& cfg) {
  int n = 49, reps = cfg.replicates > 0 ? cfg.replicates : 100;
  double p = 0.02, fwhm = 4.0;
  std::int64_t t = 3000;
  Psf psf = gaussian_psf(fwhm, psf_support(fwhm));
  PsfPowerSums H = psf_power_sums(psf, std::max(2, cfg.md));

  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash
      << "\ncounts,distance_fwhm,cluster,true_N,mean_N_hat,mean_ci_lo,mean_ci_hi\n";
  for (auto [na, nb] : {std::pair{5, 5}, std::pair{5, 20}}) {
    for (double dist_f : {0.5, 1.0, 1.5, 2.0}) {
      int d = std::max(1, static_cast<int>(std::lround(dist_f * fwhm)));
      int xa = n / 2 - (d + 1) / 2, xb = xa + d, y = n / 2;
      GroundTruth gt;
      gt.n = n;
      for (int j = 0; j < na; ++j) gt.molecules.push_back(Molecule{xa, y, p});
      for (int j = 0; j < nb; ++j) gt.molecules.push_back(Molecule{xb, y, p});

      // Fixed analysis regions: split the grid at the midline between clusters.
      RoiSet rois;
      rois.n = n;
      Roi left{1, {}, {}, 0.0}, right{2, {}, {}, 0.0};
      double mid = 0.5 * (xa + xb);
      for (int px = 0; px < n * n; ++px)
        ((px % n) + 0.5 <= mid + 0.5 ? left : right).pixels.push_back(px);
      rois.rois = {left, right};
      auto regions = enlarge_regions(rois, 0.0);  // fixed split, no dilation

      std::vector<std::array<double, 6>> acc(reps);
      parallel_for(reps, [&](std::int64_t r) {
        auto img = simulate_image(gt, psf, t, cfg.md, cfg.seed + 977 * r);
        auto raw = estimate_counts(img, regions, H, 0.0);
        auto cis = confidence_intervals(raw, img, H, cfg.alpha, 2);
        acc[r] = {cis[0].n_hat, cis[0].ci_lo, cis[0].ci_hi,
                  cis[1].n_hat, cis[1].ci_lo, cis[1].ci_hi};
      });
      for (int side = 0; side < 2; ++side) {
        double mn = 0, mlo = 0, mhi = 0;
        int used = 0;
        for (const auto& a : acc) {
          if (a[3 * side + 2] >= kUnboundedCi) continue;
          mn += a[3 * side];
          mlo += a[3 * side + 1];
          mhi += a[3 * side + 2];
          ++used;
        }
        if (used) mn /= used, mlo /= used, mhi /= used;
        csv << na << '+' << nb << ',' << dist_f << ',' << (side ? "right" : "left") << ','
            << (side ? nb : na) << ',' << mn << ',' << mlo << ',' << mhi << '\n';
      }
    }
  }
  write_out(cfg, "figure6.csv", csv.str());
  std::cout << "figure6: wrote figure6.csv\n";
  return 0;
}

int experiment_figure7(const PipelineConfig& cfg) {
  int n = 25, reps = cfg.replicates > 0 ? cfg.replicates : 60;
  double p = 0.02;
  std::int64_t t = 20000;
  Psf psf = gaussian_psf(4.0, psf_support(4.0));
  PsfPowerSums H = psf_power_sums(psf, 2);

  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash << "\nmd,true_N,median_N_hat\n";
  for (int md : {4, 6, 8}) {
    for (int N : {10, 20, 40, 80, 150, 200}) {
      GroundTruth gt = central_cluster(n, N, p);
      std::vector<double> nh(reps);
      parallel_for(reps, [&](std::int64_t r) {
        auto img = simulate_image(gt, psf, t, md, cfg.seed + 131 * r + md);
        nh[r] = np_from_sums(grid_power_sums(img), H).n_hat;
      });
      std::sort(nh.begin(), nh.end());
      csv << md << ',' << N << ',' << nh[reps / 2] << '\n';
    }
  }
  write_out(cfg, "figure7.csv", csv.str());
  std::cout << "figure7: wrote figure7.csv\n";
  return 0;
}

int experiment_coverage(const PipelineConfig& cfg) {
  int reps = cfg.replicates > 0 ? cfg.replicates : 300;
  PipelineConfig c = cfg;
  get_calibration(c);  // calibrate once up front; replicates share the cache

  int joint_ok = 0, with_regions = 0;
  std::int64_t total_segments = 0;
  for (int r = 0; r < reps; ++r) {
    c.seed = cfg.seed + 7919ull * static_cast<std::uint64_t>(r);
    PipelineResult pr = run_pipeline(c);
    total_segments += static_cast<std::int64_t>(pr.map.estimates.size());
    if (!pr.map.estimates.empty()) ++with_regions;
    bool ok = true;
    for (std::size_t i = 0; i < pr.map.estimates.size(); ++i) {
      int truth_count = 0;
      for (const auto& m : pr.truth.molecules) {
        int px = m.y * pr.truth.n + m.x;
        if (std::binary_search(pr.raw_estimates[i].pixels.begin(),
                               pr.raw_estimates[i].pixels.end(), px))
          ++truth_count;
      }
      const auto& e = pr.map.estimates[i];
      if (truth_count < 1 || e.ci_lo > truth_count || e.ci_hi < truth_count) ok = false;
    }
    if (ok) ++joint_ok;
  }
  double coverage = static_cast<double>(joint_ok) / reps;
  double mc_err = std::sqrt(coverage * (1.0 - coverage) / reps);
  std::ostringstream csv;
  csv << "# config_hash=" << cfg.hash << "\nreplicates,joint_coverage,mc_error,mean_segments\n"
      << reps << ',' << coverage << ',' << mc_err << ','
      << static_cast<double>(total_segments) / reps << '\n';
  write_out(cfg, "coverage.csv", csv.str());
  std::cout << "coverage: " << coverage << " +/- " << mc_err << " (" << reps
            << " replicates) -> coverage.csv\n";
  return 0;
}

int cmd_experiment(const PipelineConfig& c, const std::string& name_arg) {
  std::string name = !name_arg.empty() ? name_arg : c.experiment;
  if (name == "figure4") return experiment_figure4(c);
  if (name == "figure5") return experiment_figure5(c);
  if (name == "figure6") return experiment_figure6(c);
  if (name == "figure7") return experiment_figure7(c);
  if (name == "coverage") return experiment_coverage(c);
  throw ConfigError("unknown experiment: '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"molmap: antibunching microscopy simulation and molecule counting"};
  app.require_subcommand(1);

  std::string config_path, out_override, experiment_name;
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_value = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { have_seed = true; });
    sub->add_option("--out", out_override, "override the output directory");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate coincidence data");
  CLI::App* segment = app.add_subcommand("segment", "segment a simulated STED image");
  CLI::App* count = app.add_subcommand("count", "estimate molecule counts per region");
  CLI::App* pipeline = app.add_subcommand("pipeline", "simulate + segment + count");
  CLI::App* experiment = app.add_subcommand("experiment", "scripted replicate studies");
  for (CLI::App* sub : {simulate, segment, count, pipeline, experiment}) add_common(sub);
  experiment->add_option("name", experiment_name,
                         "figure4|figure5|figure6|figure7|coverage (or set in config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (have_seed) seed_override = seed_value;

  try {
    PipelineConfig cfg = load_config(config_path, seed_override, out_override);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (segment->parsed()) return cmd_segment(cfg);
    if (count->parsed()) return cmd_count(cfg);
    if (pipeline->parsed()) return cmd_pipeline(cfg);
    return cmd_experiment(cfg, experiment_name);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
}

#include "molmap/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace molmap {

using nlohmann::json;

std::string ground_truth_to_json(const GroundTruth& gt) {
  json j;
  j["n"] = gt.n;
  j["molecules"] = json::array();
  for (const auto& m : gt.molecules)
    j["molecules"].push_back({{"x", m.x + 1}, {"y", m.y + 1}, {"p", m.p}});
  return j.dump(2);
}

GroundTruth ground_truth_from_json(const std::string& text) {
  json j = json::parse(text);
  GroundTruth gt;
  gt.n = j.at("n").get<int>();
  for (const auto& m : j.at("molecules"))
    gt.molecules.push_back(Molecule{m.at("x").get<int>() - 1, m.at("y").get<int>() - 1,
                                    m.at("p").get<double>()});
  gt.validate();
  return gt;
}

std::string coincidence_to_json(const CoincidenceImage& img) {
  json j;
  j["n"] = img.n;
  j["md"] = img.md;
  j["t"] = img.t;
  j["mode"] = img.mode == PsfMode::confocal ? "confocal" : "sted";
  j["background_rate"] = img.background_rate;
  j["planes"] = img.planes;
  return j.dump();
}

CoincidenceImage coincidence_from_json(const std::string& text) {
  json j = json::parse(text);
  CoincidenceImage img;
  img.n = j.at("n").get<int>();
  img.md = j.at("md").get<int>();
  img.t = j.at("t").get<std::int64_t>();
  img.mode = j.at("mode").get<std::string>() == "sted" ? PsfMode::sted : PsfMode::confocal;
  img.background_rate = j.value("background_rate", 0.0);
  img.planes = j.at("planes").get<std::vector<std::vector<std::int64_t>>>();
  if (static_cast<int>(img.planes.size()) != img.md + 1)
    throw std::invalid_argument("coincidence data: expected md+1 planes");
  for (const auto& plane : img.planes)
    if (static_cast<int>(plane.size()) != img.n * img.n)
      throw std::invalid_argument("coincidence data: plane size mismatch");
  return img;
}

void coincidence_planes_to_csv(const CoincidenceImage& img, const std::string& path_prefix) {
  for (int k = 0; k <= img.md; ++k) {
    std::ofstream out(path_prefix + "_k" + std::to_string(k) + ".csv");
    for (int y = 0; y < img.n; ++y) {
      for (int x = 0; x < img.n; ++x) {
        if (x) out << ',';
        out << img.planes[k][static_cast<std::size_t>(y) * img.n + x];
      }
      out << '\n';
    }
  }
}

std::string calibration_to_json(const ScanCalibration& cal) {
  json j;
  j["n"] = cal.n;
  j["t"] = cal.t;
  j["background"] = cal.background;
  j["alpha"] = cal.alpha;
  j["n_sim"] = cal.n_sim;
  j["stride"] = cal.stride;
  j["scales"] = cal.scales;
  j["omega"] = cal.omega;
  j["crit"] = cal.crit;
  j["c_global"] = cal.c_global;
  j["key"] = cal.key;
  return j.dump(2);
}

ScanCalibration calibration_from_json(const std::string& text) {
  json j = json::parse(text);
  ScanCalibration cal;
  cal.n = j.at("n").get<int>();
  cal.t = j.at("t").get<std::int64_t>();
  cal.background = j.at("background").get<double>();
  cal.alpha = j.at("alpha").get<double>();
  cal.n_sim = j.at("n_sim").get<int>();
  cal.stride = j.at("stride").get<int>();
  cal.scales = j.at("scales").get<std::vector<std::pair<int, int>>>();
  cal.omega = j.at("omega").get<std::vector<double>>();
  cal.crit = j.at("crit").get<std::vector<double>>();
  cal.c_global = j.at("c_global").get<double>();
  cal.key = j.at("key").get<std::uint64_t>();
  return cal;
}

std::string roi_set_to_json(const RoiSet& rois) {
  json j;
  j["n"] = rois.n;
  j["regions"] = json::array();
  for (const auto& r : rois.rois) {
    json jr;
    jr["id"] = r.id;
    jr["pixels"] = r.pixels;
    jr["score"] = r.score;
    jr["boxes"] = json::array();
    for (const auto& b : r.validating_boxes)
      jr["boxes"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}});
    j["regions"].push_back(std::move(jr));
  }
  return j.dump();
}

RoiSet roi_set_from_json(const std::string& text) {
  json j = json::parse(text);
  RoiSet rois;
  rois.n = j.at("n").get<int>();
  for (const auto& jr : j.at("regions")) {
    Roi r;
    r.id = jr.at("id").get<int>();
    r.pixels = jr.at("pixels").get<std::vector<int>>();
    r.score = jr.value("score", 0.0);
    for (const auto& jb : jr.at("boxes"))
      r.validating_boxes.push_back(Box{jb.at("x").get<int>(), jb.at("y").get<int>(),
                                       jb.at("w").get<int>(), jb.at("h").get<int>()});
    rois.rois.push_back(std::move(r));
  }
  return rois;
}

std::string molecular_map_to_json(const MolecularMap& map, const std::string& config_hash) {
  json j;
  j["alpha"] = map.alpha;
  j["M"] = map.M;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["segments"] = json::array();
  for (std::size_t i = 0; i < map.estimates.size(); ++i) {
    const auto& e = map.estimates[i];
    json js;
    js["id"] = e.id;
    js["pixels"] = map.rois.rois[i].pixels;
    js["N_hat"] = e.n_hat;
    js["p_hat"] = e.p_hat;
    js["sigma"] = e.sigma;
    js["ci"] = {e.ci_lo, e.ci_hi};
    js["degenerate_pixels"] = e.degenerate_pixels;
    js["flags"] = e.flags;
    j["segments"].push_back(std::move(js));
  }
  return j.dump(2);
}

MolecularMap molecular_map_from_json(const std::string& text) {
  json j = json::parse(text);
  MolecularMap map;
  map.alpha = j.at("alpha").get<double>();
  map.M = j.at("M").get<int>();
  for (const auto& js : j.at("segments")) {
    Roi roi;
    roi.id = js.at("id").get<int>();
    roi.pixels = js.at("pixels").get<std::vector<int>>();
    map.rois.rois.push_back(roi);
    CountEstimate e;
    e.id = roi.id;
    e.n_hat = js.at("N_hat").get<double>();
    e.p_hat = js.at("p_hat").get<double>();
    e.sigma = js.at("sigma").get<double>();
    e.ci_lo = js.at("ci")[0].get<double>();
    e.ci_hi = js.at("ci")[1].get<double>();
    e.degenerate_pixels = js.at("degenerate_pixels").get<int>();
    e.flags = js.at("flags").get<std::vector<std::string>>();
    map.estimates.push_back(std::move(e));
  }
  return map;
}

std::string molecular_map_to_csv(const MolecularMap& map, const GroundTruth* truth) {
  std::ostringstream out;
  out << "segment,N_hat,p_hat,ci_lower,ci_upper";
  if (truth) out << ",truth,covered";
  out << '\n';
  for (std::size_t i = 0; i < map.estimates.size(); ++i) {
    const auto& e = map.estimates[i];
    out << e.id << ',' << e.n_hat << ',' << e.p_hat << ',' << e.ci_lo << ',' << e.ci_hi;
    if (truth) {
      const auto& px = map.rois.rois[i].pixels;
      int count = 0;
      for (const auto& m : truth->molecules) {
        int p = m.y * truth->n + m.x;
        if (std::binary_search(px.begin(), px.end(), p)) ++count;
      }
      bool covered = e.ci_lo <= count && count <= e.ci_hi;
      out << ',' << count << ',' << (covered ? 1 : 0);
    }
    out << '\n';
  }
  return out.str();
}

void write_label_pgm(const GridI& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << labels.n << ' ' << labels.n << "\n65535\n";
  for (int v : labels.v) {
    unsigned u = static_cast<unsigned>(std::max(v, 0)) & 0xffffu;
    out.put(static_cast<char>(u >> 8));
    out.put(static_cast<char>(u & 0xff));
  }
}

void write_label_csv(const GridI& labels, const std::string& path) {
  std::ofstream out(path);
  for (int y = 0; y < labels.n; ++y) {
    for (int x = 0; x < labels.n; ++x) {
      if (x) out << ',';
      out << labels.at(x, y);
    }
    out << '\n';
  }
}

void write_density_pgm(const MolecularMap& map, const std::string& path) {
  int n = map.rois.n;
  GridD density(n, 0.0);
  double dmax = 0.0;
  for (std::size_t i = 0; i < map.estimates.size(); ++i) {
    const auto& px = map.rois.rois[i].pixels;
    if (px.empty()) continue;
    double d = map.estimates[i].n_hat / static_cast<double>(px.size());
    if (map.estimates[i].n_hat >= kUnboundedCi) d = 0.0;
    for (int p : px) density[p] = d;
    dmax = std::max(dmax, d);
  }
  GridI shade(n, 0);
  if (dmax > 0.0)
    for (std::size_t i = 0; i < density.size(); ++i)
      shade[i] = static_cast<int>(65535.0 * density[i] / dmax);
  write_label_pgm(shade, path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace molmap

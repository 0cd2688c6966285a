#include "molmap/simulator.hpp"

#include <random>
#include <stdexcept>

#include "molmap/parallel.hpp"
#include "molmap/photon_transform.hpp"
#include "molmap/rng.hpp"

namespace molmap {

namespace {

/// Multinomial draw of size t over probabilities D via chained binomials.
void multinomial_draw(std::mt19937_64& rng, std::int64_t t, const std::vector<double>& D,
                      std::vector<std::int64_t>& out) {
  int k = static_cast<int>(D.size());
  out.assign(k, 0);
  std::int64_t remaining = t;
  double mass = 1.0;
  for (int i = 0; i < k - 1 && remaining > 0; ++i) {
    double p = D[i] / mass;
    if (p >= 1.0) {
      out[i] = remaining;
      remaining = 0;
      break;
    }
    if (p > 0.0) {
      std::binomial_distribution<std::int64_t> bin(remaining, p);
      out[i] = bin(rng);
      remaining -= out[i];
    }
    mass -= D[i];
    if (mass <= 0.0) break;
  }
  out[k - 1] += remaining;
}

}  // namespace

GridD CoincidenceImage::one_photon() const {
  GridD img(n);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(planes[1][i]);
  return img;
}

std::vector<std::vector<double>> expected_detector_field(const GroundTruth& gt, const Psf& psf,
                                                         int md, double background_rate) {
  auto field = detection_field(gt, psf);
  std::size_t npx = field.entries.size();
  std::vector<std::vector<double>> D(npx);
  parallel_for(static_cast<std::int64_t>(npx), [&](std::int64_t i) {
    std::vector<double> eps;
    eps.reserve(field.entries[i].size() + 1);
    for (const auto& [j, e] : field.entries[i]) eps.push_back(e);
    if (background_rate > 0.0) eps.push_back(background_rate);
    D[i] = exact_detector_distribution(eps, md);
  });
  return D;
}

CoincidenceImage simulate_image(const GroundTruth& gt, const Psf& psf, std::int64_t t, int md,
                                std::uint64_t seed, double background_rate) {
  if (t < 1) throw std::invalid_argument("simulate_image: t must be >= 1");
  if (md < 2) throw std::invalid_argument("simulate_image: md must be >= 2");
  if (background_rate < 0.0 || background_rate >= 1.0)
    throw std::invalid_argument("simulate_image: background rate must lie in [0, 1)");

  auto D = expected_detector_field(gt, psf, md, background_rate);

  CoincidenceImage img;
  img.n = gt.n;
  img.md = md;
  img.t = t;
  img.mode = psf.mode;
  img.background_rate = background_rate;
  img.planes.assign(md + 1, std::vector<std::int64_t>(D.size(), 0));

  parallel_for(static_cast<std::int64_t>(D.size()), [&](std::int64_t i) {
    auto rng = substream(seed, static_cast<std::uint64_t>(i));
    std::vector<std::int64_t> counts;
    multinomial_draw(rng, t, D[i], counts);
    for (int k = 0; k <= md; ++k) img.planes[k][i] = counts[k];
  });
  return img;
}

std::pair<CoincidenceImage, CoincidenceImage> simulate_pair(
    const GroundTruth& gt, const Psf& psf_confocal, const Psf& psf_sted, std::int64_t t_confocal,
    std::int64_t t_sted, int md, std::uint64_t seed, double background_rate) {
  if (t_confocal < 1 || t_sted < 1)
    throw std::invalid_argument("simulate_pair: pulse counts must be >= 1");
  auto confocal = simulate_image(gt, psf_confocal, t_confocal, md, seed, background_rate);
  auto sted = simulate_image(gt, psf_sted, t_sted, md, seed ^ 0xdeadbeefcafef00dULL, background_rate);
  confocal.mode = PsfMode::confocal;
  sted.mode = PsfMode::sted;
  return {std::move(confocal), std::move(sted)};
}

}  // namespace molmap

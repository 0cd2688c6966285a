#include "molmap/phantoms.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "molmap/rng.hpp"

namespace molmap {

GroundTruth clusters_phantom(int n, std::uint64_t seed, int n_clusters, int min_count,
                             int max_count, double brightness) {
  GroundTruth gt;
  gt.n = n;
  auto rng = substream(seed, 0x11);
  std::uniform_int_distribution<int> count_dist(min_count, max_count);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Cluster centers by rejection: keep them well separated and off the border.
  int margin = std::max(4, n / 8);
  double min_sep = std::max(8.0, n / 3.5);
  std::vector<std::pair<int, int>> centers;
  int guard = 0;
  while (static_cast<int>(centers.size()) < n_clusters && guard < 20000) {
    ++guard;
    int cx = margin + static_cast<int>(unit(rng) * (n - 2 * margin));
    int cy = margin + static_cast<int>(unit(rng) * (n - 2 * margin));
    bool ok = true;
    for (auto [ox, oy] : centers) {
      double dx = cx - ox, dy = cy - oy;
      if (dx * dx + dy * dy < min_sep * min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) centers.emplace_back(cx, cy);
  }

  std::normal_distribution<double> spread(0.0, 0.8);
  for (auto [cx, cy] : centers) {
    int count = count_dist(rng);
    for (int j = 0; j < count; ++j) {
      int x = std::clamp(cx + static_cast<int>(std::lround(spread(rng))), 0, n - 1);
      int y = std::clamp(cy + static_cast<int>(std::lround(spread(rng))), 0, n - 1);
      gt.molecules.push_back(Molecule{x, y, brightness});
    }
  }
  gt.validate();
  return gt;
}

GroundTruth filaments_phantom(int n, std::uint64_t seed, int n_filaments, double brightness) {
  GroundTruth gt;
  gt.n = n;
  auto rng = substream(seed, 0x22);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> turn(0.0, 0.35);

  for (int f = 0; f < n_filaments; ++f) {
    double x = 0.15 * n + unit(rng) * 0.7 * n;
    double y = 0.15 * n + unit(rng) * 0.7 * n;
    double angle = unit(rng) * 2.0 * M_PI;
    int steps = n + static_cast<int>(unit(rng) * n);
    for (int s = 0; s < steps; ++s) {
      angle += turn(rng) * 0.4;
      x += std::cos(angle);
      y += std::sin(angle);
      if (x < 2 || y < 2 || x > n - 3 || y > n - 3) break;
      if (unit(rng) < 0.5)
        gt.molecules.push_back(Molecule{static_cast<int>(std::lround(x)),
                                        static_cast<int>(std::lround(y)), brightness});
    }
  }
  if (gt.molecules.empty())
    gt.molecules.push_back(Molecule{n / 2, n / 2, brightness});
  gt.validate();
  return gt;
}

GroundTruth phantom_by_name(const std::string& name, int n, std::uint64_t seed) {
  if (name == "clusters") return clusters_phantom(n, seed);
  if (name == "filaments") return filaments_phantom(n, seed);
  throw std::invalid_argument("unknown phantom: " + name);
}

}  // namespace molmap

#include "molmap/watershed.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace molmap {

namespace {

const int DX4[4] = {1, -1, 0, 0};
const int DY4[4] = {0, 0, 1, -1};

/// Geodesic reconstruction by dilation of marker under mask image,
/// raster-order sweeps until stable.
GridD reconstruct(const GridD& marker, const GridD& ceiling) {
  int n = marker.n;
  GridD r = marker;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double v = r.at(x, y);
        if (x > 0) v = std::max(v, r.at(x - 1, y));
        if (y > 0) v = std::max(v, r.at(x, y - 1));
        v = std::min(v, ceiling.at(x, y));
        if (v > r.at(x, y)) {
          r.at(x, y) = v;
          changed = true;
        }
      }
    for (int y = n - 1; y >= 0; --y)
      for (int x = n - 1; x >= 0; --x) {
        double v = r.at(x, y);
        if (x < n - 1) v = std::max(v, r.at(x + 1, y));
        if (y < n - 1) v = std::max(v, r.at(x, y + 1));
        v = std::min(v, ceiling.at(x, y));
        if (v > r.at(x, y)) {
          r.at(x, y) = v;
          changed = true;
        }
      }
  }
  return r;
}

}  // namespace

GridD gaussian_smooth(const GridD& img, double smooth_fwhm) {
  if (smooth_fwhm <= 0.0) return img;
  double sigma = smooth_fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  int rad = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * rad + 1);
  for (int i = -rad; i <= rad; ++i) k[i + rad] = std::exp(-0.5 * i * i / (sigma * sigma));

  int n = img.n;
  GridD tmp(n), out(n);
  // Normalized convolution keeps borders unbiased.
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int i = -rad; i <= rad; ++i) {
        int xx = x + i;
        if (xx < 0 || xx >= n) continue;
        acc += k[i + rad] * img.at(xx, y);
        wsum += k[i + rad];
      }
      tmp.at(x, y) = acc / wsum;
    }
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int i = -rad; i <= rad; ++i) {
        int yy = y + i;
        if (yy < 0 || yy >= n) continue;
        acc += k[i + rad] * tmp.at(x, yy);
        wsum += k[i + rad];
      }
      out.at(x, y) = acc / wsum;
    }
  return out;
}

double default_hmin(const GridD& smoothed) {
  double m = 0.0;
  for (double v : smoothed.v) m = std::max(m, v);
  return 2.0 * std::sqrt(std::max(m, 0.0));
}

Segmentation watershed(const GridD& img, double smooth_fwhm, double hmin, double fg_threshold) {
  int n = img.n;
  GridD s = gaussian_smooth(img, smooth_fwhm);

  std::vector<char> mask(s.size(), 1);
  if (fg_threshold > 0.0)
    for (std::size_t i = 0; i < s.size(); ++i) mask[i] = s[i] >= fg_threshold ? 1 : 0;

  // h-maxima: reconstruct (s - hmin) under s, seeds = regional maxima of r.
  GridD marker(n);
  for (std::size_t i = 0; i < s.size(); ++i) marker[i] = s[i] - std::max(hmin, 0.0);
  GridD r = reconstruct(marker, s);

  Segmentation seg;
  seg.n = n;
  seg.labels = GridI(n, 0);

  // Regional maxima as equal-value plateaus with no higher neighbor.
  std::vector<char> visited(s.size(), 0);
  int next_label = 0;
  for (int y0 = 0; y0 < n; ++y0)
    for (int x0 = 0; x0 < n; ++x0) {
      std::size_t start = static_cast<std::size_t>(y0) * n + x0;
      if (visited[start] || !mask[start]) continue;
      double v = r[start];
      std::vector<int> plateau;
      std::vector<std::size_t> stack{start};
      visited[start] = 1;
      bool is_max = true;
      while (!stack.empty()) {
        std::size_t p = stack.back();
        stack.pop_back();
        plateau.push_back(static_cast<int>(p));
        int px = static_cast<int>(p) % n, py = static_cast<int>(p) / n;
        for (int d = 0; d < 4; ++d) {
          int qx = px + DX4[d], qy = py + DY4[d];
          if (qx < 0 || qy < 0 || qx >= n || qy >= n) continue;
          std::size_t q = static_cast<std::size_t>(qy) * n + qx;
          if (r[q] > v) is_max = false;
          if (!visited[q] && mask[q] && r[q] == v) {
            visited[q] = 1;
            stack.push_back(q);
          }
        }
      }
      if (is_max) {
        ++next_label;
        for (int p : plateau) seg.labels[p] = next_label;
      }
    }

  // Meyer flooding, highest intensity first; ties resolved by push order so a
  // pixel joins the basin of its first-flooded neighbor.
  using Entry = std::tuple<double, std::uint64_t, int, int>;  // (-s, counter, pixel, label)
  auto cmp = [](const Entry& a, const Entry& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::get<1>(a) > std::get<1>(b);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> pq(cmp);
  std::uint64_t counter = 0;

  auto push_neighbors = [&](int p) {
    int px = p % n, py = p / n;
    int label = seg.labels[p];
    for (int d = 0; d < 4; ++d) {
      int qx = px + DX4[d], qy = py + DY4[d];
      if (qx < 0 || qy < 0 || qx >= n || qy >= n) continue;
      int q = qy * n + qx;
      if (!mask[q] || seg.labels[q] != 0) continue;
      pq.emplace(-s[q], counter++, q, label);
    }
  };
  for (int p = 0; p < static_cast<int>(s.size()); ++p)
    if (seg.labels[p] != 0) push_neighbors(p);

  while (!pq.empty()) {
    auto [negv, ord, p, label] = pq.top();
    pq.pop();
    if (seg.labels[p] != 0) continue;
    seg.labels[p] = label;
    push_neighbors(p);
  }

  seg.segment_pixels.assign(next_label, {});
  for (int p = 0; p < static_cast<int>(s.size()); ++p)
    if (seg.labels[p] > 0) seg.segment_pixels[seg.labels[p] - 1].push_back(p);

  // Drop empty labels (none expected, but keep ids compact).
  std::vector<std::vector<int>> compact;
  GridI relabel(n, 0);
  for (auto& px : seg.segment_pixels) {
    if (px.empty()) continue;
    int id = static_cast<int>(compact.size()) + 1;
    for (int p : px) relabel[p] = id;
    compact.push_back(std::move(px));
  }
  seg.segment_pixels = std::move(compact);
  seg.labels = std::move(relabel);
  return seg;
}

}  // namespace molmap

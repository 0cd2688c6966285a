#pragma once
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace molmap {

/// Square n x n raster, row-major. Pixel index = y*n + x.
template <typename T>
struct Grid {
  int n{0};
  std::vector<T> v;

  Grid() = default;
  explicit Grid(int side, T fill = T{}) : n(side), v(static_cast<std::size_t>(side) * side, fill) {
    if (side < 0) throw std::invalid_argument("Grid: negative side length");
  }

  T& at(int x, int y) { return v[static_cast<std::size_t>(y) * n + x]; }
  const T& at(int x, int y) const { return v[static_cast<std::size_t>(y) * n + x]; }
  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < n && y < n; }
};

using GridD = Grid<double>;
using GridI = Grid<int>;

}  // namespace molmap

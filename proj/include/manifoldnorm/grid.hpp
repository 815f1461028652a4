#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/manifold.hpp"

namespace manifoldnorm {

/// Extents of a feature grid: three spatial axes, samples, channels.
struct GridDims {
  std::size_t d1 = 1;
  std::size_t d2 = 1;
  std::size_t d3 = 1;
  std::size_t n = 1;
  std::size_t c = 1;

  std::size_t total() const { return d1 * d2 * d3 * n * c; }
  std::size_t spatial() const { return d1 * d2 * d3; }

  /// Row-major flat index in (i1, i2, i3, i_n, i_c) order.
  std::size_t flat(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t in,
                   std::size_t ic) const {
    return (((i1 * d2 + i2) * d3 + i3) * n + in) * c + ic;
  }

  std::array<std::size_t, 5> unflat(std::size_t index) const {
    std::array<std::size_t, 5> out{};
    out[4] = index % c;
    index /= c;
    out[3] = index % n;
    index /= n;
    out[2] = index % d3;
    index /= d3;
    out[1] = index % d2;
    out[0] = index / d2;
    return out;
  }

  std::array<std::size_t, 5> as_array() const { return {d1, d2, d3, n, c}; }

  friend bool operator==(const GridDims&, const GridDims&) = default;

  std::string str() const {
    return "(" + std::to_string(d1) + "," + std::to_string(d2) + "," + std::to_string(d3) + "," +
           std::to_string(n) + "," + std::to_string(c) + ")";
  }
};

/// Dense 5-index array of points on one manifold.
class FeatureGrid {
 public:
  FeatureGrid() = default;

  /// Every cell initialised to the manifold origin.
  FeatureGrid(const ManifoldId& manifold, const GridDims& dims)
      : manifold_(manifold), dims_(dims), cells_(dims.total(), origin_point(manifold)) {}

  FeatureGrid(const ManifoldId& manifold, const GridDims& dims, std::vector<ManifoldPoint> cells)
      : manifold_(manifold), dims_(dims), cells_(std::move(cells)) {
    if (cells_.size() != dims_.total()) {
      detail::fail_validation("FeatureGrid: " + std::to_string(cells_.size()) + " cells for dims " +
                              dims_.str());
    }
    for (const auto& p : cells_) {
      if (!(p.manifold == manifold_)) detail::fail_validation("FeatureGrid: cell on a different manifold");
    }
  }

  const ManifoldId& manifold() const { return manifold_; }
  const GridDims& dims() const { return dims_; }
  std::size_t size() const { return cells_.size(); }

  const ManifoldPoint& operator[](std::size_t flat) const { return cells_[flat]; }
  ManifoldPoint& operator[](std::size_t flat) { return cells_[flat]; }

  const ManifoldPoint& at(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t in,
                          std::size_t ic) const {
    return cells_[dims_.flat(i1, i2, i3, in, ic)];
  }
  ManifoldPoint& at(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t in, std::size_t ic) {
    return cells_[dims_.flat(i1, i2, i3, in, ic)];
  }

  const std::vector<ManifoldPoint>& cells() const { return cells_; }

  /// Cells of sample `in` as a (d1, d2, d3, 1, c) grid.
  FeatureGrid sample(std::size_t in) const {
    GridDims d = dims_;
    d.n = 1;
    std::vector<ManifoldPoint> out;
    out.reserve(d.total());
    for (std::size_t i1 = 0; i1 < d.d1; ++i1)
      for (std::size_t i2 = 0; i2 < d.d2; ++i2)
        for (std::size_t i3 = 0; i3 < d.d3; ++i3)
          for (std::size_t ic = 0; ic < d.c; ++ic) out.push_back(at(i1, i2, i3, in, ic));
    return {manifold_, d, std::move(out)};
  }

 private:
  ManifoldId manifold_;
  GridDims dims_{0, 0, 0, 0, 0};
  std::vector<ManifoldPoint> cells_;
};

/// Concatenates single-sample grids along the sample axis.
inline FeatureGrid stack_samples(const std::vector<FeatureGrid>& samples) {
  if (samples.empty()) detail::fail_validation("stack_samples: no samples");
  GridDims d = samples.front().dims();
  d.n = samples.size();
  std::vector<ManifoldPoint> cells(d.total());
  for (std::size_t in = 0; in < samples.size(); ++in) {
    const FeatureGrid& s = samples[in];
    if (s.dims().n != 1 || s.dims().d1 != d.d1 || s.dims().d2 != d.d2 || s.dims().d3 != d.d3 ||
        s.dims().c != d.c || !(s.manifold() == samples.front().manifold())) {
      detail::fail_validation("stack_samples: incompatible sample grid");
    }
    for (std::size_t i1 = 0; i1 < d.d1; ++i1)
      for (std::size_t i2 = 0; i2 < d.d2; ++i2)
        for (std::size_t i3 = 0; i3 < d.d3; ++i3)
          for (std::size_t ic = 0; ic < d.c; ++ic) cells[d.flat(i1, i2, i3, in, ic)] = s.at(i1, i2, i3, 0, ic);
  }
  return {samples.front().manifold(), d, std::move(cells)};
}

}  // namespace manifoldnorm

#pragma once

// Network blocks on manifold-valued grids: weighted-Frechet-mean convolution,
// tangent ReLU at the origin and the distance-to-mean readout.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/grid.hpp"
#include "manifoldnorm/stats.hpp"

namespace manifoldnorm {

/// Softmax: w_i = exp(r_i) / sum_j exp(r_j).
inline WeightVector convexity_weights(std::span<const double> raw) {
  if (raw.empty()) detail::fail_validation("convexity_weights: empty input");
  double top = raw[0];
  for (double r : raw) {
    if (!std::isfinite(r)) detail::fail_validation("convexity_weights: non-finite entry");
    top = std::max(top, r);
  }
  std::vector<double> w(raw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    w[i] = std::exp(raw[i] - top);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  // absorb rounding so the sum check in WeightVector holds
  double total = 0.0;
  std::size_t big = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    total += w[i];
    if (w[i] > w[big]) big = i;
  }
  w[big] += 1.0 - total;
  for (double& x : w) x = std::max(x, std::numeric_limits<double>::min());
  return WeightVector(std::move(w));
}

struct ConvKernel {
  std::array<std::size_t, 3> window{1, 1, 1};
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  /// out_channels rows of in_channels * w1 * w2 * w3 raw weights, row-major.
  std::vector<double> raw_weights;

  std::size_t fan_in() const { return in_channels * window[0] * window[1] * window[2]; }

  static ConvKernel uniform(std::array<std::size_t, 3> window, std::array<std::size_t, 3> stride,
                            std::size_t in_channels, std::size_t out_channels) {
    ConvKernel k{window, stride, in_channels, out_channels, {}};
    k.raw_weights.assign(k.fan_in() * out_channels, 0.0);
    return k;
  }

  std::span<const double> row(std::size_t oc) const {
    return std::span<const double>(raw_weights).subspan(oc * fan_in(), fan_in());
  }

  /// Output extents for an input of the given dims (valid padding).
  GridDims output_dims(const GridDims& in) const {
    const std::array<std::size_t, 3> d{in.d1, in.d2, in.d3};
    std::array<std::size_t, 3> out{};
    for (int a = 0; a < 3; ++a) {
      if (window[a] == 0 || stride[a] == 0) detail::fail_validation("ConvKernel: window and stride must be positive");
      if (window[a] > d[a]) {
        detail::fail_validation("manifold_conv: window " + std::to_string(window[a]) + " exceeds extent " +
                                std::to_string(d[a]) + " on axis " + std::to_string(a));
      }
      out[a] = (d[a] - window[a]) / stride[a] + 1;
    }
    return {out[0], out[1], out[2], in.n, out_channels};
  }
};

/// Each output cell is the incremental wFM of the window's points across all
/// input channels, flattened in (k1, k2, k3, ic) order.
inline FeatureGrid manifold_conv(const FeatureGrid& input, const ConvKernel& kernel) {
  if (kernel.in_channels != input.dims().c) {
    detail::fail_validation("manifold_conv: kernel expects " + std::to_string(kernel.in_channels) +
                            " channels, input has " + std::to_string(input.dims().c));
  }
  if (kernel.out_channels == 0) detail::fail_validation("manifold_conv: no output channels");
  if (kernel.raw_weights.size() != kernel.fan_in() * kernel.out_channels) {
    detail::fail_validation("manifold_conv: raw weight count does not match the kernel shape");
  }
  const GridDims od = kernel.output_dims(input.dims());
  std::vector<WeightVector> weights;
  weights.reserve(kernel.out_channels);
  for (std::size_t oc = 0; oc < kernel.out_channels; ++oc) weights.push_back(convexity_weights(kernel.row(oc)));

  std::vector<ManifoldPoint> window;
  window.reserve(kernel.fan_in());
  std::vector<ManifoldPoint> cells(od.total());
  for (std::size_t o1 = 0; o1 < od.d1; ++o1)
    for (std::size_t o2 = 0; o2 < od.d2; ++o2)
      for (std::size_t o3 = 0; o3 < od.d3; ++o3)
        for (std::size_t in = 0; in < od.n; ++in) {
          window.clear();
          for (std::size_t k1 = 0; k1 < kernel.window[0]; ++k1)
            for (std::size_t k2 = 0; k2 < kernel.window[1]; ++k2)
              for (std::size_t k3 = 0; k3 < kernel.window[2]; ++k3)
                for (std::size_t ic = 0; ic < kernel.in_channels; ++ic) {
                  window.push_back(input.at(o1 * kernel.stride[0] + k1, o2 * kernel.stride[1] + k2,
                                            o3 * kernel.stride[2] + k3, in, ic));
                }
          for (std::size_t oc = 0; oc < kernel.out_channels; ++oc) {
            cells[od.flat(o1, o2, o3, in, oc)] = incremental_wfm(window, weights[oc]);
          }
        }
  return {input.manifold(), od, std::move(cells)};
}

/// Exp_I(ReLU(iota(Log_I X))).
inline ManifoldPoint trelu(const ManifoldPoint& x) {
  const ManifoldPoint origin = origin_point(x.manifold);
  const Vector c = tangent_coords(log_map(origin, x)).cwiseMax(0.0);
  return exp_map(origin, coords_to_tangent(origin, c));
}

inline FeatureGrid trelu(const FeatureGrid& grid) {
  FeatureGrid out = grid;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = trelu(grid[i]);
  return out;
}

enum class FcMean { Incremental, Oracle };

/// Distances of every input to the Frechet mean of the inputs.
inline Vector manifold_fc(std::span<const ManifoldPoint> points, FcMean estimator = FcMean::Incremental) {
  if (points.empty()) detail::fail_validation("manifold_fc: empty input");
  const WeightVector w = WeightVector::uniform(points.size());
  const ManifoldPoint mean =
      estimator == FcMean::Oracle ? oracle_fm(points, w, 1e-12) : incremental_wfm(points, w);
  Vector out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) out(static_cast<Eigen::Index>(i)) = distance(points[i], mean);
  return out;
}

}  // namespace manifoldnorm

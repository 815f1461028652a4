#pragma once

// Synthetic labelled grids: class k has mean M_k, each sample draws a shared
// offset point around M_k, and each cell is drawn around that offset.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "manifoldnorm/config.hpp"
#include "manifoldnorm/error.hpp"
#include "manifoldnorm/grid.hpp"
#include "manifoldnorm/stats.hpp"

namespace manifoldnorm {

struct Dataset {
  std::uint32_t num_classes = 0;
  FeatureGrid samples;                 // N = number of samples
  std::vector<std::uint32_t> labels;   // one per sample
  std::vector<std::uint8_t> is_test;   // 1 for held-out samples

  std::size_t size() const { return labels.size(); }

  std::vector<std::size_t> indices(bool test) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < is_test.size(); ++i)
      if ((is_test[i] != 0) == test) out.push_back(i);
    return out;
  }
};

inline void check_dataset(const Dataset& d) {
  if (d.labels.size() != d.samples.dims().n || d.is_test.size() != d.labels.size()) {
    throw ValidationError("dataset: label/split counts do not match the sample count");
  }
  if (d.num_classes < 2) throw ValidationError("dataset: fewer than two classes");
  for (auto l : d.labels)
    if (l >= d.num_classes) throw ValidationError("dataset: label out of range");
  for (auto s : d.is_test)
    if (s > 1) throw ValidationError("dataset: split flag must be 0 or 1");
}

/// Grid made of the listed samples, in the given order.
inline FeatureGrid select_samples(const FeatureGrid& grid, const std::vector<std::size_t>& which) {
  std::vector<FeatureGrid> parts;
  parts.reserve(which.size());
  for (std::size_t i : which) parts.push_back(grid.sample(i));
  return stack_samples(parts);
}

/// Class means with pairwise distance at least delta. Two classes sit at
/// Exp_I(+-delta/2 e_0); more classes use Exp_I(r e_k), with r grown until
/// the closest pair is delta apart.
inline std::vector<ManifoldPoint> class_means(const ManifoldId& m, std::size_t classes, double delta) {
  if (classes < 2) detail::fail_validation("class_means: need at least two classes");
  const ManifoldPoint origin = origin_point(m);
  const int dim = m.intrinsic_dim();
  auto along = [&](int axis, double r) {
    Vector c = Vector::Zero(dim);
    c(axis) = r;
    return exp_map(origin, coords_to_tangent(origin, c));
  };
  const double r_inj = m.injectivity_radius();
  if (classes == 2) {
    if (std::isfinite(r_inj) && delta >= 0.9 * r_inj) {
      detail::fail_validation("class_means: delta too large for " + m.name());
    }
    return {along(0, 0.5 * delta), along(0, -0.5 * delta)};
  }
  if (static_cast<int>(classes) > dim) {
    detail::fail_validation("class_means: " + std::to_string(classes) + " classes need more than " +
                            std::to_string(dim) + " directions");
  }
  auto build = [&](double r) {
    std::vector<ManifoldPoint> out;
    for (std::size_t k = 0; k < classes; ++k) out.push_back(along(static_cast<int>(k), r));
    return out;
  };
  auto min_gap = [&](const std::vector<ManifoldPoint>& pts) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) g = std::min(g, distance(pts[i], pts[j]));
    return g;
  };
  const double r_max = std::isfinite(r_inj) ? 0.45 * r_inj : 1e3;
  double lo = 0.0, hi = delta;
  while (min_gap(build(hi)) < delta) {
    lo = hi;
    hi *= 2.0;
    if (hi > r_max) detail::fail_validation("class_means: delta too large for " + m.name());
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (min_gap(build(mid)) < delta ? lo : hi) = mid;
  }
  return build(hi);
}

/// Deterministic per seed. Samples are interleaved by class; the first
/// train_per_class of each class are training data, the rest held out.
inline Dataset generate_synthetic(const ExperimentConfig& config, std::uint64_t seed) {
  validate_config(config);
  const ManifoldId& m = config.manifold;
  const DatasetSpec& spec = config.data;
  const auto means = class_means(m, spec.classes, spec.delta);
  for (std::size_t i = 0; i < means.size(); ++i)
    for (std::size_t j = i + 1; j < means.size(); ++j)
      if (distance(means[i], means[j]) < spec.delta * (1.0 - 1e-6)) {
        detail::fail_numerical("generate_synthetic: class means closer than delta");
      }

  const std::size_t per_class = spec.train_per_class + spec.test_per_class;
  const std::size_t total = per_class * spec.classes;
  const GridDims one = config.input_dims(1);
  const int dim = m.intrinsic_dim();
  const double var = spec.sigma * spec.sigma;
  const double offset_var = spec.offset_fraction * var;
  const double cell_var = (1.0 - spec.offset_fraction) * var;

  std::mt19937_64 seeds(seed);
  Dataset out;
  out.num_classes = static_cast<std::uint32_t>(spec.classes);
  std::vector<FeatureGrid> grids;
  grids.reserve(total);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t k = 0; k < spec.classes; ++k) {
      const std::uint64_t offset_seed = seeds();
      const std::uint64_t cell_seed = seeds();
      ManifoldPoint center = means[k];
      if (offset_var > 0.0) {
        center = sample_gaussian(HomogGaussian{means[k], Matrix::Identity(dim, dim) / offset_var}, 1, offset_seed)
                     .front();
      }
      std::vector<ManifoldPoint> cells;
      if (cell_var > 0.0) {
        cells = sample_gaussian(HomogGaussian{center, Matrix::Identity(dim, dim) / cell_var},
                                static_cast<int>(one.total()), cell_seed);
      } else {
        cells.assign(one.total(), center);
      }
      for (auto& c : cells) c = make_point(m, c.data, true, config.tol);
      grids.emplace_back(m, one, std::move(cells));
      out.labels.push_back(static_cast<std::uint32_t>(k));
      out.is_test.push_back(i >= spec.train_per_class ? 1 : 0);
    }
  }
  out.samples = stack_samples(grids);
  return out;
}

}  // namespace manifoldnorm

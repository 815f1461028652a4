#pragma once

// Riemannian batch/layer/instance/group normalization.
//
// Homogeneous spaces, per index set:
//   1. M_b = Frechet mean of the set
//   2. running mean M <- geodesic(M, M_b, momentum)
//   3. X <- Exp_I(Gamma_{M_b -> I}(Log_{M_b} X))
//   4. X <- Exp_I(iota^-1(S iota(Log_I X)))
//   5. X <- g . X
// Lie groups, per index set:
//   1-2 as above, then X <- M_b^-1 o X, X <- expm(s logm X), X <- g o X.
// Inference runs steps 3-5 centred at the learned running mean.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/grid.hpp"
#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/stats.hpp"

namespace manifoldnorm {

enum class NormKind { Batch, Layer, Instance, Group };

struct NormMode {
  NormKind kind = NormKind::Batch;
  std::size_t group_size = 1;  // Group only

  static NormMode batch() { return {NormKind::Batch, 1}; }
  static NormMode layer() { return {NormKind::Layer, 1}; }
  static NormMode instance() { return {NormKind::Instance, 1}; }
  static NormMode group(std::size_t size) { return {NormKind::Group, size}; }

  /// Number of parameter slots (bias, scale, running mean) for C channels.
  /// Batch and Instance keep one slot per channel, Group one per channel
  /// group, Layer a single slot; per-sample sets share their slot.
  std::size_t slot_count(std::size_t channels) const {
    switch (kind) {
      case NormKind::Batch:
      case NormKind::Instance:
        return channels;
      case NormKind::Layer:
        return 1;
      case NormKind::Group:
        return channels / group_size;
    }
    return 0;
  }

  /// True when index sets never mix samples.
  bool per_sample() const { return kind != NormKind::Batch; }
};

inline const char* norm_kind_name(NormKind kind) {
  switch (kind) {
    case NormKind::Batch:
      return "batch";
    case NormKind::Layer:
      return "layer";
    case NormKind::Instance:
      return "instance";
    case NormKind::Group:
      return "group";
  }
  return "unknown";
}

/// One normalization set: flat cell indices in ascending order and the
/// parameter slot it uses.
struct IndexSet {
  std::size_t slot = 0;
  std::vector<std::size_t> cells;
};

inline std::vector<IndexSet> partition_indices(const NormMode& mode, const GridDims& dims) {
  if (dims.total() == 0) detail::fail_validation("partition_indices: dims must be positive");
  if (mode.kind == NormKind::Group) {
    if (mode.group_size == 0 || dims.c % mode.group_size != 0) {
      detail::fail_validation("partition_indices: group size " + std::to_string(mode.group_size) +
                              " does not divide " + std::to_string(dims.c) + " channels");
    }
  }
  std::vector<IndexSet> sets;
  auto collect = [&](std::size_t slot, auto&& keep) {
    IndexSet s{slot, {}};
    for (std::size_t idx = 0; idx < dims.total(); ++idx) {
      const auto ix = dims.unflat(idx);
      if (keep(ix[3], ix[4])) s.cells.push_back(idx);
    }
    sets.push_back(std::move(s));
  };
  switch (mode.kind) {
    case NormKind::Batch:
      for (std::size_t c = 0; c < dims.c; ++c) collect(c, [c](std::size_t, std::size_t ic) { return ic == c; });
      break;
    case NormKind::Layer:
      for (std::size_t n = 0; n < dims.n; ++n) collect(0, [n](std::size_t in, std::size_t) { return in == n; });
      break;
    case NormKind::Instance:
      for (std::size_t n = 0; n < dims.n; ++n)
        for (std::size_t c = 0; c < dims.c; ++c)
          collect(c, [n, c](std::size_t in, std::size_t ic) { return in == n && ic == c; });
      break;
    case NormKind::Group: {
      const std::size_t groups = dims.c / mode.group_size;
      const std::size_t size = mode.group_size;
      for (std::size_t n = 0; n < dims.n; ++n)
        for (std::size_t g = 0; g < groups; ++g)
          collect(g, [n, g, size](std::size_t in, std::size_t ic) { return in == n && ic / size == g; });
      break;
    }
  }
  return sets;
}

enum class NormAlgorithm { Homogeneous, LieGroup };
enum class MomentumSchedule { Fixed, Counting };

/// Learned parameters and running statistics of one slot.
struct NormSlot {
  ManifoldPoint running_mean;
  GroupElement bias;        // homogeneous algorithm, g in G
  ManifoldPoint lie_bias;   // Lie algorithm, g in M
  Vector scale_diag;        // homogeneous algorithm, diagonal of S
  double scale = 1.0;       // Lie algorithm, s
  std::uint64_t steps_seen = 0;
};

struct NormState {
  ManifoldId manifold;
  NormAlgorithm algorithm = NormAlgorithm::Homogeneous;
  double momentum = 0.1;
  MomentumSchedule schedule = MomentumSchedule::Fixed;
  std::vector<NormSlot> slots;

  /// Identity parameters: running mean at the origin, S = I, s = 1, g = e.
  static NormState identity(const ManifoldId& m, NormAlgorithm algorithm, std::size_t slot_count,
                            double momentum = 0.1) {
    if (algorithm == NormAlgorithm::LieGroup && !m.is_lie_group()) {
      detail::fail_validation("NormState: Lie-group normalization requires a Lie-group manifold, got " +
                              m.name());
    }
    NormState s;
    s.manifold = m;
    s.algorithm = algorithm;
    s.momentum = momentum;
    NormSlot slot{origin_point(m), identity_element(m), origin_point(m),
                  Vector::Ones(m.intrinsic_dim()), 1.0, 0};
    s.slots.assign(slot_count, slot);
    return s;
  }
};

enum class MeanEstimator { Incremental, Oracle };
enum class CenterSource { RunningMean, SetMean };

struct NormOptions {
  MeanEstimator estimator = MeanEstimator::Incremental;
  /// Inference only. RunningMean is the learned-statistics path; SetMean
  /// recentres every set at its own mean without touching the state.
  CenterSource center = CenterSource::RunningMean;
  double oracle_tol = 1e-12;
};

/// One geodesic step of the recursive mean: geodesic(M, M_b, momentum).
inline ManifoldPoint update_running_mean(const ManifoldPoint& m, const ManifoldPoint& batch_mean,
                                         double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    detail::fail_validation("update_running_mean: momentum must lie in [0, 1]");
  }
  return geodesic_point(m, batch_mean, momentum);
}

/// Step 3: Exp_I(Gamma_{center -> I}(Log_center X)).
inline ManifoldPoint center_at_origin(const ManifoldPoint& x, const ManifoldPoint& center) {
  const ManifoldPoint origin = origin_point(x.manifold);
  return exp_map(origin, parallel_transport(center, origin, log_map(center, x)));
}

/// Step 4: Exp_I(iota^-1(S iota(Log_I X))) with S = diag(scale_diag).
inline ManifoldPoint scale_at_origin(const ManifoldPoint& x, const Vector& scale_diag) {
  const ManifoldPoint origin = origin_point(x.manifold);
  const Vector c = tangent_coords(log_map(origin, x));
  if (scale_diag.size() != c.size()) detail::fail_validation("scale_at_origin: S has the wrong size");
  return exp_map(origin, coords_to_tangent(origin, scale_diag.cwiseProduct(c)));
}

/// Steps 3-5 of the homogeneous-space transform.
inline ManifoldPoint homog_transform(const ManifoldPoint& x, const ManifoldPoint& center,
                                     const NormSlot& slot) {
  return group_action(slot.bias, scale_at_origin(center_at_origin(x, center), slot.scale_diag));
}

/// Steps 3-5 of the Lie-group transform.
inline ManifoldPoint lie_transform(const ManifoldPoint& x, const ManifoldPoint& center,
                                   const NormSlot& slot) {
  const ManifoldPoint centred = lie_compose(lie_inverse(center), x);
  return lie_compose(slot.lie_bias, scale_from_identity(centred, slot.scale));
}

struct NormResult {
  FeatureGrid output;
  NormState state;
};

namespace norm_detail {

inline void validate(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                     NormAlgorithm expected, const char* op) {
  if (state.algorithm != expected) detail::fail_validation(std::string(op) + ": state has the wrong algorithm");
  if (!(batch.manifold() == state.manifold)) detail::fail_validation(std::string(op) + ": manifold mismatch");
  if (expected == NormAlgorithm::LieGroup && !batch.manifold().is_lie_group()) {
    detail::fail_validation(std::string(op) + ": Lie-group normalization on " + batch.manifold().name());
  }
  if (mode.kind == NormKind::Group && (mode.group_size == 0 || batch.dims().c % mode.group_size != 0)) {
    detail::fail_validation(std::string(op) + ": group size does not divide the channel count");
  }
  if (state.slots.size() != mode.slot_count(batch.dims().c)) {
    detail::fail_validation(std::string(op) + ": state has " + std::to_string(state.slots.size()) +
                            " slots, mode needs " + std::to_string(mode.slot_count(batch.dims().c)));
  }
}

inline std::vector<ManifoldPoint> gather(const FeatureGrid& grid, const IndexSet& set) {
  std::vector<ManifoldPoint> pts;
  pts.reserve(set.cells.size());
  for (std::size_t idx : set.cells) pts.push_back(grid[idx]);
  return pts;
}

inline ManifoldPoint set_mean(std::span<const ManifoldPoint> pts, const NormOptions& options) {
  const WeightVector w = WeightVector::uniform(pts.size());
  if (options.estimator == MeanEstimator::Oracle) return oracle_fm(pts, w, options.oracle_tol);
  return incremental_wfm(pts, w);
}

inline double momentum_for(const NormState& state, const NormSlot& slot) {
  if (state.schedule == MomentumSchedule::Counting) return 1.0 / static_cast<double>(slot.steps_seen + 1);
  return state.momentum;
}

template <class Transform>
NormResult train(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                 const NormOptions& options, Transform&& transform) {
  NormResult result{batch, state};
  for (const IndexSet& set : partition_indices(mode, batch.dims())) {
    const std::vector<ManifoldPoint> pts = gather(batch, set);
    const ManifoldPoint batch_mean = set_mean(pts, options);
    NormSlot& slot = result.state.slots[set.slot];
    slot.running_mean = update_running_mean(slot.running_mean, batch_mean, momentum_for(result.state, slot));
    ++slot.steps_seen;
    for (std::size_t k = 0; k < set.cells.size(); ++k) {
      result.output[set.cells[k]] = transform(pts[k], batch_mean, slot);
    }
  }
  return result;
}

template <class Transform>
FeatureGrid infer(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                  const NormOptions& options, Transform&& transform) {
  FeatureGrid out = batch;
  for (const IndexSet& set : partition_indices(mode, batch.dims())) {
    const NormSlot& slot = state.slots[set.slot];
    const std::vector<ManifoldPoint> pts = gather(batch, set);
    const ManifoldPoint center =
        options.center == CenterSource::SetMean ? set_mean(pts, options) : slot.running_mean;
    for (std::size_t k = 0; k < set.cells.size(); ++k) out[set.cells[k]] = transform(pts[k], center, slot);
  }
  return out;
}

}  // namespace norm_detail

/// Training step on a homogeneous space; returns the output and the advanced state.
inline NormResult homog_norm_train(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                                   const NormOptions& options = {}) {
  norm_detail::validate(batch, state, mode, NormAlgorithm::Homogeneous, "homog_norm_train");
  return norm_detail::train(batch, state, mode, options, homog_transform);
}

inline FeatureGrid homog_norm_infer(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                                    const NormOptions& options = {}) {
  norm_detail::validate(batch, state, mode, NormAlgorithm::Homogeneous, "homog_norm_infer");
  return norm_detail::infer(batch, state, mode, options, homog_transform);
}

inline NormResult lie_norm_train(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                                 const NormOptions& options = {}) {
  norm_detail::validate(batch, state, mode, NormAlgorithm::LieGroup, "lie_norm_train");
  return norm_detail::train(batch, state, mode, options, lie_transform);
}

inline FeatureGrid lie_norm_infer(const FeatureGrid& batch, const NormState& state, const NormMode& mode,
                                  const NormOptions& options = {}) {
  norm_detail::validate(batch, state, mode, NormAlgorithm::LieGroup, "lie_norm_infer");
  return norm_detail::infer(batch, state, mode, options, lie_transform);
}

// Parameterizations used by the trainer. Every unconstrained vector maps into
// the right group, so perturbation-based updates never leave it.

/// Number of unconstrained coordinates of the bias for this algorithm.
inline int bias_param_count(const ManifoldId& m, NormAlgorithm algorithm) {
  if (algorithm == NormAlgorithm::LieGroup) return m.intrinsic_dim();
  const int d = static_cast<int>(m.group_dim());
  return m.kind() == ManifoldKind::SpdAffine ? d * d : d * (d - 1) / 2;
}

/// Homogeneous bias: expm(B) for GL(n), skew_expm of the upper-triangular
/// generator for the rotation groups.
inline GroupElement homog_bias_from_params(const ManifoldId& m, std::span<const double> p) {
  const Eigen::Index d = m.group_dim();
  if (static_cast<int>(p.size()) != bias_param_count(m, NormAlgorithm::Homogeneous)) {
    detail::fail_validation("homog_bias_from_params: wrong parameter count");
  }
  if (m.kind() == ManifoldKind::SpdAffine) {
    Matrix b(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) b(i, j) = p[static_cast<std::size_t>(i * d + j)];
    return {m, linalg::expm(b)};
  }
  Matrix w = Matrix::Zero(d, d);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      w(i, j) = p[k];
      w(j, i) = -p[k];
      ++k;
    }
  return {m, linalg::skew_expm(w)};
}

inline ManifoldPoint lie_bias_from_params(const ManifoldId& m, std::span<const double> p) {
  if (static_cast<int>(p.size()) != m.intrinsic_dim()) {
    detail::fail_validation("lie_bias_from_params: wrong parameter count");
  }
  Vector c(m.intrinsic_dim());
  for (int i = 0; i < c.size(); ++i) c(i) = p[static_cast<std::size_t>(i)];
  return lie_expm({m, c});
}

}  // namespace manifoldnorm

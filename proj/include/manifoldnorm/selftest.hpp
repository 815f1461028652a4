#pragma once

// Property suite behind `manifoldnorm selftest`. Each check reports the worst
// error seen over its random instances next to the tolerance it must meet.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "manifoldnorm/experiment.hpp"
#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/normalization.hpp"
#include "manifoldnorm/random.hpp"
#include "manifoldnorm/stats.hpp"
#include "manifoldnorm/tensor_io.hpp"

namespace manifoldnorm {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct SuiteResult {
  std::string id;
  std::string title;
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

namespace selftest_detail {

/// Tracks the worst error of one property.
class Worst {
 public:
  Worst(std::string name, double tol) : name_(std::move(name)), tol_(tol) {}
  void see(double err) { worst_ = std::isnan(err) ? err : (std::isnan(worst_) ? worst_ : std::max(worst_, err)); }
  void fail() { failed_ = true; }
  CheckResult result() const { return {name_, worst_, tol_, !failed_ && !std::isnan(worst_) && worst_ < tol_}; }

 private:
  std::string name_;
  double tol_;
  double worst_ = 0.0;
  bool failed_ = false;
};

inline CheckResult exact(const std::string& name, bool ok, double mismatches = 0.0) {
  return {name, ok ? 0.0 : std::max(1.0, mismatches), 0.5, ok};
}

/// Relative Frobenius error, measured against max(1, |b|).
inline double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

template <class Body>
SuiteResult timed(std::string id, std::string title, Body&& body) {
  const auto start = std::chrono::steady_clock::now();
  SuiteResult s{std::move(id), std::move(title), {}, 0.0};
  body(s.checks);
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

inline std::vector<ManifoldId> geometry_manifolds() {
  std::vector<ManifoldId> out;
  for (int n = 2; n <= 5; ++n) out.push_back(ManifoldId::spd_affine(n));
  for (int n = 2; n <= 5; ++n) out.push_back(ManifoldId::spd_log_euclidean(n));
  out.push_back(ManifoldId::sphere(2));
  out.push_back(ManifoldId::sphere(10));
  for (int n = 2; n <= 4; ++n) out.push_back(ManifoldId::special_orthogonal(n));
  return out;
}

/// Pairwise distance bound inside which Exp/Log must invert each other.
inline double pair_radius(const ManifoldId& m) { return m.is_spd() ? 5.0 : std::numbers::pi / 2.0; }

}  // namespace selftest_detail

/// Exp/Log inversion, norm compatibility, transport isometry, action and
/// left-translation isometry, geodesic speed and the iota isometry.
inline SuiteResult geometry_suite(std::uint64_t seed, int instances = 100) {
  using namespace selftest_detail;
  return timed("A1", "geometry", [&](std::vector<CheckResult>& out) {
    Rng rng(seed);
    for (const ManifoldId& m : geometry_manifolds()) {
      Worst roundtrip(m.name() + " exp(log) roundtrip", 1e-9);
      Worst norm(m.name() + " |log| = distance", 1e-9);
      Worst transport(m.name() + " transport metric", 1e-9);
      Worst action(m.name() + " action isometry", 1e-9);
      Worst left(m.name() + " left-translation isometry", 1e-9);
      Worst speed(m.name() + " geodesic speed", 1e-9);
      Worst iota(m.name() + " iota isometry", 1e-12);
      const double r = pair_radius(m);
      const double spread = m.is_spd() ? 2.0 : 1.2;
      for (int k = 0; k < instances; ++k) {
        const ManifoldPoint x = random_point(rng, m, spread);
        const ManifoldPoint y = random_point_near(rng, x, 0.999 * r);
        const double d = distance(x, y);
        const TangentVector v = log_map(x, y);
        roundtrip.see(rel_err(exp_map(x, v).data, y.data));
        norm.see(rel_diff(tangent_norm(v), d));

        const TangentVector u = random_tangent(rng, x, 1.0);
        const TangentVector w = random_tangent(rng, x, 1.0);
        transport.see(rel_diff(inner_product(parallel_transport(x, y, u), parallel_transport(x, y, w)),
                               inner_product(u, w)));

        const GroupElement g = random_group_element(rng, m);
        action.see(rel_diff(distance(group_action(g, x), group_action(g, y)), d));
        if (m.is_lie_group()) {
          const ManifoldPoint z = random_point(rng, m, 1.0);
          left.see(rel_diff(distance(lie_compose(z, x), lie_compose(z, y)), d));
        }
        for (int t = 1; t <= 9; ++t) speed.see(rel_diff(distance(x, geodesic_point(x, y, 0.1 * t)), 0.1 * t * d));

        const ManifoldPoint origin = origin_point(m);
        const TangentVector at_origin = random_tangent(rng, origin, 2.0);
        iota.see(rel_diff(tangent_coords(at_origin).squaredNorm(), inner_product(at_origin, at_origin)));
      }
      for (const Worst* c : {&roundtrip, &norm, &transport, &action, &speed, &iota}) out.push_back(c->result());
      if (m.is_lie_group()) out.push_back(left.result());
    }
  });
}

/// Density and variance laws on the Lie-group manifolds.
inline SuiteResult density_variance_suite(std::uint64_t seed) {
  using namespace selftest_detail;
  return timed("A2", "density and variance", [&](std::vector<CheckResult>& out) {
    Rng rng(seed);
    for (const ManifoldId& m : {ManifoldId::spd_log_euclidean(3), ManifoldId::special_orthogonal(3)}) {
      // argmax of the summed log-density over a candidate set equals the
      // argmin of the variance, for several variances
      int mismatches = 0;
      for (int set = 0; set < 20; ++set) {
        const ManifoldPoint center = random_point(rng, m, 0.5);
        std::vector<ManifoldPoint> samples;
        for (int i = 0; i < 15; ++i) samples.push_back(random_point_near(rng, center, 0.6));
        std::vector<ManifoldPoint> candidates;
        for (int i = 0; i < 8; ++i) candidates.push_back(random_point_near(rng, center, 0.6));
        const WeightVector w = WeightVector::uniform(samples.size());
        for (double sigma2 : {0.05, 1.0, 20.0}) {
          std::size_t best_density = 0, best_variance = 0;
          double top = -std::numeric_limits<double>::infinity();
          double low = std::numeric_limits<double>::infinity();
          for (std::size_t c = 0; c < candidates.size(); ++c) {
            double log_like = 0.0;
            for (const auto& s : samples) log_like += std::log(density_lie(s, {candidates[c], sigma2}));
            const double var = weighted_variance(samples, w, candidates[c]);
            if (log_like > top) {
              top = log_like;
              best_density = c;
            }
            if (var < low) {
              low = var;
              best_variance = c;
            }
          }
          if (best_density != best_variance) ++mismatches;
        }
      }
      out.push_back(exact(m.name() + " likelihood argmax = variance argmin", mismatches == 0, mismatches));

      Worst invariance(m.name() + " density under left translation", 1e-12);
      Worst scaling(m.name() + " density under scaling", 1e-12);
      Worst variance(m.name() + " variance scales by s^2", 1e-12);
      Worst argmin(m.name() + " scaling keeps the mean at I", 1e-6);
      for (int k = 0; k < 50; ++k) {
        const ManifoldPoint x = random_point(rng, m, 0.8);
        const ManifoldPoint mean = random_point(rng, m, 0.8);
        const ManifoldPoint z = random_point(rng, m, 0.8);
        std::uniform_real_distribution<double> sig(0.05, 2.0);
        std::uniform_real_distribution<double> sc(0.3, 1.8);
        const double sigma2 = sig(rng);
        const double s = sc(rng);
        invariance.see(std::abs(density_lie(lie_compose(z, x), {lie_compose(z, mean), sigma2}) -
                                density_lie(x, {mean, sigma2})));
        const ManifoldPoint id = lie_identity(m);
        scaling.see(std::abs(density_lie(scale_from_identity(x, s), {id, s * s * sigma2}) - density_lie(x, {id, sigma2})));

        std::vector<ManifoldPoint> xs;
        for (int i = 0; i < 12; ++i) xs.push_back(random_point_near(rng, mean, 0.7));
        const WeightVector w = WeightVector::uniform(xs.size());
        // left-translate the set so its Frechet mean is the identity
        const ManifoldPoint fm = oracle_fm(xs, w, 1e-13);
        for (auto& p : xs) p = lie_compose(lie_inverse(fm), p);
        std::vector<ManifoldPoint> ys;
        for (const auto& p : xs) ys.push_back(scale_from_identity(p, s));
        variance.see(rel_diff(weighted_variance(ys, w, id), s * s * weighted_variance(xs, w, id)));
        argmin.see(distance(oracle_fm(ys, w, 1e-13), id));
      }
      for (const Worst* c : {&invariance, &scaling, &variance, &argmin}) out.push_back(c->result());
    }
  });
}

/// Incremental estimator against the oracle, equivariance, stationarity.
inline SuiteResult frechet_suite(std::uint64_t seed) {
  using namespace selftest_detail;
  return timed("A3", "frechet", [&](std::vector<CheckResult>& out) {
    Rng rng(seed);
    const std::vector<ManifoldId> ms{ManifoldId::spd_affine(3), ManifoldId::spd_log_euclidean(3),
                                     ManifoldId::sphere(2), ManifoldId::sphere(10),
                                     ManifoldId::special_orthogonal(3)};
    for (const ManifoldId& m : ms) {
      Worst gap(m.name() + " incremental vs oracle", 1e-2);
      Worst stationary(m.name() + " oracle stationarity", 1e-8);
      Worst equivariant(m.name() + " incremental equivariance", 1e-9);
      for (int trial = 0; trial < 5; ++trial) {
        const ManifoldPoint mean = random_point(rng, m, 1.0);
        const int dim = m.intrinsic_dim();
        const auto pts = sample_gaussian(HomogGaussian{mean, Matrix::Identity(dim, dim) / 0.01}, 100, rng());
        const WeightVector w = WeightVector::uniform(pts.size());
        OracleOptions opts;
        opts.tol = 1e-10;
        const FrechetResult fr = oracle_fm_detailed(pts, w, opts);
        stationary.see(fr.residual);
        const ManifoldPoint inc = incremental_wfm(pts, w);
        gap.see(distance(inc, fr.mean));
        if (m.is_lie_group()) {
          const ManifoldPoint z = random_point(rng, m, 1.0);
          std::vector<ManifoldPoint> moved;
          for (const auto& p : pts) moved.push_back(lie_compose(z, p));
          equivariant.see(rel_err(incremental_wfm(moved, w).data, lie_compose(z, inc).data));
        }
      }
      out.push_back(gap.result());
      out.push_back(stationary.result());
      if (m.is_lie_group()) out.push_back(equivariant.result());
    }
  });
}

namespace selftest_detail {

inline FeatureGrid random_grid(Rng& rng, const ManifoldId& m, const GridDims& dims, double radius) {
  const ManifoldPoint center = random_point(rng, m, 0.5);
  std::vector<ManifoldPoint> cells;
  for (std::size_t i = 0; i < dims.total(); ++i) cells.push_back(random_point_near(rng, center, radius));
  return {m, dims, std::move(cells)};
}

/// Random bias, scale and running mean for every slot.
inline NormState random_state(Rng& rng, const ManifoldId& m, NormAlgorithm alg, std::size_t slots) {
  NormState st = NormState::identity(m, alg, slots);
  std::uniform_real_distribution<double> u(0.6, 1.5);
  for (auto& slot : st.slots) {
    slot.running_mean = random_point(rng, m, 0.5);
    if (alg == NormAlgorithm::LieGroup) {
      slot.lie_bias = random_point(rng, m, 0.5);
      slot.scale = u(rng);
    } else {
      slot.bias = random_group_element(rng, m, 0.5);
      for (Eigen::Index i = 0; i < slot.scale_diag.size(); ++i) slot.scale_diag(i) = u(rng);
    }
  }
  return st;
}

}  // namespace selftest_detail

/// Partitions, the homogeneous-space first-moment and isometry laws, the Lie-group output
/// mean, and train/infer agreement at momentum 1.
inline SuiteResult normalization_suite(std::uint64_t seed) {
  using namespace selftest_detail;
  return timed("A4", "normalization", [&](std::vector<CheckResult>& out) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> small(1, 4);
    int bad_partitions = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t g = small(rng);
      const GridDims dims{small(rng), small(rng), small(rng), small(rng), g * small(rng)};
      for (const NormMode& mode : {NormMode::batch(), NormMode::layer(), NormMode::instance(), NormMode::group(g)}) {
        std::vector<int> seen(dims.total(), 0);
        for (const auto& s : partition_indices(mode, dims))
          for (std::size_t idx : s.cells) ++seen[idx];
        if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) ++bad_partitions;
      }
    }
    out.push_back(exact("partition coverage and disjointness", bad_partitions == 0, bad_partitions));

    NormOptions exact_mean;
    exact_mean.estimator = MeanEstimator::Oracle;

    const GridDims dims{2, 2, 1, 3, 4};
    for (const ManifoldId& m : {ManifoldId::spd_affine(3), ManifoldId::sphere(2), ManifoldId::spd_log_euclidean(3),
                                ManifoldId::special_orthogonal(3)}) {
      Worst zero_sum(m.name() + " homogeneous transported tangents sum to zero", 1e-6);
      Worst isometry(m.name() + " homogeneous recentring preserves distances", 1e-9);
      for (int trial = 0; trial < 5; ++trial) {
        const FeatureGrid grid = random_grid(rng, m, dims, 0.6);
        const NormMode mode = NormMode::group(2);
        const NormState st = NormState::identity(m, NormAlgorithm::Homogeneous, mode.slot_count(dims.c));
        const NormResult r = homog_norm_train(grid, st, mode, exact_mean);
        for (const auto& set : partition_indices(mode, dims)) {
          Vector sum = Vector::Zero(m.intrinsic_dim());
          std::vector<ManifoldPoint> pts;
          for (std::size_t idx : set.cells) pts.push_back(grid[idx]);
          const ManifoldPoint mb = oracle_fm(pts, WeightVector::uniform(pts.size()), exact_mean.oracle_tol);
          const ManifoldPoint origin = origin_point(m);
          for (std::size_t idx : set.cells) {
            sum += tangent_coords(log_map(origin, r.output[idx]));
            isometry.see(rel_diff(distance(r.output[idx], origin), distance(grid[idx], mb)));
          }
          zero_sum.see((sum / static_cast<double>(set.cells.size())).norm());
        }
      }
      out.push_back(zero_sum.result());
      out.push_back(isometry.result());

      Worst consistent(m.name() + " homogeneous train = infer at momentum 1", 1e-12);
      for (int trial = 0; trial < 3; ++trial) {
        const FeatureGrid grid = random_grid(rng, m, dims, 0.6);
        // Per-sample sets share their slot's running mean, so they are
        // compared against inference centred at each set's own mean.
        for (const NormMode& mode : {NormMode::batch(), NormMode::group(2)}) {
          NormState st = random_state(rng, m, NormAlgorithm::Homogeneous, mode.slot_count(dims.c));
          st.momentum = 1.0;
          const NormResult r = homog_norm_train(grid, st, mode);
          NormOptions opts;
          if (mode.per_sample()) opts.center = CenterSource::SetMean;
          const FeatureGrid inf = homog_norm_infer(grid, r.state, mode, opts);
          for (std::size_t i = 0; i < grid.size(); ++i) consistent.see(rel_err(inf[i].data, r.output[i].data));
        }
      }
      out.push_back(consistent.result());

      if (!m.is_lie_group()) continue;
      Worst lie_mean(m.name() + " lie output mean equals bias", 1e-6);
      Worst lie_consistent(m.name() + " lie train = infer at momentum 1", 1e-12);
      for (int trial = 0; trial < 5; ++trial) {
        const FeatureGrid grid = random_grid(rng, m, dims, 0.5);
        const NormMode mode = NormMode::instance();
        NormState st = random_state(rng, m, NormAlgorithm::LieGroup, mode.slot_count(dims.c));
        const NormResult r = lie_norm_train(grid, st, mode, exact_mean);
        for (const auto& set : partition_indices(mode, dims)) {
          std::vector<ManifoldPoint> pts;
          for (std::size_t idx : set.cells) pts.push_back(r.output[idx]);
          const ManifoldPoint fm = oracle_fm(pts, WeightVector::uniform(pts.size()), 1e-13);
          lie_mean.see(distance(fm, st.slots[set.slot].lie_bias));
        }
        const NormMode batch = NormMode::batch();
        NormState bst = random_state(rng, m, NormAlgorithm::LieGroup, batch.slot_count(dims.c));
        bst.momentum = 1.0;
        const NormResult br = lie_norm_train(grid, bst, batch);
        const FeatureGrid inf = lie_norm_infer(grid, br.state, batch);
        for (std::size_t i = 0; i < grid.size(); ++i) lie_consistent.see(rel_err(inf[i].data, br.output[i].data));
      }
      out.push_back(lie_mean.result());
      out.push_back(lie_consistent.result());
    }
  });
}

/// Smallest useful experiment; used by the determinism checks.
inline ExperimentConfig smoke_config() {
  ExperimentConfig c;
  c.data.train_per_class = 8;
  c.data.test_per_class = 4;
  c.data.spatial = {3, 3, 1};
  c.data.channels = 2;
  c.conv1 = {{2, 2, 1}, {1, 1, 1}, 2};
  c.conv2 = {{2, 2, 1}, {1, 1, 1}, 1};
  c.group_size = 1;
  c.train.epochs = 2;
  c.train.batch_size = 8;
  c.train.head_steps = 50;
  return c;
}

/// Bitwise tensor and dataset roundtrips; identical reports for identical seeds.
inline SuiteResult serialization_suite(std::uint64_t seed) {
  using namespace selftest_detail;
  return timed("A6", "determinism and serialization", [&](std::vector<CheckResult>& out) {
    Rng rng(seed);
    bool grids_ok = true;
    for (const ManifoldId& m : {ManifoldId::spd_affine(3), ManifoldId::sphere(2), ManifoldId::special_orthogonal(3)}) {
      const FeatureGrid g = random_grid(rng, m, {2, 3, 1, 2, 2}, 1.0);
      const std::string bytes = encode_grid(g);
      const FeatureGrid back = decode_grid(bytes);
      grids_ok = grids_ok && back.dims() == g.dims() && back.manifold() == g.manifold();
      for (std::size_t i = 0; grids_ok && i < g.size(); ++i) {
        grids_ok = std::memcmp(back[i].data.data(), g[i].data.data(),
                               sizeof(double) * static_cast<std::size_t>(g[i].data.size())) == 0;
      }
      grids_ok = grids_ok && encode_grid(back) == bytes;
    }
    out.push_back(exact("grid roundtrip is bitwise exact", grids_ok));

    ExperimentConfig c = smoke_config();
    c.seed = seed;
    const Dataset d1 = generate_synthetic(c, c.seed);
    const Dataset d2 = generate_synthetic(c, c.seed);
    const std::string b1 = encode_dataset(d1);
    out.push_back(exact("dataset generation is deterministic", b1 == encode_dataset(d2)));
    out.push_back(exact("dataset roundtrip is bitwise exact", encode_dataset(decode_dataset(b1)) == b1));

    std::string corrupt = b1;
    corrupt[0] = 'X';
    bool rejected = false;
    try {
      decode_dataset(corrupt);
    } catch (const FormatError&) {
      rejected = true;
    }
    out.push_back(exact("corrupted magic is rejected", rejected));

    const Report r1 = run_on_dataset(c, d1).report;
    const Report r2 = run_on_dataset(c, d1).report;
    out.push_back(exact("identical seeds give identical reports", same_metrics(r1, r2)));
  });
}

inline std::vector<SuiteResult> run_selftest(std::uint64_t seed = 20240601) {
  return {geometry_suite(seed), density_variance_suite(seed + 1), frechet_suite(seed + 2), normalization_suite(seed + 3),
          serialization_suite(seed + 4)};
}

inline void print_suite(std::ostream& os, const SuiteResult& s, bool verbose = true) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2fs", s.seconds);
  os << (s.passed() ? "PASS " : "FAIL ") << s.id << " " << s.title << " (" << buf << ")\n";
  if (!verbose) return;
  for (const auto& c : s.checks) {
    std::snprintf(buf, sizeof buf, "%.3e < %.1e", c.measured, c.tolerance);
    os << "  " << (c.passed ? "ok   " : "FAIL ") << c.name << ": " << buf << "\n";
  }
}

}  // namespace manifoldnorm

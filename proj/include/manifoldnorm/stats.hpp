#pragma once

// Frechet means, weighted variance and Riemannian Gaussians.
//
// incremental_wfm is the cheap recursive estimator used in the forward path:
//   M_1 = X_1,  M_{k+1} = geodesic(M_k, X_{k+1}, w_{k+1} / sum_{j<=k+1} w_j).
// oracle_fm is an independent Riemannian gradient descent on the weighted
// variance and is what the tests measure the estimator against.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/manifold.hpp"

namespace manifoldnorm {

/// Convex weights: each in (0, 1], summing to one.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) detail::fail_validation("WeightVector: no weights");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0 && w <= 1.0)) detail::fail_validation("WeightVector: weight outside (0, 1]");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      detail::fail_validation("WeightVector: weights sum to " + std::to_string(sum) + ", not 1");
    }
  }

  static WeightVector uniform(std::size_t n) {
    if (n == 0) detail::fail_validation("WeightVector: no weights");
    return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const { return weights_; }

 private:
  std::vector<double> weights_;
};

namespace stats_detail {

inline void require_common(std::span<const ManifoldPoint> points, std::size_t weight_count,
                           const char* op) {
  if (points.empty()) detail::fail_validation(std::string(op) + ": empty point list");
  if (points.size() != weight_count) {
    detail::fail_validation(std::string(op) + ": " + std::to_string(points.size()) + " points but " +
                            std::to_string(weight_count) + " weights");
  }
  for (const auto& p : points) {
    geometry_detail::require_same_manifold(points.front().manifold, p.manifold, op);
  }
}

}  // namespace stats_detail

/// sum_i w_i d(X_i, M)^2.
inline double weighted_variance(std::span<const ManifoldPoint> points, const WeightVector& w,
                                const ManifoldPoint& m) {
  stats_detail::require_common(points, w.size(), "weighted_variance");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = distance(points[i], m);
    sum += w[i] * d * d;
  }
  return sum;
}

/// Recursive weighted Frechet mean, processed in input order.
inline ManifoldPoint incremental_wfm(std::span<const ManifoldPoint> points, const WeightVector& w) {
  stats_detail::require_common(points, w.size(), "incremental_wfm");
  ManifoldPoint mean = points.front();
  double seen = w[0];
  for (std::size_t i = 1; i < points.size(); ++i) {
    seen += w[i];
    mean = geodesic_point(mean, points[i], std::min(1.0, w[i] / seen));
  }
  return mean;
}

struct FrechetResult {
  ManifoldPoint mean;
  int iterations = 0;
  double residual = 0.0;  // |sum_i w_i Log_M(X_i)|_g at the returned mean
};

struct OracleOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  int max_halvings = 30;
};

/// Riemannian gradient descent M <- Exp_M(alpha * sum_i w_i Log_M(X_i)), unit
/// initial step, halved while the weighted variance increases.
inline FrechetResult oracle_fm_detailed(std::span<const ManifoldPoint> points, const WeightVector& w,
                                        const OracleOptions& options = {}) {
  stats_detail::require_common(points, w.size(), "oracle_fm");
  const ManifoldId m = points.front().manifold;
  const double r_inj = m.injectivity_radius();

  auto gradient = [&](const ManifoldPoint& at) {
    TangentVector g = zero_tangent(at);
    for (std::size_t i = 0; i < points.size(); ++i) g.ambient += w[i] * log_map(at, points[i]).ambient;
    return g;
  };

  ManifoldPoint current = points.front();
  double objective = weighted_variance(points, w, current);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const TangentVector g = gradient(current);
    const double residual = tangent_norm(g);
    if (residual < options.tol) return {current, iter, residual};

    double alpha = 1.0;
    if (std::isfinite(r_inj) && residual > 0.5 * r_inj) alpha = 0.5 * r_inj / residual;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      ManifoldPoint candidate = exp_map(current, scale_tangent(g, alpha));
      const double cand_obj = weighted_variance(points, w, candidate);
      if (cand_obj <= objective * (1.0 + 1e-13) + 1e-300) {
        current = std::move(candidate);
        objective = cand_obj;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      detail::fail_numerical("oracle_fm: no descent step found (residual " + std::to_string(residual) + ")");
    }
  }
  detail::fail_numerical("oracle_fm: did not converge in " + std::to_string(options.max_iter) + " iterations");
}

inline ManifoldPoint oracle_fm(std::span<const ManifoldPoint> points, const WeightVector& w,
                               double tol = 1e-10, int max_iter = 1000) {
  OracleOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return oracle_fm_detailed(points, w, options).mean;
}

/// Isotropic Gaussian on a Lie group, density proportional to
/// exp(-d(X, M)^2 / (2 sigma^2)).
struct LieGaussian {
  ManifoldPoint mean;
  double sigma2 = 1.0;
};

/// Gaussian on a homogeneous space with concentration matrix Delta acting on
/// iota-coordinates of Log_M(X) transported to the origin.
struct HomogGaussian {
  ManifoldPoint mean;
  Matrix concentration;
};

inline double density_lie(const ManifoldPoint& x, const LieGaussian& dist, bool normalized = false) {
  if (normalized) detail::fail_validation("density_lie: the normalizing constant is not computed");
  lie_detail::require_lie(x.manifold, "density_lie");
  if (!(dist.sigma2 > 0.0)) detail::fail_validation("density_lie: sigma2 must be positive");
  const double d = distance(x, dist.mean);
  return std::exp(-d * d / (2.0 * dist.sigma2));
}

/// Coordinates of X relative to M: iota(Gamma_{M->I}(Log_M X)).
inline Vector centered_coords(const ManifoldPoint& x, const ManifoldPoint& mean) {
  const ManifoldPoint origin = origin_point(mean.manifold);
  return tangent_coords(parallel_transport(mean, origin, log_map(mean, x)));
}

/// Inverse of centered_coords: Exp_M(Gamma_{I->M}(iota^-1(c))).
inline ManifoldPoint point_from_centered_coords(const ManifoldPoint& mean, const Vector& c) {
  const ManifoldPoint origin = origin_point(mean.manifold);
  return exp_map(mean, parallel_transport(origin, mean, coords_to_tangent(origin, c)));
}

namespace stats_detail {

inline void check_concentration(const HomogGaussian& dist) {
  const int m = dist.mean.manifold.intrinsic_dim();
  if (dist.concentration.rows() != m || dist.concentration.cols() != m) {
    detail::fail_validation("HomogGaussian: concentration must be " + std::to_string(m) + "x" +
                            std::to_string(m));
  }
  if (!linalg::is_symmetric(dist.concentration) ||
      linalg::sym_eig(dist.concentration).eigenvalues.minCoeff() <= 0.0) {
    detail::fail_validation("HomogGaussian: concentration must be symmetric positive definite");
  }
}

}  // namespace stats_detail

inline double density_homog(const ManifoldPoint& x, const HomogGaussian& dist) {
  stats_detail::check_concentration(dist);
  const Vector c = centered_coords(x, dist.mean);
  return std::exp(-0.5 * c.dot(dist.concentration * c));
}

namespace stats_detail {

inline constexpr int kMaxRejections = 100000;

/// Draws `count` points Exp_M(Gamma_{I->M}(iota^-1(c))), c = factor * z with
/// z standard normal, rejecting |c| >= 0.9 r_inj.
inline std::vector<ManifoldPoint> sample_with_factor(const ManifoldPoint& mean, const Matrix& factor,
                                                     int count, std::uint64_t seed) {
  if (count < 1) detail::fail_validation("sample_gaussian: count must be >= 1");
  const int m = mean.manifold.intrinsic_dim();
  const double radius = 0.9 * mean.manifold.injectivity_radius();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ManifoldPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vector c(m);
    int attempts = 0;
    do {
      if (++attempts > kMaxRejections) {
        detail::fail_numerical("sample_gaussian: truncation rejects every draw; dispersion too large");
      }
      Vector z(m);
      for (int i = 0; i < m; ++i) z(i) = normal(rng);
      c = factor * z;
    } while (std::isfinite(radius) && c.norm() >= radius);
    out.push_back(point_from_centered_coords(mean, c));
  }
  return out;
}

}  // namespace stats_detail

/// Truncated tangent-space Gaussian sampler (ignores the volume density).
inline std::vector<ManifoldPoint> sample_gaussian(const LieGaussian& dist, int count, std::uint64_t seed) {
  if (!(dist.sigma2 > 0.0)) detail::fail_validation("sample_gaussian: sigma2 must be positive");
  const int m = dist.mean.manifold.intrinsic_dim();
  const Matrix factor = std::sqrt(dist.sigma2) * Matrix::Identity(m, m);
  return stats_detail::sample_with_factor(dist.mean, factor, count, seed);
}

inline std::vector<ManifoldPoint> sample_gaussian(const HomogGaussian& dist, int count, std::uint64_t seed) {
  stats_detail::check_concentration(dist);
  const Matrix covariance = dist.concentration.inverse();
  Eigen::LLT<Matrix> llt(linalg::symmetrize(covariance));
  if (llt.info() != Eigen::Success) detail::fail_numerical("sample_gaussian: covariance factorization failed");
  return stats_detail::sample_with_factor(dist.mean, llt.matrixL(), count, seed);
}

}  // namespace manifoldnorm

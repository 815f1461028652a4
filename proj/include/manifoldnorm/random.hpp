#pragma once

// Random points, tangent vectors and group elements for property checks.

#include <cmath>
#include <random>

#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/stats.hpp"

namespace manifoldnorm {

using Rng = std::mt19937_64;

inline Vector random_normal_vector(Rng& rng, int size) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = normal(rng);
  return v;
}

/// Coordinate vector with uniform direction and norm uniform in [0, radius).
inline Vector random_ball_coords(Rng& rng, int size, double radius) {
  Vector v = random_normal_vector(rng, size);
  while (v.norm() < 1e-12) v = random_normal_vector(rng, size);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return v.normalized() * (radius * u(rng));
}

/// Point within `radius` of `center`.
inline ManifoldPoint random_point_near(Rng& rng, const ManifoldPoint& center, double radius) {
  return point_from_centered_coords(center, random_ball_coords(rng, center.manifold.intrinsic_dim(), radius));
}

inline ManifoldPoint random_point(Rng& rng, const ManifoldId& m, double radius) {
  return random_point_near(rng, origin_point(m), radius);
}

/// Tangent vector at x with metric norm uniform in [0, radius).
inline TangentVector random_tangent(Rng& rng, const ManifoldPoint& x, double radius) {
  const ManifoldPoint origin = origin_point(x.manifold);
  const TangentVector at_origin =
      coords_to_tangent(origin, random_ball_coords(rng, x.manifold.intrinsic_dim(), radius));
  return parallel_transport(origin, x, at_origin);
}

/// Element of the isometry group: GL(n) for SPD-affine, rotations otherwise.
inline GroupElement random_group_element(Rng& rng, const ManifoldId& m, double spread = 1.0) {
  const Eigen::Index d = m.group_dim();
  Matrix a(d, d);
  std::normal_distribution<double> normal(0.0, spread);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = normal(rng);
  if (m.kind() == ManifoldKind::SpdAffine) return {m, linalg::expm(0.5 * a)};
  return {m, linalg::skew_expm(linalg::skew_part(a))};
}

}  // namespace manifoldnorm

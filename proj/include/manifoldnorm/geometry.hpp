#pragma once

// Closed-form Riemannian operations for the four supported manifolds:
//   SPD, affine-invariant:  d(X,Y) = |logm(X^-1/2 Y X^-1/2)|_F
//   SPD, log-Euclidean:     d(X,Y) = |logm X - logm Y|_F, tangents in log coordinates
//   S^n, arc length:        d(x,y) = angle between x and y
//   SO(n), Frobenius:       d(X,Y) = |logm(X^T Y)|_F
// All functions are pure and validate manifold agreement of their inputs.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/linalg.hpp"
#include "manifoldnorm/manifold.hpp"

namespace manifoldnorm {

namespace geometry_detail {

// Products of valid rotations carry a little more roundoff than the inputs.
inline constexpr double kDerivedRotationTol = 1e-8;

inline void require_same_manifold(const ManifoldId& a, const ManifoldId& b, const char* op) {
  if (!(a == b)) {
    detail::fail_validation(std::string(op) + ": manifold mismatch (" + a.name() + " vs " +
                            b.name() + ")");
  }
}

inline bool same_point(const Matrix& a, const Matrix& b, double tol = 1e-10) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a - b).norm() <= tol * std::max(1.0, a.norm());
}

inline void require_base(const TangentVector& v, const ManifoldPoint& x, const char* op) {
  require_same_manifold(v.base.manifold, x.manifold, op);
  if (!same_point(v.base.data, x.data)) {
    detail::fail_validation(std::string(op) + ": tangent vector is not based at the given point");
  }
}

inline void require_origin(const ManifoldPoint& x, const char* op) {
  if (!same_point(x.data, x.manifold.origin())) {
    detail::fail_validation(std::string(op) + ": tangent coordinates are defined at the origin only");
  }
}

inline double sphere_angle(const Matrix& x, const Matrix& y) {
  const double c = (x.transpose() * y)(0, 0);
  const double s = (y - c * x).norm();
  return std::atan2(s, c);
}

inline void require_not_antipodal(const Matrix& x, const Matrix& y, double tol, const char* op) {
  const double c = (x.transpose() * y)(0, 0);
  if (c <= -1.0 + tol) {
    detail::fail_numerical(std::string(op) + ": antipodal sphere points (cut locus)");
  }
}

inline Matrix so_relative_log(const Matrix& x, const Matrix& y) {
  return linalg::rotation_logm(x.transpose() * y, kDerivedRotationTol);
}

}  // namespace geometry_detail

/// Geodesic distance.
inline double distance(const ManifoldPoint& x, const ManifoldPoint& y, const Tolerances& tol = {}) {
  geometry_detail::require_same_manifold(x.manifold, y.manifold, "distance");
  switch (x.manifold.kind()) {
    case ManifoldKind::SpdAffine: {
      const Matrix xis = linalg::sym_matrix_function(x.data, linalg::SpectralFunction::inv_sqrt());
      const auto eig = linalg::sym_eig(xis * y.data * xis);
      double sum = 0.0;
      for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
        if (eig.eigenvalues(i) <= linalg::kMinEigenvalue) {
          detail::fail_numerical("distance: SPD argument is not positive definite");
        }
        const double l = std::log(eig.eigenvalues(i));
        sum += l * l;
      }
      return std::sqrt(sum);
    }
    case ManifoldKind::SpdLogEuclidean:
      return (linalg::sym_logm(x.data) - linalg::sym_logm(y.data)).norm();
    case ManifoldKind::Sphere:
      geometry_detail::require_not_antipodal(x.data, y.data, tol.antipodal, "distance");
      return geometry_detail::sphere_angle(x.data, y.data);
    case ManifoldKind::SpecialOrthogonal:
      return geometry_detail::so_relative_log(x.data, y.data).norm();
  }
  return 0.0;
}

/// Riemannian metric g_X(u, v).
inline double inner_product(const TangentVector& u, const TangentVector& v) {
  geometry_detail::require_base(v, u.base, "inner_product");
  switch (u.base.manifold.kind()) {
    case ManifoldKind::SpdAffine: {
      const Matrix xinv = u.base.data.inverse();
      return (xinv * u.ambient * xinv * v.ambient).trace();
    }
    case ManifoldKind::SpdLogEuclidean:
    case ManifoldKind::Sphere:
    case ManifoldKind::SpecialOrthogonal:
      return (u.ambient.array() * v.ambient.array()).sum();
  }
  return 0.0;
}

inline double tangent_norm(const TangentVector& v) {
  return std::sqrt(std::max(0.0, inner_product(v, v)));
}

inline TangentVector scale_tangent(const TangentVector& v, double t) { return {v.base, t * v.ambient}; }

/// Exp_X(v).
inline ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v) {
  geometry_detail::require_base(v, x, "exp_map");
  const ManifoldId& m = x.manifold;
  const double r_inj = m.injectivity_radius();
  if (std::isfinite(r_inj) && tangent_norm(v) > r_inj) {
    detail::fail_numerical("exp_map: tangent norm exceeds the injectivity radius of " + m.name());
  }
  switch (m.kind()) {
    case ManifoldKind::SpdAffine: {
      const auto roots = linalg::spd_sqrt_pair(x.data);
      const Matrix inner = linalg::sym_expm(roots.inv_sqrt * v.ambient * roots.inv_sqrt);
      return {m, linalg::symmetrize(roots.sqrt * inner * roots.sqrt)};
    }
    case ManifoldKind::SpdLogEuclidean:
      return {m, linalg::sym_expm(linalg::symmetrize(v.ambient) + linalg::sym_logm(x.data))};
    case ManifoldKind::Sphere: {
      const double theta = v.ambient.norm();
      Matrix y;
      if (theta < linalg::kSmallAngle) {
        y = (1.0 - 0.5 * theta * theta) * x.data + (1.0 - theta * theta / 6.0) * v.ambient;
      } else {
        y = std::cos(theta) * x.data + (std::sin(theta) / theta) * v.ambient;
      }
      return {m, y / y.norm()};
    }
    case ManifoldKind::SpecialOrthogonal:
      return {m, x.data * linalg::skew_expm(linalg::skew_part(x.data.transpose() * v.ambient))};
  }
  return x;
}

/// Log_X(Y), the inverse of exp_map inside the injectivity radius.
inline TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y, const Tolerances& tol = {}) {
  geometry_detail::require_same_manifold(x.manifold, y.manifold, "log_map");
  switch (x.manifold.kind()) {
    case ManifoldKind::SpdAffine: {
      const auto roots = linalg::spd_sqrt_pair(x.data);
      const Matrix inner = linalg::sym_logm(roots.inv_sqrt * y.data * roots.inv_sqrt);
      return {x, linalg::symmetrize(roots.sqrt * inner * roots.sqrt)};
    }
    case ManifoldKind::SpdLogEuclidean:
      return {x, linalg::sym_logm(y.data) - linalg::sym_logm(x.data)};
    case ManifoldKind::Sphere: {
      geometry_detail::require_not_antipodal(x.data, y.data, tol.antipodal, "log_map");
      const double c = (x.data.transpose() * y.data)(0, 0);
      const Matrix u = y.data - c * x.data;
      const double s = u.norm();
      const double theta = std::atan2(s, c);
      const double factor = theta < linalg::kSmallAngle ? 1.0 + theta * theta / 6.0 : theta / s;
      Matrix v = factor * u;
      // Remove the roundoff component along the base point.
      v -= (x.data.transpose() * v)(0, 0) * x.data;
      return {x, v};
    }
    case ManifoldKind::SpecialOrthogonal:
      return {x, x.data * geometry_detail::so_relative_log(x.data, y.data)};
  }
  return zero_tangent(x);
}

/// Moves v from T_X to T_Y along the geodesic joining them.
inline TangentVector parallel_transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                        const TangentVector& v, const Tolerances& tol = {}) {
  geometry_detail::require_base(v, x, "parallel_transport");
  geometry_detail::require_same_manifold(x.manifold, y.manifold, "parallel_transport");
  switch (x.manifold.kind()) {
    case ManifoldKind::SpdAffine: {
      const Matrix xis = linalg::sym_matrix_function(x.data, linalg::SpectralFunction::inv_sqrt());
      const Matrix ys = linalg::sym_matrix_function(y.data, linalg::SpectralFunction::sqrt());
      return {y, linalg::symmetrize(ys * xis * v.ambient * xis * ys)};
    }
    case ManifoldKind::SpdLogEuclidean:
      return {y, v.ambient};
    case ManifoldKind::Sphere: {
      const Matrix w = log_map(x, y, tol).ambient;
      const double theta = w.norm();
      if (theta < 1e-15) return {y, v.ambient};
      const Matrix w_hat = w / theta;
      const double a = (w_hat.transpose() * v.ambient)(0, 0);
      Matrix out = v.ambient - a * w_hat + a * (-std::sin(theta) * x.data + std::cos(theta) * w_hat);
      out -= (y.data.transpose() * out)(0, 0) * y.data;
      return {y, out};
    }
    case ManifoldKind::SpecialOrthogonal:
      return {y, y.data * x.data.transpose() * v.ambient};
  }
  return {y, v.ambient};
}

/// Point at fraction t of the shortest geodesic from X to Y.
inline ManifoldPoint geodesic_point(const ManifoldPoint& x, const ManifoldPoint& y, double t,
                                    const Tolerances& tol = {}) {
  geometry_detail::require_same_manifold(x.manifold, y.manifold, "geodesic_point");
  if (!(t >= 0.0 && t <= 1.0)) detail::fail_validation("geodesic_point: t must lie in [0, 1]");
  if (t == 0.0) return x;
  if (t == 1.0) return y;
  switch (x.manifold.kind()) {
    case ManifoldKind::SpdAffine: {
      const auto roots = linalg::spd_sqrt_pair(x.data);
      const Matrix inner = linalg::sym_matrix_function(roots.inv_sqrt * y.data * roots.inv_sqrt,
                                                       linalg::SpectralFunction::power(t));
      return {x.manifold, linalg::symmetrize(roots.sqrt * inner * roots.sqrt)};
    }
    case ManifoldKind::SpdLogEuclidean:
      return {x.manifold,
              linalg::sym_expm((1.0 - t) * linalg::sym_logm(x.data) + t * linalg::sym_logm(y.data))};
    case ManifoldKind::SpecialOrthogonal:
      return {x.manifold,
              x.data * linalg::skew_expm(t * geometry_detail::so_relative_log(x.data, y.data))};
    case ManifoldKind::Sphere:
      return exp_map(x, scale_tangent(log_map(x, y, tol), t));
  }
  return x;
}

/// g . X for the isometry group of the manifold.
inline ManifoldPoint group_action(const GroupElement& g, const ManifoldPoint& x,
                                  const Tolerances& tol = {}) {
  geometry_detail::require_same_manifold(g.manifold, x.manifold, "group_action");
  check_group_element(g, tol);
  switch (x.manifold.kind()) {
    case ManifoldKind::SpdAffine:
    case ManifoldKind::SpdLogEuclidean:
      return {x.manifold, linalg::symmetrize(g.data * x.data * g.data.transpose())};
    case ManifoldKind::Sphere:
    case ManifoldKind::SpecialOrthogonal:
      return {x.manifold, g.data * x.data};
  }
  return x;
}

/// The fixed isometry iota: T_I M -> R^m. SPD: diagonal entries, then upper
/// off-diagonal entries (row-major) weighted by sqrt(2). Sphere at e_1: drop
/// the first coordinate. SO: upper entries of the skew generator, weighted by
/// sqrt(2).
inline Vector tangent_coords(const TangentVector& v) {
  geometry_detail::require_origin(v.base, "tangent_coords");
  const ManifoldId& m = v.base.manifold;
  const int dim = m.intrinsic_dim();
  Vector c(dim);
  const int n = m.n();
  switch (m.kind()) {
    case ManifoldKind::SpdAffine:
    case ManifoldKind::SpdLogEuclidean: {
      int k = 0;
      for (int i = 0; i < n; ++i) c(k++) = v.ambient(i, i);
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) c(k++) = std::numbers::sqrt2 * 0.5 * (v.ambient(i, j) + v.ambient(j, i));
      }
      break;
    }
    case ManifoldKind::Sphere:
      for (int i = 0; i < n; ++i) c(i) = v.ambient(i + 1, 0);
      break;
    case ManifoldKind::SpecialOrthogonal: {
      int k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) c(k++) = std::numbers::sqrt2 * 0.5 * (v.ambient(i, j) - v.ambient(j, i));
      }
      break;
    }
  }
  return c;
}

/// Inverse of tangent_coords; the base point must be the origin.
inline TangentVector coords_to_tangent(const ManifoldPoint& x, const Vector& c) {
  geometry_detail::require_origin(x, "coords_to_tangent");
  const ManifoldId& m = x.manifold;
  if (c.size() != m.intrinsic_dim()) {
    detail::fail_validation("coords_to_tangent: expected " + std::to_string(m.intrinsic_dim()) +
                            " coordinates, got " + std::to_string(c.size()));
  }
  const int n = m.n();
  Matrix a = Matrix::Zero(x.data.rows(), x.data.cols());
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  switch (m.kind()) {
    case ManifoldKind::SpdAffine:
    case ManifoldKind::SpdLogEuclidean: {
      int k = 0;
      for (int i = 0; i < n; ++i) a(i, i) = c(k++);
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          a(i, j) = a(j, i) = c(k++) * inv_sqrt2;
        }
      }
      break;
    }
    case ManifoldKind::Sphere:
      for (int i = 0; i < n; ++i) a(i + 1, 0) = c(i);
      break;
    case ManifoldKind::SpecialOrthogonal: {
      int k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          a(i, j) = c(k) * inv_sqrt2;
          a(j, i) = -c(k) * inv_sqrt2;
          ++k;
        }
      }
      break;
    }
  }
  return {x, a};
}

/// True iff every point lies within `radius` of the first one.
inline bool validate_ball(std::span<const ManifoldPoint> points, double radius) {
  if (points.empty()) detail::fail_validation("validate_ball: empty point list");
  for (const auto& p : points) {
    geometry_detail::require_same_manifold(points.front().manifold, p.manifold, "validate_ball");
    if (distance(points.front(), p) > radius) return false;
  }
  return true;
}

}  // namespace manifoldnorm

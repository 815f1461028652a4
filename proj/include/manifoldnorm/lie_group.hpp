#pragma once

// Point construction/repair for every manifold, plus the matrix Lie group
// structure of log-Euclidean SPD (X o Y = expm(logm X + logm Y)) and SO(n)
// (matrix product).

#include <cmath>
#include <numbers>
#include <string>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/linalg.hpp"
#include "manifoldnorm/manifold.hpp"

namespace manifoldnorm {

/// Coordinates of a Lie algebra element in the iota basis at the identity.
struct LieAlgebraVector {
  ManifoldId manifold;
  Vector coords;
};

inline constexpr double kSpdRepairFloor = 1e-10;
inline constexpr int kPolarMaxSteps = 20;

/// Builds a validated point. With repair, projects onto the manifold first:
/// symmetrize and floor eigenvalues (SPD), normalize (sphere), nearest
/// rotation by Newton polar iteration (SO).
inline ManifoldPoint make_point(const ManifoldId& m, const Matrix& raw, bool repair = false,
                                const Tolerances& tol = {}) {
  if (raw.rows() != m.ambient_rows() || raw.cols() != m.ambient_cols()) {
    detail::fail_validation("make_point: shape " + std::to_string(raw.rows()) + "x" +
                            std::to_string(raw.cols()) + " does not match " + m.name());
  }
  if (!raw.allFinite()) detail::fail_validation("make_point: non-finite entries");
  ManifoldPoint p{m, raw};
  if (repair) {
    switch (m.kind()) {
      case ManifoldKind::SpdAffine:
      case ManifoldKind::SpdLogEuclidean: {
        auto eig = linalg::sym_eig(raw);
        for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
          eig.eigenvalues(i) = std::max(eig.eigenvalues(i), kSpdRepairFloor);
        }
        p.data = linalg::symmetrize(eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                                    eig.eigenvectors.transpose());
        break;
      }
      case ManifoldKind::Sphere: {
        const double norm = raw.norm();
        if (norm < 1e-12) detail::fail_validation("make_point: cannot normalize a zero vector");
        p.data = raw / norm;
        break;
      }
      case ManifoldKind::SpecialOrthogonal: {
        Matrix x = raw;
        for (int step = 0; step < kPolarMaxSteps; ++step) {
          if (std::abs(x.determinant()) < 1e-12) {
            detail::fail_validation("make_point: cannot orthogonalize a singular matrix");
          }
          const Matrix next = 0.5 * (x + x.inverse().transpose());
          const double change = (next - x).norm();
          x = next;
          if (change < 1e-15 * std::max(1.0, x.norm())) break;
        }
        if (x.determinant() <= 0.0) {
          detail::fail_validation("make_point: nearest orthogonal matrix is a reflection");
        }
        p.data = x;
        break;
      }
    }
  }
  check_point(p, tol);
  return p;
}

inline TangentVector make_tangent(const ManifoldPoint& base, const Matrix& ambient,
                                  const Tolerances& tol = {}) {
  TangentVector v{base, ambient};
  check_tangent(v, tol);
  return v;
}

namespace lie_detail {

inline void require_lie(const ManifoldId& m, const char* op) {
  if (!m.is_lie_group()) {
    detail::fail_validation(std::string(op) + ": " + m.name() + " is not a Lie-group manifold");
  }
}

}  // namespace lie_detail

inline ManifoldPoint lie_identity(const ManifoldId& m) {
  lie_detail::require_lie(m, "lie_identity");
  return origin_point(m);
}

/// Group operation X o Y.
inline ManifoldPoint lie_compose(const ManifoldPoint& x, const ManifoldPoint& y) {
  lie_detail::require_lie(x.manifold, "lie_compose");
  geometry_detail::require_same_manifold(x.manifold, y.manifold, "lie_compose");
  if (x.manifold.kind() == ManifoldKind::SpdLogEuclidean) {
    return {x.manifold, linalg::sym_expm(linalg::sym_logm(x.data) + linalg::sym_logm(y.data))};
  }
  return {x.manifold, x.data * y.data};
}

inline ManifoldPoint lie_inverse(const ManifoldPoint& x) {
  lie_detail::require_lie(x.manifold, "lie_inverse");
  if (x.manifold.kind() == ManifoldKind::SpdLogEuclidean) {
    return {x.manifold, linalg::sym_expm(-linalg::sym_logm(x.data))};
  }
  return {x.manifold, x.data.transpose()};
}

inline LieAlgebraVector lie_logm(const ManifoldPoint& x) {
  lie_detail::require_lie(x.manifold, "lie_logm");
  const ManifoldPoint id = origin_point(x.manifold);
  const Matrix gen = x.manifold.kind() == ManifoldKind::SpdLogEuclidean
                         ? linalg::sym_logm(x.data)
                         : linalg::rotation_logm(x.data, geometry_detail::kDerivedRotationTol);
  return {x.manifold, tangent_coords({id, gen})};
}

inline ManifoldPoint lie_expm(const LieAlgebraVector& v) {
  lie_detail::require_lie(v.manifold, "lie_expm");
  const ManifoldPoint id = origin_point(v.manifold);
  const Matrix gen = coords_to_tangent(id, v.coords).ambient;
  if (v.manifold.kind() == ManifoldKind::SpdLogEuclidean) return {v.manifold, linalg::sym_expm(gen)};
  return {v.manifold, linalg::skew_expm(gen)};
}

/// expm(s logm X): moves X along the geodesic from the identity, scaling its
/// distance from the identity by s.
inline ManifoldPoint scale_from_identity(const ManifoldPoint& x, double s) {
  lie_detail::require_lie(x.manifold, "scale_from_identity");
  if (!(s > 0.0) || !std::isfinite(s)) detail::fail_validation("scale_from_identity: s must be positive");
  if (x.manifold.kind() == ManifoldKind::SpdLogEuclidean) {
    return {x.manifold, linalg::sym_matrix_function(x.data, linalg::SpectralFunction::power(s))};
  }
  const Matrix w = linalg::rotation_logm(x.data, geometry_detail::kDerivedRotationTol);
  if (s * linalg::max_rotation_angle(w) >= std::numbers::pi - linalg::kCutLocusMargin) {
    detail::fail_numerical("scale_from_identity: scaled rotation leaves the principal branch");
  }
  return {x.manifold, linalg::skew_expm(s * w)};
}

}  // namespace manifoldnorm

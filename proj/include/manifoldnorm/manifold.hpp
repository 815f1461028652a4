#pragma once

// Value types shared by every module: which manifold, points on it, tangent
// vectors, and elements of the group acting on it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "manifoldnorm/error.hpp"
#include "manifoldnorm/linalg.hpp"

namespace manifoldnorm {

enum class ManifoldKind : std::uint8_t {
  SpdAffine = 0,
  SpdLogEuclidean = 1,
  Sphere = 2,
  SpecialOrthogonal = 3,
};

/// Validation thresholds. Defaults match the documented invariants; the
/// experiment config can override them.
struct Tolerances {
  double symmetry = 1e-10;
  double min_eigenvalue = 1e-12;
  double unit_norm = 1e-10;
  double orthogonality = 1e-10;
  double antipodal = 1e-10;
  double tangent = 1e-10;
  double invertibility = 1e-12;
};

class ManifoldId {
 public:
  ManifoldId() = default;

  ManifoldId(ManifoldKind kind, int n) : kind_(kind), n_(n) {
    const int min_n = kind == ManifoldKind::SpecialOrthogonal ? 2 : 1;
    if (n < min_n || n > 4096) {
      detail::fail_validation("manifold parameter n=" + std::to_string(n) + " out of range for " +
                              kind_name(kind));
    }
  }

  static ManifoldId spd_affine(int n) { return {ManifoldKind::SpdAffine, n}; }
  static ManifoldId spd_log_euclidean(int n) { return {ManifoldKind::SpdLogEuclidean, n}; }
  /// The unit sphere S^n embedded in R^{n+1}.
  static ManifoldId sphere(int n) { return {ManifoldKind::Sphere, n}; }
  static ManifoldId special_orthogonal(int n) { return {ManifoldKind::SpecialOrthogonal, n}; }

  ManifoldKind kind() const { return kind_; }
  int n() const { return n_; }

  int intrinsic_dim() const {
    switch (kind_) {
      case ManifoldKind::SpdAffine:
      case ManifoldKind::SpdLogEuclidean:
        return n_ * (n_ + 1) / 2;
      case ManifoldKind::Sphere:
        return n_;
      case ManifoldKind::SpecialOrthogonal:
        return n_ * (n_ - 1) / 2;
    }
    return 0;
  }

  Eigen::Index ambient_rows() const { return kind_ == ManifoldKind::Sphere ? n_ + 1 : n_; }
  Eigen::Index ambient_cols() const { return kind_ == ManifoldKind::Sphere ? 1 : n_; }
  Eigen::Index ambient_size() const { return ambient_rows() * ambient_cols(); }

  bool is_lie_group() const {
    return kind_ == ManifoldKind::SpdLogEuclidean || kind_ == ManifoldKind::SpecialOrthogonal;
  }

  bool is_spd() const {
    return kind_ == ManifoldKind::SpdAffine || kind_ == ManifoldKind::SpdLogEuclidean;
  }

  /// Radius of the largest tangent ball on which Exp is injective, measured in
  /// the manifold's own metric. SO(n) with the Frobenius metric reaches the
  /// cut locus at sqrt(2)*pi (one plane rotated by pi).
  double injectivity_radius() const {
    switch (kind_) {
      case ManifoldKind::Sphere:
        return std::numbers::pi;
      case ManifoldKind::SpecialOrthogonal:
        return std::numbers::sqrt2 * std::numbers::pi;
      default:
        return std::numeric_limits<double>::infinity();
    }
  }

  /// Identity matrix for SPD and SO, first standard basis vector for spheres.
  Matrix origin() const {
    if (kind_ == ManifoldKind::Sphere) {
      Matrix e = Matrix::Zero(n_ + 1, 1);
      e(0, 0) = 1.0;
      return e;
    }
    return Matrix::Identity(n_, n_);
  }

  /// Shape of the matrices in the acting isometry group.
  Eigen::Index group_dim() const { return kind_ == ManifoldKind::Sphere ? n_ + 1 : n_; }

  std::string name() const { return std::string(kind_name(kind_)) + "(" + std::to_string(n_) + ")"; }

  static const char* kind_name(ManifoldKind kind) {
    switch (kind) {
      case ManifoldKind::SpdAffine:
        return "spd_affine";
      case ManifoldKind::SpdLogEuclidean:
        return "spd_log_euclidean";
      case ManifoldKind::Sphere:
        return "sphere";
      case ManifoldKind::SpecialOrthogonal:
        return "special_orthogonal";
    }
    return "unknown";
  }

  friend bool operator==(const ManifoldId& a, const ManifoldId& b) {
    return a.kind_ == b.kind_ && a.n_ == b.n_;
  }

 private:
  ManifoldKind kind_ = ManifoldKind::SpdAffine;
  int n_ = 1;
};

/// A point stored in its natural representation: SPD and SO as n x n
/// matrices, sphere points as (n+1) x 1 column vectors.
struct ManifoldPoint {
  ManifoldId manifold;
  Matrix data;
};

/// Tangent vector in the ambient representation of its base point.
struct TangentVector {
  ManifoldPoint base;
  Matrix ambient;
};

/// Element of the group acting on a manifold: GL(n) for affine SPD, SO(n+1)
/// for S^n, SO(n) by congruence for log-Euclidean SPD, SO(n) by left
/// multiplication for SO(n).
struct GroupElement {
  ManifoldId manifold;
  Matrix data;
};

inline ManifoldPoint origin_point(const ManifoldId& m) { return {m, m.origin()}; }

inline GroupElement identity_element(const ManifoldId& m) {
  return {m, Matrix::Identity(m.group_dim(), m.group_dim())};
}

inline TangentVector zero_tangent(const ManifoldPoint& base) {
  return {base, Matrix::Zero(base.data.rows(), base.data.cols())};
}

/// Returns an empty string when the point is valid, otherwise the reason.
inline std::string point_violation(const ManifoldPoint& p, const Tolerances& tol = {}) {
  const ManifoldId& m = p.manifold;
  if (p.data.rows() != m.ambient_rows() || p.data.cols() != m.ambient_cols()) {
    return "shape " + std::to_string(p.data.rows()) + "x" + std::to_string(p.data.cols()) +
           " does not match " + m.name();
  }
  if (!p.data.allFinite()) return "non-finite entries";
  switch (m.kind()) {
    case ManifoldKind::SpdAffine:
    case ManifoldKind::SpdLogEuclidean: {
      if (!linalg::is_symmetric(p.data, tol.symmetry)) return "matrix is not symmetric";
      const auto eig = linalg::sym_eig(p.data);
      if (eig.eigenvalues.minCoeff() <= tol.min_eigenvalue) return "matrix is not positive definite";
      return {};
    }
    case ManifoldKind::Sphere:
      if (std::abs(p.data.norm() - 1.0) > tol.unit_norm) return "vector is not unit length";
      return {};
    case ManifoldKind::SpecialOrthogonal:
      if (!linalg::is_rotation(p.data, tol.orthogonality)) return "matrix is not a rotation";
      return {};
  }
  return "unknown manifold";
}

inline bool is_valid_point(const ManifoldPoint& p, const Tolerances& tol = {}) {
  return point_violation(p, tol).empty();
}

inline void check_point(const ManifoldPoint& p, const Tolerances& tol = {}) {
  const std::string why = point_violation(p, tol);
  if (!why.empty()) detail::fail_validation("invalid " + p.manifold.name() + " point: " + why);
}

inline std::string tangent_violation(const TangentVector& v, const Tolerances& tol = {}) {
  const Matrix& base = v.base.data;
  if (v.ambient.rows() != base.rows() || v.ambient.cols() != base.cols()) {
    return "tangent shape does not match base point";
  }
  if (!v.ambient.allFinite()) return "non-finite entries";
  const double scale = std::max(1.0, v.ambient.norm());
  switch (v.base.manifold.kind()) {
    case ManifoldKind::SpdAffine:
    case ManifoldKind::SpdLogEuclidean:
      if (!linalg::is_symmetric(v.ambient, tol.tangent)) return "SPD tangent is not symmetric";
      return {};
    case ManifoldKind::Sphere:
      if (std::abs((base.transpose() * v.ambient)(0, 0)) > tol.tangent * scale) {
        return "sphere tangent is not orthogonal to the base point";
      }
      return {};
    case ManifoldKind::SpecialOrthogonal:
      if (!linalg::is_skew(base.transpose() * v.ambient, tol.tangent)) {
        return "SO tangent is not base * skew";
      }
      return {};
  }
  return "unknown manifold";
}

inline void check_tangent(const TangentVector& v, const Tolerances& tol = {}) {
  const std::string why = tangent_violation(v, tol);
  if (!why.empty()) detail::fail_validation("invalid tangent vector: " + why);
}

inline std::string group_violation(const GroupElement& g, const Tolerances& tol = {}) {
  const Eigen::Index d = g.manifold.group_dim();
  if (g.data.rows() != d || g.data.cols() != d) return "group element has wrong shape";
  if (!g.data.allFinite()) return "non-finite entries";
  if (g.manifold.kind() == ManifoldKind::SpdAffine) {
    if (std::abs(g.data.determinant()) <= tol.invertibility) return "group element is singular";
    return {};
  }
  if (!linalg::is_rotation(g.data, tol.orthogonality)) return "group element is not a rotation";
  return {};
}

inline void check_group_element(const GroupElement& g, const Tolerances& tol = {}) {
  const std::string why = group_violation(g, tol);
  if (!why.empty()) detail::fail_validation("invalid group element: " + why);
}

}  // namespace manifoldnorm

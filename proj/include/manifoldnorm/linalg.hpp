#pragma once

// Dense symmetric and orthogonal matrix kernels used by every manifold
// formula: a cyclic Jacobi eigensolver, spectral matrix functions, a general
// matrix exponential and the principal logarithm of rotations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "manifoldnorm/error.hpp"

namespace manifoldnorm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

inline constexpr int kJacobiMaxSweeps = 100;
/// Smallest eigenvalue accepted by the log/sqrt family.
inline constexpr double kMinEigenvalue = 1e-12;
/// Rotations whose angle in some 2-plane is within this of pi have no
/// principal logarithm.
inline constexpr double kCutLocusMargin = 1e-8;
inline constexpr double kSmallAngle = 1e-8;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending and
/// eigenvector columns paired with them.
struct SymmetricEig {
  Vector eigenvalues;
  Matrix eigenvectors;
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline Matrix skew_part(const Matrix& a) { return 0.5 * (a - a.transpose()); }

inline bool is_square(const Matrix& a) { return a.rows() == a.cols(); }

inline bool is_symmetric(const Matrix& a, double tol = 1e-10) {
  if (!is_square(a)) return false;
  return (a - a.transpose()).norm() <= tol * std::max(1.0, a.norm());
}

inline bool is_skew(const Matrix& a, double tol = 1e-10) {
  if (!is_square(a)) return false;
  return (a + a.transpose()).norm() <= tol * std::max(1.0, a.norm());
}

inline bool is_rotation(const Matrix& r, double tol = 1e-10) {
  if (!is_square(r) || r.rows() == 0 || !r.allFinite()) return false;
  const Matrix gram = r.transpose() * r;
  if ((gram - Matrix::Identity(r.rows(), r.cols())).norm() > tol) return false;
  return r.determinant() > 0.0;
}

/// Cyclic Jacobi. The input is symmetrized as (A + A^T)/2 first.
inline SymmetricEig sym_eig(const Matrix& input) {
  if (!is_square(input)) manifoldnorm::detail::fail_validation("sym_eig: matrix is not square");
  if (!input.allFinite()) manifoldnorm::detail::fail_numerical("sym_eig: non-finite entries");
  const Eigen::Index n = input.rows();
  Matrix a = symmetrize(input);
  Matrix v = Matrix::Identity(n, n);
  const double scale = a.norm();
  constexpr double eps = std::numeric_limits<double>::epsilon();

  bool converged = (n <= 1) || scale == 0.0;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double app = a(p, p);
        const double aqq = a(q, q);
        if (std::abs(apq) <= eps * std::sqrt(std::abs(app * aqq)) ||
            std::abs(apq) <= 1e-20 * scale) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        rotated = true;
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    manifoldnorm::detail::fail_numerical("sym_eig: Jacobi iteration did not converge in " +
                           std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymmetricEig out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    Vector col = v.col(src);
    // Sign convention: first non-negligible component positive.
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
    out.eigenvectors.col(k) = col;
  }
  return out;
}

enum class SpectralKind { Log, Exp, Sqrt, InvSqrt, Power };

struct SpectralFunction {
  SpectralKind kind = SpectralKind::Exp;
  double exponent = 1.0;  // Power only

  static SpectralFunction log() { return {SpectralKind::Log, 1.0}; }
  static SpectralFunction exp() { return {SpectralKind::Exp, 1.0}; }
  static SpectralFunction sqrt() { return {SpectralKind::Sqrt, 0.5}; }
  static SpectralFunction inv_sqrt() { return {SpectralKind::InvSqrt, -0.5}; }
  static SpectralFunction power(double s) { return {SpectralKind::Power, s}; }
};

namespace spectral_detail {

inline double apply_scalar(SpectralFunction f, double lambda) {
  if (f.kind != SpectralKind::Exp && lambda <= kMinEigenvalue) {
    manifoldnorm::detail::fail_numerical(
        "spectral function: matrix is not positive definite (eigenvalue " +
        std::to_string(lambda) + ")");
  }
  switch (f.kind) {
    case SpectralKind::Log:
      return std::log(lambda);
    case SpectralKind::Exp:
      return std::exp(lambda);
    case SpectralKind::Sqrt:
      return std::sqrt(lambda);
    case SpectralKind::InvSqrt:
      return 1.0 / std::sqrt(lambda);
    case SpectralKind::Power:
      return std::exp(f.exponent * std::log(lambda));
  }
  return 0.0;
}

}  // namespace spectral_detail

/// Q f(Lambda) Q^T for an existing decomposition.
inline Matrix apply_spectral(const SymmetricEig& eig, SpectralFunction f) {
  const Eigen::Index n = eig.eigenvalues.size();
  Vector fl(n);
  for (Eigen::Index i = 0; i < n; ++i) fl(i) = spectral_detail::apply_scalar(f, eig.eigenvalues(i));
  Matrix out = eig.eigenvectors * fl.asDiagonal() * eig.eigenvectors.transpose();
  return symmetrize(out);
}

inline Matrix sym_matrix_function(const Matrix& a, SpectralFunction f) {
  return apply_spectral(sym_eig(a), f);
}

inline Matrix sym_logm(const Matrix& a) { return sym_matrix_function(a, SpectralFunction::log()); }
inline Matrix sym_expm(const Matrix& a) { return sym_matrix_function(a, SpectralFunction::exp()); }

/// Square root and inverse square root of an SPD matrix from one decomposition.
struct SqrtPair {
  Matrix sqrt;
  Matrix inv_sqrt;
};

inline SqrtPair spd_sqrt_pair(const Matrix& a) {
  const SymmetricEig eig = sym_eig(a);
  return {apply_spectral(eig, SpectralFunction::sqrt()),
          apply_spectral(eig, SpectralFunction::inv_sqrt())};
}

/// General real matrix exponential: scaling and squaring around a Taylor core.
inline Matrix expm(const Matrix& a) {
  if (!is_square(a)) manifoldnorm::detail::fail_validation("expm: matrix is not square");
  if (!a.allFinite()) manifoldnorm::detail::fail_numerical("expm: non-finite entries");
  const Eigen::Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Matrix b = a / std::ldexp(1.0, squarings);
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * b) / static_cast<double>(k);
    sum += term;
    if (term.norm() <= 1e-18 * sum.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// Exponential of a skew-symmetric matrix: a rotation.
inline Matrix skew_expm(const Matrix& w) {
  if (!is_skew(w)) manifoldnorm::detail::fail_validation("skew_expm: matrix is not skew-symmetric");
  const Matrix ws = skew_part(w);
  const Eigen::Index n = ws.rows();
  if (n == 2) {
    const double theta = ws(1, 0);
    Matrix r(2, 2);
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
  }
  if (n == 3) {
    const double theta = Eigen::Vector3d(ws(2, 1), ws(0, 2), ws(1, 0)).norm();
    double a = 0.0;
    double b = 0.0;
    if (theta < kSmallAngle) {
      a = 1.0 - theta * theta / 6.0;
      b = 0.5 - theta * theta / 24.0;
    } else {
      a = std::sin(theta) / theta;
      b = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return Matrix::Identity(3, 3) + a * ws + b * (ws * ws);
  }
  return expm(ws);
}

/// Largest rotation angle encoded by a skew-symmetric generator.
inline double max_rotation_angle(const Matrix& w) {
  if (w.rows() == 0) return 0.0;
  const SymmetricEig eig = sym_eig(w.transpose() * w);
  return std::sqrt(std::max(0.0, eig.eigenvalues.maxCoeff()));
}

/// Principal logarithm of a rotation. Closed forms for n = 2, 3; for larger n
/// the commuting split R = S + K (symmetric + skew) gives log R = K g(S) with
/// g(cos t) = t / sin t applied spectrally to S.
inline Matrix rotation_logm(const Matrix& r, double tol = 1e-10) {
  if (!is_rotation(r, tol)) {
    manifoldnorm::detail::fail_validation("rotation_logm: input is not a rotation matrix");
  }
  const Eigen::Index n = r.rows();
  constexpr double pi = std::numbers::pi;
  if (n == 1) return Matrix::Zero(1, 1);
  if (n == 2) {
    const double theta = std::atan2(0.5 * (r(1, 0) - r(0, 1)), 0.5 * (r(0, 0) + r(1, 1)));
    if (std::abs(theta) >= pi - kCutLocusMargin) {
      manifoldnorm::detail::fail_numerical("rotation_logm: rotation angle at pi (cut locus)");
    }
    Matrix w(2, 2);
    w << 0.0, -theta, theta, 0.0;
    return w;
  }
  const Matrix k = skew_part(r);
  if (n == 3) {
    const double sin_theta = Eigen::Vector3d(k(2, 1), k(0, 2), k(1, 0)).norm();
    const double cos_theta = 0.5 * (r.trace() - 1.0);
    const double theta = std::atan2(sin_theta, cos_theta);
    if (theta >= pi - kCutLocusMargin) {
      manifoldnorm::detail::fail_numerical("rotation_logm: rotation angle at pi (cut locus)");
    }
    const double g = theta < kSmallAngle ? 1.0 + theta * theta / 6.0 : theta / sin_theta;
    return skew_part(g * k);
  }
  const SymmetricEig eig = sym_eig(symmetrize(r));
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = std::clamp(eig.eigenvalues(i), -1.0, 1.0);
    const double theta = std::acos(c);
    if (theta >= pi - kCutLocusMargin) {
      manifoldnorm::detail::fail_numerical("rotation_logm: rotation angle at pi (cut locus)");
    }
    g(i) = theta < kSmallAngle ? 1.0 + theta * theta / 6.0 : theta / std::sin(theta);
  }
  const Matrix gs = eig.eigenvectors * g.asDiagonal() * eig.eigenvectors.transpose();
  return skew_part(k * gs);
}

}  // namespace linalg
}  // namespace manifoldnorm

#pragma once

// Reference implementations used only by the tests. Matrix functions come
// from Eigen's Schur-Pade routines, which share no code with the library.

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "manifoldnorm/manifold.hpp"

namespace oracle {

using manifoldnorm::Matrix;

inline Matrix expm(const Matrix& a) { return a.exp(); }
inline Matrix logm(const Matrix& a) { return a.log(); }
inline Matrix sqrtm(const Matrix& a) { return a.sqrt(); }

inline Matrix rotation(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

/// Affine-invariant distance |logm(X^-1/2 Y X^-1/2)|_F.
inline double spd_affine_distance(const Matrix& x, const Matrix& y) {
  const Matrix s = sqrtm(x).inverse();
  return logm(s * y * s).norm();
}

inline double log_euclidean_distance(const Matrix& x, const Matrix& y) { return (logm(y) - logm(x)).norm(); }

inline double rotation_distance(const Matrix& x, const Matrix& y) { return logm(x.transpose() * y).norm(); }

/// atan2(sin, cos) of the angle between unit vectors.
inline double sphere_distance(const Matrix& x, const Matrix& y) {
  const double c = x.col(0).dot(y.col(0));
  return std::atan2((x.col(0) - c * y.col(0)).norm(), c);
}

}  // namespace oracle

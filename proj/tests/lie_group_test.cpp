#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/random.hpp"
#include "oracles.hpp"

namespace mn = manifoldnorm;
using mn::ManifoldId;
using mn::ManifoldPoint;
using mn::Matrix;

namespace {

const ManifoldId kLe3 = ManifoldId::spd_log_euclidean(3);
const ManifoldId kSo3 = ManifoldId::special_orthogonal(3);

}  // namespace

TEST(MakePoint, AcceptsAndRepairs) {
  const auto spd = ManifoldId::spd_affine(2);
  EXPECT_EQ(mn::make_point(spd, Matrix::Identity(2, 2)).data, Matrix::Identity(2, 2));

  Matrix raw = Matrix::Zero(3, 1);
  raw(0, 0) = 2.0;
  const ManifoldPoint p = mn::make_point(ManifoldId::sphere(2), raw, true);
  EXPECT_NEAR(p.data(0, 0), 1.0, 1e-15);
  EXPECT_THROW(mn::make_point(ManifoldId::sphere(2), raw, false), mn::ValidationError);
  EXPECT_THROW(mn::make_point(ManifoldId::sphere(2), Matrix::Zero(3, 1), true), mn::ValidationError);

  mn::Rng rng(31);
  const Matrix r = mn::random_point(rng, kSo3, 1.0).data;
  const Matrix noisy = r + 1e-6 * mn::random_normal_vector(rng, 9).reshaped(3, 3);
  const ManifoldPoint fixed = mn::make_point(kSo3, noisy, true);
  EXPECT_LT((fixed.data.transpose() * fixed.data - Matrix::Identity(3, 3)).norm(), 1e-12);
  EXPECT_LT((fixed.data - r).norm(), 1e-5);

  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -0.5;
  const ManifoldPoint floored = mn::make_point(spd, indefinite, true);
  EXPECT_TRUE(mn::is_valid_point(floored));
  EXPECT_THROW(mn::make_point(spd, Matrix::Identity(3, 3)), mn::ValidationError);
}

TEST(LieGroup, IdentityLaws) {
  mn::Rng rng(32);
  for (const auto& m : {kLe3, kSo3}) {
    const ManifoldPoint x = mn::random_point(rng, m, 1.0);
    const ManifoldPoint e = mn::lie_identity(m);
    EXPECT_LT((mn::lie_compose(x, e).data - x.data).norm(), 1e-12);
    EXPECT_LT((mn::lie_inverse(e).data - e.data).norm(), 1e-15);
    EXPECT_LT(mn::lie_logm(e).coords.norm(), 1e-15);
  }
  EXPECT_THROW(mn::lie_identity(ManifoldId::sphere(2)), mn::ValidationError);
  EXPECT_THROW(mn::lie_compose(mn::origin_point(ManifoldId::spd_affine(2)), mn::origin_point(ManifoldId::spd_affine(2))),
               mn::ValidationError);
}

TEST(LieGroup, RotationInverseIsTranspose) {
  mn::Rng rng(33);
  const ManifoldPoint r = mn::random_point(rng, kSo3, 2.0);
  EXPECT_EQ(mn::lie_inverse(r).data, r.data.transpose());
  EXPECT_LT((mn::lie_compose(r, mn::lie_inverse(r)).data - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(LieGroup, LogEuclideanComposition) {
  mn::Rng rng(34);
  for (int k = 0; k < 20; ++k) {
    const ManifoldPoint x = mn::random_point(rng, kLe3, 1.5);
    const ManifoldPoint y = mn::random_point(rng, kLe3, 1.5);
    const Matrix ref = oracle::expm(oracle::logm(x.data) + oracle::logm(y.data));
    EXPECT_LT((mn::lie_compose(x, y).data - ref).norm(), 1e-9 * ref.norm());
    EXPECT_LT((mn::lie_compose(x, mn::lie_inverse(x)).data - Matrix::Identity(3, 3)).norm(), 1e-10);
  }
}

TEST(LieGroup, AssociativityAndLeftInvariance) {
  mn::Rng rng(35);
  for (const auto& m : {kLe3, kSo3}) {
    for (int k = 0; k < 100; ++k) {
      const ManifoldPoint x = mn::random_point(rng, m, 1.0);
      const ManifoldPoint y = mn::random_point(rng, m, 1.0);
      const ManifoldPoint z = mn::random_point(rng, m, 1.0);
      const Matrix a = mn::lie_compose(mn::lie_compose(x, y), z).data;
      const Matrix b = mn::lie_compose(x, mn::lie_compose(y, z)).data;
      EXPECT_LT((a - b).norm(), 1e-10 * std::max(1.0, a.norm())) << m.name();
      EXPECT_NEAR(mn::distance(mn::lie_compose(z, x), mn::lie_compose(z, y)), mn::distance(x, y), 1e-10) << m.name();
    }
  }
}

TEST(LieAlgebra, CoordinateExample) {
  Matrix d = Matrix::Identity(2, 2);
  d(0, 0) = std::exp(1.0);
  const auto v = mn::lie_logm({ManifoldId::spd_log_euclidean(2), d});
  ASSERT_EQ(v.coords.size(), 3);
  EXPECT_NEAR(v.coords(0), 1.0, 1e-14);
  EXPECT_NEAR(v.coords(1), 0.0, 1e-14);
  EXPECT_NEAR(v.coords(2), 0.0, 1e-14);
}

TEST(LieAlgebra, RoundtripAndNorm) {
  mn::Rng rng(36);
  for (const auto& m : {kLe3, kSo3, ManifoldId::special_orthogonal(4)}) {
    for (int k = 0; k < 50; ++k) {
      const ManifoldPoint x = mn::random_point(rng, m, 2.0);
      const auto v = mn::lie_logm(x);
      EXPECT_LT((mn::lie_expm(v).data - x.data).norm(), 1e-9 * std::max(1.0, x.data.norm())) << m.name();
      EXPECT_NEAR(v.coords.norm(), mn::distance(mn::lie_identity(m), x), 1e-9) << m.name();
    }
  }
}

TEST(ScaleFromIdentity, UnitScaleAndDistanceLaw) {
  mn::Rng rng(37);
  for (const auto& m : {kLe3, kSo3}) {
    const ManifoldPoint x = mn::random_point(rng, m, 1.0);
    EXPECT_LT((mn::scale_from_identity(x, 1.0).data - x.data).norm(), 1e-12);
    for (int k = 0; k < 50; ++k) {
      const ManifoldPoint y = mn::random_point(rng, m, 1.0);
      for (double s : {0.25, 0.8, 2.0}) {
        const ManifoldPoint ys = mn::scale_from_identity(y, s);
        EXPECT_NEAR(mn::distance(mn::lie_identity(m), ys), s * mn::distance(mn::lie_identity(m), y), 1e-9);
      }
    }
  }
  EXPECT_THROW(mn::scale_from_identity(mn::lie_identity(kSo3), -1.0), mn::ValidationError);
}

TEST(ScaleFromIdentity, LeavingTheBranchIsNumerical) {
  Matrix w = Matrix::Zero(3, 3);
  w(0, 1) = -2.0;
  w(1, 0) = 2.0;
  const ManifoldPoint r{kSo3, oracle::expm(w)};
  EXPECT_THROW(mn::scale_from_identity(r, 2.0), mn::NumericalError);
}

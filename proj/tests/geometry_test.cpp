#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "manifoldnorm/geometry.hpp"
#include "manifoldnorm/lie_group.hpp"
#include "manifoldnorm/random.hpp"
#include "oracles.hpp"

namespace mn = manifoldnorm;
using mn::ManifoldId;
using mn::ManifoldPoint;
using mn::Matrix;
using mn::TangentVector;

namespace {

ManifoldPoint sphere_point(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return {ManifoldId::sphere(static_cast<int>(v.size()) - 1), m};
}

ManifoldPoint diag_point(const ManifoldId& m, std::initializer_list<double> d) {
  Matrix a = Matrix::Zero(m.n(), m.n());
  int i = 0;
  for (double x : d) a(i, i) = x, ++i;
  return {m, a};
}

double reference_distance(const ManifoldPoint& x, const ManifoldPoint& y) {
  switch (x.manifold.kind()) {
    case mn::ManifoldKind::SpdAffine: return oracle::spd_affine_distance(x.data, y.data);
    case mn::ManifoldKind::SpdLogEuclidean: return oracle::log_euclidean_distance(x.data, y.data);
    case mn::ManifoldKind::Sphere: return oracle::sphere_distance(x.data, y.data);
    case mn::ManifoldKind::SpecialOrthogonal: return oracle::rotation_distance(x.data, y.data);
  }
  return 0.0;
}

std::vector<ManifoldId> all_manifolds() {
  return {ManifoldId::spd_affine(2), ManifoldId::spd_affine(3), ManifoldId::spd_log_euclidean(3),
          ManifoldId::sphere(2), ManifoldId::sphere(10), ManifoldId::special_orthogonal(2),
          ManifoldId::special_orthogonal(3), ManifoldId::special_orthogonal(4)};
}

}  // namespace

TEST(ManifoldId, IntrinsicDimensions) {
  EXPECT_EQ(ManifoldId::spd_affine(3).intrinsic_dim(), 6);
  EXPECT_EQ(ManifoldId::spd_log_euclidean(4).intrinsic_dim(), 10);
  EXPECT_EQ(ManifoldId::sphere(2).intrinsic_dim(), 2);
  EXPECT_EQ(ManifoldId::special_orthogonal(3).intrinsic_dim(), 3);
  for (const auto& m : all_manifolds()) EXPECT_TRUE(mn::is_valid_point(mn::origin_point(m))) << m.name();
}

TEST(Validation, RejectsOffManifoldPoints) {
  const auto spd = ManifoldId::spd_affine(2);
  Matrix a(2, 2);
  a << 1, 0.5, 0.4, 1;
  EXPECT_FALSE(mn::is_valid_point({spd, a}));
  EXPECT_FALSE(mn::is_valid_point(diag_point(spd, {1.0, -1.0})));
  EXPECT_FALSE(mn::is_valid_point(sphere_point({1.0, 1.0, 0.0})));
  Matrix reflect = Matrix::Identity(3, 3);
  reflect(2, 2) = -1;
  EXPECT_FALSE(mn::is_valid_point({ManifoldId::special_orthogonal(3), reflect}));
  EXPECT_THROW(mn::check_point(sphere_point({2.0, 0.0, 0.0})), mn::ValidationError);
}

TEST(Distance, SphereQuarterTurn) {
  EXPECT_NEAR(mn::distance(sphere_point({1, 0, 0}), sphere_point({0, 1, 0})), std::numbers::pi / 2, 1e-15);
}

TEST(Distance, SpdDiagonal) {
  const auto m = ManifoldId::spd_affine(2);
  EXPECT_NEAR(mn::distance(mn::origin_point(m), diag_point(m, {std::exp(2.0), 1.0})), 2.0, 1e-14);
}

TEST(Distance, PlanarRotation) {
  const auto m = ManifoldId::special_orthogonal(2);
  const ManifoldPoint r{m, oracle::rotation(std::numbers::pi / 3)};
  EXPECT_NEAR(mn::distance(mn::origin_point(m), r), std::sqrt(2.0) * std::numbers::pi / 3, 1e-14);
  EXPECT_NEAR(mn::distance(mn::origin_point(m), r), oracle::rotation_distance(Matrix::Identity(2, 2), r.data), 1e-12);
}

TEST(Distance, AntipodalSphereIsRejected) {
  EXPECT_THROW(mn::distance(sphere_point({1, 0, 0}), sphere_point({-1, 0, 0})), mn::NumericalError);
}

TEST(Distance, ManifoldMismatchIsRejected) {
  EXPECT_THROW(mn::distance(mn::origin_point(ManifoldId::spd_affine(2)), mn::origin_point(ManifoldId::spd_log_euclidean(2))),
               mn::ValidationError);
}

TEST(Distance, AgreesWithReferenceAndIsAMetric) {
  mn::Rng rng(21);
  for (const auto& m : all_manifolds()) {
    for (int k = 0; k < 40; ++k) {
      const ManifoldPoint x = mn::random_point(rng, m, 1.0);
      const ManifoldPoint y = mn::random_point_near(rng, x, 1.2);
      const ManifoldPoint z = mn::random_point_near(rng, x, 0.3);
      const double d = mn::distance(x, y);
      EXPECT_NEAR(d, reference_distance(x, y), 1e-9) << m.name();
      EXPECT_NEAR(d, mn::distance(y, x), 1e-9) << m.name();
      EXPECT_LE(d, mn::distance(x, z) + mn::distance(z, y) + 1e-9) << m.name();
      EXPECT_NEAR(mn::distance(x, x), 0.0, 1e-7) << m.name();
    }
  }
}

TEST(InnerProduct, Basics) {
  const auto m = ManifoldId::spd_affine(2);
  const ManifoldPoint i = mn::origin_point(m);
  const TangentVector u{i, Matrix::Identity(2, 2)};
  EXPECT_NEAR(mn::inner_product(u, u), 2.0, 1e-15);
  EXPECT_EQ(mn::inner_product(mn::zero_tangent(i), u), 0.0);
}

TEST(ExpLog, ClosedForms) {
  const ManifoldPoint e1 = sphere_point({1, 0, 0});
  Matrix v = Matrix::Zero(3, 1);
  v(1, 0) = std::numbers::pi / 2;
  const ManifoldPoint y = mn::exp_map(e1, {e1, v});
  EXPECT_LT((y.data - sphere_point({0, 1, 0}).data).norm(), 1e-15);

  const auto spd = ManifoldId::spd_affine(2);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = -0.2;
  EXPECT_LT((mn::exp_map(mn::origin_point(spd), {mn::origin_point(spd), d}).data - oracle::expm(d)).norm(), 1e-14);

  const auto le = ManifoldId::spd_log_euclidean(2);
  const ManifoldPoint p = diag_point(le, {std::exp(1.0), std::exp(-1.0)});
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 1;
  expected(1, 1) = -1;
  EXPECT_LT((mn::log_map(mn::origin_point(le), p).ambient - expected).norm(), 1e-14);

  for (const auto& m : all_manifolds()) {
    const ManifoldPoint o = mn::origin_point(m);
    EXPECT_LT(mn::log_map(o, o).ambient.norm(), 1e-12) << m.name();
    EXPECT_LT((mn::exp_map(o, mn::zero_tangent(o)).data - o.data).norm(), 1e-15) << m.name();
  }
}

TEST(ExpLog, InverseAndNormLaw) {
  mn::Rng rng(22);
  for (const auto& m : all_manifolds()) {
    for (int k = 0; k < 100; ++k) {
      const ManifoldPoint x = mn::random_point(rng, m, 1.0);
      const ManifoldPoint y = mn::random_point_near(rng, x, 1.5);
      const TangentVector v = mn::log_map(x, y);
      EXPECT_LT((mn::exp_map(x, v).data - y.data).norm(), 1e-9 * std::max(1.0, y.data.norm())) << m.name();
      EXPECT_NEAR(std::sqrt(mn::inner_product(v, v)), mn::distance(x, y), 1e-9) << m.name();
      const TangentVector u = mn::random_tangent(rng, x, 1.0);
      EXPECT_NEAR(mn::distance(x, mn::exp_map(x, u)), mn::tangent_norm(u), 1e-9) << m.name();
    }
  }
}

TEST(ExpLog, SphereTangentBeyondRadiusIsRejected) {
  const ManifoldPoint e1 = sphere_point({1, 0, 0});
  Matrix v = Matrix::Zero(3, 1);
  v(1, 0) = 3.5;
  EXPECT_THROW(mn::exp_map(e1, {e1, v}), mn::NumericalError);
}

TEST(Transport, ClosedFormFromIdentity) {
  mn::Rng rng(23);
  const auto m = ManifoldId::spd_affine(3);
  const ManifoldPoint i = mn::origin_point(m);
  const ManifoldPoint y = mn::random_point(rng, m, 1.0);
  const TangentVector v = mn::random_tangent(rng, i, 1.0);
  const Matrix ys = oracle::sqrtm(y.data);
  EXPECT_LT((mn::parallel_transport(i, y, v).ambient - ys * v.ambient * ys).norm(), 1e-12);
  EXPECT_LT((mn::parallel_transport(i, i, v).ambient - v.ambient).norm(), 1e-15);
}

TEST(Transport, PreservesInnerProducts) {
  mn::Rng rng(24);
  for (const auto& m : all_manifolds()) {
    for (int k = 0; k < 100; ++k) {
      const ManifoldPoint x = mn::random_point(rng, m, 1.0);
      const ManifoldPoint y = mn::random_point_near(rng, x, 1.5);
      const TangentVector u = mn::random_tangent(rng, x, 1.0);
      const TangentVector w = mn::random_tangent(rng, x, 1.0);
      EXPECT_NEAR(mn::inner_product(mn::parallel_transport(x, y, u), mn::parallel_transport(x, y, w)),
                  mn::inner_product(u, w), 1e-9)
          << m.name();
    }
  }
}

TEST(Geodesic, EndpointsMidpointAndSpeed) {
  const ManifoldPoint a = sphere_point({1, 0, 0});
  const ManifoldPoint b = sphere_point({0, 1, 0});
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_LT((mn::geodesic_point(a, b, 0.5).data - sphere_point({r, r, 0}).data).norm(), 1e-15);
  EXPECT_EQ(mn::geodesic_point(a, b, 0.0).data, a.data);
  EXPECT_EQ(mn::geodesic_point(a, b, 1.0).data, b.data);
  EXPECT_THROW(mn::geodesic_point(a, b, 1.5), mn::ValidationError);

  mn::Rng rng(25);
  for (const auto& m : all_manifolds()) {
    for (int k = 0; k < 50; ++k) {
      const ManifoldPoint x = mn::random_point(rng, m, 1.0);
      const ManifoldPoint y = mn::random_point_near(rng, x, 1.5);
      const double d = mn::distance(x, y);
      EXPECT_NEAR(reference_distance(x, mn::geodesic_point(x, y, 0.3)), 0.3 * d, 1e-9) << m.name();
    }
  }
}

TEST(GroupAction, IdentityAndIsometry) {
  mn::Rng rng(26);
  for (const auto& m : all_manifolds()) {
    const ManifoldPoint x = mn::random_point(rng, m, 1.0);
    EXPECT_LT((mn::group_action(mn::identity_element(m), x).data - x.data).norm(), 1e-15) << m.name();
    for (int k = 0; k < 100; ++k) {
      const ManifoldPoint p = mn::random_point(rng, m, 1.0);
      const ManifoldPoint q = mn::random_point_near(rng, p, 1.5);
      const mn::GroupElement g = mn::random_group_element(rng, m);
      const ManifoldPoint gp = mn::group_action(g, p);
      EXPECT_TRUE(mn::is_valid_point(gp)) << m.name();
      EXPECT_NEAR(reference_distance(gp, mn::group_action(g, q)), mn::distance(p, q), 1e-9) << m.name();
    }
  }
}

TEST(GroupAction, SingularElementIsRejected) {
  const auto m = ManifoldId::spd_affine(2);
  mn::GroupElement g{m, Matrix::Zero(2, 2)};
  EXPECT_THROW(mn::group_action(g, mn::origin_point(m)), mn::ValidationError);
}

TEST(TangentCoords, IsometricAndInvertible) {
  mn::Rng rng(27);
  for (const auto& m : all_manifolds()) {
    const ManifoldPoint o = mn::origin_point(m);
    EXPECT_EQ(mn::tangent_coords(mn::zero_tangent(o)), mn::Vector::Zero(m.intrinsic_dim())) << m.name();
    for (int k = 0; k < 50; ++k) {
      const TangentVector v = mn::random_tangent(rng, o, 2.0);
      const mn::Vector c = mn::tangent_coords(v);
      EXPECT_LT((mn::coords_to_tangent(o, c).ambient - v.ambient).norm(), 1e-12) << m.name();
      EXPECT_NEAR(c.squaredNorm(), mn::inner_product(v, v), 1e-12) << m.name();
    }
  }
}

TEST(TangentCoords, RejectsWrongLengthAndBase) {
  const auto m = ManifoldId::spd_affine(2);
  EXPECT_THROW(mn::coords_to_tangent(mn::origin_point(m), mn::Vector::Zero(2)), mn::ValidationError);
  const ManifoldPoint off = diag_point(m, {2.0, 1.0});
  EXPECT_THROW(mn::tangent_coords(mn::zero_tangent(off)), mn::ValidationError);
}

TEST(ValidateBall, PivotRule) {
  const auto m = ManifoldId::spd_affine(2);
  const std::vector<ManifoldPoint> one{mn::origin_point(m)};
  EXPECT_TRUE(mn::validate_ball(one, 1e-3));
  const std::vector<ManifoldPoint> two{mn::origin_point(m), diag_point(m, {std::exp(2.0), 1.0})};
  EXPECT_FALSE(mn::validate_ball(two, 1.5));
  EXPECT_TRUE(mn::validate_ball(two, 2.5));
  EXPECT_THROW(mn::validate_ball(std::vector<ManifoldPoint>{}, 1.0), mn::ValidationError);

  mn::Rng rng(28);
  const auto samples = mn::sample_gaussian(mn::LieGaussian{mn::origin_point(ManifoldId::spd_log_euclidean(3)), 0.01}, 50, 3);
  EXPECT_TRUE(mn::validate_ball(samples, 1.0));
}

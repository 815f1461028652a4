#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "manifoldnorm/layers.hpp"
#include "manifoldnorm/random.hpp"
#include "oracles.hpp"

namespace mn = manifoldnorm;
using mn::FeatureGrid;
using mn::GridDims;
using mn::ManifoldId;
using mn::ManifoldPoint;
using mn::Matrix;

namespace {

FeatureGrid random_grid(mn::Rng& rng, const ManifoldId& m, const GridDims& dims) {
  const ManifoldPoint c = mn::random_point(rng, m, 0.8);
  std::vector<ManifoldPoint> cells;
  for (std::size_t i = 0; i < dims.total(); ++i) cells.push_back(mn::random_point_near(rng, c, 0.6));
  return {m, dims, std::move(cells)};
}

}  // namespace

TEST(ConvexityWeights, ClosedForms) {
  const std::vector<double> zeros(4, 0.0);
  const mn::WeightVector w = mn::convexity_weights(zeros);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(w[i], 0.25, 1e-16);

  const std::vector<double> raw{std::log(2.0), 0.0};
  const mn::WeightVector v = mn::convexity_weights(raw);
  EXPECT_NEAR(v[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(v[1], 1.0 / 3.0, 1e-15);
}

TEST(ConvexityWeights, ShiftInvariantAndNormalized) {
  mn::Rng rng(81);
  for (int k = 0; k < 50; ++k) {
    // dyadic entries keep r + c exact, so the shift must leave the weights bitwise unchanged
    const mn::Vector r = 5.0 * mn::random_normal_vector(rng, 7);
    std::vector<double> a(r.data(), r.data() + r.size());
    for (double& x : a) x = std::round(x * 64.0) / 64.0;
    std::vector<double> b = a;
    for (double& x : b) x += 3.0;
    const auto wa = mn::convexity_weights(a);
    const auto wb = mn::convexity_weights(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
      EXPECT_GT(wa[i], 0.0);
      EXPECT_EQ(wa[i], wb[i]);
      sum += wa[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_THROW(mn::convexity_weights(std::vector<double>{1.0, std::nan("")}), mn::ValidationError);
}

TEST(ManifoldConv, UnitWindowIsIdentity) {
  mn::Rng rng(82);
  const auto m = ManifoldId::spd_affine(3);
  const FeatureGrid g = random_grid(rng, m, {3, 2, 1, 2, 1});
  mn::ConvKernel k = mn::ConvKernel::uniform({1, 1, 1}, {1, 1, 1}, 1, 1);
  const FeatureGrid out = mn::manifold_conv(g, k);
  ASSERT_EQ(out.dims(), g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(out[i].data, g[i].data);
}

TEST(ManifoldConv, PairWindowGivesMidpoints) {
  mn::Rng rng(83);
  const auto m = ManifoldId::sphere(2);
  const FeatureGrid g = random_grid(rng, m, {3, 1, 1, 1, 1});
  const FeatureGrid out = mn::manifold_conv(g, mn::ConvKernel::uniform({2, 1, 1}, {1, 1, 1}, 1, 1));
  ASSERT_EQ(out.dims().d1, 2u);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_LT((out[i].data - mn::geodesic_point(g[i], g[i + 1], 0.5).data).norm(), 1e-12);
}

TEST(ManifoldConv, OutputShapeAndWindowOrder) {
  mn::Rng rng(84);
  const auto m = ManifoldId::spd_affine(2);
  const FeatureGrid g = random_grid(rng, m, {5, 4, 1, 2, 2});
  mn::ConvKernel k = mn::ConvKernel::uniform({2, 3, 1}, {2, 1, 1}, 2, 3);
  for (std::size_t i = 0; i < k.raw_weights.size(); ++i) k.raw_weights[i] = std::sin(static_cast<double>(i));
  const FeatureGrid out = mn::manifold_conv(g, k);
  EXPECT_EQ(out.dims(), (GridDims{2, 2, 1, 2, 3}));

  std::vector<ManifoldPoint> window;
  for (std::size_t k1 = 0; k1 < 2; ++k1)
    for (std::size_t k2 = 0; k2 < 3; ++k2)
      for (std::size_t ic = 0; ic < 2; ++ic) window.push_back(g.at(2 + k1, 1 + k2, 0, 1, ic));
  const ManifoldPoint expected = mn::incremental_wfm(window, mn::convexity_weights(k.row(2)));
  EXPECT_EQ(out.at(1, 1, 0, 1, 2).data, expected.data);
}

TEST(ManifoldConv, RejectsOversizedWindow) {
  const auto m = ManifoldId::spd_affine(2);
  const FeatureGrid g(m, {2, 2, 1, 1, 1}, std::vector<ManifoldPoint>(4, mn::origin_point(m)));
  EXPECT_THROW(mn::manifold_conv(g, mn::ConvKernel::uniform({3, 1, 1}, {1, 1, 1}, 1, 1)), mn::ValidationError);
}

TEST(ManifoldConv, LeftEquivariantOnLieGroups) {
  mn::Rng rng(85);
  for (const auto& m : {ManifoldId::special_orthogonal(3), ManifoldId::spd_log_euclidean(3)}) {
    const FeatureGrid g = random_grid(rng, m, {3, 3, 1, 1, 2});
    mn::ConvKernel k = mn::ConvKernel::uniform({2, 2, 1}, {1, 1, 1}, 2, 2);
    for (double& w : k.raw_weights) w = std::normal_distribution<double>()(rng);
    const ManifoldPoint z = mn::random_point(rng, m, 1.0);
    FeatureGrid moved = g;
    for (std::size_t i = 0; i < g.size(); ++i) moved[i] = mn::lie_compose(z, g[i]);
    const FeatureGrid a = mn::manifold_conv(moved, k);
    const FeatureGrid b = mn::manifold_conv(g, k);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(mn::distance(a[i], mn::lie_compose(z, b[i])), 1e-9) << m.name();
  }
}

TEST(TangentRelu, Cases) {
  const auto m = ManifoldId::sphere(2);
  const ManifoldPoint o = mn::origin_point(m);
  EXPECT_EQ(mn::trelu(o).data, o.data);
  mn::Vector c(2), clipped(2);
  c << 0.3, -0.2;
  clipped << 0.3, 0.0;
  const ManifoldPoint x = mn::exp_map(o, mn::coords_to_tangent(o, c));
  EXPECT_LT((mn::trelu(x).data - mn::exp_map(o, mn::coords_to_tangent(o, clipped)).data).norm(), 1e-14);

  const auto le = ManifoldId::spd_log_euclidean(2);
  Matrix l(2, 2);
  l << 0.4, 0.1, 0.1, 0.2;
  const ManifoldPoint p{le, oracle::expm(l)};
  EXPECT_LT((mn::trelu(p).data - p.data).norm(), 1e-12);
}

TEST(TangentRelu, ClampsCoordinates) {
  mn::Rng rng(86);
  const auto m = ManifoldId::spd_affine(3);
  const ManifoldPoint o = mn::origin_point(m);
  for (int k = 0; k < 20; ++k) {
    const ManifoldPoint x = mn::random_point(rng, m, 1.5);
    const mn::Vector before = mn::tangent_coords(mn::log_map(o, x));
    const mn::Vector after = mn::tangent_coords(mn::log_map(o, mn::trelu(x)));
    EXPECT_LT((after - before.cwiseMax(0.0)).norm(), 1e-10);
    const ManifoldPoint once = mn::trelu(x);
    EXPECT_LT((mn::trelu(once).data - once.data).norm(), 1e-10);
  }
}

TEST(ManifoldFc, Cases) {
  const auto m = ManifoldId::spd_affine(2);
  const std::vector<ManifoldPoint> same(3, mn::origin_point(m));
  EXPECT_LT(mn::manifold_fc(same).norm(), 1e-12);

  Matrix d = Matrix::Identity(2, 2);
  d(0, 0) = std::exp(2.0);
  const std::vector<ManifoldPoint> pair{mn::origin_point(m), {m, d}};
  const mn::Vector out = mn::manifold_fc(pair);
  EXPECT_NEAR(out(0), 1.0, 1e-12);
  EXPECT_NEAR(out(1), 1.0, 1e-12);
  EXPECT_THROW(mn::manifold_fc(std::vector<ManifoldPoint>{}), mn::ValidationError);
}

TEST(ManifoldFc, InvariantUnderLeftTranslation) {
  mn::Rng rng(87);
  const auto m = ManifoldId::special_orthogonal(3);
  for (int k = 0; k < 10; ++k) {
    const ManifoldPoint c = mn::random_point(rng, m, 1.0);
    std::vector<ManifoldPoint> pts, moved;
    const ManifoldPoint z = mn::random_point(rng, m, 1.5);
    for (int i = 0; i < 8; ++i) {
      pts.push_back(mn::random_point_near(rng, c, 0.7));
      moved.push_back(mn::lie_compose(z, pts.back()));
    }
    const mn::Vector a = mn::manifold_fc(pts);
    EXPECT_LT((mn::manifold_fc(moved) - a).norm(), 1e-9);
    EXPECT_GE(a.minCoeff(), 0.0);
  }
}

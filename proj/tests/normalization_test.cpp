#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "manifoldnorm/normalization.hpp"
#include "manifoldnorm/random.hpp"
#include "oracles.hpp"

namespace mn = manifoldnorm;
using mn::FeatureGrid;
using mn::GridDims;
using mn::ManifoldId;
using mn::ManifoldPoint;
using mn::Matrix;
using mn::NormMode;
using mn::NormState;

namespace {

FeatureGrid random_grid(mn::Rng& rng, const ManifoldPoint& center, const GridDims& dims, double radius) {
  std::vector<ManifoldPoint> cells;
  for (std::size_t i = 0; i < dims.total(); ++i) cells.push_back(mn::random_point_near(rng, center, radius));
  return {center.manifold, dims, std::move(cells)};
}

void expect_partition(const std::vector<mn::IndexSet>& sets, const GridDims& dims) {
  std::set<std::size_t> seen;
  std::size_t count = 0;
  for (const auto& s : sets) {
    count += s.cells.size();
    seen.insert(s.cells.begin(), s.cells.end());
  }
  EXPECT_EQ(count, dims.total());
  EXPECT_EQ(seen.size(), dims.total());
}

mn::NormOptions exact_mean() {
  mn::NormOptions o;
  o.estimator = mn::MeanEstimator::Oracle;
  return o;
}

}  // namespace

TEST(Partition, ReferenceDims) {
  const GridDims dims{2, 2, 1, 3, 4};
  const auto batch = mn::partition_indices(NormMode::batch(), dims);
  ASSERT_EQ(batch.size(), 4u);
  for (const auto& s : batch) EXPECT_EQ(s.cells.size(), 12u);
  const auto layer = mn::partition_indices(NormMode::layer(), dims);
  ASSERT_EQ(layer.size(), 3u);
  for (const auto& s : layer) EXPECT_EQ(s.cells.size(), 16u);
  const auto inst = mn::partition_indices(NormMode::instance(), dims);
  ASSERT_EQ(inst.size(), 12u);
  for (const auto& s : inst) EXPECT_EQ(s.cells.size(), 4u);
  const auto group = mn::partition_indices(NormMode::group(2), dims);
  ASSERT_EQ(group.size(), 6u);
  for (const auto& s : group) EXPECT_EQ(s.cells.size(), 8u);
  for (const auto* sets : {&batch, &layer, &inst, &group}) expect_partition(*sets, dims);
}

TEST(Partition, SetsFollowTheirAxes) {
  const GridDims dims{2, 1, 1, 2, 4};
  for (const auto& s : mn::partition_indices(NormMode::batch(), dims))
    for (std::size_t idx : s.cells) EXPECT_EQ(dims.unflat(idx)[4], s.slot);
  for (const auto& s : mn::partition_indices(NormMode::group(2), dims)) {
    const auto first = dims.unflat(s.cells.front());
    for (std::size_t idx : s.cells) {
      EXPECT_EQ(dims.unflat(idx)[3], first[3]);
      EXPECT_EQ(dims.unflat(idx)[4] / 2, s.slot);
    }
  }
}

TEST(Partition, RandomDimsAreCovered) {
  mn::Rng rng(61);
  std::uniform_int_distribution<std::size_t> ext(1, 3);
  for (int k = 0; k < 10; ++k) {
    const GridDims dims{ext(rng), ext(rng), ext(rng), ext(rng), 2 * ext(rng)};
    for (const NormMode& mode : {NormMode::batch(), NormMode::layer(), NormMode::instance(), NormMode::group(2)})
      expect_partition(mn::partition_indices(mode, dims), dims);
  }
}

TEST(Partition, GroupMustDivideChannels) {
  EXPECT_THROW(mn::partition_indices(NormMode::group(3), GridDims{1, 1, 1, 1, 4}), mn::ValidationError);
}

TEST(RunningMean, MomentumEndpointsAndMidpoint) {
  mn::Rng rng(62);
  const auto m = ManifoldId::spd_affine(3);
  const ManifoldPoint a = mn::random_point(rng, m, 1.0);
  const ManifoldPoint b = mn::random_point_near(rng, a, 1.0);
  EXPECT_EQ(mn::update_running_mean(a, b, 0.0).data, a.data);
  EXPECT_EQ(mn::update_running_mean(a, b, 1.0).data, b.data);
  const ManifoldPoint mid = mn::update_running_mean(a, b, 0.5);
  EXPECT_NEAR(oracle::spd_affine_distance(a.data, mid.data), 0.5 * mn::distance(a, b), 1e-9);
  EXPECT_NEAR(oracle::spd_affine_distance(mid.data, b.data), 0.5 * mn::distance(a, b), 1e-9);
  EXPECT_THROW(mn::update_running_mean(a, b, 1.5), mn::ValidationError);
}

TEST(HomogNorm, SinglePointSetMapsToOrigin) {
  mn::Rng rng(63);
  for (const auto& m : {ManifoldId::spd_affine(3), ManifoldId::sphere(2)}) {
    const FeatureGrid g = random_grid(rng, mn::random_point(rng, m, 1.0), {1, 1, 1, 1, 1}, 0.5);
    const auto r = mn::homog_norm_train(g, NormState::identity(m, mn::NormAlgorithm::Homogeneous, 1), NormMode::batch());
    EXPECT_LT((r.output[0].data - m.origin()).norm(), 1e-9) << m.name();
    EXPECT_EQ(r.state.slots[0].steps_seen, 1u);
  }
}

TEST(HomogNorm, CopiesOfRunningMeanMapToBias) {
  mn::Rng rng(64);
  const auto m = ManifoldId::spd_affine(3);
  NormState st = NormState::identity(m, mn::NormAlgorithm::Homogeneous, 1);
  st.slots[0].running_mean = mn::random_point(rng, m, 1.0);
  st.slots[0].bias = mn::random_group_element(rng, m);
  const FeatureGrid g(m, {2, 2, 1, 1, 1}, std::vector<ManifoldPoint>(4, st.slots[0].running_mean));
  const FeatureGrid out = mn::homog_norm_infer(g, st, NormMode::batch());
  const Matrix expected = st.slots[0].bias.data * st.slots[0].bias.data.transpose();
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_LT((out[i].data - expected).norm(), 1e-9 * expected.norm());
}

TEST(HomogNorm, CenteredTangentsSumToZeroAndDistancesSurvive) {
  mn::Rng rng(65);
  for (const auto& m : {ManifoldId::spd_affine(3), ManifoldId::sphere(2)}) {
    for (int k = 0; k < 5; ++k) {
      const FeatureGrid g = random_grid(rng, mn::random_point(rng, m, 1.0), {3, 3, 1, 1, 1}, 0.6);
      std::vector<ManifoldPoint> pts(g.cells());
      const ManifoldPoint mb = mn::oracle_fm(pts, mn::WeightVector::uniform(pts.size()), 1e-13);
      const ManifoldPoint origin = mn::origin_point(m);
      mn::Vector sum = mn::Vector::Zero(m.intrinsic_dim());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const ManifoldPoint c = mn::center_at_origin(pts[i], mb);
        sum += mn::tangent_coords(mn::log_map(origin, c));
        EXPECT_NEAR(mn::distance(c, origin), mn::distance(pts[i], mb), 1e-9) << m.name();
      }
      EXPECT_LT(sum.norm() / static_cast<double>(pts.size()), 1e-6) << m.name();
    }
  }
}

TEST(HomogNorm, TrainEqualsInferAtMomentumOne) {
  mn::Rng rng(66);
  const auto m = ManifoldId::spd_affine(3);
  const FeatureGrid g = random_grid(rng, mn::random_point(rng, m, 1.0), {2, 2, 1, 3, 2}, 0.7);
  NormState st = NormState::identity(m, mn::NormAlgorithm::Homogeneous, 2, 1.0);
  for (auto& slot : st.slots) {
    slot.running_mean = mn::random_point(rng, m, 1.0);
    slot.bias = mn::random_group_element(rng, m);
    slot.scale_diag = mn::Vector::Constant(m.intrinsic_dim(), 0.7);
  }
  const auto r = mn::homog_norm_train(g, st, NormMode::batch());
  const FeatureGrid inf = mn::homog_norm_infer(g, r.state, NormMode::batch());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT((inf[i].data - r.output[i].data).norm(), 1e-12);
}

TEST(HomogNorm, StateMismatchIsRejected) {
  const auto m = ManifoldId::spd_affine(2);
  const FeatureGrid g(m, {1, 1, 1, 1, 2}, std::vector<ManifoldPoint>(2, mn::origin_point(m)));
  EXPECT_THROW(mn::homog_norm_train(g, NormState::identity(m, mn::NormAlgorithm::Homogeneous, 1), NormMode::batch()),
               mn::ValidationError);
  EXPECT_THROW(NormState::identity(m, mn::NormAlgorithm::LieGroup, 1), mn::ValidationError);
}

TEST(LieNorm, IdentityParametersAndCopies) {
  mn::Rng rng(67);
  const auto m = ManifoldId::special_orthogonal(3);
  NormState st = NormState::identity(m, mn::NormAlgorithm::LieGroup, 1);
  const ManifoldPoint x = mn::random_point(rng, m, 1.0);
  EXPECT_LT((mn::lie_transform(x, mn::origin_point(m), st.slots[0]).data - x.data).norm(), 1e-12);

  st.slots[0].running_mean = x;
  st.slots[0].lie_bias = mn::random_point(rng, m, 1.0);
  const FeatureGrid g(m, {3, 1, 1, 1, 1}, std::vector<ManifoldPoint>(3, x));
  const FeatureGrid inferred = mn::lie_norm_infer(g, st, NormMode::batch());
  for (const auto& p : inferred.cells())
    EXPECT_LT((p.data - st.slots[0].lie_bias.data).norm(), 1e-12);

  const FeatureGrid one(m, {1, 1, 1, 1, 1}, {x});
  const auto r = mn::lie_norm_train(one, st, NormMode::batch());
  EXPECT_LT((r.output[0].data - st.slots[0].lie_bias.data).norm(), 1e-12);
}

TEST(LieNorm, LogEuclideanClosedForm) {
  const auto m = ManifoldId::spd_log_euclidean(2);
  const double e = std::exp(1.0);
  Matrix a = Matrix::Identity(2, 2), b = Matrix::Identity(2, 2);
  a(0, 0) = e;
  b(0, 0) = 1.0 / e;
  NormState st = NormState::identity(m, mn::NormAlgorithm::LieGroup, 1);
  st.slots[0].scale = 2.0;
  const FeatureGrid g(m, {2, 1, 1, 1, 1}, {{m, a}, {m, b}});
  const auto r = mn::lie_norm_train(g, st, NormMode::batch(), exact_mean());
  EXPECT_NEAR(r.output[0].data(0, 0), e * e, 1e-12);
  EXPECT_NEAR(r.output[1].data(0, 0), 1.0 / (e * e), 1e-12);
  EXPECT_NEAR(r.output[0].data(1, 1), 1.0, 1e-12);
  std::vector<ManifoldPoint> out(r.output.cells());
  EXPECT_LT(mn::distance(mn::oracle_fm(out, mn::WeightVector::uniform(2)), mn::origin_point(m)), 1e-9);
}

TEST(LieNorm, OutputMeanIsTheBias) {
  mn::Rng rng(68);
  for (const auto& m : {ManifoldId::special_orthogonal(3), ManifoldId::spd_log_euclidean(3)}) {
    for (int k = 0; k < 5; ++k) {
      const FeatureGrid g = random_grid(rng, mn::random_point(rng, m, 1.0), {2, 2, 1, 2, 1}, 0.5);
      NormState st = NormState::identity(m, mn::NormAlgorithm::LieGroup, 1);
      st.slots[0].lie_bias = mn::random_point(rng, m, 1.0);
      st.slots[0].scale = 1.3;
      const auto r = mn::lie_norm_train(g, st, NormMode::layer(), exact_mean());
      for (const auto& set : mn::partition_indices(NormMode::layer(), g.dims())) {
        std::vector<ManifoldPoint> pts;
        for (std::size_t idx : set.cells) pts.push_back(r.output[idx]);
        EXPECT_LT(mn::distance(mn::oracle_fm(pts, mn::WeightVector::uniform(pts.size()), 1e-13), st.slots[0].lie_bias),
                  1e-6)
            << m.name();
      }
    }
  }
}

TEST(LieNorm, TrainEqualsInferAtMomentumOne) {
  mn::Rng rng(69);
  const auto m = ManifoldId::special_orthogonal(3);
  const FeatureGrid g = random_grid(rng, mn::random_point(rng, m, 1.0), {2, 2, 1, 2, 2}, 0.6);
  NormState st = NormState::identity(m, mn::NormAlgorithm::LieGroup, 2, 1.0);
  for (auto& slot : st.slots) {
    slot.lie_bias = mn::random_point(rng, m, 1.0);
    slot.scale = 0.8;
  }
  const auto r = mn::lie_norm_train(g, st, NormMode::batch());
  const FeatureGrid inf = mn::lie_norm_infer(g, r.state, NormMode::batch());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT((inf[i].data - r.output[i].data).norm(), 1e-12);
}

TEST(Schedule, CountingAveragesBatchMeans) {
  const auto m = ManifoldId::spd_log_euclidean(2);
  NormState st = NormState::identity(m, mn::NormAlgorithm::LieGroup, 1);
  st.schedule = mn::MomentumSchedule::Counting;
  std::vector<Matrix> logs;
  mn::Rng rng(70);
  for (int step = 0; step < 4; ++step) {
    const ManifoldPoint x = mn::random_point(rng, m, 1.0);
    logs.push_back(oracle::logm(x.data));
    st = mn::lie_norm_train(FeatureGrid(m, {1, 1, 1, 1, 1}, {x}), st, NormMode::batch()).state;
  }
  const Matrix ref = oracle::expm((logs[0] + logs[1] + logs[2] + logs[3]) / 4.0);
  EXPECT_LT((st.slots[0].running_mean.data - ref).norm(), 1e-9);
  EXPECT_EQ(st.slots[0].steps_seen, 4u);
}

TEST(Parameters, BiasMapsLandInTheGroup) {
  mn::Rng rng(71);
  for (const auto& m : {ManifoldId::spd_affine(3), ManifoldId::sphere(2), ManifoldId::special_orthogonal(3)}) {
    const int count = mn::bias_param_count(m, mn::NormAlgorithm::Homogeneous);
    const mn::Vector p = mn::random_normal_vector(rng, count);
    const mn::GroupElement g = mn::homog_bias_from_params(m, std::span<const double>(p.data(), p.size()));
    EXPECT_TRUE(mn::group_violation(g).empty()) << m.name();
    const std::vector<double> zeros(static_cast<std::size_t>(count), 0.0);
    EXPECT_LT((mn::homog_bias_from_params(m, zeros).data - Matrix::Identity(m.group_dim(), m.group_dim())).norm(),
              1e-15);
  }
  EXPECT_EQ(mn::bias_param_count(ManifoldId::spd_affine(3), mn::NormAlgorithm::Homogeneous), 9);
  EXPECT_EQ(mn::bias_param_count(ManifoldId::sphere(2), mn::NormAlgorithm::Homogeneous), 3);
  EXPECT_EQ(mn::bias_param_count(ManifoldId::special_orthogonal(3), mn::NormAlgorithm::LieGroup), 3);
  const std::vector<double> p{0.1, -0.2, 0.3};
  const ManifoldPoint b = mn::lie_bias_from_params(ManifoldId::special_orthogonal(3), p);
  EXPECT_TRUE(mn::is_valid_point(b));
  EXPECT_NEAR(mn::distance(mn::origin_point(b.manifold), b), std::sqrt(0.14), 1e-12);
}

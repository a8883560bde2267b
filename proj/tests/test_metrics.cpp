#include <gtest/gtest.h>

#include <random>

#include "occlabel/metrics.hpp"
#include "oracles.hpp"

using namespace occlabel;

namespace {

VoxelGrid grid_2x2(std::initializer_list<CellIndex> occupied) {
  VoxelGrid g({Vec3::Zero(), 1.0, {2, 2, 1}}, CellState::Free);
  for (const auto& c : occupied) g.set(c, CellState::Occupied);
  return g;
}

}  // namespace

TEST(Chamfer, SelfDistanceIsZero) {
  std::mt19937_64 rng(50);
  const PointCloud a(oracle::random_points(rng, 300, -3, 3));
  EXPECT_EQ(chamfer(a, a), 0.0);
}

TEST(Chamfer, SinglePointHandValue) {
  EXPECT_DOUBLE_EQ(chamfer(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}})), 2.0);
}

TEST(Chamfer, DirectedMeansHandValue) {
  // A = {0, 2} on x, B = {0}: A->B mean (0 + 2)/2 = 1, B->A = 0.
  const PointCloud a({{0, 0, 0}, {2, 0, 0}}), b({{0, 0, 0}});
  EXPECT_DOUBLE_EQ(directed_mean_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(directed_mean_distance(b, a), 0.0);
  EXPECT_DOUBLE_EQ(chamfer(a, b), 1.0);
}

TEST(Chamfer, MatchesBruteForceAndIsSymmetric) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 5; ++trial) {
    const PointCloud a(oracle::random_points(rng, 500, -10, 10));
    const PointCloud b(oracle::random_points(rng, 500, -8, 12));
    const double cd = chamfer(a, b);
    EXPECT_NEAR(cd, oracle::chamfer(a, b), 1e-9);
    EXPECT_NEAR(cd, chamfer(b, a), 1e-12);
  }
}

TEST(Chamfer, HandlesDuplicateAndClusteredPoints) {
  std::vector<Vec3> pts(200, Vec3{1, 1, 1});
  std::mt19937_64 rng(52);
  for (const auto& p : oracle::random_points(rng, 50, 0.999, 1.001)) pts.push_back(p);
  const PointCloud a(pts);
  const PointCloud b(oracle::random_points(rng, 80, -1, 3));
  EXPECT_NEAR(chamfer(a, b), oracle::chamfer(a, b), 1e-9);
}

TEST(Chamfer, RigidInvariance) {
  std::mt19937_64 rng(53);
  const PointCloud a(oracle::random_points(rng, 400, -5, 5));
  const PointCloud b(oracle::random_points(rng, 300, -5, 5));
  const Pose t(rotation_z(0.7) * rotation_x(-0.3), Vec3{12, -4, 3});
  EXPECT_NEAR(chamfer(transform_points(t, a), transform_points(t, b)), chamfer(a, b), 1e-9);
}

TEST(Chamfer, EmptyCloudIsAnError) {
  try {
    chamfer(PointCloud{}, PointCloud({{0, 0, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCloud);
  }
}

TEST(KdTree, NearestMatchesLinearScan) {
  std::mt19937_64 rng(54);
  const auto pts = oracle::random_points(rng, 1000, -20, 20);
  const KdTree tree(pts);
  const PointCloud cloud(pts);
  for (const auto& q : oracle::random_points(rng, 500, -25, 25))
    EXPECT_EQ(tree.nearest_distance(q), oracle::nn_distance(q, cloud));
}

TEST(VoxelMetrics, PerfectPrediction) {
  const VoxelGrid g = grid_2x2({{0, 0, 0}});
  const VoxelScores s = voxel_metrics(g, g);
  EXPECT_EQ(s.iou, 1.0);
  EXPECT_EQ(s.f1, 1.0);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.recall, 1.0);
}

TEST(VoxelMetrics, HandConfusion) {
  const VoxelGrid gt = grid_2x2({{0, 0, 0}, {1, 0, 0}});
  const VoxelGrid pred = grid_2x2({{1, 0, 0}, {1, 1, 0}});
  const VoxelScores s = voxel_metrics(pred, gt);
  EXPECT_EQ(s.confusion.tp, 1u);
  EXPECT_EQ(s.confusion.fp, 1u);
  EXPECT_EQ(s.confusion.fn, 1u);
  EXPECT_EQ(s.confusion.tn, 1u);
  EXPECT_EQ(s.iou, 1.0 / 3.0);
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 0.5);
  EXPECT_EQ(s.f1, 0.5);
}

TEST(VoxelMetrics, UnobservedGtCellsAreExcluded) {
  VoxelGrid gt = grid_2x2({{0, 0, 0}, {1, 0, 0}});
  gt.set(CellIndex{1, 1, 0}, CellState::Unobserved);
  VoxelGrid pred = grid_2x2({{1, 0, 0}});
  const VoxelScores a = voxel_metrics(pred, gt);
  pred.set(CellIndex{1, 1, 0}, CellState::Occupied);
  const VoxelScores b = voxel_metrics(pred, gt);
  EXPECT_EQ(a.confusion.total(), 3u);
  EXPECT_EQ(a.iou, b.iou);
  EXPECT_EQ(a.f1, b.f1);
  EXPECT_EQ(a.confusion.fp, b.confusion.fp);
}

TEST(VoxelMetrics, Sentinels) {
  const VoxelGrid empty = grid_2x2({});
  const VoxelScores both = voxel_metrics(empty, empty);
  EXPECT_EQ(both.iou, 1.0);
  EXPECT_EQ(both.precision, 1.0);
  EXPECT_EQ(both.recall, 1.0);
  EXPECT_EQ(both.f1, 1.0);
  const VoxelScores miss = voxel_metrics(empty, grid_2x2({{0, 0, 0}}));
  EXPECT_EQ(miss.iou, 0.0);
  EXPECT_EQ(miss.recall, 0.0);
  EXPECT_EQ(miss.f1, 0.0);
  const VoxelScores extra = voxel_metrics(grid_2x2({{0, 0, 0}}), empty);
  EXPECT_EQ(extra.precision, 0.0);
  EXPECT_EQ(extra.iou, 0.0);
}

TEST(VoxelMetrics, BoundsHoldOnRandomGrids) {
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> st(0, 2);
  const GridSpec spec{Vec3::Zero(), 1.0, {6, 5, 4}};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CellState> a(spec.cell_count()), b(spec.cell_count());
    for (auto& s : a) s = st(rng) == 1 ? CellState::Occupied : CellState::Free;
    for (auto& s : b) s = static_cast<CellState>(st(rng));
    const VoxelScores s = voxel_metrics(VoxelGrid(spec, a), VoxelGrid(spec, b));
    EXPECT_GE(s.iou, 0.0);
    EXPECT_LE(s.iou, 1.0);
    EXPECT_LE(s.iou, std::min(s.precision, s.recall) + 1e-15);
    EXPECT_LE(std::min(s.precision, s.recall), s.f1 + 1e-15);
    EXPECT_EQ(s.confusion.total(), VoxelGrid(spec, b).states().size() - VoxelGrid(spec, b).count(CellState::Unobserved));
  }
}

TEST(VoxelMetrics, SpecMismatch) {
  const VoxelGrid a({Vec3::Zero(), 1.0, {2, 2, 1}}, CellState::Free);
  const VoxelGrid b({Vec3::Zero(), 0.5, {2, 2, 1}}, CellState::Free);
  try {
    voxel_metrics(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SpecMismatch);
  }
}

TEST(RestrictToObserved, CopiesUnobservedFromMaskSource) {
  const VoxelGrid gt = grid_2x2({{0, 0, 0}});
  VoxelGrid mask = grid_2x2({});
  mask.set(CellIndex{0, 0, 0}, CellState::Unobserved);
  const VoxelGrid r = restrict_to_observed(gt, mask);
  EXPECT_EQ(r.at(CellIndex{0, 0, 0}), CellState::Unobserved);
  EXPECT_EQ(r.at(CellIndex{1, 0, 0}), CellState::Free);
}

#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include <algorithm>
#include <numbers>
#include <random>

#include "occlabel/dynamic.hpp"
#include "oracles.hpp"

using namespace occlabel;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

/// Points on the five faces of a box of extents `size` centered at the
/// origin (no bottom face), in the box frame.
std::vector<Vec3> shell(const Vec3& size, int per_face, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> out;
  const Vec3 h = size / 2;
  for (int i = 0; i < per_face; ++i) {
    out.push_back({u(rng) * size.x(), u(rng) * size.y(), h.z()});
    out.push_back({h.x(), u(rng) * size.y(), u(rng) * size.z()});
    out.push_back({-h.x(), u(rng) * size.y(), u(rng) * size.z()});
    out.push_back({u(rng) * size.x(), h.y(), u(rng) * size.z()});
    out.push_back({u(rng) * size.x(), -h.y(), u(rng) * size.z()});
  }
  return out;
}

std::vector<Vec3> sorted(std::span<const Vec3> pts) {
  std::vector<Vec3> v(pts.begin(), pts.end());
  // Faces share a coordinate up to rounding noise, so order on a 1e-6 lattice.
  const auto key = [](const Vec3& p) {
    return std::array<double, 3>{std::round(p.x() * 1e6), std::round(p.y() * 1e6), std::round(p.z() * 1e6)};
  };
  std::sort(v.begin(), v.end(), [&](const Vec3& a, const Vec3& b) { return key(a) < key(b); });
  return v;
}

}  // namespace

TEST(ApplyCorrection, IdentityIsExact) {
  const Pose p(rotation_z(0.4) * rotation_x(0.1), Vec3{1, 2, 3});
  const Pose q = apply_correction(p, PoseCorrection::identity());
  EXPECT_EQ(q.rotation(), p.rotation());
  EXPECT_EQ(q.translation(), p.translation());
}

TEST(ApplyCorrection, PureTranslationRaisesPose) {
  const Pose p(rotation_z(0.4), Vec3{1, 2, 3});
  const Pose q = apply_correction(p, {Mat3::Identity(), Vec3{0, 0, 1}});
  EXPECT_EQ(q.rotation(), p.rotation());
  EXPECT_EQ(q.translation(), Vec3(1, 2, 4));
}

TEST(ApplyCorrection, RotationIsRightMultiplied) {
  const Pose p(rotation_z(kPi / 2), Vec3::Zero());
  const Pose q = apply_correction(p, {rotation_z(kPi / 2), Vec3::Zero()});
  EXPECT_LE(max_abs(q.rotation() - rotation_z(kPi)), 1e-12);
  // Non-commuting case: R * dR differs from dR * R.
  const Pose r(rotation_x(kPi / 2), Vec3::Zero());
  const Pose s = apply_correction(r, {rotation_z(kPi / 2), Vec3::Zero()});
  EXPECT_LE(max_abs(s.rotation() - rotation_x(kPi / 2) * rotation_z(kPi / 2)), 1e-12);
  EXPECT_GT(max_abs(s.rotation() - rotation_z(kPi / 2) * rotation_x(kPi / 2)), 0.5);
}

TEST(EstimateCorrection, AlignedInputGivesIdentity) {
  std::mt19937_64 rng(20);
  const PointCloud canon(shell({4.5, 1.9, 1.6}, 20, rng));
  const Pose box(rotation_z(0.8), Vec3{10, -3, 0.8});
  const PointCloud observed = transform_points(box, canon);
  const PoseCorrection c = estimate_correction(observed, canon, box);
  EXPECT_LE(max_abs(c.delta_rotation - Mat3::Identity()), 1e-9);
  EXPECT_LE(c.delta_translation.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EstimateCorrection, RecoversYawAndShiftPerturbation) {
  std::mt19937_64 rng(21);
  const PointCloud canon(shell({4.5, 1.9, 1.6}, 20, rng));
  const Pose truth(rotation_z(0.3), Vec3{5, 1, 0.8});
  const Pose tracked(truth.rotation() * rotation_z(5 * kPi / 180), truth.translation() + Vec3{0.3, 0, 0});
  const PointCloud observed = transform_points(truth, canon);
  EXPECT_GT(alignment_rmse(observed, canon, tracked), 0.1);
  const PoseCorrection c = estimate_correction(observed, canon, tracked);
  const Pose fixed = apply_correction(tracked, c);
  EXPECT_LE(max_abs(fixed.rotation() - truth.rotation()), 1e-9);
  EXPECT_LE((fixed.translation() - truth.translation()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(alignment_rmse(observed, canon, fixed), 1e-9);
  EXPECT_LE(max_abs(c.delta_rotation - rotation_z(-5 * kPi / 180)), 1e-9);
  EXPECT_LE(orthonormality_error(c.delta_rotation), 1e-9);
  EXPECT_NEAR(c.delta_rotation.determinant(), 1.0, 1e-9);
}

TEST(EstimateCorrection, DegenerateInputs) {
  const PointCloud line({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
  try {
    estimate_correction(line, line, Pose::identity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
  const PointCloud tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
  try {
    estimate_correction(tri, line, Pose::identity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CountMismatch);
  }
  EXPECT_NO_THROW(estimate_correction(tri, tri, Pose::identity()));
}

TEST(EstimateCorrection, PlanarPointsDoNotReflect) {
  // A planar configuration admits a reflection with zero residual; the guard
  // must pick the proper rotation.
  std::vector<Vec3> pts;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) pts.push_back({0.5 * i, 0.3 * j, 0});
  const PointCloud canon(pts);
  const Pose truth(rotation_x(0.4) * rotation_z(1.1), Vec3{1, 2, 3});
  const PoseCorrection c = estimate_correction(transform_points(truth, canon), canon, Pose::identity());
  EXPECT_NEAR(c.delta_rotation.determinant(), 1.0, 1e-9);
  EXPECT_LE(max_abs(c.delta_rotation - truth.rotation()), 1e-9);
}

TEST(WorldToBox, CenterMapsToOriginAndRoundTrips) {
  const TrackedBox b = TrackedBox::from_yaw(1, 0, {3, 4, 1}, {4, 2, 1.5}, 0.7);
  EXPECT_LE(world_to_box(PointCloud({{3, 4, 1}}), b).point(0).norm(), 1e-12);
  std::mt19937_64 rng(22);
  const PointCloud pts(oracle::random_points(rng, 100, -20, 20));
  const PointCloud back = box_to_world(world_to_box(pts, b), b);
  for (std::size_t i = 0; i < pts.size(); ++i)
    EXPECT_LE((back.point(i) - pts.point(i)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(WorldToBox, YawedBoxHandRotation) {
  // Box yawed +90 degrees: its +x axis points along world +y, its +y axis
  // along world -x. A point 1 m ahead in world +x is on the box's -y axis.
  const TrackedBox b = TrackedBox::from_yaw(1, 0, {0, 0, 0}, {4, 2, 1.5}, kPi / 2);
  const Vec3 local = world_to_box(PointCloud({{1, 0, 0}}), b).point(0);
  EXPECT_LE((local - Vec3{0, -1, 0}).norm(), 1e-12);
}

TEST(TrackedBox, ContainsUsesInflatedClosedExtent) {
  const TrackedBox b = TrackedBox::from_yaw(1, 0, {0, 0, 0}, {2, 2, 2}, 0);
  EXPECT_TRUE(b.contains({1, 0, 0}));
  EXPECT_FALSE(b.contains({1.05, 0, 0}));
  EXPECT_TRUE(b.contains({1.05, 0, 0}, 1.1));
  EXPECT_THROW(TrackedBox::from_yaw(1, 0, {0, 0, 0}, {2, 0, 2}, 0), Error);
}

TEST(AggregateTrack, SingleFrameEqualsWorldToBoxWithoutOutliers) {
  const TrackedBox b = TrackedBox::from_yaw(4, 7, {10, 2, 1}, {4, 2, 2}, 0.3);
  const PointCloud inside = box_to_world(PointCloud({{1, 0.5, 0.2}, {-1.9, -0.9, 0.9}}), b);
  PointCloud pts = inside;
  pts.add(b.pose.apply({3, 0, 0}));
  const PointCloud out = aggregate_track({{7, pts}}, {{7, b}});
  ASSERT_EQ(out.size(), 2u);
  const PointCloud expect = world_to_box(inside, b);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE((out.point(i) - expect.point(i)).norm(), 1e-12);
    EXPECT_EQ(out.label(i), PointLabel::dynamic(4));
  }
}

TEST(AggregateTrack, TwoHalvesCompleteTheShellInAnyOrder) {
  std::mt19937_64 rng(23);
  const Vec3 size{4.5, 1.9, 1.6};
  const auto canon = shell(size, 50, rng);
  PointCloud left, right;
  for (const Vec3& p : canon) (p.y() >= 0 ? left : right).add(p);
  const TrackedBox b0 = TrackedBox::from_yaw(2, 0, {0, 0, 0.8}, size, 0.0);
  const TrackedBox b1 = TrackedBox::from_yaw(2, 1, {8, 3, 0.8}, size, 0.6);
  const std::map<std::int64_t, PointCloud> frames{{0, box_to_world(left, b0)}, {1, box_to_world(right, b1)}};
  const std::map<std::int64_t, TrackedBox> boxes{{0, b0}, {1, b1}};
  const PointCloud out = aggregate_track(frames, boxes);
  ASSERT_EQ(out.size(), left.size() + right.size());
  const auto got = sorted(out.points());
  const auto want = sorted(canon);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LE((got[i] - want[i]).norm(), 1e-9);

  // Same frames listed with swapped ids: the multiset is unchanged.
  const std::map<std::int64_t, PointCloud> swapped{{5, box_to_world(right, b1)}, {9, box_to_world(left, b0)}};
  TrackedBox s1 = b1, s0 = b0;
  s1.frame_id = 5;
  s0.frame_id = 9;
  const auto again = sorted(aggregate_track(swapped, {{5, s1}, {9, s0}}).points());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_LE((again[i] - got[i]).norm(), 1e-12);
}

TEST(AggregateTrack, NoOutputOutsideInflatedBox) {
  std::mt19937_64 rng(24);
  const TrackedBox b = TrackedBox::from_yaw(1, 0, {1, 1, 1}, {3, 2, 1}, 1.0);
  const PointCloud pts(oracle::random_points(rng, 2000, -3, 5));
  const PointCloud out = aggregate_track({{0, pts}}, {{0, b}}, 1.1);
  EXPECT_GT(out.size(), 0u);
  for (const Vec3& p : out.points()) {
    EXPECT_LE(std::abs(p.x()), 1.65 + 1e-12);
    EXPECT_LE(std::abs(p.y()), 1.1 + 1e-12);
    EXPECT_LE(std::abs(p.z()), 0.55 + 1e-12);
  }
}

TEST(AggregateTrack, Errors) {
  const TrackedBox b = TrackedBox::from_yaw(1, 0, {0, 0, 0}, {1, 1, 1}, 0);
  try {
    aggregate_track({{3, PointCloud({{0, 0, 0}})}}, {{0, b}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingBoxForFrame);
  }
  const TrackedBox other = TrackedBox::from_yaw(2, 1, {0, 0, 0}, {1, 1, 1}, 0);
  EXPECT_THROW(aggregate_track({}, {{0, b}, {1, other}}), Error);
}

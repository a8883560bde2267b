#pragma once

#include <cstdint>
#include <map>

#include "occlabel/geom.hpp"

namespace occlabel {

struct TrackedBox {
  std::uint32_t track_id = 0;
  std::int64_t frame_id = 0;
  Pose pose;                         // box-to-world
  Vec3 size = Vec3::Ones();          // full extents l, w, h

  /// Box with yaw about world z, as tracker outputs provide.
  static TrackedBox from_yaw(std::uint32_t track_id, std::int64_t frame_id, const Vec3& center,
                             const Vec3& size, double yaw);
  void validate() const;

  /// True when `world_point` lies within the box scaled by `inflation`
  /// (closed faces).
  bool contains(const Vec3& world_point, double inflation = 1.0) const;
};

struct PoseCorrection {
  Mat3 delta_rotation = Mat3::Identity();
  Vec3 delta_translation = Vec3::Zero();

  static PoseCorrection identity() { return {}; }
};

/// R' = R * dR, t' = t + dt.
Pose apply_correction(const Pose& pose, const PoseCorrection& corr);

/// Closed-form least-squares fit of the correction that maps box-frame points
/// onto their observed world positions. Points are corresponded by index.
PoseCorrection estimate_correction(const PointCloud& observed, const PointCloud& canonical_in_box,
                                   const Pose& box_pose);

/// Root-mean-square distance between pose * canonical[i] and observed[i].
double alignment_rmse(const PointCloud& observed, const PointCloud& canonical_in_box,
                      const Pose& box_pose);

PointCloud world_to_box(const PointCloud& points, const TrackedBox& box);
PointCloud box_to_world(const PointCloud& points, const TrackedBox& box);

inline constexpr double kDefaultBoxInflation = 1.1;

/// Concatenates every frame's points in its own box frame, ascending frame_id,
/// dropping points outside the inflated box. Output points are labeled with the
/// track's id.
PointCloud aggregate_track(const std::map<std::int64_t, PointCloud>& per_frame_points,
                           const std::map<std::int64_t, TrackedBox>& boxes,
                           double inflation = kDefaultBoxInflation);

}  // namespace occlabel

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "occlabel/error.hpp"

// World frame: z-up, meters. Body frames (camera rig, tracked boxes) are
// x-forward, y-left, z-up.

namespace occlabel {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

bool is_finite(const Vec3& v);

/// Throws InvalidArgument when any component is NaN or infinite.
const Vec3& require_finite(const Vec3& v);

/// Rotation about the world z axis by `radians` (counter-clockwise seen from +z).
Mat3 rotation_z(double radians);
Mat3 rotation_y(double radians);
Mat3 rotation_x(double radians);

/// Rigid transform x -> R x + t. Construction rejects rotations with
/// |det - 1| > 1e-6 or max|R^T R - I| > 1e-6.
class Pose {
 public:
  Pose() = default;
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Pose inverse() const;

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// Maximum deviation of a matrix from orthonormality, max|R^T R - I|.
double orthonormality_error(const Mat3& r);

/// Nearest proper rotation in the Frobenius sense (SVD projection).
Mat3 nearest_rotation(const Mat3& m);

/// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

struct CameraFrame {
  std::int64_t frame_id = 0;
  Pose pose;  // camera-to-world

  const Vec3& camera_center() const { return pose.translation(); }
};

enum class LabelKind : std::uint8_t {
  Unlabeled = 0,
  Static = 1,
  Ground = 2,
  Dynamic = 3,
  Sky = 4,
};

struct PointLabel {
  LabelKind kind = LabelKind::Unlabeled;
  std::uint32_t track_id = 0;  // meaningful only for Dynamic

  static PointLabel dynamic(std::uint32_t track) { return {LabelKind::Dynamic, track}; }

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

/// Points with an optional parallel label array. Non-finite points are
/// rejected on insertion.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> points);
  PointCloud(std::vector<Vec3> points, std::vector<PointLabel> labels);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  bool has_labels() const { return labels_.has_value(); }

  std::span<const Vec3> points() const { return points_; }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  /// Label of point i; Unlabeled when the cloud carries no labels.
  PointLabel label(std::size_t i) const;
  std::span<const PointLabel> labels() const;

  void reserve(std::size_t n);
  void add(const Vec3& p);
  void add(const Vec3& p, PointLabel label);
  void append(const PointCloud& other);

 private:
  std::vector<Vec3> points_;
  std::optional<std::vector<PointLabel>> labels_;
};

PointCloud transform_points(const Pose& pose, const PointCloud& cloud);

}  // namespace occlabel

#include "occlabel/dynamic.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace occlabel {

namespace {

// Relative eigenvalue floor below which a centered point set is treated as
// lying on a line (or a point).
constexpr double kRankTolerance = 1e-12;

Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

bool is_collinear(std::span<const Vec3> pts, const Vec3& mean) {
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov, Eigen::EigenvaluesOnly);
  const Vec3 ev = eig.eigenvalues();  // ascending
  return !(ev(2) > 0) || ev(1) <= kRankTolerance * ev(2);
}

}  // namespace

TrackedBox TrackedBox::from_yaw(std::uint32_t track_id, std::int64_t frame_id,
                                const Vec3& center, const Vec3& size, double yaw) {
  TrackedBox b{track_id, frame_id, Pose(rotation_z(yaw), center), size};
  b.validate();
  return b;
}

void TrackedBox::validate() const {
  if (!(size.x() > 0 && size.y() > 0 && size.z() > 0) || !is_finite(size))
    throw Error(ErrorCode::InvalidArgument,
                "box extents must be positive (track " + std::to_string(track_id) + ", frame " +
                    std::to_string(frame_id) + ")");
}

bool TrackedBox::contains(const Vec3& world_point, double inflation) const {
  const Vec3 local = pose.rotation().transpose() * (world_point - pose.translation());
  const Vec3 half = 0.5 * inflation * size;
  return std::abs(local.x()) <= half.x() && std::abs(local.y()) <= half.y() &&
         std::abs(local.z()) <= half.z();
}

Pose apply_correction(const Pose& pose, const PoseCorrection& corr) {
  return {pose.rotation() * corr.delta_rotation, pose.translation() + corr.delta_translation};
}

PoseCorrection estimate_correction(const PointCloud& observed, const PointCloud& canonical_in_box,
                                   const Pose& box_pose) {
  if (observed.size() != canonical_in_box.size())
    throw Error(ErrorCode::CountMismatch,
                "observed has " + std::to_string(observed.size()) + " points, canonical has " +
                    std::to_string(canonical_in_box.size()));
  if (observed.size() < 3)
    throw Error(ErrorCode::DegenerateConfiguration, "need at least 3 correspondences");

  const auto src = canonical_in_box.points();
  const auto dst = observed.points();
  const Vec3 src_mean = centroid(src);
  const Vec3 dst_mean = centroid(dst);
  if (is_collinear(src, src_mean) || is_collinear(dst, dst_mean))
    throw Error(ErrorCode::DegenerateConfiguration, "correspondences are collinear or coincident");

  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i)
    cross += (src[i] - src_mean) * (dst[i] - dst_mean).transpose();

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1;
  const Mat3 fitted = svd.matrixV() * d * svd.matrixU().transpose();
  const Vec3 fitted_t = dst_mean - fitted * src_mean;

  PoseCorrection corr;
  corr.delta_rotation = nearest_rotation(box_pose.rotation().transpose() * fitted);
  corr.delta_translation = fitted_t - box_pose.translation();
  return corr;
}

double alignment_rmse(const PointCloud& observed, const PointCloud& canonical_in_box,
                      const Pose& box_pose) {
  if (observed.size() != canonical_in_box.size())
    throw Error(ErrorCode::CountMismatch, "rmse needs corresponded clouds");
  if (observed.empty()) throw Error(ErrorCode::EmptyCloud, "rmse of empty clouds");
  double sum = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    sum += (box_pose.apply(canonical_in_box.point(i)) - observed.point(i)).squaredNorm();
  return std::sqrt(sum / static_cast<double>(observed.size()));
}

PointCloud world_to_box(const PointCloud& points, const TrackedBox& box) {
  return transform_points(box.pose.inverse(), points);
}

PointCloud box_to_world(const PointCloud& points, const TrackedBox& box) {
  return transform_points(box.pose, points);
}

PointCloud aggregate_track(const std::map<std::int64_t, PointCloud>& per_frame_points,
                           const std::map<std::int64_t, TrackedBox>& boxes, double inflation) {
  if (!(inflation > 0)) throw Error(ErrorCode::InvalidArgument, "box inflation must be positive");
  std::optional<std::uint32_t> track;
  for (const auto& [frame, box] : boxes) {
    if (track && *track != box.track_id)
      throw Error(ErrorCode::InvalidArgument, "aggregate_track mixes track ids " +
                                                  std::to_string(*track) + " and " +
                                                  std::to_string(box.track_id));
    track = box.track_id;
  }

  PointCloud out;
  for (const auto& [frame, cloud] : per_frame_points) {
    auto it = boxes.find(frame);
    if (it == boxes.end())
      throw Error(ErrorCode::MissingBoxForFrame, "no box for frame " + std::to_string(frame));
    const TrackedBox& box = it->second;
    const Vec3 half = 0.5 * inflation * box.size;
    const Pose to_box = box.pose.inverse();
    for (const auto& p : cloud.points()) {
      const Vec3 local = to_box.apply(p);
      if (std::abs(local.x()) <= half.x() && std::abs(local.y()) <= half.y() &&
          std::abs(local.z()) <= half.z())
        out.add(local, PointLabel::dynamic(box.track_id));
    }
  }
  return out;
}

}  // namespace occlabel

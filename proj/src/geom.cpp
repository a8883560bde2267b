#include "occlabel/geom.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace occlabel {

namespace {

constexpr double kRotationTolerance = 1e-6;

}  // namespace

bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

const Vec3& require_finite(const Vec3& v) {
  if (!is_finite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");
  return v;
}

Mat3 rotation_z(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Mat3 rotation_y(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rotation_x(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !is_finite(translation))
    throw Error(ErrorCode::InvalidArgument, "pose has non-finite entries");
  const double det = rotation.determinant();
  const double ortho = orthonormality_error(rotation);
  if (std::abs(det - 1.0) > kRotationTolerance || ortho > kRotationTolerance)
    throw Error(ErrorCode::InvalidRotation,
                "rotation not orthonormal (det=" + std::to_string(det) +
                    ", max|R^T R - I|=" + std::to_string(ortho) + ")");
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose invert(const Pose& p) { return p.inverse(); }

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
  for (const auto& p : points_) require_finite(p);
}

PointCloud::PointCloud(std::vector<Vec3> points, std::vector<PointLabel> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  if (labels_->size() != points_.size())
    throw Error(ErrorCode::CountMismatch, "label count " + std::to_string(labels_->size()) +
                                              " != point count " + std::to_string(points_.size()));
  for (const auto& p : points_) require_finite(p);
}

PointLabel PointCloud::label(std::size_t i) const {
  return labels_ ? (*labels_)[i] : PointLabel{};
}

std::span<const PointLabel> PointCloud::labels() const {
  if (!labels_) return {};
  return *labels_;
}

void PointCloud::reserve(std::size_t n) {
  points_.reserve(n);
  if (labels_) labels_->reserve(n);
}

void PointCloud::add(const Vec3& p) {
  points_.push_back(require_finite(p));
  if (labels_) labels_->push_back(PointLabel{});
}

void PointCloud::add(const Vec3& p, PointLabel label) {
  require_finite(p);
  if (!labels_) labels_.emplace(points_.size(), PointLabel{});
  points_.push_back(p);
  labels_->push_back(label);
}

void PointCloud::append(const PointCloud& other) {
  if (other.has_labels() && !labels_) labels_.emplace(points_.size(), PointLabel{});
  points_.insert(points_.end(), other.points_.begin(), other.points_.end());
  if (labels_) {
    if (other.labels_)
      labels_->insert(labels_->end(), other.labels_->begin(), other.labels_->end());
    else
      labels_->resize(points_.size(), PointLabel{});
  }
}

PointCloud transform_points(const Pose& pose, const PointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points()) out.push_back(pose.apply(p));
  if (!cloud.has_labels()) return PointCloud(std::move(out));
  return PointCloud(std::move(out), {cloud.labels().begin(), cloud.labels().end()});
}

}  // namespace occlabel

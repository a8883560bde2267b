#include "occlabel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace occlabel {

namespace {

constexpr std::uint32_t kLeafSize = 8;

// Pairwise (cascade) summation in a fixed order.
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) return std::accumulate(v.begin(), v.end(), 0.0);
  const std::size_t mid = v.size() / 2;
  return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::InvalidArgument, "kd-tree point count exceeds 2^32");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()), 0);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid, depth + 1);
  const std::int32_t right = build(mid, end, depth + 1);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = static_cast<std::uint8_t>(axis);
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree::search(std::int32_t node, const Vec3& q, double& best_sq) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i)
      best_sq = std::min(best_sq, (points_[order_[i]] - q).squaredNorm());
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = q[n.axis] - n.split;
  const std::int32_t near = diff <= 0 ? n.left : n.right;
  const std::int32_t far = diff <= 0 ? n.right : n.left;
  search(near, q, best_sq);
  if (diff * diff <= best_sq) search(far, q, best_sq);
}

double KdTree::nearest_distance(const Vec3& q) const {
  if (points_.empty()) throw Error(ErrorCode::EmptyCloud, "nearest neighbor in an empty tree");
  double best_sq = std::numeric_limits<double>::infinity();
  search(0, q, best_sq);
  return std::sqrt(best_sq);
}

double directed_mean_distance(const PointCloud& from, const PointCloud& to) {
  if (from.empty() || to.empty()) throw Error(ErrorCode::EmptyCloud, "chamfer of an empty cloud");
  const KdTree tree(to.points());
  std::vector<double> d(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) d[i] = tree.nearest_distance(from.point(i));
  return pairwise_sum(d) / static_cast<double>(d.size());
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyCloud, "chamfer of an empty cloud");
  return directed_mean_distance(a, b) + directed_mean_distance(b, a);
}

VoxelConfusion voxel_confusion(const VoxelGrid& pred, const VoxelGrid& gt) {
  if (!(pred.spec() == gt.spec()))
    throw Error(ErrorCode::SpecMismatch, "prediction and ground truth grids differ in spec");
  VoxelConfusion c;
  const auto p = pred.states();
  const auto g = gt.states();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == CellState::Unobserved) continue;
    const bool gt_pos = g[i] == CellState::Occupied;
    const bool pred_pos = p[i] == CellState::Occupied;
    if (gt_pos && pred_pos) ++c.tp;
    else if (pred_pos) ++c.fp;
    else if (gt_pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

VoxelScores scores_from_confusion(const VoxelConfusion& c) {
  const auto ratio = [](std::uint64_t num, std::uint64_t den, bool both_empty) {
    if (den == 0) return both_empty ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const bool pred_empty = c.tp + c.fp == 0;
  const bool gt_empty = c.tp + c.fn == 0;
  VoxelScores s;
  s.confusion = c;
  s.iou = ratio(c.tp, c.tp + c.fp + c.fn, pred_empty && gt_empty);
  s.precision = ratio(c.tp, c.tp + c.fp, gt_empty);
  s.recall = ratio(c.tp, c.tp + c.fn, pred_empty);
  const double pr = s.precision + s.recall;
  s.f1 = pr > 0 ? 2.0 * s.precision * s.recall / pr : 0.0;
  return s;
}

VoxelScores voxel_metrics(const VoxelGrid& pred, const VoxelGrid& gt) {
  return scores_from_confusion(voxel_confusion(pred, gt));
}

VoxelGrid restrict_to_observed(const VoxelGrid& gt, const VoxelGrid& mask_source) {
  if (!(gt.spec() == mask_source.spec()))
    throw Error(ErrorCode::SpecMismatch, "mask grid differs in spec");
  VoxelGrid out = gt;
  const auto m = mask_source.states();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] == CellState::Unobserved) out.set(i, CellState::Unobserved);
  return out;
}

}  // namespace occlabel

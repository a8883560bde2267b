#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occlabel/geom.hpp"
#include "occlabel/grid.hpp"

namespace occlabel {

/// Static 3D kd-tree for exact nearest-neighbor queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// Euclidean distance to the nearest stored point. Requires a non-empty tree.
  double nearest_distance(const Vec3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;  // range into order_
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);
  void search(std::int32_t node, const Vec3& q, double& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Sum of the two directed mean nearest-neighbor distances (unsquared).
double chamfer(const PointCloud& a, const PointCloud& b);

/// Mean distance from each point of `from` to its nearest neighbor in `to`.
double directed_mean_distance(const PointCloud& from, const PointCloud& to);

struct VoxelConfusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct VoxelScores {
  VoxelConfusion confusion;
  double iou = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// Confusion over cells where gt is not Unobserved; positive = Occupied.
VoxelConfusion voxel_confusion(const VoxelGrid& pred, const VoxelGrid& gt);

/// IoU/F1/precision/recall. A ratio whose numerator and denominator are both
/// zero because both sides are empty scores 1; a one-sided empty case scores 0.
VoxelScores scores_from_confusion(const VoxelConfusion& c);

VoxelScores voxel_metrics(const VoxelGrid& pred, const VoxelGrid& gt);

/// Copy of `gt` with Unobserved wherever `mask_source` is Unobserved, so that
/// voxel_metrics only scores the cells the mask source observed.
VoxelGrid restrict_to_observed(const VoxelGrid& gt, const VoxelGrid& mask_source);

}  // namespace occlabel

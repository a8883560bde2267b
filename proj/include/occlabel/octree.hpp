#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "occlabel/geom.hpp"

namespace occlabel {

/// Round to nearest integer, ties to even. Independent of the FP environment.
double round_half_even(double x);

struct OctreeConfig {
  double base_voxel_size = 1.0;  // edge length at level 0, meters
  std::size_t anchors_per_voxel = 10;
  std::size_t expand_threshold = std::numeric_limits<std::size_t>::max();
  std::size_t contract_threshold = 0;

  void validate() const;
  friend bool operator==(const OctreeConfig&, const OctreeConfig&) = default;
};

/// Integer lattice coordinate k such that the voxel center is k * (eps / 2^L).
struct LatticeKey {
  std::int64_t x = 0, y = 0, z = 0;
  friend auto operator<=>(const LatticeKey&, const LatticeKey&) = default;
};

struct AnchorVoxel {
  LatticeKey key;
  Vec3 center = Vec3::Zero();
  int level = 0;
  std::vector<Vec3> anchor_points;     // first `anchors_per_voxel` members, input order
  std::vector<std::uint32_t> members;  // indices into OctreeIndex::points(), ascending

  std::size_t source_count() const { return members.size(); }
};

/// K = round_half_even(log2(d_max / d_min)) + 1 over all camera/point pairs.
int compute_level_count(std::span<const Vec3> camera_centers, const PointCloud& points);

double level_voxel_size(double base_voxel_size, int level);
LatticeKey lattice_key(const Vec3& p, double base_voxel_size, int level);
Vec3 lattice_center(const LatticeKey& k, double base_voxel_size, int level);
/// round(p / (eps / 2^L)) * (eps / 2^L), componentwise, ties to even.
Vec3 quantize_to_level(const Vec3& p, double base_voxel_size, int level);

/// Multi-level sparse anchor structure. Immutable after construction; adapt()
/// and filter() return new indexes sharing the same point storage.
class OctreeIndex {
 public:
  using Level = std::map<LatticeKey, AnchorVoxel>;

  OctreeIndex(std::shared_ptr<const std::vector<Vec3>> points, OctreeConfig cfg,
              std::vector<Level> levels);

  int level_count() const { return static_cast<int>(levels_.size()); }
  const OctreeConfig& config() const { return config_; }
  const Level& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
  std::span<const Vec3> points() const { return *points_; }
  std::size_t voxel_count() const;

  const AnchorVoxel* find(int level, const LatticeKey& key) const;

  const std::shared_ptr<const std::vector<Vec3>>& shared_points() const { return points_; }

 private:
  std::shared_ptr<const std::vector<Vec3>> points_;
  OctreeConfig config_;
  std::vector<Level> levels_;
};

/// Builds all K levels, or only the coarsest `populated_levels` of them when
/// given (finer levels are then grown by adapt()).
OctreeIndex build_index(const PointCloud& points, std::span<const Vec3> cameras,
                        const OctreeConfig& cfg, std::optional<int> populated_levels = {});

/// Single pass of density-driven growth and pruning, finest level first.
/// Voxels with source_count >= expand_threshold (below the finest level) push
/// their points one level finer; childless voxels with source_count <=
/// contract_threshold are removed.
OctreeIndex adapt(const OctreeIndex& index, const OctreeConfig& cfg);

/// Drops points failing `keep` from every voxel's membership. Voxels left empty
/// are kept (with source_count 0) so that adapt() can prune them.
OctreeIndex filter(const OctreeIndex& index, const std::function<bool(const Vec3&)>& keep);

/// All voxels at levels 0..=max_level, level-major then key-lexicographic.
std::vector<AnchorVoxel> query_cumulative(const OctreeIndex& index, int max_level);

}  // namespace occlabel

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "occlabel/dynamic.hpp"
#include "occlabel/geom.hpp"
#include "occlabel/grid.hpp"

namespace occlabel {

enum class RangeShape { Sphere, Box };

struct FrameSweep {
  std::int64_t frame_id = 0;
  std::vector<Vec3> camera_origins;
  PointCloud points;
  bool empty = false;  // no scene point fell inside the perception range
};

/// Per-frame slice of a batch reconstruction: every scene point within `range`
/// of the camera center (sphere, or axis-aligned cube for RangeShape::Box),
/// uniformly downsampled without replacement to at most `target_count` points.
/// Selected points keep scene order. The sweep's camera origins are the
/// camera pose applied to `rig_offsets`.
FrameSweep divide_frame(const PointCloud& scene, const CameraFrame& cam, double range,
                        std::size_t target_count, std::uint64_t seed,
                        RangeShape shape = RangeShape::Sphere,
                        std::span<const Vec3> rig_offsets = {});

struct TrackInstance {
  TrackedBox box;        // the track's box at the sweep's frame
  PointCloud canonical;  // aggregated points in the box frame
};

/// Replaces dynamic points inside each (inflated) box with the track's
/// aggregated cloud placed at that box.
PointCloud fuse_frame(const FrameSweep& sweep, std::span<const TrackInstance> tracks,
                      double inflation = kDefaultBoxInflation);

/// Occupied iff at least one point lies in the half-open cell cube; points
/// outside the grid are ignored; all other cells Free.
VoxelGrid voxelize(const PointCloud& cloud, const GridSpec& spec);

/// Casts a ray from every origin to the center of every occupied cell. The
/// first occupied cell hit is observed, the cells crossed before it are free,
/// everything else is unobserved. Visibility is the union over origins.
VoxelGrid raycast_visibility(const VoxelGrid& grid, std::span<const Vec3> camera_origins);

struct CurationConfig {
  double range = 40.0;
  RangeShape range_shape = RangeShape::Sphere;
  std::size_t target_count = 170000;
  std::uint64_t seed = 0;

  // Per-frame grid. With ego_centered the origin is camera center + grid_origin,
  // snapped down to the world voxel lattice; otherwise grid_origin is absolute.
  double voxel_size = 0.4;
  std::array<std::uint32_t, 3> grid_dims{200, 200, 16};
  Vec3 grid_origin{-40.0, -40.0, -2.6};
  bool ego_centered = true;

  double box_inflation = kDefaultBoxInflation;
  // Ego vehicle region in the camera frame; cells whose centers fall inside are
  // forced unobserved. An empty box (min >= max on any axis) disables it.
  Vec3 ego_box_min{-2.5, -1.1, -1.8};
  Vec3 ego_box_max{2.5, 1.1, 0.3};
  bool camera_union = true;
  std::vector<Vec3> rig_offsets{Vec3::Zero()};

  void validate() const;
  friend bool operator==(const CurationConfig&, const CurationConfig&) = default;
};

/// Batch reconstruction split by component: the static scene (ground,
/// background) and, per frame, the reconstructed dynamic points.
struct ReconstructedScene {
  PointCloud static_cloud;
  std::map<std::int64_t, PointCloud> dynamic_by_frame;
};

struct FrameGrid {
  std::int64_t frame_id = 0;
  VoxelGrid grid;
};

GridSpec frame_grid_spec(const CurationConfig& cfg, const CameraFrame& cam);
std::vector<Vec3> frame_origins(const CurationConfig& cfg, const CameraFrame& cam);

/// Canonical (box-frame) cloud per track, aggregated over every frame's
/// dynamic points that fall inside that frame's box.
std::map<std::uint32_t, PointCloud> aggregate_tracks(const ReconstructedScene& scene,
                                                     std::span<const TrackedBox> tracks,
                                                     double inflation);

/// divide -> fuse -> voxelize -> ray cast for every camera frame, in frame_id
/// order. Sky points are dropped on ingestion.
std::vector<FrameGrid> curate_sequence(const ReconstructedScene& scene,
                                       std::span<const CameraFrame> cameras,
                                       std::span<const TrackedBox> tracks,
                                       const CurationConfig& cfg);

}  // namespace occlabel

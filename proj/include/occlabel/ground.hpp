#pragma once

#include <span>
#include <vector>

#include "occlabel/geom.hpp"

namespace occlabel {

struct Surfel {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 0.0;
};

struct GroundSeedConfig {
  double grid_spacing = 0.5;   // xy sampling pitch, meters
  double height_offset = 1.6;  // camera height above the road, meters
  double extent = 20.0;        // lateral half-width around each camera, meters

  void validate() const;
  friend bool operator==(const GroundSeedConfig&, const GroundSeedConfig&) = default;
};

/// Ground surfels on the world xy lattice of pitch `grid_spacing`, restricted to
/// the union of axis-aligned squares of half-width `extent` around each camera.
/// Each surfel takes z (minus the height offset) and orientation from the
/// camera nearest in xy; ties go to the lower frame_id.
std::vector<Surfel> seed_ground(std::span<const CameraFrame> cameras,
                                const GroundSeedConfig& cfg);

/// Mean squared z difference over unordered surfel pairs whose xy distance is
/// at most `neighbor_radius`.
double road_smoothness(std::span<const Surfel> surfels, double neighbor_radius);

}  // namespace occlabel

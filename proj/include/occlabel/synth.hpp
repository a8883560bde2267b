#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "occlabel/curation.hpp"
#include "occlabel/dynamic.hpp"
#include "occlabel/geom.hpp"
#include "occlabel/grid.hpp"

namespace occlabel {

enum class GroundProfile { Flat, Slope, Valley };

/// Ground height field z = h(x), defined over a closed xy rectangle.
struct GroundSpec {
  GroundProfile profile = GroundProfile::Flat;
  double grade = 0.1;      // rise per meter for Slope; slope magnitude of each Valley arm
  double valley_x = 0.0;   // Valley bottom: downhill for x < valley_x, uphill after
  double base_height = 0.0;  // h at x = 0 (Flat, Slope) or at valley_x (Valley)
  double x_min = -30.0, x_max = 60.0;
  double y_min = -20.0, y_max = 20.0;

  double height(double x) const;
  /// Closed range of h over [x0, x1].
  std::pair<double, double> height_range(double x0, double x1) const;
  double slope_at(double x) const;
  friend bool operator==(const GroundSpec&, const GroundSpec&) = default;
};

/// Axis-aligned box; sampled on its four walls and roof.
struct BuildingBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  friend bool operator==(const BuildingBox&, const BuildingBox&) = default;
};

/// Vehicle moving on a straight line at constant speed; its box sits on the
/// ground under its center. The shell has no underside.
struct VehicleSpec {
  std::uint32_t track_id = 1;
  Vec3 start = Vec3::Zero();  // xy of the box center at t = 0; z is ignored
  double yaw = 0.0;
  double speed = 5.0;
  double duration = 4.0;  // seconds during which the vehicle is tracked
  Vec3 size{4.5, 1.9, 1.6};
  friend bool operator==(const VehicleSpec&, const VehicleSpec&) = default;
};

struct SceneSpec {
  GroundSpec ground;
  std::vector<BuildingBox> buildings;
  std::optional<VehicleSpec> vehicle;
  std::vector<Vec3> rig_offsets{Vec3::Zero()};  // camera positions in the ego frame
  int frame_count = 20;
  double frame_dt = 0.2;
  double ego_start_x = 0.0;
  double ego_speed = 5.0;
  double camera_height = 1.6;
  double density = 100.0;  // points per square meter of surface
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct SyntheticScene {
  SceneSpec spec;
  ReconstructedScene reconstruction;  // static cloud + per-frame vehicle observations
  std::vector<CameraFrame> cameras;
  std::vector<TrackedBox> tracks;

  /// Static cloud followed by every frame's dynamic points, ascending frame.
  PointCloud scene_cloud() const;
  std::optional<TrackedBox> box_at(std::int64_t frame_id) const;
};

/// Position of the vehicle box at time t (no pitch: yaw about z only).
TrackedBox vehicle_box(const SceneSpec& spec, std::int64_t frame_id);

SyntheticScene generate_scene(const SceneSpec& spec);

/// Cell is occupied iff its half-open cube intersects an analytic surface:
/// ground, building faces and, when `frame_id` has a box, the vehicle shell.
VoxelGrid oracle_occupancy(const SyntheticScene& scene, const GridSpec& spec,
                           std::optional<std::int64_t> frame_id = {});

/// Reference visibility by dense marching at `step` meters along each
/// camera-to-occupied-center ray. Consecutive samples whose cells are not face
/// neighbors are bisected until they are, so no crossed cell is skipped.
VoxelGrid oracle_raycast(const VoxelGrid& grid, std::span<const Vec3> origins, double step);

}  // namespace occlabel

#include "occlabel/curation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "occlabel/rng.hpp"

namespace occlabel {

namespace {

bool in_range(const Vec3& p, const Vec3& center, double range, RangeShape shape) {
  const Vec3 d = p - center;
  if (shape == RangeShape::Sphere) return d.squaredNorm() <= range * range;
  return d.cwiseAbs().maxCoeff() <= range;
}

PointCloud drop_sky(const PointCloud& cloud) {
  if (!cloud.has_labels()) return cloud;
  PointCloud out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (cloud.label(i).kind != LabelKind::Sky) out.add(cloud.point(i), cloud.label(i));
  return out;
}

}  // namespace

FrameSweep divide_frame(const PointCloud& scene, const CameraFrame& cam, double range,
                        std::size_t target_count, std::uint64_t seed, RangeShape shape,
                        std::span<const Vec3> rig_offsets) {
  if (!(range > 0)) throw Error(ErrorCode::InvalidArgument, "perception range must be positive");
  if (target_count < 1) throw Error(ErrorCode::InvalidArgument, "target count must be >= 1");

  FrameSweep sweep;
  sweep.frame_id = cam.frame_id;
  if (rig_offsets.empty()) {
    sweep.camera_origins.push_back(cam.camera_center());
  } else {
    for (const auto& off : rig_offsets) sweep.camera_origins.push_back(cam.pose.apply(off));
  }

  const Vec3& center = cam.camera_center();
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scene.size(); ++i)
    if (in_range(scene.point(i), center, range, shape)) candidates.push_back(i);

  if (candidates.size() > target_count) {
    // Partial Fisher-Yates: the first target_count slots become a uniform
    // sample without replacement.
    CounterRng rng(seed);
    const std::size_t n = candidates.size();
    for (std::size_t i = 0; i < target_count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(target_count);
    std::sort(candidates.begin(), candidates.end());
  }

  sweep.empty = candidates.empty();
  sweep.points.reserve(candidates.size());
  for (std::size_t i : candidates) {
    if (scene.has_labels())
      sweep.points.add(scene.point(i), scene.label(i));
    else
      sweep.points.add(scene.point(i));
  }
  return sweep;
}

PointCloud fuse_frame(const FrameSweep& sweep, std::span<const TrackInstance> tracks,
                      double inflation) {
  for (const auto& t : tracks)
    if (t.box.frame_id != sweep.frame_id)
      throw Error(ErrorCode::FrameMismatch,
                  "track " + std::to_string(t.box.track_id) + " box is for frame " +
                      std::to_string(t.box.frame_id) + ", sweep is frame " +
                      std::to_string(sweep.frame_id));

  PointCloud out;
  out.reserve(sweep.points.size());
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const Vec3& p = sweep.points.point(i);
    const PointLabel label = sweep.points.label(i);
    if (label.kind == LabelKind::Dynamic &&
        std::any_of(tracks.begin(), tracks.end(),
                    [&](const TrackInstance& t) { return t.box.contains(p, inflation); }))
      continue;
    out.add(p, label);
  }
  for (const auto& t : tracks) {
    for (const auto& q : t.canonical.points())
      out.add(t.box.pose.apply(q), PointLabel::dynamic(t.box.track_id));
  }
  return out;
}

VoxelGrid voxelize(const PointCloud& cloud, const GridSpec& spec) {
  VoxelGrid grid(spec, CellState::Free);
  for (const auto& p : cloud.points()) {
    const CellIndex c = spec.cell_of(p);
    if (spec.contains(c)) grid.set(c, CellState::Occupied);
  }
  return grid;
}

VoxelGrid raycast_visibility(const VoxelGrid& grid, std::span<const Vec3> camera_origins) {
  const auto states = grid.states();
  if (std::find(states.begin(), states.end(), CellState::Unobserved) != states.end())
    throw Error(ErrorCode::InvalidInputState, "ray casting expects an occupied/free grid");
  for (const auto& o : camera_origins) require_finite(o);

  const GridSpec& spec = grid.spec();
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == CellState::Occupied) occupied.push_back(i);

  std::vector<std::uint8_t> observed(states.size(), 0);
  std::vector<std::uint8_t> crossed(states.size(), 0);
  for (const auto& origin : camera_origins) {
    for (std::size_t target : occupied) {
      trace_segment(spec, origin, spec.cell_center(spec.unflat(target)),
                    [&](const CellIndex& c) {
                      const std::size_t f = spec.flat(c);
                      if (states[f] == CellState::Occupied) {
                        observed[f] = 1;
                        return false;
                      }
                      crossed[f] = 1;
                      return true;
                    });
    }
  }

  std::vector<CellState> out(states.size(), CellState::Unobserved);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == CellState::Occupied && observed[i]) out[i] = CellState::Occupied;
    else if (states[i] == CellState::Free && crossed[i]) out[i] = CellState::Free;
  }
  return {spec, std::move(out)};
}

void CurationConfig::validate() const {
  if (!(range > 0)) throw Error(ErrorCode::InvalidArgument, "range_m must be positive");
  if (target_count < 1) throw Error(ErrorCode::InvalidArgument, "target_sweep_count must be >= 1");
  if (!(box_inflation > 0))
    throw Error(ErrorCode::InvalidArgument, "box_inflation must be positive");
  if (rig_offsets.empty())
    throw Error(ErrorCode::InvalidArgument, "rig_offsets_m needs at least one camera");
  for (const auto& o : rig_offsets) require_finite(o);
  require_finite(grid_origin);
  require_finite(ego_box_min);
  require_finite(ego_box_max);
  GridSpec{grid_origin, voxel_size, grid_dims}.validate();
}

GridSpec frame_grid_spec(const CurationConfig& cfg, const CameraFrame& cam) {
  GridSpec spec{cfg.grid_origin, cfg.voxel_size, cfg.grid_dims};
  if (cfg.ego_centered) {
    const Vec3 o = cam.camera_center() + cfg.grid_origin;
    for (int a = 0; a < 3; ++a) spec.origin[a] = std::floor(o[a] / cfg.voxel_size) * cfg.voxel_size;
  }
  spec.validate();
  return spec;
}

std::vector<Vec3> frame_origins(const CurationConfig& cfg, const CameraFrame& cam) {
  if (!cfg.camera_union) return {cam.camera_center()};
  std::vector<Vec3> out;
  for (const auto& off : cfg.rig_offsets) out.push_back(cam.pose.apply(off));
  return out;
}

std::map<std::uint32_t, PointCloud> aggregate_tracks(const ReconstructedScene& scene,
                                                     std::span<const TrackedBox> tracks,
                                                     double inflation) {
  std::map<std::uint32_t, std::map<std::int64_t, TrackedBox>> boxes;
  for (const auto& b : tracks) {
    auto [it, inserted] = boxes[b.track_id].emplace(b.frame_id, b);
    if (!inserted)
      throw Error(ErrorCode::InvalidArgument, "duplicate box for track " +
                                                  std::to_string(b.track_id) + " at frame " +
                                                  std::to_string(b.frame_id));
  }

  std::map<std::uint32_t, PointCloud> out;
  for (const auto& [track, by_frame] : boxes) {
    std::map<std::int64_t, PointCloud> per_frame;
    for (const auto& [frame, box] : by_frame) {
      auto it = scene.dynamic_by_frame.find(frame);
      if (it == scene.dynamic_by_frame.end()) continue;
      const PointCloud& cloud = it->second;
      PointCloud mine;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const PointLabel l = cloud.label(i);
        if (l.kind == LabelKind::Sky) continue;
        if (l.kind == LabelKind::Dynamic && l.track_id != track) continue;
        if (box.contains(cloud.point(i), inflation)) mine.add(cloud.point(i));
      }
      per_frame.emplace(frame, std::move(mine));
    }
    out.emplace(track, aggregate_track(per_frame, by_frame, inflation));
  }
  return out;
}

std::vector<FrameGrid> curate_sequence(const ReconstructedScene& scene,
                                       std::span<const CameraFrame> cameras,
                                       std::span<const TrackedBox> tracks,
                                       const CurationConfig& cfg) {
  cfg.validate();
  std::vector<CameraFrame> cams(cameras.begin(), cameras.end());
  std::sort(cams.begin(), cams.end(),
            [](const CameraFrame& a, const CameraFrame& b) { return a.frame_id < b.frame_id; });
  for (std::size_t i = 1; i < cams.size(); ++i)
    if (cams[i].frame_id == cams[i - 1].frame_id)
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate camera frame_id " + std::to_string(cams[i].frame_id));
  if (cams.empty()) return {};

  const PointCloud static_cloud = drop_sky(scene.static_cloud);
  const auto canonical = aggregate_tracks(scene, tracks, cfg.box_inflation);
  std::multimap<std::int64_t, const TrackedBox*> boxes_by_frame;
  for (const auto& b : tracks) boxes_by_frame.emplace(b.frame_id, &b);

  std::vector<FrameGrid> out;
  out.reserve(cams.size());
  for (const auto& cam : cams) {
    PointCloud combined = static_cloud;
    if (auto it = scene.dynamic_by_frame.find(cam.frame_id); it != scene.dynamic_by_frame.end())
      combined.append(drop_sky(it->second));

    const FrameSweep sweep =
        divide_frame(combined, cam, cfg.range, cfg.target_count,
                     derive_seed(cfg.seed, static_cast<std::uint64_t>(cam.frame_id)),
                     cfg.range_shape, cfg.rig_offsets);

    std::vector<TrackInstance> instances;
    auto [lo, hi] = boxes_by_frame.equal_range(cam.frame_id);
    for (auto it = lo; it != hi; ++it) {
      auto c = canonical.find(it->second->track_id);
      if (c != canonical.end()) instances.push_back({*it->second, c->second});
    }
    const PointCloud fused = fuse_frame(sweep, instances, cfg.box_inflation);

    const GridSpec spec = frame_grid_spec(cfg, cam);
    const auto origins = frame_origins(cfg, cam);
    VoxelGrid grid = raycast_visibility(voxelize(fused, spec), origins);

    if ((cfg.ego_box_max - cfg.ego_box_min).minCoeff() > 0) {
      const Pose to_cam = cam.pose.inverse();
      for (std::size_t i = 0; i < grid.spec().cell_count(); ++i) {
        const Vec3 local = to_cam.apply(spec.cell_center(spec.unflat(i)));
        if ((local.array() >= cfg.ego_box_min.array()).all() &&
            (local.array() <= cfg.ego_box_max.array()).all())
          grid.set(i, CellState::Unobserved);
      }
    }
    out.push_back({cam.frame_id, std::move(grid)});
  }
  return out;
}

}  // namespace occlabel

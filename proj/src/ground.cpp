#include "occlabel/ground.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace occlabel {

namespace {

struct CellXY {
  std::int64_t i, j;
  friend bool operator==(const CellXY&, const CellXY&) = default;
};

struct CellXYHash {
  std::size_t operator()(const CellXY& c) const noexcept {
    return std::hash<std::int64_t>()(c.i * 73856093 ^ c.j * 19349663);
  }
};

using Buckets = std::unordered_map<CellXY, std::vector<std::size_t>, CellXYHash>;

CellXY bucket_of(double x, double y, double size) {
  return {static_cast<std::int64_t>(std::floor(x / size)),
          static_cast<std::int64_t>(std::floor(y / size))};
}

}  // namespace

void GroundSeedConfig::validate() const {
  if (!(grid_spacing > 0) || !(height_offset > 0) || !(extent > 0))
    throw Error(ErrorCode::InvalidArgument, "ground seed spacing, height offset and extent must be positive");
}

std::vector<Surfel> seed_ground(std::span<const CameraFrame> cameras,
                                const GroundSeedConfig& cfg) {
  cfg.validate();
  if (cameras.empty()) throw Error(ErrorCode::EmptyTrajectory, "ground seeding needs a camera");

  std::vector<CameraFrame> cams(cameras.begin(), cameras.end());
  std::sort(cams.begin(), cams.end(),
            [](const CameraFrame& a, const CameraFrame& b) { return a.frame_id < b.frame_id; });
  for (std::size_t i = 1; i < cams.size(); ++i)
    if (cams[i].frame_id == cams[i - 1].frame_id)
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate frame_id " + std::to_string(cams[i].frame_id));

  const double s = cfg.grid_spacing;
  const double bucket = cfg.extent;
  Buckets buckets;
  double min_x = INFINITY, min_y = INFINITY, max_x = -INFINITY, max_y = -INFINITY;
  for (std::size_t c = 0; c < cams.size(); ++c) {
    const Vec3& p = cams[c].camera_center();
    buckets[bucket_of(p.x(), p.y(), bucket)].push_back(c);
    min_x = std::min(min_x, p.x());
    min_y = std::min(min_y, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }

  const auto i0 = static_cast<std::int64_t>(std::ceil((min_x - cfg.extent) / s));
  const auto i1 = static_cast<std::int64_t>(std::floor((max_x + cfg.extent) / s));
  const auto j0 = static_cast<std::int64_t>(std::ceil((min_y - cfg.extent) / s));
  const auto j1 = static_cast<std::int64_t>(std::floor((max_y + cfg.extent) / s));

  std::vector<Surfel> out;
  std::vector<std::size_t> nearby;
  for (std::int64_t j = j0; j <= j1; ++j) {
    for (std::int64_t i = i0; i <= i1; ++i) {
      const double x = static_cast<double>(i) * s;
      const double y = static_cast<double>(j) * s;
      // The nearest camera is within extent*sqrt(2) of any footprint cell, so
      // two bucket rings suffice.
      nearby.clear();
      const CellXY home = bucket_of(x, y, bucket);
      for (std::int64_t dj = -2; dj <= 2; ++dj)
        for (std::int64_t di = -2; di <= 2; ++di)
          if (auto it = buckets.find({home.i + di, home.j + dj}); it != buckets.end())
            nearby.insert(nearby.end(), it->second.begin(), it->second.end());
      std::sort(nearby.begin(), nearby.end());

      bool inside = false;
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t c : nearby) {
        const Vec3& p = cams[c].camera_center();
        const double dx = x - p.x(), dy = y - p.y();
        if (std::abs(dx) <= cfg.extent && std::abs(dy) <= cfg.extent) inside = true;
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (!inside) continue;

      const auto& cam = cams[best];
      Surfel surfel;
      surfel.center = {x, y, cam.camera_center().z() - cfg.height_offset};
      surfel.normal = (cam.pose.rotation() * Vec3::UnitZ()).normalized();
      surfel.radius = s * std::sqrt(0.5);
      out.push_back(surfel);
    }
  }
  return out;
}

double road_smoothness(std::span<const Surfel> surfels, double neighbor_radius) {
  if (!(neighbor_radius > 0))
    throw Error(ErrorCode::InvalidArgument, "neighbor radius must be positive");
  if (surfels.size() < 2)
    throw Error(ErrorCode::NoNeighborPairs, "road smoothness needs at least two surfels");

  Buckets buckets;
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    const Vec3& c = surfels[i].center;
    buckets[bucket_of(c.x(), c.y(), neighbor_radius)].push_back(i);
  }

  const double r2 = neighbor_radius * neighbor_radius;
  double sum = 0.0;
  std::size_t pairs = 0;
  std::vector<std::size_t> nearby;
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    const Vec3& a = surfels[i].center;
    const CellXY home = bucket_of(a.x(), a.y(), neighbor_radius);
    nearby.clear();
    for (std::int64_t dj = -1; dj <= 1; ++dj)
      for (std::int64_t di = -1; di <= 1; ++di)
        if (auto it = buckets.find({home.i + di, home.j + dj}); it != buckets.end())
          for (std::size_t j : it->second)
            if (j > i) nearby.push_back(j);
    std::sort(nearby.begin(), nearby.end());
    for (std::size_t j : nearby) {
      const Vec3& b = surfels[j].center;
      const double dx = a.x() - b.x(), dy = a.y() - b.y();
      if (dx * dx + dy * dy > r2) continue;
      const double dz = a.z() - b.z();
      sum += dz * dz;
      ++pairs;
    }
  }
  if (pairs == 0)
    throw Error(ErrorCode::NoNeighborPairs, "no surfel pair within the neighbor radius");
  return sum / static_cast<double>(pairs);
}

}  // namespace occlabel

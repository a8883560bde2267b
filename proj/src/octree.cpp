#include "occlabel/octree.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

namespace occlabel {

namespace {

std::int64_t to_lattice(double scaled) {
  const double r = round_half_even(scaled);
  if (!(std::abs(r) < 0x1p62))
    throw Error(ErrorCode::InvalidArgument, "coordinate outside the representable lattice");
  return static_cast<std::int64_t>(r);
}

void refresh_anchors(AnchorVoxel& voxel, std::span<const Vec3> points, std::size_t budget) {
  voxel.anchor_points.clear();
  const std::size_t n = std::min(budget, voxel.members.size());
  voxel.anchor_points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) voxel.anchor_points.push_back(points[voxel.members[i]]);
}

AnchorVoxel& voxel_at(OctreeIndex::Level& level, const LatticeKey& key, int l, double eps) {
  auto [it, inserted] = level.try_emplace(key);
  if (inserted) {
    it->second.key = key;
    it->second.level = l;
    it->second.center = lattice_center(key, eps, l);
  }
  return it->second;
}

bool has_child(const AnchorVoxel& voxel, const OctreeIndex::Level& finer,
               std::span<const Vec3> points, double eps) {
  if (finer.empty()) return false;
  for (std::uint32_t m : voxel.members) {
    auto it = finer.find(lattice_key(points[m], eps, voxel.level + 1));
    if (it == finer.end()) continue;
    const auto& cm = it->second.members;
    if (std::binary_search(cm.begin(), cm.end(), m)) return true;
  }
  return false;
}

}  // namespace

double round_half_even(double x) {
  const double r = std::round(x);
  if (std::abs(x - std::trunc(x)) == 0.5) return 2.0 * std::round(x / 2.0);
  return r;
}

void OctreeConfig::validate() const {
  if (!(base_voxel_size > 0) || !std::isfinite(base_voxel_size))
    throw Error(ErrorCode::InvalidArgument, "octree base voxel size must be positive");
  if (anchors_per_voxel < 1)
    throw Error(ErrorCode::InvalidArgument, "octree anchors per voxel must be >= 1");
  if (expand_threshold <= contract_threshold)
    throw Error(ErrorCode::InvalidArgument,
                "octree expand threshold must exceed contract threshold");
}

int compute_level_count(std::span<const Vec3> camera_centers, const PointCloud& points) {
  if (camera_centers.empty() || points.empty())
    throw Error(ErrorCode::EmptyInput, "level count needs at least one camera and one point");
  double min_sq = std::numeric_limits<double>::infinity();
  double max_sq = 0.0;
  for (const auto& c : camera_centers) {
    for (const auto& p : points.points()) {
      const double d = (p - c).squaredNorm();
      min_sq = std::min(min_sq, d);
      max_sq = std::max(max_sq, d);
    }
  }
  if (min_sq == 0.0)
    throw Error(ErrorCode::DegenerateDistances, "a point coincides with a camera center");
  const double ratio = std::sqrt(max_sq) / std::sqrt(min_sq);
  return static_cast<int>(round_half_even(std::log2(ratio))) + 1;
}

double level_voxel_size(double base_voxel_size, int level) {
  return std::ldexp(base_voxel_size, -level);
}

LatticeKey lattice_key(const Vec3& p, double base_voxel_size, int level) {
  const double step = level_voxel_size(base_voxel_size, level);
  return {to_lattice(p.x() / step), to_lattice(p.y() / step), to_lattice(p.z() / step)};
}

Vec3 lattice_center(const LatticeKey& k, double base_voxel_size, int level) {
  const double step = level_voxel_size(base_voxel_size, level);
  return {static_cast<double>(k.x) * step, static_cast<double>(k.y) * step,
          static_cast<double>(k.z) * step};
}

Vec3 quantize_to_level(const Vec3& p, double base_voxel_size, int level) {
  return lattice_center(lattice_key(p, base_voxel_size, level), base_voxel_size, level);
}

OctreeIndex::OctreeIndex(std::shared_ptr<const std::vector<Vec3>> points, OctreeConfig cfg,
                         std::vector<Level> levels)
    : points_(std::move(points)), config_(cfg), levels_(std::move(levels)) {
  if (levels_.empty()) throw Error(ErrorCode::InvalidArgument, "octree needs at least one level");
}

std::size_t OctreeIndex::voxel_count() const {
  std::size_t n = 0;
  for (const auto& l : levels_) n += l.size();
  return n;
}

const AnchorVoxel* OctreeIndex::find(int level, const LatticeKey& key) const {
  if (level < 0 || level >= level_count()) return nullptr;
  const auto& l = levels_[static_cast<std::size_t>(level)];
  auto it = l.find(key);
  return it == l.end() ? nullptr : &it->second;
}

OctreeIndex build_index(const PointCloud& points, std::span<const Vec3> cameras,
                        const OctreeConfig& cfg, std::optional<int> populated_levels) {
  cfg.validate();
  const int k = compute_level_count(cameras, points);
  if (points.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::InvalidArgument, "too many points for the octree index");
  const int filled = std::clamp(populated_levels.value_or(k), 1, k);

  auto storage = std::make_shared<const std::vector<Vec3>>(points.points().begin(),
                                                           points.points().end());
  std::vector<OctreeIndex::Level> levels(static_cast<std::size_t>(k));
  const double eps = cfg.base_voxel_size;
  for (int l = 0; l < filled; ++l) {
    auto& level = levels[static_cast<std::size_t>(l)];
    for (std::uint32_t i = 0; i < storage->size(); ++i)
      voxel_at(level, lattice_key((*storage)[i], eps, l), l, eps).members.push_back(i);
    for (auto& [key, voxel] : level) refresh_anchors(voxel, *storage, cfg.anchors_per_voxel);
  }
  return {std::move(storage), cfg, std::move(levels)};
}

OctreeIndex adapt(const OctreeIndex& index, const OctreeConfig& cfg) {
  cfg.validate();
  const int k = index.level_count();
  const double eps = index.config().base_voxel_size;
  const auto points = index.points();

  std::vector<OctreeIndex::Level> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) out.push_back(index.level(l));

  // Growth is driven by the input index only; children spawned here do not
  // cascade further within this pass.
  for (int l = 0; l + 1 < k; ++l) {
    auto& finer = out[static_cast<std::size_t>(l + 1)];
    for (const auto& [key, voxel] : index.level(l)) {
      if (voxel.source_count() < cfg.expand_threshold) continue;
      for (std::uint32_t m : voxel.members) {
        auto& child = voxel_at(finer, lattice_key(points[m], eps, l + 1), l + 1, eps);
        auto pos = std::lower_bound(child.members.begin(), child.members.end(), m);
        if (pos == child.members.end() || *pos != m) child.members.insert(pos, m);
      }
    }
  }
  for (auto& level : out)
    for (auto& [key, voxel] : level) refresh_anchors(voxel, points, cfg.anchors_per_voxel);

  for (int l = k - 1; l >= 0; --l) {
    auto& level = out[static_cast<std::size_t>(l)];
    static const OctreeIndex::Level kNone;
    const auto& finer = l + 1 < k ? out[static_cast<std::size_t>(l + 1)] : kNone;
    std::erase_if(level, [&](const auto& entry) {
      const auto& voxel = entry.second;
      return voxel.source_count() <= cfg.contract_threshold &&
             !has_child(voxel, finer, points, eps);
    });
  }
  return {index.shared_points(), cfg, std::move(out)};
}

OctreeIndex filter(const OctreeIndex& index, const std::function<bool(const Vec3&)>& keep) {
  const auto points = index.points();
  std::vector<bool> kept(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) kept[i] = keep(points[i]);

  std::vector<OctreeIndex::Level> out;
  for (int l = 0; l < index.level_count(); ++l) {
    auto level = index.level(l);
    for (auto& [key, voxel] : level) {
      std::erase_if(voxel.members, [&](std::uint32_t m) { return !kept[m]; });
      refresh_anchors(voxel, points, index.config().anchors_per_voxel);
    }
    out.push_back(std::move(level));
  }
  return {index.shared_points(), index.config(), std::move(out)};
}

std::vector<AnchorVoxel> query_cumulative(const OctreeIndex& index, int max_level) {
  if (max_level < 0 || max_level >= index.level_count())
    throw Error(ErrorCode::LevelOutOfRange, "max level " + std::to_string(max_level) +
                                                " outside [0, " +
                                                std::to_string(index.level_count()) + ")");
  std::vector<AnchorVoxel> out;
  for (int l = 0; l <= max_level; ++l) {
    const auto& level = index.level(l);
    std::transform(level.begin(), level.end(), std::back_inserter(out),
                   [](const auto& entry) { return entry.second; });
  }
  return out;
}

}  // namespace occlabel

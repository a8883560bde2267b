#include "occlabel/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace occlabel {

void GridSpec::validate(std::uint64_t max_cells) const {
  if (!is_finite(origin)) throw Error(ErrorCode::InvalidSpec, "grid origin must be finite");
  if (!(voxel_size > 0) || !std::isfinite(voxel_size))
    throw Error(ErrorCode::InvalidSpec, "voxel size must be positive");
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
    throw Error(ErrorCode::InvalidSpec, "grid dims must be >= 1");
  if (cell_count() > max_cells)
    throw Error(ErrorCode::InvalidSpec, "grid has " + std::to_string(cell_count()) +
                                            " cells, cap is " + std::to_string(max_cells));
}

CellIndex GridSpec::unflat(std::size_t i) const {
  const auto nx = static_cast<std::size_t>(dims[0]);
  const auto ny = static_cast<std::size_t>(dims[1]);
  return {static_cast<std::int64_t>(i % nx), static_cast<std::int64_t>((i / nx) % ny),
          static_cast<std::int64_t>(i / (nx * ny))};
}

CellIndex GridSpec::cell_of(const Vec3& p) const {
  CellIndex c;
  for (int a = 0; a < 3; ++a) {
    const double q = std::floor((p[a] - origin[a]) / voxel_size);
    c[a] = static_cast<std::int64_t>(std::clamp(q, -0x1p62, 0x1p62));
  }
  return c;
}

Vec3 GridSpec::cell_min(const CellIndex& c) const {
  return origin + voxel_size * Vec3(static_cast<double>(c[0]), static_cast<double>(c[1]),
                                    static_cast<double>(c[2]));
}

Vec3 GridSpec::cell_center(const CellIndex& c) const {
  return origin + voxel_size * Vec3(static_cast<double>(c[0]) + 0.5,
                                    static_cast<double>(c[1]) + 0.5,
                                    static_cast<double>(c[2]) + 0.5);
}

VoxelGrid::VoxelGrid(const GridSpec& spec, CellState fill) : spec_(spec) {
  spec_.validate();
  states_.assign(spec_.cell_count(), fill);
}

VoxelGrid::VoxelGrid(const GridSpec& spec, std::vector<CellState> states)
    : spec_(spec), states_(std::move(states)) {
  spec_.validate();
  if (states_.size() != spec_.cell_count())
    throw Error(ErrorCode::InvalidSpec, "state array length does not match grid dims");
}

std::size_t VoxelGrid::count(CellState s) const {
  return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), s));
}

void trace_segment(const GridSpec& spec, const Vec3& a, const Vec3& b,
                   const std::function<bool(const CellIndex&)>& visit) {
  const Vec3 g0 = (a - spec.origin) / spec.voxel_size;
  const Vec3 g1 = (b - spec.origin) / spec.voxel_size;
  const Vec3 d = g1 - g0;

  // Clip t in [0, 1] against the grid box [0, n)^3.
  double t_enter = 0.0, t_exit = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    const double n = static_cast<double>(spec.dims[static_cast<std::size_t>(ax)]);
    if (d[ax] == 0.0) {
      if (g0[ax] < 0.0 || g0[ax] >= n) return;
      continue;
    }
    double ta = (0.0 - g0[ax]) / d[ax];
    double tb = (n - g0[ax]) / d[ax];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_exit = std::min(t_exit, tb);
  }
  if (t_enter > t_exit) return;

  CellIndex cell;
  std::array<int, 3> step{};
  std::array<double, 3> t_max{};
  for (int ax = 0; ax < 3; ++ax) {
    const auto n = static_cast<std::int64_t>(spec.dims[static_cast<std::size_t>(ax)]);
    const double p = t_enter == 0.0 ? g0[ax] : g0[ax] + t_enter * d[ax];
    cell[ax] = std::clamp(static_cast<std::int64_t>(std::floor(p)), std::int64_t{0}, n - 1);
    step[ax] = d[ax] > 0 ? 1 : (d[ax] < 0 ? -1 : 0);
  }
  auto next_crossing = [&](int ax) {
    if (step[ax] == 0) return std::numeric_limits<double>::infinity();
    const double boundary = static_cast<double>(cell[ax] + (step[ax] > 0 ? 1 : 0));
    return (boundary - g0[ax]) / d[ax];
  };
  for (int ax = 0; ax < 3; ++ax) t_max[ax] = next_crossing(ax);

  while (true) {
    if (!visit(cell)) return;
    int ax = 0;
    if (t_max[1] < t_max[ax]) ax = 1;
    if (t_max[2] < t_max[ax]) ax = 2;
    if (t_max[ax] > 1.0) return;
    cell[ax] += step[ax];
    if (!spec.contains(cell)) return;
    t_max[ax] = next_crossing(ax);
  }
}

}  // namespace occlabel

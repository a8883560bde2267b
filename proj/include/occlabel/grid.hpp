#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "occlabel/geom.hpp"

namespace occlabel {

enum class CellState : std::uint8_t { Free = 0, Occupied = 1, Unobserved = 2 };

using CellIndex = std::array<std::int64_t, 3>;

inline constexpr std::uint64_t kDefaultMaxCells = std::uint64_t{1} << 28;

struct GridSpec {
  Vec3 origin = Vec3::Zero();  // world position of the min corner of cell (0,0,0)
  double voxel_size = 1.0;
  std::array<std::uint32_t, 3> dims{1, 1, 1};

  void validate(std::uint64_t max_cells = kDefaultMaxCells) const;

  std::uint64_t cell_count() const {
    return std::uint64_t{dims[0]} * dims[1] * dims[2];
  }
  bool contains(const CellIndex& c) const {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < dims[0] && c[1] < dims[1] &&
           c[2] < dims[2];
  }
  /// x-fastest row-major flat index.
  std::size_t flat(const CellIndex& c) const {
    return static_cast<std::size_t>(c[0] + std::int64_t{dims[0]} * (c[1] + std::int64_t{dims[1]} * c[2]));
  }
  CellIndex unflat(std::size_t i) const;

  /// Unbounded cell coordinate floor((p - origin) / voxel_size).
  CellIndex cell_of(const Vec3& p) const;
  Vec3 cell_min(const CellIndex& c) const;
  Vec3 cell_center(const CellIndex& c) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(const GridSpec& spec, CellState fill);
  VoxelGrid(const GridSpec& spec, std::vector<CellState> states);

  const GridSpec& spec() const { return spec_; }
  std::span<const CellState> states() const { return states_; }
  CellState at(std::size_t flat) const { return states_[flat]; }
  CellState at(const CellIndex& c) const { return states_[spec_.flat(c)]; }
  void set(std::size_t flat, CellState s) { states_[flat] = s; }
  void set(const CellIndex& c, CellState s) { states_[spec_.flat(c)] = s; }

  std::size_t count(CellState s) const;

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  GridSpec spec_;
  std::vector<CellState> states_;
};

/// Amanatides-Woo traversal of the segment a->b through the grid, clipped to
/// the grid box. Calls `visit` with each in-grid cell in order until it
/// returns false or the segment ends. Exact boundary ties advance x, then y,
/// then z.
void trace_segment(const GridSpec& spec, const Vec3& a, const Vec3& b,
                   const std::function<bool(const CellIndex&)>& visit);

}  // namespace occlabel

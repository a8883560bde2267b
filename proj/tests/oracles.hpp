#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// tests. None of them calls into the library code under test.

#include <cfenv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "occlabel/geom.hpp"
#include "occlabel/grid.hpp"

namespace oracle {

using occlabel::CellIndex;
using occlabel::GridSpec;
using occlabel::PointCloud;
using occlabel::Vec3;

/// Round-half-even through the C library's current rounding mode.
inline double rint_even(double x) {
  std::fesetround(FE_TONEAREST);
  return std::nearbyint(x);
}

inline Vec3 quantize(const Vec3& p, double eps, int level) {
  const double s = eps / std::ldexp(1.0, level);
  return {rint_even(p.x() / s) * s, rint_even(p.y() / s) * s, rint_even(p.z() / s) * s};
}

/// Occupied cell set by per-point floor division.
inline std::set<CellIndex> occupied_cells(const PointCloud& cloud, const GridSpec& g) {
  std::set<CellIndex> out;
  for (const Vec3& p : cloud.points()) {
    CellIndex c;
    for (int a = 0; a < 3; ++a) c[a] = static_cast<std::int64_t>(std::floor((p[a] - g.origin[a]) / g.voxel_size));
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && c[a] >= 0 && c[a] < static_cast<std::int64_t>(g.dims[a]);
    if (inside) out.insert(c);
  }
  return out;
}

inline double nn_distance(const Vec3& p, const PointCloud& to) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& q : to.points()) best = std::min(best, (p - q).norm());
  return best;
}

/// Sum of the two directed mean nearest-neighbor distances, double loop.
inline double chamfer(const PointCloud& a, const PointCloud& b) {
  long double sa = 0, sb = 0;
  for (const Vec3& p : a.points()) sa += nn_distance(p, b);
  for (const Vec3& q : b.points()) sb += nn_distance(q, a);
  return static_cast<double>(sa / a.size() + sb / b.size());
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("occlabel_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle

#include "occlabel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "occlabel/rng.hpp"

namespace occlabel {

namespace {

// Streams for derive_seed so that each surface draws independently of how
// many points the others consumed.
constexpr std::uint64_t kGroundStream = 1;
constexpr std::uint64_t kBuildingStream = 1000;
constexpr std::uint64_t kDynamicStream = 1000000;

/// Planar rectangle corner + s*edge_u + t*edge_v, s, t in [0, 1].
struct Face {
  Vec3 corner, edge_u, edge_v, normal;

  double area() const { return edge_u.norm() * edge_v.norm(); }
  Vec3 center() const { return corner + 0.5 * (edge_u + edge_v); }
};

std::vector<Face> building_faces(const BuildingBox& b) {
  const Vec3 d = b.max - b.min;
  const Vec3 ex{d.x(), 0, 0}, ey{0, d.y(), 0}, ez{0, 0, d.z()};
  return {
      {b.min, ey, ez, -Vec3::UnitX()},
      {b.min + ex, ey, ez, Vec3::UnitX()},
      {b.min, ex, ez, -Vec3::UnitY()},
      {b.min + ey, ex, ez, Vec3::UnitY()},
      {b.min + ez, ex, ey, Vec3::UnitZ()},
  };
}

/// Shell faces in the box frame: four sides and the roof.
std::vector<Face> vehicle_faces_local(const Vec3& size) {
  const Vec3 h = 0.5 * size;
  const Vec3 lo = -h;
  const Vec3 ex{size.x(), 0, 0}, ey{0, size.y(), 0}, ez{0, 0, size.z()};
  return {
      {lo, ey, ez, -Vec3::UnitX()},
      {lo + ex, ey, ez, Vec3::UnitX()},
      {lo, ex, ez, -Vec3::UnitY()},
      {lo + ey, ex, ez, Vec3::UnitY()},
      {lo + ez, ex, ey, Vec3::UnitZ()},
  };
}

Face to_world(const Face& f, const Pose& pose) {
  const Mat3& r = pose.rotation();
  return {pose.apply(f.corner), r * f.edge_u, r * f.edge_v, r * f.normal};
}

std::size_t sample_count(double density, double area) {
  return static_cast<std::size_t>(std::llround(density * area));
}

Vec3 jitter(CounterRng& rng, double sigma) {
  if (sigma == 0.0) return Vec3::Zero();
  const double x = rng.normal(), y = rng.normal(), z = rng.normal();
  return sigma * Vec3(x, y, z);
}

void sample_face(const Face& f, double density, double sigma, CounterRng& rng, PointLabel label,
                 PointCloud& out) {
  const std::size_t n = sample_count(density, f.area());
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform(), t = rng.uniform();
    const Vec3 p = f.corner + s * f.edge_u + t * f.edge_v;
    out.add(p + jitter(rng, sigma), label);
  }
}

/// Closed separating-axis test between a planar rectangle and an axis-aligned
/// cube, then the half-open rule: the face must reach below each max face.
bool face_hits_cell(const Face& f, const Vec3& cell_lo, double size) {
  const Vec3 half_cell = Vec3::Constant(0.5 * size);
  const Vec3 cell_c = cell_lo + half_cell;
  const Vec3 hu = 0.5 * f.edge_u, hv = 0.5 * f.edge_v;
  const Vec3 rel = f.center() - cell_c;

  const auto separated = [&](const Vec3& axis) {
    const double len = axis.norm();
    if (len < 1e-12) return false;
    const double rect_r = std::abs(hu.dot(axis)) + std::abs(hv.dot(axis));
    const double box_r = half_cell.x() * std::abs(axis.x()) + half_cell.y() * std::abs(axis.y()) +
                         half_cell.z() * std::abs(axis.z());
    return std::abs(rel.dot(axis)) > rect_r + box_r;
  };

  for (int a = 0; a < 3; ++a)
    if (separated(Vec3::Unit(a))) return false;
  if (separated(f.edge_u.cross(f.edge_v))) return false;
  for (int a = 0; a < 3; ++a) {
    if (separated(Vec3::Unit(a).cross(f.edge_u))) return false;
    if (separated(Vec3::Unit(a).cross(f.edge_v))) return false;
  }
  for (int a = 0; a < 3; ++a) {
    const double face_min = f.center()[a] - std::abs(hu[a]) - std::abs(hv[a]);
    if (!(face_min < cell_lo[a] + size)) return false;
  }
  return true;
}

void rasterize_face(const Face& f, const GridSpec& spec, VoxelGrid& grid) {
  Vec3 lo = f.corner, hi = f.corner;
  for (const Vec3& p : {Vec3(f.corner + f.edge_u), Vec3(f.corner + f.edge_v),
                        Vec3(f.corner + f.edge_u + f.edge_v)}) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  CellIndex c0 = spec.cell_of(lo), c1 = spec.cell_of(hi);
  for (int a = 0; a < 3; ++a) {
    // One cell of slack absorbs rounding in the bounding box.
    c0[a] = std::max<std::int64_t>(c0[a] - 1, 0);
    c1[a] = std::min<std::int64_t>(c1[a] + 1, spec.dims[static_cast<std::size_t>(a)] - 1);
  }
  for (std::int64_t k = c0[2]; k <= c1[2]; ++k)
    for (std::int64_t j = c0[1]; j <= c1[1]; ++j)
      for (std::int64_t i = c0[0]; i <= c1[0]; ++i) {
        const CellIndex c{i, j, k};
        if (grid.at(c) == CellState::Occupied) continue;
        if (face_hits_cell(f, spec.cell_min(c), spec.voxel_size))
          grid.set(c, CellState::Occupied);
      }
}

constexpr double kGroundContactTolerance = 1e-9;  // meters

void rasterize_ground(const GroundSpec& g, const GridSpec& spec, VoxelGrid& grid) {
  const auto n = spec.dims;
  for (std::int64_t i = 0; i < n[0]; ++i) {
    const double x0 = spec.cell_min({i, 0, 0}).x();
    const double x1 = spec.cell_min({i + 1, 0, 0}).x();
    if (!(x0 <= g.x_max && g.x_min < x1)) continue;
    const double a = std::max(x0, g.x_min), b = std::min(x1, g.x_max);
    auto [h_lo, h_hi] = g.height_range(a, b);
    // A sloped strip that only grazes a z plane (an edge contact, or a sliver
    // left by rounding of the lattice planes) does not occupy the cell past it.
    if (h_hi - h_lo > 2 * kGroundContactTolerance) {
      h_lo += kGroundContactTolerance;
      h_hi -= kGroundContactTolerance;
    }
    for (std::int64_t j = 0; j < n[1]; ++j) {
      const double y0 = spec.cell_min({0, j, 0}).y();
      const double y1 = spec.cell_min({0, j + 1, 0}).y();
      if (!(y0 <= g.y_max && g.y_min < y1)) continue;
      // Same floor mapping as point quantization.
      const std::int64_t k_lo = spec.cell_of({0, 0, h_lo})[2];
      const std::int64_t k_hi = spec.cell_of({0, 0, h_hi})[2];
      for (std::int64_t k = std::max<std::int64_t>(k_lo, 0);
           k <= std::min<std::int64_t>(k_hi, n[2] - 1); ++k)
        grid.set(CellIndex{i, j, k}, CellState::Occupied);
    }
  }
}

using Cell = CellIndex;

Cell sample_cell(const Vec3& g0, const Vec3& d, double t) {
  const Vec3 p = g0 + t * d;
  return {static_cast<std::int64_t>(std::floor(p.x())), static_cast<std::int64_t>(std::floor(p.y())),
          static_cast<std::int64_t>(std::floor(p.z()))};
}

std::int64_t manhattan(const Cell& a, const Cell& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

/// Appends the cells crossed strictly after `ca` up to and including `cb`.
/// A straight segment is monotone per axis, so face-adjacent samples leave no
/// gap.
void cells_between(const Vec3& g0, const Vec3& d, double ta, const Cell& ca, double tb,
                   const Cell& cb, int depth, std::vector<Cell>& out) {
  if (ca == cb) return;
  if (manhattan(ca, cb) == 1) {
    out.push_back(cb);
    return;
  }
  if (depth == 0 || tb - ta <= 0x1p-60) {
    // Exact edge or corner crossing: step x, then y, then z.
    Cell c = ca;
    for (int a = 0; a < 3; ++a) {
      while (c[a] != cb[a]) {
        c[a] += cb[a] > c[a] ? 1 : -1;
        out.push_back(c);
      }
    }
    return;
  }
  const double tm = 0.5 * (ta + tb);
  const Cell cm = sample_cell(g0, d, tm);
  cells_between(g0, d, ta, ca, tm, cm, depth - 1, out);
  cells_between(g0, d, tm, cm, tb, cb, depth - 1, out);
}

}  // namespace

double GroundSpec::height(double x) const {
  switch (profile) {
    case GroundProfile::Flat: return base_height;
    case GroundProfile::Slope: return base_height + grade * x;
    case GroundProfile::Valley: return base_height + grade * std::abs(x - valley_x);
  }
  return base_height;
}

std::pair<double, double> GroundSpec::height_range(double x0, double x1) const {
  double lo = std::min(height(x0), height(x1));
  const double hi = std::max(height(x0), height(x1));
  if (profile == GroundProfile::Valley && x0 <= valley_x && valley_x <= x1)
    lo = std::min(lo, height(valley_x));
  return {lo, hi};
}

double GroundSpec::slope_at(double x) const {
  switch (profile) {
    case GroundProfile::Flat: return 0.0;
    case GroundProfile::Slope: return grade;
    case GroundProfile::Valley: return x < valley_x ? -grade : (x > valley_x ? grade : 0.0);
  }
  return 0.0;
}

void SceneSpec::validate() const {
  const auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (!(density > 0)) bad("density must be positive");
  if (frame_count < 1) bad("frame count must be positive");
  if (!(frame_dt > 0)) bad("frame dt must be positive");
  if (!(noise_sigma >= 0)) bad("noise sigma must be non-negative");
  if (!(camera_height > 0)) bad("camera height must be positive");
  if (!(ground.x_max > ground.x_min) || !(ground.y_max > ground.y_min)) bad("empty ground extent");
  if (rig_offsets.empty()) bad("camera rig needs at least one camera");
  for (const auto& b : buildings)
    if (!((b.max - b.min).minCoeff() > 0)) bad("building box must have positive extents");
  if (vehicle) {
    if (!((vehicle->size.minCoeff()) > 0)) bad("vehicle size must be positive");
    if (!(vehicle->duration >= 0)) bad("vehicle duration must be non-negative");
  }
}

PointCloud SyntheticScene::scene_cloud() const {
  PointCloud out = reconstruction.static_cloud;
  for (const auto& [frame, cloud] : reconstruction.dynamic_by_frame) out.append(cloud);
  return out;
}

std::optional<TrackedBox> SyntheticScene::box_at(std::int64_t frame_id) const {
  for (const auto& b : tracks)
    if (b.frame_id == frame_id) return b;
  return std::nullopt;
}

TrackedBox vehicle_box(const SceneSpec& spec, std::int64_t frame_id) {
  const VehicleSpec& v = spec.vehicle.value();
  const double t = static_cast<double>(frame_id) * spec.frame_dt;
  const double x = v.start.x() + v.speed * t * std::cos(v.yaw);
  const double y = v.start.y() + v.speed * t * std::sin(v.yaw);
  const Vec3 center{x, y, spec.ground.height(x) + 0.5 * v.size.z()};
  return TrackedBox::from_yaw(v.track_id, frame_id, center, v.size, v.yaw);
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  SyntheticScene scene;
  scene.spec = spec;

  for (int f = 0; f < spec.frame_count; ++f) {
    const double x = spec.ego_start_x + spec.ego_speed * f * spec.frame_dt;
    const Vec3 center{x, 0.0, spec.ground.height(x) + spec.camera_height};
    const Mat3 pitch = rotation_y(-std::atan(spec.ground.slope_at(x)));
    scene.cameras.push_back({f, Pose(pitch, center)});
  }

  PointCloud& cloud = scene.reconstruction.static_cloud;
  {
    const GroundSpec& g = spec.ground;
    CounterRng rng(derive_seed(spec.seed, kGroundStream));
    const std::size_t n = sample_count(spec.density, (g.x_max - g.x_min) * (g.y_max - g.y_min));
    cloud.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = rng.uniform(g.x_min, g.x_max);
      const double y = rng.uniform(g.y_min, g.y_max);
      cloud.add(Vec3(x, y, g.height(x)) + jitter(rng, spec.noise_sigma), {LabelKind::Ground, 0});
    }
  }
  for (std::size_t b = 0; b < spec.buildings.size(); ++b) {
    CounterRng rng(derive_seed(spec.seed, kBuildingStream + b));
    for (const Face& f : building_faces(spec.buildings[b]))
      sample_face(f, spec.density, spec.noise_sigma, rng, {LabelKind::Static, 0}, cloud);
  }

  if (spec.vehicle) {
    const VehicleSpec& v = *spec.vehicle;
    const Vec3 half = 0.5 * v.size;
    for (const auto& cam : scene.cameras) {
      if (static_cast<double>(cam.frame_id) * spec.frame_dt > v.duration + 1e-12) break;
      const TrackedBox box = vehicle_box(spec, cam.frame_id);
      scene.tracks.push_back(box);

      std::vector<Vec3> origins;
      for (const auto& off : spec.rig_offsets) origins.push_back(cam.pose.apply(off));

      CounterRng rng(derive_seed(spec.seed, kDynamicStream + static_cast<std::uint64_t>(cam.frame_id)));
      PointCloud local;
      for (const Face& f : vehicle_faces_local(v.size)) {
        const Face w = to_world(f, box.pose);
        const bool visible = std::any_of(origins.begin(), origins.end(), [&](const Vec3& o) {
          return w.normal.dot(o - w.center()) > 0;
        });
        if (visible)
          sample_face(f, spec.density, spec.noise_sigma, rng, PointLabel::dynamic(v.track_id), local);
      }
      PointCloud world;
      world.reserve(local.size());
      for (const auto& p : local.points())
        world.add(box.pose.apply(p.cwiseMax(-half).cwiseMin(half)), PointLabel::dynamic(v.track_id));
      scene.reconstruction.dynamic_by_frame.emplace(cam.frame_id, std::move(world));
    }
  }
  return scene;
}

VoxelGrid oracle_occupancy(const SyntheticScene& scene, const GridSpec& spec,
                           std::optional<std::int64_t> frame_id) {
  VoxelGrid grid(spec, CellState::Free);
  rasterize_ground(scene.spec.ground, spec, grid);
  for (const auto& b : scene.spec.buildings)
    for (const Face& f : building_faces(b)) rasterize_face(f, spec, grid);
  if (frame_id && scene.spec.vehicle) {
    if (auto box = scene.box_at(*frame_id))
      for (const Face& f : vehicle_faces_local(box->size))
        rasterize_face(to_world(f, box->pose), spec, grid);
  }
  return grid;
}

VoxelGrid oracle_raycast(const VoxelGrid& grid, std::span<const Vec3> origins, double step) {
  const GridSpec& spec = grid.spec();
  if (!(step > 0) || step > spec.voxel_size / 10.0)
    throw Error(ErrorCode::InvalidArgument, "oracle step must be in (0, voxel_size / 10]");
  const auto states = grid.states();
  std::vector<std::uint8_t> observed(states.size(), 0), crossed(states.size(), 0);

  std::vector<Cell> path;
  for (const Vec3& origin : origins) {
    for (std::size_t target = 0; target < states.size(); ++target) {
      if (states[target] != CellState::Occupied) continue;
      const Vec3 b = spec.cell_center(spec.unflat(target));
      const Vec3 g0 = (origin - spec.origin) / spec.voxel_size;
      const Vec3 d = (b - spec.origin) / spec.voxel_size - g0;
      const auto n = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::ceil((b - origin).norm() / step)));

      // Returns false once the first occupied cell is reached.
      const auto visit = [&](const Cell& c) {
        if (!spec.contains(c)) return true;
        const std::size_t f = spec.flat(c);
        if (states[f] == CellState::Occupied) {
          observed[f] = 1;
          return false;
        }
        crossed[f] = 1;
        return true;
      };

      Cell prev = sample_cell(g0, d, 0.0);
      if (!visit(prev)) continue;
      double t_prev = 0.0;
      bool done = false;
      for (std::int64_t s = 1; s <= n && !done; ++s) {
        const double t = s == n ? 1.0 : static_cast<double>(s) / static_cast<double>(n);
        const Cell cur = sample_cell(g0, d, t);
        if (cur != prev) {
          path.clear();
          cells_between(g0, d, t_prev, prev, t, cur, 64, path);
          for (const Cell& c : path) {
            if (!visit(c)) {
              done = true;
              break;
            }
          }
        }
        prev = cur;
        t_prev = t;
      }
    }
  }

  std::vector<CellState> out(states.size(), CellState::Unobserved);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == CellState::Occupied && observed[i]) out[i] = CellState::Occupied;
    else if (states[i] == CellState::Free && crossed[i]) out[i] = CellState::Free;
  }
  return {spec, std::move(out)};
}

}  // namespace occlabel

#include "occlabel/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "occlabel/io.hpp"

namespace occlabel {

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  curation.seed = s;
  scene.seed = s;
}

void PipelineConfig::validate() const {
  curation.validate();
  octree.validate();
  ground.validate();
  scene.validate();
  if (!(smoothness_radius > 0))
    throw Error(ErrorCode::InvalidArgument, "smoothness_radius_m must be positive");
}

namespace {

// ---- emitting --------------------------------------------------------------

std::string num(double v) { return fmt::format("{}", v); }

std::string vec(const Vec3& v) { return fmt::format("[{}, {}, {}]", v.x(), v.y(), v.z()); }

std::string vec_list(const std::vector<Vec3>& vs) {
  std::string s = "[";
  for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? ", " : "") + vec(vs[i]);
  return s + "]";
}

const char* shape_name(RangeShape s) { return s == RangeShape::Box ? "box" : "sphere"; }

const char* profile_name(GroundProfile p) {
  switch (p) {
    case GroundProfile::Flat: return "flat";
    case GroundProfile::Slope: return "slope";
    case GroundProfile::Valley: return "valley";
  }
  return "flat";
}

// ---- parsing ---------------------------------------------------------------

/// Reads keys from one YAML mapping and reports any it did not consume.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, const std::string& source)
      : node_(node), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsMap()) fail(path_.empty() ? "top level" : path_, "expected a mapping");
  }

  bool has(const std::string& key) {
    if (!node_ || !node_[key]) return false;
    used_.insert(key);
    return true;
  }

  YAML::Node raw(const std::string& key) { return node_[key]; }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorCode::InvalidArgument, source_ + ": " + key + ": " + what);
  }

  std::string scalar(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(key, "expected a scalar");
    return n.Scalar();
  }

  double to_double(const YAML::Node& n, const std::string& key) const {
    const std::string s = scalar(n, key);
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) fail(key, "bad number '" + s + "'");
    return v;
  }

  template <typename T>
  T to_int(const YAML::Node& n, const std::string& key) const {
    const std::string s = scalar(n, key);
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(key, "bad integer '" + s + "'");
    return v;
  }

  Vec3 to_vec(const YAML::Node& n, const std::string& key) const {
    if (!n.IsSequence() || n.size() != 3) fail(key, "expected [x, y, z]");
    return {to_double(n[0], key), to_double(n[1], key), to_double(n[2], key)};
  }

  void get(const std::string& key, double& out) {
    if (has(key)) out = to_double(node_[key], name(key));
  }
  template <typename T>
    requires std::is_integral_v<T> && (!std::is_same_v<T, bool>)
  void get(const std::string& key, T& out) {
    if (has(key)) out = to_int<T>(node_[key], name(key));
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string s = scalar(node_[key], name(key));
    if (s == "true") out = true;
    else if (s == "false") out = false;
    else fail(name(key), "expected true or false");
  }
  void get(const std::string& key, Vec3& out) {
    if (has(key)) out = to_vec(node_[key], name(key));
  }
  void get(const std::string& key, std::vector<Vec3>& out) {
    if (!has(key)) return;
    const YAML::Node n = node_[key];
    if (!n.IsSequence()) fail(name(key), "expected a list of [x, y, z]");
    out.clear();
    for (const auto& e : n) out.push_back(to_vec(e, name(key)));
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!used_.contains(k)) fail(name(k), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> used_;
};

}  // namespace

std::string serialize_config(const PipelineConfig& cfg) {
  const CurationConfig& c = cfg.curation;
  const SceneSpec& s = cfg.scene;
  std::string out;
  out += "# occlabel pipeline configuration (lengths in meters, angles in radians)\n";
  out += fmt::format("seed: {}\n", cfg.seed);

  out += "curation:\n";
  out += fmt::format("  range_m: {}\n", num(c.range));
  out += fmt::format("  range_shape: {}\n", shape_name(c.range_shape));
  out += fmt::format("  target_sweep_count: {}\n", c.target_count);
  out += fmt::format("  voxel_size_m: {}\n", num(c.voxel_size));
  out += fmt::format("  grid_dims: [{}, {}, {}]\n", c.grid_dims[0], c.grid_dims[1], c.grid_dims[2]);
  out += fmt::format("  grid_origin_m: {}\n", vec(c.grid_origin));
  out += fmt::format("  ego_centered: {}\n", c.ego_centered);
  out += fmt::format("  box_inflation: {}\n", num(c.box_inflation));
  out += fmt::format("  ego_box_min_m: {}\n", vec(c.ego_box_min));
  out += fmt::format("  ego_box_max_m: {}\n", vec(c.ego_box_max));
  out += fmt::format("  camera_union: {}\n", c.camera_union);
  out += fmt::format("  rig_offsets_m: {}\n", vec_list(c.rig_offsets));

  out += "octree:\n";
  out += fmt::format("  base_voxel_size_m: {}\n", num(cfg.octree.base_voxel_size));
  out += fmt::format("  anchors_per_voxel: {}\n", cfg.octree.anchors_per_voxel);
  out += fmt::format("  expand_threshold: {}\n", cfg.octree.expand_threshold);
  out += fmt::format("  contract_threshold: {}\n", cfg.octree.contract_threshold);

  out += "ground:\n";
  out += fmt::format("  grid_spacing_m: {}\n", num(cfg.ground.grid_spacing));
  out += fmt::format("  height_offset_m: {}\n", num(cfg.ground.height_offset));
  out += fmt::format("  extent_m: {}\n", num(cfg.ground.extent));
  out += fmt::format("  smoothness_radius_m: {}\n", num(cfg.smoothness_radius));

  out += "scene:\n";
  out += fmt::format("  profile: {}\n", profile_name(s.ground.profile));
  out += fmt::format("  grade: {}\n", num(s.ground.grade));
  out += fmt::format("  valley_x_m: {}\n", num(s.ground.valley_x));
  out += fmt::format("  base_height_m: {}\n", num(s.ground.base_height));
  out += fmt::format("  ground_x_range_m: [{}, {}]\n", num(s.ground.x_min), num(s.ground.x_max));
  out += fmt::format("  ground_y_range_m: [{}, {}]\n", num(s.ground.y_min), num(s.ground.y_max));
  out += "  buildings:\n";
  if (s.buildings.empty()) out.replace(out.size() - 1, 1, " []\n");
  for (const auto& b : s.buildings)
    out += fmt::format("    - {{min_m: {}, max_m: {}}}\n", vec(b.min), vec(b.max));
  if (s.vehicle) {
    const VehicleSpec& v = *s.vehicle;
    out += "  vehicle:\n";
    out += fmt::format("    track_id: {}\n", v.track_id);
    out += fmt::format("    start_m: {}\n", vec(v.start));
    out += fmt::format("    yaw_rad: {}\n", num(v.yaw));
    out += fmt::format("    speed_mps: {}\n", num(v.speed));
    out += fmt::format("    duration_s: {}\n", num(v.duration));
    out += fmt::format("    size_m: {}\n", vec(v.size));
  }
  out += fmt::format("  rig_offsets_m: {}\n", vec_list(s.rig_offsets));
  out += fmt::format("  frame_count: {}\n", s.frame_count);
  out += fmt::format("  frame_dt_s: {}\n", num(s.frame_dt));
  out += fmt::format("  ego_start_x_m: {}\n", num(s.ego_start_x));
  out += fmt::format("  ego_speed_mps: {}\n", num(s.ego_speed));
  out += fmt::format("  camera_height_m: {}\n", num(s.camera_height));
  out += fmt::format("  density_per_m2: {}\n", num(s.density));
  out += fmt::format("  noise_sigma_m: {}\n", num(s.noise_sigma));
  return out;
}

PipelineConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  PipelineConfig cfg;
  if (root.IsNull()) return cfg;

  Section top(root, "", source);
  std::uint64_t seed = 0;
  top.get("seed", seed);

  if (top.has("curation")) {
    Section sec(top.raw("curation"), "curation", source);
    CurationConfig& c = cfg.curation;
    sec.get("range_m", c.range);
    if (sec.has("range_shape")) {
      const std::string v = sec.scalar(sec.raw("range_shape"), sec.name("range_shape"));
      if (v == "sphere") c.range_shape = RangeShape::Sphere;
      else if (v == "box") c.range_shape = RangeShape::Box;
      else sec.fail(sec.name("range_shape"), "expected sphere or box");
    }
    sec.get("target_sweep_count", c.target_count);
    sec.get("voxel_size_m", c.voxel_size);
    if (sec.has("grid_dims")) {
      const YAML::Node n = sec.raw("grid_dims");
      if (!n.IsSequence() || n.size() != 3) sec.fail(sec.name("grid_dims"), "expected [nx, ny, nz]");
      for (std::size_t a = 0; a < 3; ++a) c.grid_dims[a] = sec.to_int<std::uint32_t>(n[a], sec.name("grid_dims"));
    }
    sec.get("grid_origin_m", c.grid_origin);
    sec.get("ego_centered", c.ego_centered);
    sec.get("box_inflation", c.box_inflation);
    sec.get("ego_box_min_m", c.ego_box_min);
    sec.get("ego_box_max_m", c.ego_box_max);
    sec.get("camera_union", c.camera_union);
    sec.get("rig_offsets_m", c.rig_offsets);
    sec.finish();
  }

  if (top.has("octree")) {
    Section sec(top.raw("octree"), "octree", source);
    sec.get("base_voxel_size_m", cfg.octree.base_voxel_size);
    sec.get("anchors_per_voxel", cfg.octree.anchors_per_voxel);
    sec.get("expand_threshold", cfg.octree.expand_threshold);
    sec.get("contract_threshold", cfg.octree.contract_threshold);
    sec.finish();
  }

  if (top.has("ground")) {
    Section sec(top.raw("ground"), "ground", source);
    sec.get("grid_spacing_m", cfg.ground.grid_spacing);
    sec.get("height_offset_m", cfg.ground.height_offset);
    sec.get("extent_m", cfg.ground.extent);
    sec.get("smoothness_radius_m", cfg.smoothness_radius);
    sec.finish();
  }

  if (top.has("scene")) {
    Section sec(top.raw("scene"), "scene", source);
    SceneSpec& s = cfg.scene;
    if (sec.has("profile")) {
      const std::string v = sec.scalar(sec.raw("profile"), sec.name("profile"));
      if (v == "flat") s.ground.profile = GroundProfile::Flat;
      else if (v == "slope") s.ground.profile = GroundProfile::Slope;
      else if (v == "valley") s.ground.profile = GroundProfile::Valley;
      else sec.fail(sec.name("profile"), "expected flat, slope or valley");
    }
    sec.get("grade", s.ground.grade);
    sec.get("valley_x_m", s.ground.valley_x);
    sec.get("base_height_m", s.ground.base_height);
    const auto range = [&](const std::string& key, double& lo, double& hi) {
      if (!sec.has(key)) return;
      const YAML::Node n = sec.raw(key);
      if (!n.IsSequence() || n.size() != 2) sec.fail(sec.name(key), "expected [min, max]");
      lo = sec.to_double(n[0], sec.name(key));
      hi = sec.to_double(n[1], sec.name(key));
    };
    range("ground_x_range_m", s.ground.x_min, s.ground.x_max);
    range("ground_y_range_m", s.ground.y_min, s.ground.y_max);
    if (sec.has("buildings")) {
      const YAML::Node n = sec.raw("buildings");
      if (!n.IsSequence()) sec.fail(sec.name("buildings"), "expected a list");
      s.buildings.clear();
      for (std::size_t i = 0; i < n.size(); ++i) {
        Section b(n[i], sec.name("buildings") + "[" + std::to_string(i) + "]", source);
        BuildingBox box;
        b.get("min_m", box.min);
        b.get("max_m", box.max);
        b.finish();
        s.buildings.push_back(box);
      }
    }
    if (sec.has("vehicle")) {
      const YAML::Node n = sec.raw("vehicle");
      if (n.IsNull()) {
        s.vehicle.reset();
      } else {
        Section v(n, sec.name("vehicle"), source);
        VehicleSpec veh;
        v.get("track_id", veh.track_id);
        v.get("start_m", veh.start);
        v.get("yaw_rad", veh.yaw);
        v.get("speed_mps", veh.speed);
        v.get("duration_s", veh.duration);
        v.get("size_m", veh.size);
        v.finish();
        s.vehicle = veh;
      }
    }
    sec.get("rig_offsets_m", s.rig_offsets);
    sec.get("frame_count", s.frame_count);
    sec.get("frame_dt_s", s.frame_dt);
    sec.get("ego_start_x_m", s.ego_start_x);
    sec.get("ego_speed_mps", s.ego_speed);
    sec.get("camera_height_m", s.camera_height);
    sec.get("density_per_m2", s.density);
    sec.get("noise_sigma_m", s.noise_sigma);
    sec.finish();
  }
  top.finish();

  cfg.set_seed(seed);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

void save_config(const PipelineConfig& cfg, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_config(cfg));
}

}  // namespace occlabel

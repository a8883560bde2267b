#include "occlabel/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "occlabel/log.hpp"

namespace occlabel {

namespace fs = std::filesystem;

namespace {

void emit_warning(const WarningSink& warn, const std::string& msg) {
  if (warn) warn(msg);
  else log().warn("{}", msg);
}

// ---- little-endian byte helpers -------------------------------------------

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename U>
U get_le(const char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

// ---- PLY ---------------------------------------------------------------------

enum class ScalarType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::optional<ScalarType> parse_scalar_type(std::string_view s) {
  static const std::map<std::string_view, ScalarType> kTypes{
      {"char", ScalarType::I8},    {"int8", ScalarType::I8},     {"uchar", ScalarType::U8},
      {"uint8", ScalarType::U8},   {"short", ScalarType::I16},   {"int16", ScalarType::I16},
      {"ushort", ScalarType::U16}, {"uint16", ScalarType::U16},  {"int", ScalarType::I32},
      {"int32", ScalarType::I32},  {"uint", ScalarType::U32},    {"uint32", ScalarType::U32},
      {"float", ScalarType::F32},  {"float32", ScalarType::F32}, {"double", ScalarType::F64},
      {"float64", ScalarType::F64}};
  auto it = kTypes.find(s);
  if (it == kTypes.end()) return std::nullopt;
  return it->second;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::I8:
    case ScalarType::U8: return 1;
    case ScalarType::I16:
    case ScalarType::U16: return 2;
    case ScalarType::I32:
    case ScalarType::U32:
    case ScalarType::F32: return 4;
    case ScalarType::F64: return 8;
  }
  return 0;
}

bool is_float(ScalarType t) { return t == ScalarType::F32 || t == ScalarType::F64; }

double decode_scalar(const char* p, ScalarType t) {
  switch (t) {
    case ScalarType::I8: return static_cast<std::int8_t>(p[0]);
    case ScalarType::U8: return static_cast<unsigned char>(p[0]);
    case ScalarType::I16: return static_cast<std::int16_t>(get_le<std::uint16_t>(p));
    case ScalarType::U16: return get_le<std::uint16_t>(p);
    case ScalarType::I32: return static_cast<std::int32_t>(get_le<std::uint32_t>(p));
    case ScalarType::U32: return get_le<std::uint32_t>(p);
    case ScalarType::F32: return std::bit_cast<float>(get_le<std::uint32_t>(p));
    case ScalarType::F64: return std::bit_cast<double>(get_le<std::uint64_t>(p));
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  ScalarType type = ScalarType::F32;
  bool is_list = false;
  ScalarType count_type = ScalarType::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::vector<PlyElement> elements;
  std::size_t data_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

PlyHeader parse_ply_header(std::string_view bytes, const std::string& src) {
  const auto malformed = [&](const std::string& what) {
    throw Error(ErrorCode::MalformedHeader, src + ": " + what);
  };
  PlyHeader h;
  std::size_t pos = 0;
  bool saw_format = false;
  int line_no = 0;
  while (true) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) malformed("missing end_header");
    std::string_view line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    const auto tok = split_ws(line);
    if (line_no == 1) {
      if (tok.size() != 1 || tok[0] != "ply") malformed("missing 'ply' magic");
      continue;
    }
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() != 3) malformed("bad format line");
      if (tok[1] == "ascii") h.encoding = PlyEncoding::Ascii;
      else if (tok[1] == "binary_little_endian") h.encoding = PlyEncoding::BinaryLittleEndian;
      else if (tok[1] == "binary_big_endian")
        throw Error(ErrorCode::UnsupportedFormat, src + ": big-endian PLY is not supported");
      else malformed("unknown format '" + std::string(tok[1]) + "'");
      if (tok[2] != "1.0") throw Error(ErrorCode::UnsupportedFormat, src + ": PLY version " + std::string(tok[2]));
      saw_format = true;
    } else if (tok[0] == "element") {
      std::size_t count = 0;
      if (tok.size() != 3 || !parse_number(tok[2], count)) malformed("bad element line " + std::to_string(line_no));
      h.elements.push_back({std::string(tok[1]), count, {}});
    } else if (tok[0] == "property") {
      if (h.elements.empty()) malformed("property before any element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = parse_scalar_type(tok[2]);
        auto it = parse_scalar_type(tok[3]);
        if (!ct || !it || is_float(*ct)) malformed("bad list property on line " + std::to_string(line_no));
        prop = {std::string(tok[4]), *it, true, *ct};
      } else if (tok.size() == 3) {
        auto t = parse_scalar_type(tok[1]);
        if (!t) malformed("unknown property type '" + std::string(tok[1]) + "'");
        prop = {std::string(tok[2]), *t, false, ScalarType::U8};
      } else {
        malformed("bad property line " + std::to_string(line_no));
      }
      h.elements.back().properties.push_back(prop);
    } else {
      malformed("unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!saw_format) malformed("missing format line");
  h.data_offset = pos;
  return h;
}

/// Cursor over the payload that yields one scalar at a time in either
/// encoding.
class PlyReader {
 public:
  PlyReader(std::string_view data, PlyEncoding enc, std::string src)
      : data_(data), enc_(enc), src_(std::move(src)) {}

  double next(ScalarType t) {
    if (enc_ == PlyEncoding::BinaryLittleEndian) {
      const std::size_t n = scalar_size(t);
      if (pos_ + n > data_.size()) truncated();
      const double v = decode_scalar(data_.data() + pos_, t);
      pos_ += n;
      return v;
    }
    const std::string_view tok = next_token();
    double v = 0.0;
    if (!parse_number(tok, v))
      throw Error(ErrorCode::ParseError, src_ + ": bad ascii value '" + std::string(tok) + "'");
    return v;
  }

  void skip_property(const PlyProperty& p) {
    if (!p.is_list) {
      next(p.type);
      return;
    }
    const double n = next(p.count_type);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) next(p.type);
  }

 private:
  [[noreturn]] void truncated() const {
    throw Error(ErrorCode::TruncatedPayload, src_ + ": payload ends before the declared element count");
  }

  std::string_view next_token() {
    while (pos_ < data_.size() && std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    if (pos_ >= data_.size()) truncated();
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    return data_.substr(start, pos_ - start);
  }

  std::string_view data_;
  PlyEncoding enc_;
  std::string src_;
  std::size_t pos_ = 0;
};

std::string ply_header(PlyEncoding enc, std::size_t count, bool labels) {
  std::string h = "ply\n";
  h += enc == PlyEncoding::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  h += "comment occlabel point cloud, world frame z-up, meters\n";
  h += fmt::format("element vertex {}\n", count);
  h += "property double x\nproperty double y\nproperty double z\n";
  if (labels) h += "property uchar label\nproperty uint track_id\n";
  h += "end_header\n";
  return h;
}

// ---- text records --------------------------------------------------------

template <typename Fn>
void for_each_record(const fs::path& path, Fn&& fn) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    fn(tok, path.string() + ":" + std::to_string(line_no));
  }
}

template <typename T>
T field(std::string_view tok, const std::string& where, const char* name) {
  T v{};
  if (!parse_number(tok, v))
    throw Error(ErrorCode::ParseError, where + ": bad " + name + " '" + std::string(tok) + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, where + ": non-finite " + name);
  return v;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

PointCloud read_ply(const fs::path& path, const WarningSink& warn) {
  const std::string src = path.string();
  const std::string bytes = read_file(path);
  const PlyHeader h = parse_ply_header(bytes, src);
  PlyReader reader(std::string_view(bytes).substr(h.data_offset), h.encoding, src);

  PointCloud cloud;
  bool found = false;
  for (const auto& el : h.elements) {
    if (el.name != "vertex") {
      for (std::size_t i = 0; i < el.count; ++i)
        for (const auto& p : el.properties) reader.skip_property(p);
      continue;
    }
    if (found) throw Error(ErrorCode::MalformedHeader, src + ": duplicate vertex element");
    found = true;

    enum Slot { X, Y, Z, Label, Track, Skip };
    std::vector<Slot> slots;
    std::set<std::string> seen;
    for (const auto& p : el.properties) {
      Slot s = Skip;
      if (p.name == "x") s = X;
      else if (p.name == "y") s = Y;
      else if (p.name == "z") s = Z;
      else if (p.name == "label") s = Label;
      else if (p.name == "track_id") s = Track;
      if (s != Skip && p.is_list)
        throw Error(ErrorCode::MalformedHeader, src + ": property '" + p.name + "' cannot be a list");
      if (s <= Z && !is_float(p.type))
        throw Error(ErrorCode::UnsupportedFormat, src + ": coordinate '" + p.name + "' must be float or double");
      if ((s == Label || s == Track) && is_float(p.type))
        throw Error(ErrorCode::UnsupportedFormat, src + ": property '" + p.name + "' must be an integer");
      if (s != Skip && !seen.insert(p.name).second)
        throw Error(ErrorCode::MalformedHeader, src + ": duplicate property '" + p.name + "'");
      if (s == Skip) emit_warning(warn, src + ": skipping vertex property '" + p.name + "'");
      slots.push_back(s);
    }
    if (!seen.contains("x") || !seen.contains("y") || !seen.contains("z"))
      throw Error(ErrorCode::MalformedHeader, src + ": vertex element lacks x, y or z");
    const bool labeled = seen.contains("label");

    cloud.reserve(el.count);
    for (std::size_t i = 0; i < el.count; ++i) {
      Vec3 p = Vec3::Zero();
      double label = 0.0, track = 0.0;
      for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto& prop = el.properties[k];
        switch (slots[k]) {
          case X: p.x() = reader.next(prop.type); break;
          case Y: p.y() = reader.next(prop.type); break;
          case Z: p.z() = reader.next(prop.type); break;
          case Label: label = reader.next(prop.type); break;
          case Track: track = reader.next(prop.type); break;
          case Skip: reader.skip_property(prop); break;
        }
      }
      if (!is_finite(p))
        throw Error(ErrorCode::ParseError, src + ": vertex " + std::to_string(i) + " is not finite");
      if (labeled) {
        if (label < 0 || label > static_cast<double>(LabelKind::Sky))
          throw Error(ErrorCode::ParseError, src + ": vertex " + std::to_string(i) +
                                                 " has unknown label " + std::to_string(label));
        if (track < 0 || track > 4294967295.0)
          throw Error(ErrorCode::ParseError, src + ": vertex " + std::to_string(i) + " has bad track_id");
        cloud.add(p, {static_cast<LabelKind>(static_cast<int>(label)), static_cast<std::uint32_t>(track)});
      } else {
        cloud.add(p);
      }
    }
  }
  if (!found) throw Error(ErrorCode::MalformedHeader, src + ": no vertex element");
  return cloud;
}

void write_ply(const PointCloud& cloud, const fs::path& path, PlyEncoding encoding) {
  const bool labels = cloud.has_labels();
  std::string out = ply_header(encoding, cloud.size(), labels);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.point(i);
    const PointLabel l = cloud.label(i);
    if (encoding == PlyEncoding::Ascii) {
      out += fmt::format("{} {} {}", p.x(), p.y(), p.z());
      if (labels) out += fmt::format(" {} {}", static_cast<int>(l.kind), l.track_id);
      out += '\n';
    } else {
      put_f64(out, p.x());
      put_f64(out, p.y());
      put_f64(out, p.z());
      if (labels) {
        out.push_back(static_cast<char>(l.kind));
        put_le(out, l.track_id);
      }
    }
  }
  write_file_atomic(path, out);
}

void write_surfels_ply(std::span<const Surfel> surfels, const fs::path& path) {
  std::string out = "ply\nformat binary_little_endian 1.0\n";
  out += "comment occlabel ground surfels, world frame z-up, meters\n";
  out += fmt::format("element vertex {}\n", surfels.size());
  for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "radius"})
    out += fmt::format("property double {}\n", n);
  out += "end_header\n";
  for (const auto& s : surfels) {
    for (int a = 0; a < 3; ++a) put_f64(out, s.center[a]);
    for (int a = 0; a < 3; ++a) put_f64(out, s.normal[a]);
    put_f64(out, s.radius);
  }
  write_file_atomic(path, out);
}

std::string encode_ocv(const VoxelGrid& grid) {
  const GridSpec& s = grid.spec();
  std::string out = "OCV1";
  out.reserve(4 + 12 + 32 + grid.states().size());
  for (auto d : s.dims) put_le<std::uint32_t>(out, d);
  for (int a = 0; a < 3; ++a) put_f64(out, s.origin[a]);
  put_f64(out, s.voxel_size);
  for (CellState c : grid.states()) out.push_back(static_cast<char>(c));
  return out;
}

VoxelGrid decode_ocv(std::string_view bytes, const std::string& source) {
  constexpr std::size_t kHeader = 4 + 12 + 32;
  if (bytes.size() < 4 || bytes.substr(0, 4) != "OCV1")
    throw Error(ErrorCode::MalformedHeader, source + ": missing OCV1 magic");
  if (bytes.size() < kHeader)
    throw Error(ErrorCode::TruncatedPayload, source + ": header is truncated");
  GridSpec spec;
  for (std::size_t a = 0; a < 3; ++a) spec.dims[a] = get_le<std::uint32_t>(bytes.data() + 4 + 4 * a);
  for (int a = 0; a < 3; ++a)
    spec.origin[a] = std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + 16 + 8 * a));
  spec.voxel_size = std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + 40));
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedHeader, source + ": " + e.what());
  }
  const std::uint64_t n = spec.cell_count();
  if (bytes.size() - kHeader < n)
    throw Error(ErrorCode::TruncatedPayload, source + ": expected " + std::to_string(n) + " cells");
  if (bytes.size() - kHeader > n)
    throw Error(ErrorCode::MalformedHeader, source + ": trailing bytes after the cell array");
  std::vector<CellState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<unsigned char>(bytes[kHeader + i]);
    if (v > 2)
      throw Error(ErrorCode::MalformedHeader,
                  source + ": cell " + std::to_string(i) + " has state " + std::to_string(v));
    states[i] = static_cast<CellState>(v);
  }
  return {spec, std::move(states)};
}

void write_ocv(const VoxelGrid& grid, const fs::path& path) {
  write_file_atomic(path, encode_ocv(grid));
}

VoxelGrid read_ocv(const fs::path& path) { return decode_ocv(read_file(path), path.string()); }

Mat3 sanitize_rotation(const Mat3& r, const std::string& where, const WarningSink& warn) {
  const double err = orthonormality_error(r);
  if (!r.allFinite() || err > 1e-4 || r.determinant() <= 0)
    throw Error(ErrorCode::NonRigidRotation,
                where + ": rotation is not rigid (max|R^T R - I| = " + fmt::format("{:.3g}", err) + ")");
  if (err <= 1e-12) return r;
  emit_warning(warn, where + ": rotation re-orthonormalized (deviation " + fmt::format("{:.3g}", err) + ")");
  return nearest_rotation(r);
}

std::vector<CameraFrame> read_poses(const fs::path& path, const WarningSink& warn) {
  std::vector<CameraFrame> frames;
  std::set<std::int64_t> ids;
  for_each_record(path, [&](const std::vector<std::string_view>& tok, const std::string& where) {
    if (tok.size() != 13)
      throw Error(ErrorCode::ParseError, where + ": expected 13 fields, got " + std::to_string(tok.size()));
    const auto id = field<std::int64_t>(tok[0], where, "frame_id");
    Vec3 t;
    for (int a = 0; a < 3; ++a) t[a] = field<double>(tok[1 + static_cast<std::size_t>(a)], where, "translation");
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = field<double>(tok[4 + static_cast<std::size_t>(3 * i + j)], where, "rotation");
    if (!ids.insert(id).second)
      throw Error(ErrorCode::ParseError, where + ": duplicate frame_id " + std::to_string(id));
    frames.push_back({id, Pose(sanitize_rotation(r, where, warn), t)});
  });
  return frames;
}

void write_poses(std::span<const CameraFrame> frames, const fs::path& path) {
  std::string out = "# frame_id tx ty tz r00 r01 r02 r10 r11 r12 r20 r21 r22 (camera-to-world, z-up, meters)\n";
  for (const auto& f : frames) {
    const Vec3& t = f.pose.translation();
    const Mat3& r = f.pose.rotation();
    out += fmt::format("{} {} {} {}", f.frame_id, t.x(), t.y(), t.z());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out += fmt::format(" {}", r(i, j));
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<TrackedBox> read_tracks(const fs::path& path) {
  std::vector<TrackedBox> boxes;
  std::set<std::pair<std::uint32_t, std::int64_t>> ids;
  for_each_record(path, [&](const std::vector<std::string_view>& tok, const std::string& where) {
    if (tok.size() != 9)
      throw Error(ErrorCode::ParseError, where + ": expected 9 fields, got " + std::to_string(tok.size()));
    const auto track = field<std::uint32_t>(tok[0], where, "track_id");
    const auto frame = field<std::int64_t>(tok[1], where, "frame_id");
    const Vec3 c{field<double>(tok[2], where, "cx"), field<double>(tok[3], where, "cy"),
                 field<double>(tok[4], where, "cz")};
    const Vec3 size{field<double>(tok[5], where, "l"), field<double>(tok[6], where, "w"),
                    field<double>(tok[7], where, "h")};
    const double yaw = field<double>(tok[8], where, "yaw");
    if (!(size.minCoeff() > 0)) throw Error(ErrorCode::ParseError, where + ": box extents must be positive");
    if (!ids.insert({track, frame}).second)
      throw Error(ErrorCode::ParseError, where + ": duplicate (track_id, frame_id)");
    boxes.push_back(TrackedBox::from_yaw(track, frame, c, size, yaw));
  });
  return boxes;
}

void write_tracks(std::span<const TrackedBox> boxes, const fs::path& path) {
  std::string out = "# track_id frame_id cx cy cz l w h yaw (box-to-world, yaw in radians about +z)\n";
  for (const auto& b : boxes) {
    const Vec3& c = b.pose.translation();
    const double yaw = std::atan2(b.pose.rotation()(1, 0), b.pose.rotation()(0, 0));
    out += fmt::format("{} {} {} {} {} {} {} {} {}\n", b.track_id, b.frame_id, c.x(), c.y(), c.z(),
                       b.size.x(), b.size.y(), b.size.z(), yaw);
  }
  write_file_atomic(path, out);
}

}  // namespace occlabel

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "occlabel/dynamic.hpp"
#include "occlabel/geom.hpp"
#include "occlabel/grid.hpp"
#include "occlabel/ground.hpp"

namespace occlabel {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Receives non-fatal diagnostics (skipped properties, re-orthonormalized
/// rotations). Defaults to the library logger.
using WarningSink = std::function<void(const std::string&)>;

/// Reads vertex x, y, z (float or double) plus optional `uchar label` and
/// `uint track_id`. Other properties and elements are skipped.
PointCloud read_ply(const std::filesystem::path& path, const WarningSink& warn = {});

/// Writes double x, y, z and, when the cloud has labels, uchar label and uint
/// track_id. The file is written to a temporary and renamed into place.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

/// Binary little-endian PLY with x, y, z, nx, ny, nz, radius (double).
void write_surfels_ply(std::span<const Surfel> surfels, const std::filesystem::path& path);

/// OCV1: "OCV1", u32 nx ny nz, f64 origin xyz, f64 voxel_size, then one byte
/// per cell (x fastest). All little-endian.
void write_ocv(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid read_ocv(const std::filesystem::path& path);
std::string encode_ocv(const VoxelGrid& grid);
VoxelGrid decode_ocv(std::string_view bytes, const std::string& source = "<memory>");

/// `frame_id tx ty tz r00 r01 r02 r10 r11 r12 r20 r21 r22` per line. Blank lines
/// and lines starting with '#' are ignored.
std::vector<CameraFrame> read_poses(const std::filesystem::path& path, const WarningSink& warn = {});
void write_poses(std::span<const CameraFrame> frames, const std::filesystem::path& path);

/// `track_id frame_id cx cy cz l w h yaw` per line, yaw in radians about +z.
std::vector<TrackedBox> read_tracks(const std::filesystem::path& path);
void write_tracks(std::span<const TrackedBox> boxes, const std::filesystem::path& path);

/// Validates a parsed rotation: beyond 1e-4 of orthonormal (or a reflection)
/// is NonRigidRotation; otherwise projected to the nearest rotation.
Mat3 sanitize_rotation(const Mat3& r, const std::string& where, const WarningSink& warn);

/// Writes `bytes` to `path` via a sibling temporary and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace occlabel

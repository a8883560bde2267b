#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "occlabel/curation.hpp"
#include "occlabel/ground.hpp"
#include "occlabel/octree.hpp"
#include "occlabel/synth.hpp"

namespace occlabel {

/// Everything a pipeline run depends on. The single `seed` drives every
/// random draw: it is mirrored into `curation.seed` and `scene.seed`.
struct PipelineConfig {
  std::uint64_t seed = 0;
  CurationConfig curation;
  OctreeConfig octree;
  GroundSeedConfig ground;
  double smoothness_radius = 0.75;  // meters, neighbor radius for road_smoothness
  SceneSpec scene;                  // used by `synth`

  void set_seed(std::uint64_t s);
  void validate() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// YAML text. Doubles are written in shortest round-trip form, so
/// parse_config(serialize_config(c)) == c.
std::string serialize_config(const PipelineConfig& cfg);

/// Missing keys keep their defaults; unknown keys are an InvalidArgument.
/// `source` names the file in error messages.
PipelineConfig parse_config(const std::string& text, const std::string& source = "<config>");

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& cfg, const std::filesystem::path& path);

}  // namespace occlabel

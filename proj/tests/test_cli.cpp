#include <gtest/gtest.h>

#include <sstream>

#include "occlabel/cli.hpp"
#include "occlabel/config.hpp"
#include "occlabel/io.hpp"
#include "occlabel/synth.hpp"
#include "oracles.hpp"

using namespace occlabel;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

// A scene small enough to synthesize and curate in well under a second.
fs::path small_config(const fs::path& dir) {
  PipelineConfig c;
  c.curation.voxel_size = 0.5;
  c.curation.grid_dims = {32, 32, 10};
  c.curation.grid_origin = {-8, -8, -2.6};
  c.curation.range = 10;
  c.scene.ground.x_min = -12;
  c.scene.ground.x_max = 16;
  c.scene.ground.y_min = -8;
  c.scene.ground.y_max = 8;
  c.scene.ground.base_height = 0.13;
  c.scene.buildings = {{{2.3, 3.1, 0}, {5.7, 6.2, 4.1}}};
  VehicleSpec v;
  v.start = {-5.1, -2.7, 0};
  c.scene.vehicle = v;
  c.scene.frame_count = 3;
  c.scene.density = 20;
  c.set_seed(11);
  save_config(c, dir / "cfg.yaml");
  return dir / "cfg.yaml";
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (auto eq = line.find('='); eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  return kv;
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path());
  return files;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  const CliRun r = run({"synth", "--out", "/tmp/x", "--no-such-flag"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("--no-such-flag"), std::string::npos);
  EXPECT_NE(r.err.find("--out"), std::string::npos);
  EXPECT_EQ(run({"curate", "--out", "/tmp/x", "--input", "/definitely/not/here"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, SynthCurateEvalPipeline) {
  const fs::path dir = oracle::temp_dir("cli_pipeline");
  const fs::path cfg = small_config(dir);
  ASSERT_EQ(run({"synth", "--config", cfg.string(), "--out", (dir / "scene").string()}).code, kExitOk);
  for (const char* f : {"scene.ply", "poses.txt", "tracks.txt", "gt_0.ocv", "gt_2.ocv", "dynamic_1.ply",
                        "ground_surfels.ply", "config.yaml"})
    EXPECT_TRUE(fs::exists(dir / "scene" / f)) << f;

  const CliRun cur = run({"curate", "--config", cfg.string(), "--input", (dir / "scene").string(), "--out",
                       (dir / "occ").string()});
  ASSERT_EQ(cur.code, kExitOk) << cur.err;
  for (int f = 0; f < 3; ++f) EXPECT_TRUE(fs::exists(dir / "occ" / ("occ_" + std::to_string(f) + ".ocv")));
  EXPECT_EQ(load_config(dir / "occ" / "config.yaml"), load_config(cfg));

  const CliRun ev = run({"eval", "--pred", (dir / "occ" / "occ_1.ocv").string(), "--gt",
                      (dir / "scene" / "gt_1.ocv").string(), "--mask-from-pred", "--out",
                      (dir / "metrics").string()});
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  const auto kv = key_values(ev.out);
  ASSERT_TRUE(kv.count("iou"));
  EXPECT_GE(std::stod(kv.at("iou")), 0.9);
  EXPECT_EQ(read_file(dir / "metrics" / "metrics.txt"), ev.out);

  const CliRun self = run({"eval", "--pred-cloud", (dir / "scene" / "scene.ply").string(), "--gt-cloud",
                        (dir / "scene" / "scene.ply").string()});
  ASSERT_EQ(self.code, kExitOk) << self.err;
  EXPECT_EQ(key_values(self.out).at("chamfer"), "0");
}

TEST(Cli, OtherSubcommandsWriteTheirOutputs) {
  const fs::path dir = oracle::temp_dir("cli_other");
  const fs::path cfg = small_config(dir);
  ASSERT_EQ(run({"synth", "--config", cfg.string(), "--out", (dir / "scene").string()}).code, kExitOk);
  const std::string in = (dir / "scene").string();
  ASSERT_EQ(run({"divide", "--config", cfg.string(), "--input", in, "--out", (dir / "d").string(), "--frame",
                 "2"})
                .code,
            kExitOk);
  EXPECT_TRUE(fs::exists(dir / "d" / "sweep_2.ply"));
  EXPECT_FALSE(fs::exists(dir / "d" / "sweep_0.ply"));
  ASSERT_EQ(run({"aggregate", "--config", cfg.string(), "--input", in, "--out", (dir / "a").string()}).code,
            kExitOk);
  EXPECT_GT(read_ply(dir / "a" / "track_1.ply").size(), 0u);
  ASSERT_EQ(run({"octree-dump", "--config", cfg.string(), "--input", in, "--out", (dir / "o").string()}).code,
            kExitOk);
  EXPECT_FALSE(read_file(dir / "o" / "octree.txt").empty());
}

TEST(Cli, MismatchedGridsExitTwo) {
  const fs::path dir = oracle::temp_dir("cli_mismatch");
  write_ocv(VoxelGrid({Vec3::Zero(), 0.5, {4, 4, 4}}, CellState::Free), dir / "a.ocv");
  write_ocv(VoxelGrid({Vec3::Zero(), 0.5, {4, 4, 5}}, CellState::Free), dir / "b.ocv");
  const CliRun r = run({"eval", "--pred", (dir / "a.ocv").string(), "--gt", (dir / "b.ocv").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("SpecMismatch"), std::string::npos) << r.err;
}

TEST(Cli, CorruptInputExitsTwo) {
  const fs::path dir = oracle::temp_dir("cli_corrupt");
  fs::create_directories(dir / "in");
  write_file_atomic(dir / "in" / "scene.ply", "ply\nformat binary_big_endian 1.0\nend_header\n");
  write_file_atomic(dir / "in" / "poses.txt", "0 0 0 0 1 0 0 0 1 0 0 0 1\n");
  const CliRun r = run({"curate", "--input", (dir / "in").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("UnsupportedFormat"), std::string::npos) << r.err;
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path dir = oracle::temp_dir("cli_repeat");
  const fs::path cfg = small_config(dir);
  for (const char* tag : {"1", "2"}) {
    const std::string s = (dir / (std::string("scene") + tag)).string();
    ASSERT_EQ(run({"synth", "--config", cfg.string(), "--out", s}).code, kExitOk);
    ASSERT_EQ(run({"curate", "--config", cfg.string(), "--input", s, "--out",
                   (dir / (std::string("occ") + tag)).string()})
                  .code,
              kExitOk);
  }
  EXPECT_EQ(dir_bytes(dir / "scene1"), dir_bytes(dir / "scene2"));
  EXPECT_EQ(dir_bytes(dir / "occ1"), dir_bytes(dir / "occ2"));

  ASSERT_EQ(run({"synth", "--config", cfg.string(), "--seed", "12", "--out", (dir / "scene3").string()}).code,
            kExitOk);
  EXPECT_NE(read_file(dir / "scene3" / "scene.ply"), read_file(dir / "scene1" / "scene.ply"));
  EXPECT_EQ(load_config(dir / "scene3" / "config.yaml").scene.seed, 12u);
}

#include <gtest/gtest.h>

#include <random>

#include "occlabel/config.hpp"
#include "oracles.hpp"

using namespace occlabel;

namespace {

PipelineConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 50.0);
  std::uniform_real_distribution<double> s(-50.0, 50.0);
  std::uniform_int_distribution<int> small(1, 40);
  const auto vec = [&] { return Vec3{s(rng), s(rng), s(rng)}; };

  PipelineConfig c;
  c.curation.range = u(rng);
  c.curation.range_shape = small(rng) % 2 ? RangeShape::Box : RangeShape::Sphere;
  c.curation.target_count = static_cast<std::size_t>(small(rng)) * 1000;
  c.curation.voxel_size = u(rng) / 50.0;
  c.curation.grid_dims = {static_cast<std::uint32_t>(small(rng)), static_cast<std::uint32_t>(small(rng)),
                          static_cast<std::uint32_t>(small(rng))};
  c.curation.grid_origin = vec();
  c.curation.ego_centered = small(rng) % 2 == 0;
  c.curation.box_inflation = 1.0 + u(rng) / 100.0;
  c.curation.ego_box_min = vec();
  c.curation.ego_box_max = vec();
  c.curation.camera_union = small(rng) % 2 == 0;
  c.curation.rig_offsets = {vec(), vec()};
  c.octree.base_voxel_size = u(rng);
  c.octree.anchors_per_voxel = static_cast<std::size_t>(small(rng));
  c.octree.expand_threshold = 40 + static_cast<std::size_t>(small(rng)) * 10;
  c.octree.contract_threshold = static_cast<std::size_t>(small(rng));
  c.ground.grid_spacing = u(rng) / 10.0;
  c.ground.height_offset = u(rng) / 10.0;
  c.ground.extent = u(rng);
  c.smoothness_radius = u(rng) / 10.0;
  c.scene.ground.profile = static_cast<GroundProfile>(small(rng) % 3);
  c.scene.ground.grade = s(rng) / 100.0;
  c.scene.ground.valley_x = s(rng);
  c.scene.ground.base_height = s(rng) / 10.0;
  c.scene.ground.x_min = -u(rng);
  c.scene.ground.x_max = u(rng);
  c.scene.ground.y_min = -u(rng);
  c.scene.ground.y_max = u(rng);
  for (int b = 0; b < small(rng) % 4; ++b) {
    const Vec3 lo = vec();
    c.scene.buildings.push_back({lo, lo + Vec3{u(rng), u(rng), u(rng)}});
  }
  if (small(rng) % 3) {
    VehicleSpec v;
    v.track_id = static_cast<std::uint32_t>(small(rng));
    v.start = Vec3{s(rng), s(rng), 0.0};
    v.yaw = s(rng) / 10.0;
    v.speed = u(rng);
    v.duration = u(rng);
    v.size = Vec3{u(rng), u(rng), u(rng)} / 10.0;
    c.scene.vehicle = v;
  }
  c.scene.rig_offsets = {vec()};
  c.scene.frame_count = small(rng);
  c.scene.frame_dt = u(rng) / 100.0;
  c.scene.ego_start_x = s(rng);
  c.scene.ego_speed = u(rng);
  c.scene.camera_height = u(rng) / 10.0;
  c.scene.density = u(rng);
  c.scene.noise_sigma = u(rng) / 1000.0;
  c.set_seed(rng());
  return c;
}

}  // namespace

TEST(Config, DefaultRoundTrip) {
  const PipelineConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, RandomRoundTripsAreExact) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const PipelineConfig c = random_config(rng);
    const std::string text = serialize_config(c);
    const PipelineConfig back = parse_config(text);
    ASSERT_EQ(back, c) << text;
    EXPECT_EQ(serialize_config(back), text);
  }
}

TEST(Config, AwkwardDoublesSurvive) {
  PipelineConfig c;
  c.curation.grid_origin = {0.1 + 0.2, -1e-300, 5e-324};
  c.scene.ground.grade = 1.0 / 3.0;
  c.set_seed(~std::uint64_t{0});
  const PipelineConfig back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.curation.seed, ~std::uint64_t{0});
}

TEST(Config, MissingKeysKeepDefaults) {
  const PipelineConfig c = parse_config("seed: 9\ncuration:\n  voxel_size_m: 0.25\n");
  PipelineConfig want;
  want.curation.voxel_size = 0.25;
  want.set_seed(9);
  EXPECT_EQ(c, want);
  EXPECT_EQ(c.scene.seed, 9u);
  EXPECT_EQ(parse_config(""), PipelineConfig{});
}

TEST(Config, VehicleCanBeRemoved) {
  PipelineConfig c;
  c.scene.vehicle = VehicleSpec{};
  ASSERT_TRUE(parse_config(serialize_config(c)).scene.vehicle);
  EXPECT_FALSE(parse_config("scene:\n  vehicle: null\n").scene.vehicle);
}

TEST(Config, UnknownKeyNamesItsPath) {
  try {
    parse_config("curation:\n  voxel_sise_m: 0.2\n", "my.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    EXPECT_NE(std::string(e.what()).find("my.yaml"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("curation.voxel_sise_m"), std::string::npos);
  }
  EXPECT_THROW(parse_config("bogus: 1\n"), Error);
}

TEST(Config, BadValuesAreRejected) {
  EXPECT_THROW(parse_config("curation:\n  voxel_size_m: fast\n"), Error);
  EXPECT_THROW(parse_config("curation:\n  voxel_size_m: -0.4\n"), Error);
  EXPECT_THROW(parse_config("curation:\n  range_shape: cone\n"), Error);
  EXPECT_THROW(parse_config("curation:\n  grid_dims: [1, 2]\n"), Error);
  EXPECT_THROW(parse_config("seed: -3\n"), Error);
  try {
    parse_config("curation: [\n", "broken.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(Config, SaveAndLoadFile) {
  const auto dir = oracle::temp_dir("config");
  std::mt19937_64 rng(78);
  const PipelineConfig c = random_config(rng);
  save_config(c, dir / "c.yaml");
  EXPECT_EQ(load_config(dir / "c.yaml"), c);
  EXPECT_THROW(load_config(dir / "absent.yaml"), Error);
}

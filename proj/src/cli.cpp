#include "occlabel/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "occlabel/config.hpp"
#include "occlabel/curation.hpp"
#include "occlabel/dynamic.hpp"
#include "occlabel/ground.hpp"
#include "occlabel/io.hpp"
#include "occlabel/log.hpp"
#include "occlabel/metrics.hpp"
#include "occlabel/octree.hpp"
#include "occlabel/rng.hpp"
#include "occlabel/synth.hpp"

namespace occlabel {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string input;
};

void add_common(CLI::App* cmd, Common& c, bool needs_input) {
  cmd->add_option("--config", c.config, "YAML configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Seed overriding the configuration");
  cmd->add_option("--out", c.out, "Output directory")->required();
  if (needs_input)
    cmd->add_option("--input", c.input, "Directory with scene.ply, dynamic_<frame>.ply, poses.txt, tracks.txt")
        ->required()
        ->check(CLI::ExistingDirectory);
}

PipelineConfig resolve_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  return cfg;
}

fs::path prepare_out(const Common& c) {
  const fs::path out = c.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());
  return out;
}

struct Inputs {
  ReconstructedScene scene;
  std::vector<CameraFrame> cameras;
  std::vector<TrackedBox> tracks;
};

Inputs load_inputs(const fs::path& dir) {
  Inputs in;
  in.scene.static_cloud = read_ply(dir / "scene.ply");
  const std::regex dyn(R"(dynamic_(-?\d+)\.ply)");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::smatch m;
    const std::string name = p.filename().string();
    if (std::regex_match(name, m, dyn)) in.scene.dynamic_by_frame[std::stoll(m[1].str())] = read_ply(p);
  }
  in.cameras = read_poses(dir / "poses.txt");
  if (fs::exists(dir / "tracks.txt")) in.tracks = read_tracks(dir / "tracks.txt");
  log().info("loaded {} static points, {} dynamic frames, {} cameras, {} boxes from {}",
             in.scene.static_cloud.size(), in.scene.dynamic_by_frame.size(), in.cameras.size(),
             in.tracks.size(), dir.string());
  return in;
}

PointCloud full_cloud(const ReconstructedScene& s) {
  PointCloud out = s.static_cloud;
  for (const auto& [f, c] : s.dynamic_by_frame) out.append(c);
  return out;
}

std::string ocv_name(std::int64_t frame) { return fmt::format("occ_{}.ocv", frame); }

// ---- subcommands -------------------------------------------------------------

void run_synth(const Common& c) {
  const PipelineConfig cfg = resolve_config(c);
  const fs::path out = prepare_out(c);
  const SyntheticScene scene = generate_scene(cfg.scene);

  write_ply(scene.reconstruction.static_cloud, out / "scene.ply");
  for (const auto& [frame, cloud] : scene.reconstruction.dynamic_by_frame)
    write_ply(cloud, out / fmt::format("dynamic_{}.ply", frame));
  write_poses(scene.cameras, out / "poses.txt");
  write_tracks(scene.tracks, out / "tracks.txt");
  for (const auto& cam : scene.cameras) {
    const GridSpec spec = frame_grid_spec(cfg.curation, cam);
    write_ocv(oracle_occupancy(scene, spec, cam.frame_id), out / fmt::format("gt_{}.ocv", cam.frame_id));
  }
  const auto surfels = seed_ground(scene.cameras, cfg.ground);
  write_surfels_ply(surfels, out / "ground_surfels.ply");
  save_config(cfg, out / "config.yaml");
  log().info("synth: {} static points, {} frames, {} surfels -> {}", scene.reconstruction.static_cloud.size(),
             scene.cameras.size(), surfels.size(), out.string());
}

void run_divide(const Common& c, const std::vector<std::int64_t>& frames) {
  const PipelineConfig cfg = resolve_config(c);
  const Inputs in = load_inputs(c.input);
  const fs::path out = prepare_out(c);
  const PointCloud scene = full_cloud(in.scene);
  for (const auto& cam : in.cameras) {
    if (!frames.empty() && std::find(frames.begin(), frames.end(), cam.frame_id) == frames.end()) continue;
    const FrameSweep sweep =
        divide_frame(scene, cam, cfg.curation.range, cfg.curation.target_count,
                     derive_seed(cfg.seed, static_cast<std::uint64_t>(cam.frame_id)),
                     cfg.curation.range_shape, cfg.curation.rig_offsets);
    if (sweep.empty) log().warn("divide: frame {} has no points within range", cam.frame_id);
    write_ply(sweep.points, out / fmt::format("sweep_{}.ply", cam.frame_id));
  }
}

void run_aggregate(const Common& c) {
  const PipelineConfig cfg = resolve_config(c);
  const Inputs in = load_inputs(c.input);
  const fs::path out = prepare_out(c);
  const auto canon = aggregate_tracks(in.scene, in.tracks, cfg.curation.box_inflation);
  for (const auto& [track, cloud] : canon) {
    write_ply(cloud, out / fmt::format("track_{}.ply", track));
    log().info("aggregate: track {} has {} canonical points", track, cloud.size());
  }
}

void run_curate(const Common& c) {
  const PipelineConfig cfg = resolve_config(c);
  const Inputs in = load_inputs(c.input);
  const fs::path out = prepare_out(c);
  const auto grids = curate_sequence(in.scene, in.cameras, in.tracks, cfg.curation);
  for (const auto& g : grids) write_ocv(g.grid, out / ocv_name(g.frame_id));
  save_config(cfg, out / "config.yaml");
  log().info("curate: wrote {} grids to {}", grids.size(), out.string());
}

struct EvalArgs {
  std::string pred, gt, pred_cloud, gt_cloud;
  bool mask_from_pred = false;
};

void run_eval(const EvalArgs& a, const std::string& out_dir, std::ostream& out) {
  std::string report;
  if (!a.pred.empty() || !a.gt.empty()) {
    if (a.pred.empty() || a.gt.empty())
      throw Error(ErrorCode::InvalidArgument, "eval: --pred and --gt must be given together");
    const VoxelGrid pred = read_ocv(a.pred);
    VoxelGrid gt = read_ocv(a.gt);
    if (!(pred.spec() == gt.spec()))
      throw Error(ErrorCode::SpecMismatch, "eval: grid spec of " + a.pred + " differs from " + a.gt);
    if (a.mask_from_pred) gt = restrict_to_observed(gt, pred);
    const VoxelScores s = voxel_metrics(pred, gt);
    report += fmt::format("iou={}\nf1={}\nprecision={}\nrecall={}\ntp={}\nfp={}\nfn={}\ntn={}\n", s.iou, s.f1,
                          s.precision, s.recall, s.confusion.tp, s.confusion.fp, s.confusion.fn, s.confusion.tn);
  }
  if (!a.pred_cloud.empty() || !a.gt_cloud.empty()) {
    if (a.pred_cloud.empty() || a.gt_cloud.empty())
      throw Error(ErrorCode::InvalidArgument, "eval: --pred-cloud and --gt-cloud must be given together");
    report += fmt::format("chamfer={}\n", chamfer(read_ply(a.pred_cloud), read_ply(a.gt_cloud)));
  }
  if (report.empty()) throw Error(ErrorCode::InvalidArgument, "eval: nothing to evaluate");
  out << report;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "metrics.txt", report);
  }
}

void run_octree_dump(const Common& c, std::optional<int> max_level, std::optional<int> populated) {
  const PipelineConfig cfg = resolve_config(c);
  const Inputs in = load_inputs(c.input);
  const fs::path out = prepare_out(c);
  std::vector<Vec3> centers;
  for (const auto& cam : in.cameras) centers.push_back(cam.camera_center());
  const OctreeIndex index = adapt(build_index(full_cloud(in.scene), centers, cfg.octree, populated), cfg.octree);
  const int cap = max_level.value_or(index.level_count() - 1);
  const auto voxels = query_cumulative(index, cap);
  std::string text = fmt::format("# levels {} base_voxel_size_m {} voxels {}\n", index.level_count(),
                                 cfg.octree.base_voxel_size, voxels.size());
  text += "# level kx ky kz cx cy cz source_count anchor_count\n";
  for (const auto& v : voxels)
    text += fmt::format("{} {} {} {} {} {} {} {} {}\n", v.level, v.key.x, v.key.y, v.key.z, v.center.x(),
                        v.center.y(), v.center.z(), v.source_count(), v.anchor_points.size());
  write_file_atomic(out / "octree.txt", text);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"occlabel: occupancy label curation from reconstructed scenes", "occlabel"};
  app.require_subcommand(1);

  Common synth_c, divide_c, agg_c, curate_c, dump_c;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with ground-truth grids");
  add_common(synth, synth_c, false);

  std::vector<std::int64_t> divide_frames;
  auto* divide = app.add_subcommand("divide", "Write per-frame sweeps sliced from the scene");
  add_common(divide, divide_c, true);
  divide->add_option("--frame", divide_frames, "Only these frame ids");

  auto* aggregate = app.add_subcommand("aggregate", "Write canonical per-track clouds");
  add_common(aggregate, agg_c, true);

  auto* curate = app.add_subcommand("curate", "Write per-frame OCV1 occupancy grids");
  add_common(curate, curate_c, true);

  EvalArgs eval_a;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Score a predicted grid or cloud against ground truth");
  eval->add_option("--pred", eval_a.pred, "Predicted OCV1 grid")->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_a.gt, "Ground-truth OCV1 grid")->check(CLI::ExistingFile);
  eval->add_flag("--mask-from-pred", eval_a.mask_from_pred,
                 "Treat gt cells unobserved in the prediction as unobserved");
  eval->add_option("--pred-cloud", eval_a.pred_cloud, "Predicted PLY cloud")->check(CLI::ExistingFile);
  eval->add_option("--gt-cloud", eval_a.gt_cloud, "Ground-truth PLY cloud")->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Directory for metrics.txt");

  std::optional<int> max_level, populated;
  auto* dump = app.add_subcommand("octree-dump", "Write the adapted anchor octree as text");
  add_common(dump, dump_c, true);
  dump->add_option("--max-level", max_level, "Cumulative level cap");
  dump->add_option("--populated-levels", populated, "Build only the coarsest N levels before adapting");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  try {
    if (*synth) run_synth(synth_c);
    else if (*divide) run_divide(divide_c, divide_frames);
    else if (*aggregate) run_aggregate(agg_c);
    else if (*curate) run_curate(curate_c);
    else if (*eval) run_eval(eval_a, eval_out, out);
    else if (*dump) run_octree_dump(dump_c, max_level, populated);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace occlabel

// Command-line front end: simulate synthetic egocentric scenes, reconstruct
// world-space hand motion from them, evaluate against ground truth, and
// plot trajectories.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "egohand/io.hpp"
#include "egohand/pipeline.hpp"
#include "plot.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace egohand;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct ConfigFile {
  ordered_json root = ordered_json::object();

  static ConfigFile load(const std::string& path) {
    ConfigFile cfg;
    if (path.empty()) return cfg;
    try {
      cfg.root = ordered_json::parse(read_text(path));
    } catch (const IoError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return cfg;
  }

  ordered_json section(const char* name) const {
    return root.contains(name) ? root.at(name) : ordered_json::object();
  }
};

SceneSpec scene_spec_from_config(const ConfigFile& cfg) {
  const ordered_json sec = cfg.section("scene");
  return scene_spec_from_json(sec.dump());
}

PipelineOptions pipeline_options_from_config(const ConfigFile& cfg) {
  PipelineOptions opts;
  const ordered_json solver = cfg.section("solver");
  if (solver.contains("ba_max_iterations"))
    opts.ba_opts.max_iterations = solver.at("ba_max_iterations");
  if (solver.contains("ba_damping"))
    opts.ba_opts.damping = solver.at("ba_damping");

  const ordered_json scale = cfg.section("scale");
  if (scale.contains("gm_width")) opts.scale_opts.gm_width = scale.at("gm_width");
  if (scale.contains("d_min")) opts.bounds.d_min = scale.at("d_min");
  if (scale.contains("d_max")) opts.bounds.d_max = scale.at("d_max");

  const ordered_json inf = cfg.section("infiller");
  if (inf.contains("steps")) opts.train.steps = inf.at("steps");
  if (inf.contains("lr_init")) opts.train.lr_init = inf.at("lr_init");
  if (inf.contains("seed")) opts.train.seed = inf.at("seed");
  if (inf.contains("batch_size")) opts.train.batch_size = inf.at("batch_size");
  if (inf.contains("motion_count"))
    opts.train_motion_count = inf.at("motion_count");
  if (inf.contains("motion_frames"))
    opts.train_motion_frames = inf.at("motion_frames");
  if (inf.contains("mode"))
    opts.infill = infill_mode_from_name(inf.at("mode"));
  return opts;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed, std::optional<int> frames,
                 std::optional<double> fps) {
  SceneSpec spec = scene_spec_from_config(ConfigFile::load(config_path));
  if (seed) spec.seed = *seed;
  if (frames) spec.frames = *frames;
  if (fps) spec.fps = *fps;

  const SceneBundle bundle = generate(spec);
  fs::create_directories(out_dir);
  save_scene(bundle, out_dir);

  std::size_t n_obs = 0, n_dyn = 0;
  for (const auto& tr : bundle.tracks) {
    n_obs += tr.observations.size();
    if (tr.is_dynamic) n_dyn += tr.observations.size();
  }
  std::printf("scene written to %s\n", out_dir.c_str());
  std::printf("  seed=%llu frames=%d fps=%g alpha_true=%g\n",
              (unsigned long long)spec.seed, spec.frames, spec.fps,
              spec.alpha_true);
  std::printf("  tracks=%zu observations=%zu dynamic_obs=%zu\n",
              bundle.tracks.size(), n_obs, n_dyn);
  return kExitOk;
}

int run_reconstruct(const std::string& config_path, const std::string& scene_dir,
                    const std::string& out_dir, bool no_mask, bool no_adasm,
                    const std::string& infill, const std::string& model_path) {
  PipelineOptions opts =
      pipeline_options_from_config(ConfigFile::load(config_path));
  if (no_mask) opts.use_mask = false;
  if (no_adasm) opts.use_adasm = false;
  if (!infill.empty()) opts.infill = infill_mode_from_name(infill);
  fs::create_directories(out_dir);
  opts.infill_model_path =
      model_path.empty() ? (fs::path(out_dir) / "infiller.bin").string()
                         : model_path;

  const SceneBundle scene = load_scene(scene_dir);
  PipelineResult res;
  try {
    res = reconstruct(scene, opts);
  } catch (const Error& e) {
    std::fprintf(stderr, "reconstruction failed: %s\n", e.what());
    return kExitNumerical;
  }

  write_tum(fs::path(out_dir) / "cams_est.tum", res.est_cams);
  write_motion(fs::path(out_dir) / "hand_world_est.jsonl", res.hand_world,
               scene.hand_template);
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g\n", res.alpha);
    write_text_atomic(fs::path(out_dir) / "alpha.txt", buf);
  }

  std::printf("reconstruction written to %s\n", out_dir.c_str());
  std::printf("  alpha=%.6g ba_iters=%d ba_rms=%.3g px infill=%s gaps=%d\n",
              res.alpha, res.ba.iterations, res.ba.final_rms_residual,
              infill_mode_name(opts.infill), res.gaps.total_gap_frames());
  return kExitOk;
}

JointsSeq fk_sequence(const HandTemplate& tmpl, const MotionSequence& seq) {
  JointsSeq out(seq.size());
  for (int t = 0; t < seq.size(); ++t) {
    out[t] = forward_kinematics(tmpl, seq.states[t]);
  }
  return out;
}

PointSeq roots_of(const MotionSequence& seq) {
  PointSeq out;
  out.reserve(seq.size());
  for (const auto& s : seq.states) out.push_back(s.gamma);
  return out;
}

MetricReport evaluate_dirs(const std::string& results_dir,
                           const std::string& scene_dir) {
  HandTemplate tmpl;
  const MotionSequence gt_world =
      read_motion(fs::path(scene_dir) / "hand_world.jsonl", &tmpl);
  const MotionSequence est_world =
      read_motion(fs::path(results_dir) / "hand_world_est.jsonl");
  const CameraTrajectory gt_cams =
      read_tum(fs::path(scene_dir) / "cams_gt.tum");
  const CameraTrajectory est_cams =
      read_tum(fs::path(results_dir) / "cams_est.tum");
  const double alpha =
      std::stod(read_text(fs::path(results_dir) / "alpha.txt"));

  if (gt_world.size() != est_world.size() ||
      gt_cams.size() != est_cams.size()) {
    throw IoError("eval: sequence length mismatch between results and scene");
  }

  const JointsSeq gt_j = fk_sequence(tmpl, gt_world);
  const JointsSeq est_j = fk_sequence(tmpl, est_world);

  MetricReport r;
  r.pa_mpjpe = pa_mpjpe(est_j, gt_j);
  r.auc = auc_pck(est_j, gt_j);
  r.w_mpjpe = w_mpjpe(est_j, gt_j);
  r.wa_mpjpe = wa_mpjpe(est_j, gt_j);
  r.rte = rte(roots_of(est_world), roots_of(gt_world));
  r.accel = accel_error(est_j, gt_j, gt_world.fps);
  r.ate = ate(est_cams, gt_cams);
  r.ate_s = ate_s(est_cams, gt_cams, alpha);
  r.fid = fid(states_to_samples(est_world.states),
              states_to_samples(gt_world.states));
  return r;
}

int run_eval(const std::string& results_dir, const std::string& scene_dir,
             std::string out_dir) {
  if (out_dir.empty()) out_dir = results_dir;
  const MetricReport r = evaluate_dirs(results_dir, scene_dir);
  fs::create_directories(out_dir);
  write_report(fs::path(out_dir) / "report.txt",
               fs::path(out_dir) / "report.json", r);
  std::printf("pa_mpjpe %.6g mm\nauc %.6g\nw_mpjpe %.6g mm\nwa_mpjpe %.6g mm\n"
              "rte %.6g %%\naccel %.6g m/s^2\nate %.6g mm\nate_s %.6g mm\n"
              "fid %.6g\n",
              r.pa_mpjpe, r.auc, r.w_mpjpe, r.wa_mpjpe, r.rte, r.accel, r.ate,
              r.ate_s, r.fid);
  return kExitOk;
}

int run_plot(const std::string& results_dir, const std::string& scene_dir,
             const std::string& out_dir) {
  const MotionSequence gt_world =
      read_motion(fs::path(scene_dir) / "hand_world.jsonl");
  const MotionSequence est_world =
      read_motion(fs::path(results_dir) / "hand_world_est.jsonl");
  const CameraTrajectory gt_cams =
      read_tum(fs::path(scene_dir) / "cams_gt.tum");
  const CameraTrajectory est_cams =
      read_tum(fs::path(results_dir) / "cams_est.tum");

  PointSeq gt_cam_pos, est_cam_pos;
  for (const auto& p : gt_cams.poses) gt_cam_pos.push_back(p.t);
  for (const auto& p : est_cams.poses) est_cam_pos.push_back(p.t);

  // Similarity-align the estimate for display.
  const SimilarityTransform map =
      umeyama_align(est_cam_pos, gt_cam_pos, /*with_scale=*/true);
  for (auto& p : est_cam_pos) p = map.apply(p);

  fs::create_directories(out_dir);
  const auto paths = plots::write_trajectory_plots(
      out_dir, gt_cam_pos, est_cam_pos, roots_of(gt_world),
      roots_of(est_world));
  std::printf("wrote %s and %s\n", paths.csv.c_str(), paths.svg.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"World-space hand motion reconstruction over synthetic "
               "egocentric scenes"};
  app.require_subcommand(1);

  std::string config_path, out_dir, scene_dir, results_dir;
  std::string infill, model_path;
  bool no_mask = false, no_adasm = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::optional<double> fps;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scene");
  sim->add_option("--config", config_path, "JSON config file");
  sim->add_option("--out", out_dir, "Output scene directory")->required();
  sim->add_option("--seed", seed, "Override scene seed");
  sim->add_option("--frames", frames, "Override frame count");
  sim->add_option("--fps", fps, "Override frame rate");

  auto* rec = app.add_subcommand("reconstruct", "Run the full pipeline");
  rec->add_option("--config", config_path, "JSON config file");
  rec->add_option("--scene", scene_dir, "Scene directory")->required();
  rec->add_option("--out", results_dir, "Results directory")->required();
  rec->add_flag("--no-mask", no_mask, "Disable hand-region masking in BA");
  rec->add_flag("--no-adasm", no_adasm, "Disable depth-band sampling");
  rec->add_option("--infill", infill,
                  "Infill mode: none|lastpose|lerp|transformer");
  rec->add_option("--infill-model", model_path, "Infiller checkpoint path");

  auto* eval = app.add_subcommand("eval", "Evaluate results against GT");
  eval->add_option("--results", results_dir, "Results directory")->required();
  eval->add_option("--scene", scene_dir, "Scene directory")->required();
  eval->add_option("--out", out_dir, "Report directory (default: results)");

  auto* plot = app.add_subcommand("plot", "Trajectory CSV + SVG figures");
  plot->add_option("--results", results_dir, "Results directory")->required();
  plot->add_option("--scene", scene_dir, "Scene directory")->required();
  plot->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      return run_simulate(config_path, out_dir, seed, frames, fps);
    }
    if (rec->parsed()) {
      return run_reconstruct(config_path, scene_dir, results_dir, no_mask,
                             no_adasm, infill, model_path);
    }
    if (eval->parsed()) {
      return run_eval(results_dir, scene_dir, out_dir);
    }
    if (plot->parsed()) {
      return run_plot(results_dir, scene_dir, out_dir);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}

#include "egohand/pipeline.hpp"

#include <filesystem>

namespace egohand {

InfillMode infill_mode_from_name(const std::string& name) {
  if (name == "none") return InfillMode::None;
  if (name == "lastpose") return InfillMode::LastPose;
  if (name == "lerp") return InfillMode::Lerp;
  if (name == "transformer") return InfillMode::Transformer;
  throw ConfigError("unknown infill mode: " + name);
}

const char* infill_mode_name(InfillMode mode) {
  switch (mode) {
    case InfillMode::None: return "none";
    case InfillMode::LastPose: return "lastpose";
    case InfillMode::Lerp: return "lerp";
    default: return "transformer";
  }
}

namespace {

// Masks rendered from the camera-frame hand estimates the pipeline actually
// receives (not the simulator GT masks).
std::vector<Mask> render_pipeline_masks(const SceneBundle& scene,
                                        double radius_px) {
  const int T = scene.gt_hand_camera.size();
  std::vector<Mask> masks(T);
  const auto bones = scene.hand_template.bones();
  for (int t = 0; t < T; ++t) {
    if (!scene.gt_hand_camera.is_visible(t)) {
      masks[t] = Mask(scene.intrinsics.width, scene.intrinsics.height, 0);
      continue;
    }
    const Joints3d j3 = forward_kinematics(scene.hand_template,
                                           scene.gt_hand_camera.states[t]);
    Joints2d j2;
    std::array<bool, kNumJoints> valid{};
    for (int j = 0; j < kNumJoints; ++j) {
      if (j3.j[j].z() > 1e-6) {
        j2.j[j] = project(scene.intrinsics, j3.j[j]);
        valid[j] = true;
      }
    }
    masks[t] =
        render_hand_mask(scene.intrinsics, j2, radius_px, bones, &valid);
  }
  return masks;
}

InfillerModel obtain_model(const PipelineOptions& opts) {
  if (!opts.infill_model_path.empty() &&
      std::filesystem::exists(opts.infill_model_path)) {
    return load_checkpoint(opts.infill_model_path);
  }
  const auto motions = sample_canonical_motions(
      opts.train.seed + 1, opts.train_motion_count, opts.train_motion_frames);
  InfillerModel model = train_infiller(motions, InfillLossWeights{}, opts.train);
  if (!opts.infill_model_path.empty()) {
    save_checkpoint(model, opts.infill_model_path);
  }
  return model;
}

}  // namespace

PipelineResult reconstruct(const SceneBundle& scene,
                           const PipelineOptions& opts) {
  PipelineResult res;

  // 1) Camera trajectory from masked bundle adjustment.
  const std::vector<Mask> masks =
      render_pipeline_masks(scene, opts.mask_radius_px);
  BAProblem problem;
  problem.tracks =
      opts.use_mask ? mask_confidences(scene.tracks, masks) : scene.tracks;
  problem.intrinsics = scene.intrinsics;
  problem.init_poses = scene.init_cams.poses;
  problem.init_inverse_depths = scene.init_inverse_depths;
  res.ba = solve_ba(problem, opts.ba_opts);
  res.est_cams = res.ba.poses;
  for (int t = 0; t < res.est_cams.size(); ++t) {
    res.est_cams.timestamps[t] = scene.init_cams.timestamps[t];
  }

  // 2) Metric scale from depth alignment.
  std::vector<DepthFrame> frames = scene.depth_frames;
  for (std::size_t t = 0; t < frames.size() && t < masks.size(); ++t) {
    frames[t].hand_mask = masks[t];
  }
  const DepthBounds bounds =
      opts.use_adasm ? opts.bounds : DepthBounds{0.0, 1e30};
  res.scale = estimate_scale(frames, bounds, opts.scale_opts);
  res.alpha = res.scale.alpha;

  // 3) Hand motion: canonicalize against the metric estimated cameras,
  // fill frustum gaps, compose back to world.
  const CameraTrajectory metric_cams = apply_scale(res.est_cams, res.alpha);
  const CanonicalResult cano =
      camera_to_canonical(scene.gt_hand_camera, metric_cams);
  res.gaps = detect_gaps(cano.sequence);

  switch (opts.infill) {
    case InfillMode::None:
      res.hand_canonical = cano.sequence;
      break;
    case InfillMode::LastPose:
      res.hand_canonical = last_pose_fill(cano.sequence, res.gaps);
      break;
    case InfillMode::Lerp:
      res.hand_canonical = interpolate_init(cano.sequence, res.gaps);
      break;
    case InfillMode::Transformer: {
      const InfillerModel model = obtain_model(opts);
      const MotionSequence init = interpolate_init(cano.sequence, res.gaps);
      res.hand_canonical = infill_refine(model, init, res.gaps);
      break;
    }
  }
  res.hand_world = canonical_to_world(res.hand_canonical, cano.cano_to_world);
  return res;
}

}  // namespace egohand

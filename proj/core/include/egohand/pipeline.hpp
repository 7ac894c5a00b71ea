#pragma once

#include <string>

#include "egohand/ba.hpp"
#include "egohand/canonical.hpp"
#include "egohand/infill.hpp"
#include "egohand/scale.hpp"
#include "egohand/sim.hpp"
#include "egohand/world.hpp"

namespace egohand {

enum class InfillMode { None, LastPose, Lerp, Transformer };

InfillMode infill_mode_from_name(const std::string& name);
const char* infill_mode_name(InfillMode mode);

struct PipelineOptions {
  bool use_mask = true;    // confidence masking in the bundle adjustment
  bool use_adasm = true;   // depth-band sampling in scale estimation
  InfillMode infill = InfillMode::Lerp;

  DepthBounds bounds{0.3, 4.0};
  ScaleOptions scale_opts;
  BAOptions ba_opts;
  double mask_radius_px = 8.0;

  // Transformer infill: load this checkpoint if it exists, otherwise train
  // on simulator motions with `train` and save here.
  std::string infill_model_path;
  TrainConfig train;
  int train_motion_count = 48;
  int train_motion_frames = 48;
};

struct PipelineResult {
  CameraTrajectory est_cams;  // BA output, slam units, pose 0 = identity
  double alpha = 0.0;
  ScaleResult scale;
  BASolution ba;
  MotionSequence hand_canonical;  // post-infill
  MotionSequence hand_world;      // composed with the estimated cameras
  GapSet gaps;
};

// Full reconstruction over simulator inputs: masked bundle adjustment,
// robust scale, canonicalization, gap infill, world composition. Uses only
// the scene's observation-side fields (tracks, init poses/depths, depth
// frames, camera-frame hand estimates, intrinsics).
PipelineResult reconstruct(const SceneBundle& scene,
                           const PipelineOptions& opts = {});

}  // namespace egohand

#pragma once

#include <cstdint>
#include <vector>

#include "egohand/ba.hpp"
#include "egohand/hand.hpp"
#include "egohand/motion.hpp"
#include "egohand/scale.hpp"

namespace egohand {

struct InvalidSpec : Error {
  explicit InvalidSpec(const std::string& msg) : Error(msg) {}
};

// Deterministic synthetic egocentric scene: smooth camera pose spline,
// smooth hand state spline, static landmark cloud sampled from an analytic
// surface set (fronto-parallel planes, a sphere, an infinite backdrop,
// optional near/far band patches), dense depth by ray casting.
struct SceneSpec {
  std::uint64_t seed = 0;
  int frames = 60;
  double fps = 30.0;

  CameraIntrinsics intrinsics{120.0, 120.0, 64.0, 48.0, 128, 96};

  // Camera path spline controls; generated from the seed when empty.
  std::vector<RigidTransform> camera_controls;
  int camera_control_count = 5;
  double camera_excursion = 0.25;      // m
  double camera_rot_excursion = 0.15;  // rad

  // Hand motion spline controls; generated from the seed when empty.
  std::vector<HandState> hand_controls;
  int hand_control_count = 6;
  double hand_depth = 0.45;    // m in front of the initial camera
  double hand_lateral = 0.10;  // m swing amplitude
  double hand_excursion = 0.0; // extra mid-sequence swing pushing out of view

  // Static landmark cloud (backprojected from random frame-0 pixels).
  int landmark_count = 120;

  // Scene surfaces (world z, camera 0 looks along +z).
  double plane_mid_z = 1.3;    // finite patch
  double sphere_z = 2.0;
  double backdrop_z = 3.2;     // infinite plane
  bool near_far_bands = false; // adds a near patch and a far pit
  double near_band_z = 0.2;
  double far_band_z = 6.0;

  double alpha_true = 1.0;

  // Noise model. Gross outliers corrupt the SLAM relative depth (ratio
  // outliers that survive metric-band sampling); band corruption models
  // metric-net unreliability at near/far range and keeps values in regime.
  double depth_noise = 0.0;            // sigma (m) on metric depth
  double outlier_fraction = 0.0;       // Bernoulli, on relative depth
  double outlier_multiplier = 10.0;
  double band_corrupt_fraction = 0.0;  // on metric depth at band pixels
  double reliable_lo = 0.3;            // regime boundaries for band noise
  double reliable_hi = 4.0;

  double track_noise_px = 0.0;
  double hand_coverage = 0.0;     // target fraction of dynamic observations
  double hand_state_noise = 0.0;  // sigma on camera-frame hand estimates

  // BA initialization perturbation (stand-in for the SLAM frontend).
  double init_rot_noise = 0.0;    // radians
  double init_trans_noise = 0.0;  // relative to displacement from frame 0
  double init_depth_noise = 0.0;  // relative; landmark 0 stays exact (gauge)

  double mask_radius_px = 8.0;
  double frustum_margin_px = 0.0;
  bool depth_frames_enabled = true;
};

struct SceneBundle {
  SceneSpec spec;
  CameraIntrinsics intrinsics;
  HandTemplate hand_template;

  CameraTrajectory gt_cams;    // metric
  CameraTrajectory slam_cams;  // gt with translations / alpha_true
  CameraTrajectory init_cams;  // perturbed slam-unit initialization

  MotionSequence gt_hand_world;   // full GT, every frame
  MotionSequence gt_hand_camera;  // "network estimates": zero state on
                                  // invisible frames, optional noise

  std::vector<DepthFrame> depth_frames;
  std::vector<Mask> masks;  // rendered GT hand masks
  std::vector<FeatureTrack> tracks;
  std::vector<double> init_inverse_depths;  // slam units, per track
};

SceneBundle generate(const SceneSpec& spec);

// True when at least one joint (all joints with require_all) projects
// inside the image expanded by margin_px with positive depth.
bool frustum_visibility(const Joints3d& joints_cam, const CameraIntrinsics& K,
                        double margin_px, bool require_all = false);

// Smooth canonical-space hand motions for infiller training/evaluation:
// spline motions canonicalized against an identity camera.
std::vector<MotionSequence> sample_canonical_motions(std::uint64_t seed,
                                                     int count, int frames,
                                                     double fps = 30.0);

// Catmull-Rom interpolation through control values at uniform parameters,
// clamped ends; s in [0, n-1].
Vec3 catmull_rom(const std::vector<Vec3>& controls, double s);

}  // namespace egohand

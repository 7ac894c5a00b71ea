#pragma once

#include <vector>

#include "egohand/image.hpp"
#include "egohand/motion.hpp"

namespace egohand {

struct PixelOutOfBounds : Error {
  explicit PixelOutOfBounds(const std::string& msg) : Error(msg) {}
};

struct RankDeficient : Error {
  explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

struct Diverged : Error {
  explicit Diverged(const std::string& msg) : Error(msg) {}
};

struct TrackObservation {
  int frame = 0;
  Vec2 pixel = Vec2::Zero();
  double confidence = 1.0;  // w in [0,1]
};

struct FeatureTrack {
  int landmark_id = 0;
  std::vector<TrackObservation> observations;  // frame indices increasing
  bool is_dynamic = false;  // simulator ground-truth label, test-only
};

// Landmarks are parameterized by inverse depth along the pixel ray of their
// first observation (the anchor). init_poses are camera-to-world.
struct BAProblem {
  std::vector<FeatureTrack> tracks;
  CameraIntrinsics intrinsics;
  std::vector<RigidTransform> init_poses;
  std::vector<double> init_inverse_depths;  // one per track
};

// Gauge: pose 0 = identity, track 0 inverse depth frozen at its initial
// value. Poses are camera-to-world in that gauge.
struct BASolution {
  CameraTrajectory poses;
  std::vector<double> inverse_depths;
  double final_rms_residual = 0.0;
  int iterations = 0;
  std::vector<double> cost_history;  // cost after each accepted step
};

struct BAOptions {
  int max_iterations = 50;
  double damping = 1e-6;           // initial Levenberg lambda
  double rel_cost_tolerance = 1e-10;
};

// Multiplies each observation confidence by (1 - M_t(pixel)). Zero-weight
// observations are retained but contribute nothing downstream.
std::vector<FeatureTrack> mask_confidences(
    const std::vector<FeatureTrack>& tracks, const std::vector<Mask>& masks);

// Levenberg-damped Gauss-Newton over poses 1..T-1 and landmark inverse
// depths, Schur complement on the landmark block.
BASolution solve_ba(const BAProblem& problem, const BAOptions& opts = {});

struct ResidualReport {
  // One entry per observation, in (track, observation) order. Anchor
  // observations are identically zero by construction. Points that fall
  // behind a camera get the sentinel residual (1e6, 1e6).
  std::vector<Vec2> residuals;
  double weighted_rms = 0.0;  // over confidence-weighted components
};

ResidualReport reprojection_residuals(const BAProblem& problem,
                                      const std::vector<RigidTransform>& poses,
                                      const std::vector<double>& inverse_depths);

// --- solver internals exposed for finite-difference tests ---

// se(3) exponential; xi = (translation, rotation) tangent.
RigidTransform se3_exp(const Eigen::Matrix<double, 6, 1>& xi);

// The solver's retraction: left-multiplicative increment on the
// world-to-camera pose. `pose` here is camera-to-world, matching the
// public containers.
RigidTransform apply_pose_increment(const RigidTransform& cam_to_world,
                                    const Eigen::Matrix<double, 6, 1>& xi);

struct ObsJacobian {
  int track = 0;
  int obs = 0;
  Vec2 residual = Vec2::Zero();
  Eigen::Matrix<double, 2, 6> d_pose;         // wrt observing pose increment
  Eigen::Matrix<double, 2, 6> d_pose_anchor;  // wrt anchor pose increment
  Vec2 d_inv_depth = Vec2::Zero();
};

// Analytic Jacobians for every non-anchor observation at the given state
// (unweighted; confidences are applied by the solver).
std::vector<ObsJacobian> evaluate_jacobians(
    const BAProblem& problem, const std::vector<RigidTransform>& poses,
    const std::vector<double>& inverse_depths);

}  // namespace egohand

#pragma once

#include "egohand/motion.hpp"

namespace egohand {

struct NonPositiveScale : Error {
  explicit NonPositiveScale(const std::string& msg) : Error(msg) {}
};

struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& msg) : Error(msg) {}
};

// Converts an up-to-scale trajectory to meters: rotations unchanged, every
// translation multiplied by alpha.
CameraTrajectory apply_scale(const CameraTrajectory& cams, double alpha);

// World-frame hand motion from camera-frame motion and a metric camera
// trajectory: Phi_w = R_c * Phi_c, Gamma_w = R_c * Gamma_c + t_c.
MotionSequence camera_to_world_motion(const MotionSequence& seq,
                                      const CameraTrajectory& cams);

// Inverse of camera_to_world_motion (used by the simulator to build
// camera-frame inputs from world-frame ground truth).
MotionSequence world_to_camera_motion(const MotionSequence& seq,
                                      const CameraTrajectory& cams);

}  // namespace egohand

#pragma once

#include <vector>

#include "egohand/motion.hpp"

namespace egohand {

struct AnchorInvisible : Error {
  explicit AnchorInvisible(const std::string& msg) : Error(msg) {}
};

struct CanonicalResult {
  MotionSequence sequence;                  // canonical-tagged
  std::vector<RigidTransform> cam_to_cano;  // per frame
  RigidTransform cano_to_world;             // anchor transform
  int anchor_frame = 0;
};

// Transforms per-frame camera-space hand states into the canonical space
// anchored at the first visible frame: that frame's output is exactly
// (identity, 0). Theta and beta pass through unchanged.
//
// For anchor a:  R_t = (R_{c_a} * Phi_a)^-1 * R_{c_t}
//                p_t = (R_{c_a} * Phi_a)^-1 * (t_{c_t} - t_{c_a} - R_{c_a} * Gamma_a)
// and per frame: Phi_cano = R_t * Phi_cam, Gamma_cano = R_t * Gamma_cam + p_t.
//
// Throws AnchorInvisible when no frame is visible, FrameTagMismatch when the
// input is not camera-tagged or lengths disagree.
CanonicalResult camera_to_canonical(const MotionSequence& seq,
                                    const CameraTrajectory& cams);

// Inverse anchor composition: Phi_w = R * Phi_cano, Gamma_w = R * Gamma_cano + t.
MotionSequence canonical_to_world(const MotionSequence& seq,
                                  const RigidTransform& cano_to_world);

}  // namespace egohand

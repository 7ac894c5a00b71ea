#include "egohand/world.hpp"

namespace egohand {

CameraTrajectory apply_scale(const CameraTrajectory& cams, double alpha) {
  if (!(alpha > 0.0)) {
    throw NonPositiveScale("apply_scale: alpha must be positive");
  }
  CameraTrajectory out = cams;
  for (auto& pose : out.poses) pose.t *= alpha;
  return out;
}

MotionSequence camera_to_world_motion(const MotionSequence& seq,
                                      const CameraTrajectory& cams) {
  if (seq.size() != cams.size()) {
    throw LengthMismatch("camera_to_world_motion: length mismatch");
  }
  MotionSequence out = seq;
  out.frame_tag = FrameTag::World;
  for (int t = 0; t < seq.size(); ++t) {
    const RigidTransform& c = cams.poses[t];
    out.states[t].phi = matrix_to_aa(c.R * aa_to_matrix(seq.states[t].phi));
    out.states[t].gamma = c.apply(seq.states[t].gamma);
  }
  return out;
}

MotionSequence world_to_camera_motion(const MotionSequence& seq,
                                      const CameraTrajectory& cams) {
  if (seq.size() != cams.size()) {
    throw LengthMismatch("world_to_camera_motion: length mismatch");
  }
  MotionSequence out = seq;
  out.frame_tag = FrameTag::Camera;
  for (int t = 0; t < seq.size(); ++t) {
    const RigidTransform inv = invert(cams.poses[t]);
    out.states[t].phi = matrix_to_aa(inv.R * aa_to_matrix(seq.states[t].phi));
    out.states[t].gamma = inv.apply(seq.states[t].gamma);
  }
  return out;
}

}  // namespace egohand

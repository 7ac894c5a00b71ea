#include "egohand/canonical.hpp"

namespace egohand {

CanonicalResult camera_to_canonical(const MotionSequence& seq,
                                    const CameraTrajectory& cams) {
  if (seq.frame_tag != FrameTag::Camera) {
    throw FrameTagMismatch("camera_to_canonical: sequence is not camera-tagged");
  }
  if (seq.size() != cams.size() || seq.size() < 1) {
    throw FrameTagMismatch("camera_to_canonical: sequence/trajectory length mismatch");
  }

  int anchor = -1;
  for (int t = 0; t < seq.size(); ++t) {
    if (seq.is_visible(t)) {
      anchor = t;
      break;
    }
  }
  if (anchor < 0) {
    throw AnchorInvisible("camera_to_canonical: no visible frame to anchor on");
  }

  const RigidTransform& cam_a = cams.poses[anchor];
  const HandState& hand_a = seq.states[anchor];
  const Mat3 world_from_hand = cam_a.R * aa_to_matrix(hand_a.phi);
  const Mat3 A = world_from_hand.transpose();

  CanonicalResult res;
  res.anchor_frame = anchor;
  res.cano_to_world =
      RigidTransform(world_from_hand, cam_a.t + cam_a.R * hand_a.gamma);
  res.cam_to_cano.reserve(seq.size());

  res.sequence = seq;
  res.sequence.frame_tag = FrameTag::Canonical;

  for (int t = 0; t < seq.size(); ++t) {
    const RigidTransform& cam_t = cams.poses[t];
    const Mat3 R = A * cam_t.R;
    const Vec3 p = A * (cam_t.t - cam_a.t - cam_a.R * hand_a.gamma);
    res.cam_to_cano.emplace_back(R, p);

    HandState& s = res.sequence.states[t];
    if (t == anchor) {
      // Exact by construction.
      s.phi = AxisAngle();
      s.gamma = Vec3::Zero();
      continue;
    }
    s.phi = matrix_to_aa(R * aa_to_matrix(seq.states[t].phi));
    s.gamma = R * seq.states[t].gamma + p;
  }
  return res;
}

MotionSequence canonical_to_world(const MotionSequence& seq,
                                  const RigidTransform& cano_to_world) {
  if (seq.frame_tag != FrameTag::Canonical) {
    throw FrameTagMismatch("canonical_to_world: sequence is not canonical-tagged");
  }
  MotionSequence out = seq;
  out.frame_tag = FrameTag::World;
  for (int t = 0; t < seq.size(); ++t) {
    out.states[t].phi = matrix_to_aa(cano_to_world.R *
                                     aa_to_matrix(seq.states[t].phi));
    out.states[t].gamma = cano_to_world.apply(seq.states[t].gamma);
  }
  return out;
}

}  // namespace egohand

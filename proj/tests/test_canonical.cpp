#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "egohand/canonical.hpp"
#include "egohand/world.hpp"
#include "test_util.hpp"

using namespace egohand;
using namespace egohand::testutil;

namespace {

CameraTrajectory identity_cams(int frames) {
  CameraTrajectory cams;
  cams.poses.assign(frames, RigidTransform::identity());
  for (int t = 0; t < frames; ++t) cams.timestamps.push_back(t / 30.0);
  return cams;
}

}  // namespace

TEST_CASE("static camera and hand canonicalize to a constant origin state") {
  const int T = 8;
  MotionSequence seq;
  seq.frame_tag = FrameTag::Camera;
  seq.visible.assign(T, 1);
  SplitRng rng(31);
  const HandState fixed = random_hand_state(rng);
  seq.states.assign(T, fixed);

  const CanonicalResult res = camera_to_canonical(seq, identity_cams(T));
  for (int t = 0; t < T; ++t) {
    CHECK(res.sequence.states[t].phi.v.norm() < 1e-12);
    CHECK(res.sequence.states[t].gamma.norm() < 1e-12);
  }
}

TEST_CASE("anchor frame is exactly identity/zero") {
  SplitRng rng(32);
  const int T = 10;
  const MotionSequence seq = random_camera_motion(rng, T);
  const CameraTrajectory cams = random_trajectory(rng, T);
  const CanonicalResult res = camera_to_canonical(seq, cams);
  CHECK(res.anchor_frame == 0);
  CHECK(res.sequence.states[0].phi.v.norm() == 0.0);
  CHECK(res.sequence.states[0].gamma.norm() == 0.0);
}

TEST_CASE("canonical round trip equals direct camera-to-world composition") {
  SplitRng rng(33);
  for (int rep = 0; rep < 50; ++rep) {
    const int T = 12;
    const MotionSequence seq = random_camera_motion(rng, T);
    const CameraTrajectory cams = random_trajectory(rng, T);

    const CanonicalResult cano = camera_to_canonical(seq, cams);
    const MotionSequence world =
        canonical_to_world(cano.sequence, cano.cano_to_world);
    const MotionSequence direct = camera_to_world_motion(seq, cams);

    for (int t = 0; t < T; ++t) {
      CHECK((world.states[t].gamma - direct.states[t].gamma).norm() < 1e-9);
      CHECK(rotation_diff(world.states[t].phi, direct.states[t].phi) < 1e-9);
    }
  }
}

TEST_CASE("theta and beta pass through unchanged") {
  SplitRng rng(34);
  const int T = 6;
  const MotionSequence seq = random_camera_motion(rng, T);
  const CameraTrajectory cams = random_trajectory(rng, T);
  const CanonicalResult cano = camera_to_canonical(seq, cams);
  const MotionSequence world =
      canonical_to_world(cano.sequence, cano.cano_to_world);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < kNumArticulated; ++j) {
      CHECK((cano.sequence.states[t].theta[j].v - seq.states[t].theta[j].v)
                .norm() == 0.0);
      CHECK((world.states[t].theta[j].v - seq.states[t].theta[j].v).norm() ==
            0.0);
    }
    for (int k = 0; k < kNumShape; ++k) {
      CHECK(cano.sequence.states[t].beta[k] == seq.states[t].beta[k]);
      CHECK(world.states[t].beta[k] == seq.states[t].beta[k]);
    }
  }
}

TEST_CASE("canonicalizing an already canonical sequence is the identity") {
  SplitRng rng(35);
  const int T = 9;
  MotionSequence seq = random_camera_motion(rng, T);
  const CameraTrajectory cams = random_trajectory(rng, T);
  MotionSequence canonical = camera_to_canonical(seq, cams).sequence;

  // Re-tag and re-canonicalize against an identity camera.
  canonical.frame_tag = FrameTag::Camera;
  const CanonicalResult again =
      camera_to_canonical(canonical, identity_cams(T));
  for (int t = 0; t < T; ++t) {
    CHECK((again.sequence.states[t].gamma - canonical.states[t].gamma).norm() <
          1e-12);
    CHECK(rotation_diff(again.sequence.states[t].phi,
                        canonical.states[t].phi) < 1e-12);
  }
}

TEST_CASE("canonical output invariant to a rigid world change") {
  SplitRng rng(36);
  const int T = 8;
  const MotionSequence seq = random_camera_motion(rng, T);
  CameraTrajectory cams = random_trajectory(rng, T);
  const CanonicalResult base = camera_to_canonical(seq, cams);

  const RigidTransform g = random_transform(rng);
  CameraTrajectory moved = cams;
  for (auto& p : moved.poses) p = compose(g, p);
  // Hand states are camera-frame: unchanged by a world change.
  const CanonicalResult after = camera_to_canonical(seq, moved);

  for (int t = 0; t < T; ++t) {
    CHECK((base.sequence.states[t].gamma - after.sequence.states[t].gamma)
              .norm() < 1e-9);
    CHECK(rotation_diff(base.sequence.states[t].phi,
                        after.sequence.states[t].phi) < 1e-9);
  }
}

TEST_CASE("anchor falls back to the first visible frame") {
  SplitRng rng(37);
  const int T = 7;
  MotionSequence seq = random_camera_motion(rng, T);
  seq.visible[0] = 0;
  seq.visible[1] = 0;
  const CameraTrajectory cams = random_trajectory(rng, T);
  const CanonicalResult res = camera_to_canonical(seq, cams);
  CHECK(res.anchor_frame == 2);
  CHECK(res.sequence.states[2].phi.v.norm() == 0.0);
  CHECK(res.sequence.states[2].gamma.norm() == 0.0);
}

TEST_CASE("errors: no visible frame, wrong tags") {
  SplitRng rng(38);
  MotionSequence seq = random_camera_motion(rng, 5);
  const CameraTrajectory cams = random_trajectory(rng, 5);

  MotionSequence blind = seq;
  std::fill(blind.visible.begin(), blind.visible.end(), 0);
  CHECK_THROWS_AS(camera_to_canonical(blind, cams), AnchorInvisible);

  MotionSequence wrong = seq;
  wrong.frame_tag = FrameTag::World;
  CHECK_THROWS_AS(camera_to_canonical(wrong, cams), FrameTagMismatch);
  CHECK_THROWS_AS(canonical_to_world(seq, RigidTransform::identity()),
                  FrameTagMismatch);
}

TEST_CASE("canonical_to_world anchor composition rules") {
  SplitRng rng(39);
  const int T = 5;
  MotionSequence seq = random_camera_motion(rng, T);
  seq.frame_tag = FrameTag::Canonical;

  // Identity anchor: only the tag changes.
  const MotionSequence same =
      canonical_to_world(seq, RigidTransform::identity());
  CHECK(same.frame_tag == FrameTag::World);
  for (int t = 0; t < T; ++t) {
    CHECK(max_state_diff(same.states[t], seq.states[t]) < 1e-12);
  }

  // Pure translation shifts gamma uniformly and leaves phi alone.
  const Vec3 shift(0.3, -0.2, 1.0);
  const MotionSequence moved =
      canonical_to_world(seq, RigidTransform(Mat3::Identity(), shift));
  for (int t = 0; t < T; ++t) {
    CHECK((moved.states[t].gamma - seq.states[t].gamma - shift).norm() <
          1e-12);
    CHECK((moved.states[t].phi.v - seq.states[t].phi.v).norm() < 1e-12);
  }
}

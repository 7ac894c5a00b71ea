#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "egohand/ba.hpp"
#include "egohand/sim.hpp"
#include "egohand/world.hpp"
#include "test_util.hpp"

using namespace egohand;
using namespace egohand::testutil;

TEST_CASE("zero noise, alpha 1: slam equals gt exactly") {
  SceneSpec spec;
  spec.seed = 1;
  spec.frames = 12;
  spec.alpha_true = 1.0;
  spec.depth_frames_enabled = false;
  const SceneBundle b = generate(spec);
  for (int t = 0; t < spec.frames; ++t) {
    CHECK((b.slam_cams.poses[t].t - b.gt_cams.poses[t].t).norm() == 0.0);
    CHECK((b.slam_cams.poses[t].R - b.gt_cams.poses[t].R).norm() == 0.0);
  }
}

TEST_CASE("same seed gives bit-identical bundles") {
  SceneSpec spec;
  spec.seed = 99;
  spec.frames = 10;
  spec.alpha_true = 2.0;
  spec.depth_noise = 0.01;
  spec.outlier_fraction = 0.2;
  spec.track_noise_px = 0.5;
  spec.hand_coverage = 0.2;
  spec.init_rot_noise = 0.05;
  spec.init_trans_noise = 0.03;
  spec.init_depth_noise = 0.05;

  const SceneBundle a = generate(spec);
  const SceneBundle b = generate(spec);

  REQUIRE(a.tracks.size() == b.tracks.size());
  for (std::size_t l = 0; l < a.tracks.size(); ++l) {
    REQUIRE(a.tracks[l].observations.size() ==
            b.tracks[l].observations.size());
    for (std::size_t o = 0; o < a.tracks[l].observations.size(); ++o) {
      CHECK(a.tracks[l].observations[o].pixel ==
            b.tracks[l].observations[o].pixel);
    }
  }
  for (int t = 0; t < spec.frames; ++t) {
    CHECK((a.gt_cams.poses[t].t - b.gt_cams.poses[t].t).norm() == 0.0);
    CHECK(a.depth_frames[t].rel.data() == b.depth_frames[t].rel.data());
    CHECK(a.depth_frames[t].metric.data() == b.depth_frames[t].metric.data());
    CHECK(a.masks[t] == b.masks[t]);
  }
  CHECK(a.init_inverse_depths == b.init_inverse_depths);
}

TEST_CASE("pre-noise consistency: zero reprojection residual on GT state") {
  SceneSpec spec;
  spec.seed = 3;
  spec.frames = 15;
  spec.alpha_true = 1.8;
  spec.depth_frames_enabled = false;
  const SceneBundle b = generate(spec);

  BAProblem p;
  p.tracks = b.tracks;
  p.intrinsics = b.intrinsics;
  p.init_poses = b.slam_cams.poses;
  p.init_inverse_depths = b.init_inverse_depths;

  const auto rep =
      reprojection_residuals(p, b.slam_cams.poses, b.init_inverse_depths);
  for (const Vec2& r : rep.residuals) CHECK(r.norm() < 1e-8);
}

TEST_CASE("depth consistency d = D / alpha pre-noise") {
  SceneSpec spec;
  spec.seed = 4;
  spec.frames = 3;
  spec.alpha_true = 2.4;
  const SceneBundle b = generate(spec);
  for (const DepthFrame& f : b.depth_frames) {
    for (int y = 0; y < f.rel.height(); y += 3) {
      for (int x = 0; x < f.rel.width(); x += 3) {
        if (!f.valid.at(x, y) || f.hand_mask.at(x, y)) continue;
        CHECK(f.rel.at(x, y) * spec.alpha_true ==
              doctest::Approx(f.metric.at(x, y)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("visibility flags equal frame-wise frustum_visibility") {
  SceneSpec spec;
  spec.seed = 5;
  spec.frames = 40;
  spec.hand_excursion = 0.8;
  spec.depth_frames_enabled = false;
  const SceneBundle b = generate(spec);

  int invisible = 0;
  for (int t = 0; t < spec.frames; ++t) {
    const Joints3d j = forward_kinematics(
        b.hand_template,
        world_to_camera_motion(b.gt_hand_world, b.gt_cams).states[t]);
    const bool vis =
        frustum_visibility(j, b.intrinsics, spec.frustum_margin_px);
    CHECK(vis == b.gt_hand_world.is_visible(t));
    invisible += !vis;
  }
  // The excursion pushes the hand out of frame mid-sequence.
  CHECK(invisible >= 4);
  CHECK(b.gt_hand_world.visible.front() == 1);
  CHECK(b.gt_hand_world.visible.back() == 1);
}

TEST_CASE("frustum_visibility modes") {
  CameraIntrinsics K{100, 100, 50, 50, 100, 100};
  Joints3d j;
  for (auto& p : j.j) p = Vec3(0, 0, 0.5);

  CHECK(frustum_visibility(j, K, 0.0));
  CHECK(frustum_visibility(j, K, 0.0, /*require_all=*/true));

  for (auto& p : j.j) p = Vec3(0, 0, -0.5);
  CHECK_FALSE(frustum_visibility(j, K, 0.0));

  // Straddling the border: margin flips the verdict.
  for (int i = 0; i < kNumJoints; ++i) j.j[i] = Vec3(0.3, 0, 0.5);
  // u = 100*0.6 + 50 = 110 -> outside; margin 20 admits it.
  CHECK_FALSE(frustum_visibility(j, K, 0.0));
  CHECK(frustum_visibility(j, K, 20.0));
  // Brute-force per-joint check for a mixed configuration.
  for (int i = 0; i < kNumJoints; ++i) {
    j.j[i] = Vec3(0.3 * (i % 2), 0, 0.5);
  }
  CHECK(frustum_visibility(j, K, 0.0));
}

TEST_CASE("invisible frames have zeroed network estimates") {
  SceneSpec spec;
  spec.seed = 6;
  spec.frames = 40;
  spec.hand_excursion = 0.8;
  spec.depth_frames_enabled = false;
  const SceneBundle b = generate(spec);
  for (int t = 0; t < spec.frames; ++t) {
    if (b.gt_hand_camera.is_visible(t)) continue;
    CHECK(b.gt_hand_camera.states[t].gamma.norm() == 0.0);
    CHECK(b.gt_hand_camera.states[t].phi.v.norm() == 0.0);
  }
}

TEST_CASE("hand coverage target produces dynamic observations") {
  SceneSpec spec;
  spec.seed = 7;
  spec.frames = 20;
  spec.hand_coverage = 0.25;
  spec.depth_frames_enabled = false;
  const SceneBundle b = generate(spec);

  std::size_t dyn = 0, total = 0;
  for (const auto& tr : b.tracks) {
    total += tr.observations.size();
    if (tr.is_dynamic) dyn += tr.observations.size();
  }
  const double f = double(dyn) / double(total);
  CHECK(f > 0.15);
  CHECK(f < 0.35);
  CHECK_FALSE(b.tracks.front().is_dynamic);  // scale gauge stays static
}

TEST_CASE("dynamic track pixels fall inside the rendered hand mask") {
  SceneSpec spec;
  spec.seed = 8;
  spec.frames = 16;
  spec.hand_coverage = 0.25;
  spec.depth_frames_enabled = false;
  const SceneBundle b = generate(spec);

  std::size_t inside = 0, all = 0;
  for (const auto& tr : b.tracks) {
    if (!tr.is_dynamic) continue;
    for (const auto& ob : tr.observations) {
      ++all;
      const int x = int(std::lround(ob.pixel.x()));
      const int y = int(std::lround(ob.pixel.y()));
      if (b.masks[ob.frame].contains(x, y) && b.masks[ob.frame].at(x, y)) {
        ++inside;
      }
    }
  }
  REQUIRE(all > 0);
  CHECK(double(inside) / double(all) > 0.95);
}

TEST_CASE("sample_canonical_motions yields canonical smooth sequences") {
  const auto motions = sample_canonical_motions(17, 5, 30);
  CHECK(motions.size() == 5);
  for (const auto& seq : motions) {
    CHECK(seq.frame_tag == FrameTag::Canonical);
    CHECK(seq.size() == 30);
    CHECK(seq.states[0].phi.v.norm() == 0.0);
    CHECK(seq.states[0].gamma.norm() == 0.0);
    // Smoothness: bounded frame-to-frame motion.
    for (int t = 1; t < 30; ++t) {
      CHECK((seq.states[t].gamma - seq.states[t - 1].gamma).norm() < 0.2);
    }
  }
}

TEST_CASE("invalid specs are rejected") {
  SceneSpec spec;
  spec.frames = 1;
  CHECK_THROWS_AS(generate(spec), InvalidSpec);
  spec.frames = 10;
  spec.outlier_fraction = 1.5;
  CHECK_THROWS_AS(generate(spec), InvalidSpec);
}

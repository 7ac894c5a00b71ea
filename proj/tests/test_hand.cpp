#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "egohand/hand.hpp"
#include "egohand/rng.hpp"
#include "test_util.hpp"

using namespace egohand;
using namespace egohand::testutil;

namespace {

int mask_count(const Mask& m) {
  int n = 0;
  for (auto v : m.data()) n += v != 0;
  return n;
}

}  // namespace

TEST_CASE("FK rest pose reproduces the template") {
  const HandTemplate tmpl = HandTemplate::standard();
  const Joints3d j = forward_kinematics(tmpl, HandState{});
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK((j.j[i] - tmpl.rest_joints[i]).norm() == 0.0);
  }
}

TEST_CASE("FK global rotation spins the rest pose about the wrist") {
  const HandTemplate tmpl = HandTemplate::standard();
  HandState s;
  s.phi = AxisAngle(0, 0, M_PI / 2);
  const Mat3 R = aa_to_matrix(s.phi);
  const Joints3d j = forward_kinematics(tmpl, s);
  for (int i = 0; i < kNumJoints; ++i) {
    CHECK((j.j[i] - R * tmpl.rest_joints[i]).norm() < 1e-12);
  }
}

TEST_CASE("beta scales exactly its bone group (bone-length oracle)") {
  const HandTemplate tmpl = HandTemplate::standard();
  HandState s;
  s.beta[2] = 0.1;  // middle finger +10%
  const Joints3d j = forward_kinematics(tmpl, s);
  for (int child = 1; child < kNumJoints; ++child) {
    const int pa = tmpl.parent[child];
    const double len = (j.j[child] - j.j[pa]).norm();
    const double rest = tmpl.rest_bone_length(child);
    const double expected = tmpl.bone_group[child] == 2 ? 1.1 * rest : rest;
    CHECK(len == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("FK with zero pose preserves rest bone lengths") {
  const HandTemplate tmpl = HandTemplate::standard();
  SplitRng rng(21);
  HandState s;
  s.phi = random_axis_angle(rng);
  s.gamma = random_point(rng);
  const Joints3d j = forward_kinematics(tmpl, s);
  for (int child = 1; child < kNumJoints; ++child) {
    CHECK((j.j[child] - j.j[tmpl.parent[child]]).norm() ==
          doctest::Approx(tmpl.rest_bone_length(child)).epsilon(1e-12));
  }
}

TEST_CASE("FK rigid equivariance") {
  const HandTemplate tmpl = HandTemplate::standard();
  SplitRng rng(22);
  for (int i = 0; i < 50; ++i) {
    const HandState s = random_hand_state(rng);
    const RigidTransform g = random_transform(rng);

    HandState moved = s;
    moved.phi = matrix_to_aa(g.R * aa_to_matrix(s.phi));
    moved.gamma = g.apply(s.gamma);

    const Joints3d base = forward_kinematics(tmpl, s);
    const Joints3d after = forward_kinematics(tmpl, moved);
    for (int jn = 0; jn < kNumJoints; ++jn) {
      CHECK((after.j[jn] - g.apply(base.j[jn])).norm() < 1e-9);
    }
  }
}

TEST_CASE("project_joints reports offending joints") {
  CameraIntrinsics K{100, 100, 50, 50, 100, 100};
  const HandTemplate tmpl = HandTemplate::standard();
  HandState s;
  s.gamma = Vec3(0, 0, 0.5);
  CHECK_NOTHROW(project_joints(K, forward_kinematics(tmpl, s)));
  s.gamma = Vec3(0, 0, -1.0);
  CHECK_THROWS_AS(project_joints(K, forward_kinematics(tmpl, s)),
                  BehindCamera);
}

TEST_CASE("project_joints matches per-joint pinhole") {
  CameraIntrinsics K{200, 210, 64, 48, 128, 96};
  const HandTemplate tmpl = HandTemplate::standard();
  SplitRng rng(23);
  HandState s = random_hand_state(rng);
  s.gamma = Vec3(0.02, -0.03, 0.6);
  const Joints3d j3 = forward_kinematics(tmpl, s);
  const Joints2d j2 = project_joints(K, j3);
  for (int jn = 0; jn < kNumJoints; ++jn) {
    CHECK((j2.j[jn] - project(K, j3.j[jn])).norm() == 0.0);
  }
}

TEST_CASE("mask: joint disc at image center, radius 2 -> exactly 13 pixels") {
  CameraIntrinsics K{100, 100, 32, 24, 64, 48};
  Joints2d j2;
  for (auto& p : j2.j) p = Vec2(-1000, -1000);  // keep others away
  j2.j[0] = Vec2(32, 24);
  std::array<bool, kNumJoints> valid{};
  valid[0] = true;
  const Mask m = render_hand_mask(K, j2, 2.0, {}, &valid);

  // Brute-force disc rasterization oracle.
  int expected = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      if ((Vec2(x, y) - Vec2(32, 24)).norm() <= 2.0) ++expected;
  CHECK(expected == 13);
  CHECK(mask_count(m) == 13);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      CHECK(int(m.at(x, y)) ==
            int((Vec2(x, y) - Vec2(32, 24)).norm() <= 2.0));
}

TEST_CASE("mask: fully out-of-frame hand is all zero") {
  CameraIntrinsics K{100, 100, 32, 24, 64, 48};
  Joints2d j2;
  for (auto& p : j2.j) p = Vec2(500, 500);
  const HandTemplate tmpl = HandTemplate::standard();
  const Mask m = render_hand_mask(K, j2, 8.0, tmpl.bones());
  CHECK(mask_count(m) == 0);
}

TEST_CASE("mask pixel count is monotone in radius") {
  CameraIntrinsics K{100, 100, 32, 24, 64, 48};
  const HandTemplate tmpl = HandTemplate::standard();
  SplitRng rng(24);
  Joints2d j2;
  for (auto& p : j2.j) {
    p = Vec2(rng.uniform(5.0, 59.0), rng.uniform(5.0, 43.0));
  }
  int prev = -1;
  for (double r : {1.0, 2.0, 4.0, 6.0, 9.0}) {
    const int n = mask_count(render_hand_mask(K, j2, r, tmpl.bones()));
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("mask invariant under consistent joint/bone permutation") {
  CameraIntrinsics K{100, 100, 32, 24, 64, 48};
  const HandTemplate tmpl = HandTemplate::standard();
  SplitRng rng(25);
  Joints2d j2;
  for (auto& p : j2.j) {
    p = Vec2(rng.uniform(5.0, 59.0), rng.uniform(5.0, 43.0));
  }
  const auto bones = tmpl.bones();
  const Mask base = render_hand_mask(K, j2, 5.0, bones);

  // Reverse the joint order and relabel bones accordingly.
  Joints2d rev;
  for (int j = 0; j < kNumJoints; ++j) rev.j[j] = j2.j[kNumJoints - 1 - j];
  std::vector<std::pair<int, int>> rev_bones;
  for (auto [a, b] : bones) {
    rev_bones.emplace_back(kNumJoints - 1 - a, kNumJoints - 1 - b);
  }
  const Mask permuted = render_hand_mask(K, rev, 5.0, rev_bones);
  CHECK(base == permuted);
}

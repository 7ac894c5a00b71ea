#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "egohand/geometry.hpp"
#include "egohand/rng.hpp"
#include "test_util.hpp"

using namespace egohand;
using namespace egohand::testutil;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("aa_to_matrix basics") {
  CHECK((aa_to_matrix(AxisAngle(0, 0, 0)) - Mat3::Identity()).norm() == 0.0);

  const Mat3 half_turn = aa_to_matrix(AxisAngle(0, 0, kPi));
  Mat3 expected;
  expected << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK((half_turn - expected).norm() < 1e-12);
}

TEST_CASE("aa_to_matrix orthonormal and dual-path quaternion oracle") {
  SplitRng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const AxisAngle a = random_axis_angle(rng, kPi);
    const Mat3 R = aa_to_matrix(a);
    CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    // Independent route: axis-angle -> quaternion -> matrix.
    const Mat3 Rq = quat_to_matrix(aa_to_quat(a));
    CHECK((R - Rq).norm() < 1e-9);
  }
}

TEST_CASE("matrix_to_aa basics and errors") {
  const AxisAngle id = matrix_to_aa(Mat3::Identity());
  CHECK(id.v.norm() == 0.0);

  Mat3 flip;
  flip << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  const AxisAngle a = matrix_to_aa(flip);
  CHECK(a.angle() == doctest::Approx(kPi).epsilon(1e-9));
  CHECK(a.v.normalized().z() == doctest::Approx(1.0).epsilon(1e-9));

  Mat3 junk;
  junk << 1, 0.5, 0, 0, 1, 0, 0, 0, 1;
  CHECK_THROWS_AS(matrix_to_aa(junk), NotARotation);
}

TEST_CASE("matrix_to_aa round trip on 1000 random rotations") {
  SplitRng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const AxisAngle a = random_axis_angle(rng, kPi - 1e-3);
    const AxisAngle back = matrix_to_aa(aa_to_matrix(a));
    CHECK((a.v - back.v).norm() < 1e-7);
  }
}

TEST_CASE("matrix_to_aa near and at pi") {
  SplitRng rng(13);
  for (int i = 0; i < 200; ++i) {
    const AxisAngle a = random_axis_angle(rng, 1.0);
    Vec3 axis = a.v.normalized();
    const AxisAngle near_pi(axis * (kPi - 1e-8));
    const AxisAngle back = matrix_to_aa(aa_to_matrix(near_pi));
    CHECK(rotation_diff(near_pi, back) < 1e-6);
  }
  // At exactly pi the axis sign follows the first-nonzero-positive rule.
  const Vec3 axis = Vec3(-1.0, 2.0, 0.5).normalized();
  const AxisAngle back = matrix_to_aa(aa_to_matrix(AxisAngle(axis * kPi)));
  CHECK(back.angle() == doctest::Approx(kPi).epsilon(1e-10));
  CHECK(back.v.normalized().x() > 0.0);
}

TEST_CASE("slerp endpoints, half angle, and properties") {
  SplitRng rng(14);
  const UnitQuaternion qid;
  const UnitQuaternion qx = aa_to_quat(AxisAngle(kPi / 2, 0, 0));

  const UnitQuaternion half = slerp(qid, qx, 0.5);
  const AxisAngle a = quat_to_aa(half);
  CHECK(a.angle() == doctest::Approx(kPi / 4).epsilon(1e-12));
  CHECK(a.v.normalized().x() == doctest::Approx(1.0).epsilon(1e-12));

  for (int i = 0; i < 300; ++i) {
    const UnitQuaternion q0 = aa_to_quat(random_axis_angle(rng));
    const UnitQuaternion q1 = aa_to_quat(random_axis_angle(rng));
    CHECK(rotation_angle_between(slerp(q0, q1, 0.0), q0) < 1e-9);
    CHECK(rotation_angle_between(slerp(q0, q1, 1.0), q1) < 1e-9);

    const double u = rng.uniform();
    const UnitQuaternion qu = slerp(q0, q1, u);
    CHECK(qu.norm() == doctest::Approx(1.0).epsilon(1e-9));
    // Constant angular velocity along the arc.
    const double full = rotation_angle_between(q0, q1);
    CHECK(rotation_angle_between(q0, qu) == doctest::Approx(u * full).epsilon(1e-7));
  }
}

TEST_CASE("slerp near-parallel fallback") {
  const UnitQuaternion q0 = aa_to_quat(AxisAngle(0.3, 0.2, 0.1));
  const UnitQuaternion q1 = aa_to_quat(AxisAngle(0.3 + 1e-9, 0.2, 0.1));
  const UnitQuaternion q = slerp(q0, q1, 0.37);
  CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rotation_angle_between(q, q0) < 1e-8);
}

TEST_CASE("compose and invert") {
  SplitRng rng(15);
  const RigidTransform T = random_transform(rng);

  CHECK((compose(T, RigidTransform::identity()).R - T.R).norm() < 1e-15);
  const RigidTransform should_be_id = compose(T, invert(T));
  CHECK((should_be_id.R - Mat3::Identity()).norm() < 1e-9);
  CHECK(should_be_id.t.norm() < 1e-9);

  // Pure translation inverse.
  const RigidTransform tr(Mat3::Identity(), Vec3(0, 0, 1));
  CHECK((invert(tr).t - Vec3(0, 0, -1)).norm() == 0.0);

  for (int i = 0; i < 200; ++i) {
    const RigidTransform A = random_transform(rng);
    const RigidTransform B = random_transform(rng);
    const Vec3 p = random_point(rng);
    CHECK((compose(A, B).apply(p) - A.apply(B.apply(p))).norm() < 1e-9);

    const RigidTransform inv = invert(A);
    CHECK((inv.apply(A.apply(p)) - p).norm() < 1e-9);
    const RigidTransform twice = invert(invert(A));
    CHECK((twice.R - A.R).norm() < 1e-9);
    CHECK((twice.t - A.t).norm() < 1e-9);
  }
}

TEST_CASE("compose associativity") {
  SplitRng rng(16);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform A = random_transform(rng);
    const RigidTransform B = random_transform(rng);
    const RigidTransform C = random_transform(rng);
    const RigidTransform left = compose(compose(A, B), C);
    const RigidTransform right = compose(A, compose(B, C));
    CHECK((left.R - right.R).norm() < 1e-9);
    CHECK((left.t - right.t).norm() < 1e-9);
  }
}

TEST_CASE("project: axis, offset, hand-computed case, errors") {
  CameraIntrinsics K{100, 100, 50, 50, 100, 100};
  CHECK((project(K, Vec3(0, 0, 1)) - Vec2(50, 50)).norm() == 0.0);
  CHECK((project(K, Vec3(1, 0, 1)) - Vec2(150, 50)).norm() == 0.0);

  CameraIntrinsics K2{200, 210, 64, 48, 128, 96};
  // (0.3/2)*200+64 = 94, (-0.2/2)*210+48 = 27
  const Vec2 px = project(K2, Vec3(0.3, -0.2, 2));
  CHECK(px.x() == doctest::Approx(94.0).epsilon(1e-12));
  CHECK(px.y() == doctest::Approx(27.0).epsilon(1e-12));

  CHECK_THROWS_AS(project(K, Vec3(0, 0, 0)), BehindCamera);
  CHECK_THROWS_AS(project(K, Vec3(0, 0, -1)), BehindCamera);
}

TEST_CASE("project composed with unproject is identity on pixels") {
  SplitRng rng(17);
  CameraIntrinsics K{180, 175, 60, 45, 120, 90};
  for (int i = 0; i < 300; ++i) {
    const Vec2 px(rng.uniform(0.0, 119.0), rng.uniform(0.0, 89.0));
    const double depth = rng.uniform(0.1, 5.0);
    const Vec2 back = project(K, unproject(K, px, depth));
    CHECK((back - px).norm() < 1e-9);
  }
}

TEST_CASE("axis angle canonicalization") {
  const AxisAngle big(Vec3(0, 0, 1) * (2.0 * kPi - 0.3));
  const AxisAngle c = big.canonicalized();
  CHECK(c.angle() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(c.v.normalized().z() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rotation_diff(big, c) < 1e-12);
}

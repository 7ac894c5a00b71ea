#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "egohand/errors.hpp"

namespace egohand {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct NotARotation : Error {
  explicit NotARotation(const std::string& msg) : Error(msg) {}
};

struct BehindCamera : Error {
  explicit BehindCamera(const std::string& msg) : Error(msg) {}
};

// Axis-angle rotation: direction = axis, norm = angle. The zero vector is
// the identity. canonicalized() maps the angle into [0, pi].
struct AxisAngle {
  Vec3 v = Vec3::Zero();

  AxisAngle() = default;
  explicit AxisAngle(const Vec3& vec) : v(vec) {}
  AxisAngle(double x, double y, double z) : v(x, y, z) {}

  double angle() const { return v.norm(); }
  bool is_identity(double tol = 0.0) const { return v.norm() <= tol; }

  AxisAngle canonicalized() const;
};

// Unit quaternion with canonical sign w >= 0. Interpolation representation;
// storage everywhere else is axis-angle or matrix.
struct UnitQuaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  UnitQuaternion() = default;
  UnitQuaternion(double w_, double x_, double y_, double z_)
      : w(w_), x(x_), y(y_), z(z_) {}

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  double dot(const UnitQuaternion& o) const {
    return w * o.w + x * o.x + y * o.y + z * o.z;
  }
  UnitQuaternion normalized() const;
  UnitQuaternion canonical_sign() const {
    return w < 0.0 ? UnitQuaternion(-w, -x, -y, -z) : *this;
  }
};

// SE(3) pose: x_out = R * x_in + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3& rot, const Vec3& trans) : R(rot), t(trans) {}

  static RigidTransform identity() { return RigidTransform(); }

  Vec3 apply(const Vec3& p) const { return R * p + t; }
};

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
};

// Rodrigues formula. Zero vector maps to the identity.
Mat3 aa_to_matrix(const AxisAngle& a);

// Inverse of aa_to_matrix, canonical range [0, pi]. At angle pi the axis
// sign is fixed so that the first nonzero component is positive.
// Throws NotARotation if R'R deviates from I by more than 1e-6.
AxisAngle matrix_to_aa(const Mat3& R);

UnitQuaternion aa_to_quat(const AxisAngle& a);
AxisAngle quat_to_aa(const UnitQuaternion& q);
UnitQuaternion matrix_to_quat(const Mat3& R);
Mat3 quat_to_matrix(const UnitQuaternion& q);

// Shortest-arc spherical interpolation; falls back to normalized lerp when
// the inputs are nearly parallel (dot > 1 - 1e-7).
UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1,
                     double u);

// Angle of the relative rotation between two quaternions, in [0, pi].
double rotation_angle_between(const UnitQuaternion& q0,
                              const UnitQuaternion& q1);

// (A o B)(p) = A(B(p)).
RigidTransform compose(const RigidTransform& A, const RigidTransform& B);
RigidTransform invert(const RigidTransform& T);

// Pinhole projection; throws BehindCamera if p.z <= 1e-6.
Vec2 project(const CameraIntrinsics& K, const Vec3& p);

// Inverse of project at the given positive depth (camera-frame z).
Vec3 unproject(const CameraIntrinsics& K, const Vec2& pixel, double depth);

}  // namespace egohand

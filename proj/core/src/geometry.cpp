#include "egohand/geometry.hpp"

#include <cmath>

namespace egohand {

namespace {
constexpr double kPi = 3.14159265358979323846;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}
}  // namespace

AxisAngle AxisAngle::canonicalized() const {
  double a = v.norm();
  if (a == 0.0) return *this;
  Vec3 axis = v / a;
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a > kPi) {
    a = 2.0 * kPi - a;
    axis = -axis;
  }
  return AxisAngle(axis * a);
}

UnitQuaternion UnitQuaternion::normalized() const {
  const double n = norm();
  return UnitQuaternion(w / n, x / n, y / n, z / n);
}

Mat3 aa_to_matrix(const AxisAngle& a) {
  const double angle = a.angle();
  if (angle < 1e-12) {
    // First-order expansion keeps tiny rotations exact enough for
    // round-trips without dividing by a vanishing norm.
    return Mat3::Identity() + skew(a.v);
  }
  const Vec3 axis = a.v / angle;
  const Mat3 K = skew(axis);
  return Mat3::Identity() + std::sin(angle) * K +
         (1.0 - std::cos(angle)) * K * K;
}

AxisAngle matrix_to_aa(const Mat3& R) {
  const double ortho = (R.transpose() * R - Mat3::Identity()).norm();
  if (!(ortho < 1e-6) || !(std::abs(R.determinant() - 1.0) < 1e-6)) {
    throw NotARotation("matrix_to_aa: input is not a rotation matrix");
  }
  const double tr = R.trace();
  const double c = std::min(1.0, std::max(-1.0, (tr - 1.0) / 2.0));
  const double angle = std::acos(c);

  if (angle < 1e-10) {
    // sin(angle)/angle ~ 1; read the skew part directly.
    return AxisAngle(0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0),
                                R(1, 0) - R(0, 1)));
  }
  if (angle < kPi - 1e-6) {
    const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    return AxisAngle(w * (angle / (2.0 * std::sin(angle))));
  }

  // Near pi the skew part vanishes; recover the axis from the symmetric
  // part. R = I + 2*sin^2(a/2)*(nn' - I) at a = pi gives nn' = (R + I)/2.
  const Mat3 S = 0.5 * (R + Mat3::Identity());
  int k = 0;
  S.diagonal().maxCoeff(&k);
  Vec3 axis = S.col(k) / std::sqrt(std::max(S(k, k), 1e-12));
  axis.normalize();
  // Tie-break: first nonzero component positive.
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-9) {
      if (axis[i] < 0.0) axis = -axis;
      break;
    }
  }
  // Off-pi correction: the (possibly nonzero) skew part carries the angle
  // sign relative to the chosen axis. Below pi the representation is unique
  // again, so a flip here is correctness, not a tie-break.
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double sin_a = 0.5 * w.dot(axis);
  double ang = std::atan2(sin_a, c);
  if (ang < 0.0) {
    ang = -ang;
    axis = -axis;
  }
  return AxisAngle(axis * ang);
}

UnitQuaternion aa_to_quat(const AxisAngle& a) {
  const double angle = a.angle();
  if (angle < 1e-12) {
    return UnitQuaternion(1.0, 0.5 * a.v.x(), 0.5 * a.v.y(), 0.5 * a.v.z())
        .normalized()
        .canonical_sign();
  }
  const Vec3 axis = a.v / angle;
  const double s = std::sin(0.5 * angle);
  return UnitQuaternion(std::cos(0.5 * angle), s * axis.x(), s * axis.y(),
                        s * axis.z())
      .canonical_sign();
}

AxisAngle quat_to_aa(const UnitQuaternion& q_in) {
  const UnitQuaternion q = q_in.canonical_sign();
  const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (vn < 1e-12) return AxisAngle(2.0 * Vec3(q.x, q.y, q.z));
  const double angle = 2.0 * std::atan2(vn, q.w);
  return AxisAngle(Vec3(q.x, q.y, q.z) * (angle / vn));
}

UnitQuaternion matrix_to_quat(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  return UnitQuaternion(q.w(), q.x(), q.y(), q.z())
      .normalized()
      .canonical_sign();
}

Mat3 quat_to_matrix(const UnitQuaternion& q) {
  return Eigen::Quaterniond(q.w, q.x, q.y, q.z).normalized().toRotationMatrix();
}

UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1,
                     double u) {
  double d = q0.dot(q1);
  UnitQuaternion b = q1;
  if (d < 0.0) {  // shortest arc
    b = UnitQuaternion(-q1.w, -q1.x, -q1.y, -q1.z);
    d = -d;
  }
  if (d > 1.0 - 1e-7) {
    // Near-parallel: normalized lerp is numerically safer than sin division.
    return UnitQuaternion(q0.w + u * (b.w - q0.w), q0.x + u * (b.x - q0.x),
                          q0.y + u * (b.y - q0.y), q0.z + u * (b.z - q0.z))
        .normalized();
  }
  const double theta = std::acos(std::min(1.0, d));
  const double s = std::sin(theta);
  const double a = std::sin((1.0 - u) * theta) / s;
  const double c = std::sin(u * theta) / s;
  return UnitQuaternion(a * q0.w + c * b.w, a * q0.x + c * b.x,
                        a * q0.y + c * b.y, a * q0.z + c * b.z)
      .normalized();
}

double rotation_angle_between(const UnitQuaternion& q0,
                              const UnitQuaternion& q1) {
  // Relative quaternion conj(q0) * q1; atan2 keeps the angle well
  // conditioned near 0 and pi, unlike acos of the dot product.
  const double w = q0.w * q1.w + q0.x * q1.x + q0.y * q1.y + q0.z * q1.z;
  const Vec3 v(q0.w * q1.x - q0.x * q1.w - q0.y * q1.z + q0.z * q1.y,
               q0.w * q1.y + q0.x * q1.z - q0.y * q1.w - q0.z * q1.x,
               q0.w * q1.z - q0.x * q1.y + q0.y * q1.x - q0.z * q1.w);
  return 2.0 * std::atan2(v.norm(), std::abs(w));
}

RigidTransform compose(const RigidTransform& A, const RigidTransform& B) {
  return RigidTransform(A.R * B.R, A.R * B.t + A.t);
}

RigidTransform invert(const RigidTransform& T) {
  const Mat3 Rt = T.R.transpose();
  return RigidTransform(Rt, -(Rt * T.t));
}

Vec2 project(const CameraIntrinsics& K, const Vec3& p) {
  if (p.z() <= 1e-6) {
    throw BehindCamera("project: point at or behind the camera plane");
  }
  return Vec2(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
}

Vec3 unproject(const CameraIntrinsics& K, const Vec2& pixel, double depth) {
  return Vec3((pixel.x() - K.cx) / K.fx * depth,
              (pixel.y() - K.cy) / K.fy * depth, depth);
}

}  // namespace egohand

#include "egohand/hand.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace egohand {

std::vector<std::pair<int, int>> HandTemplate::bones() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(kNumJoints - 1);
  for (int j = 1; j < kNumJoints; ++j) out.emplace_back(parent[j], j);
  return out;
}

HandTemplate HandTemplate::standard(HandSide side) {
  HandTemplate t;
  const double mirror = (side == HandSide::Left) ? -1.0 : 1.0;

  // Wrist at the origin, fingers fanning out along +y with the palm facing
  // -z. Dimensions are a rough adult hand in meters.
  auto P = [&](double x, double y, double z) {
    return Vec3(mirror * x, y, z);
  };

  t.rest_joints[0] = P(0.000, 0.000, 0.000);  // wrist

  // Thumb (group 0): joints 1-3, tip 16.
  t.rest_joints[1] = P(0.030, 0.020, 0.000);
  t.rest_joints[2] = P(0.055, 0.045, 0.000);
  t.rest_joints[3] = P(0.070, 0.065, 0.000);
  t.rest_joints[16] = P(0.080, 0.080, 0.000);

  // Index (group 1): joints 4-6, tip 17.
  t.rest_joints[4] = P(0.025, 0.090, 0.000);
  t.rest_joints[5] = P(0.028, 0.125, 0.000);
  t.rest_joints[6] = P(0.030, 0.148, 0.000);
  t.rest_joints[17] = P(0.031, 0.168, 0.000);

  // Middle (group 2): joints 7-9, tip 18.
  t.rest_joints[7] = P(0.000, 0.095, 0.000);
  t.rest_joints[8] = P(0.000, 0.135, 0.000);
  t.rest_joints[9] = P(0.000, 0.160, 0.000);
  t.rest_joints[18] = P(0.000, 0.182, 0.000);

  // Ring (group 3): joints 10-12, tip 19.
  t.rest_joints[10] = P(-0.024, 0.090, 0.000);
  t.rest_joints[11] = P(-0.026, 0.127, 0.000);
  t.rest_joints[12] = P(-0.028, 0.150, 0.000);
  t.rest_joints[19] = P(-0.029, 0.170, 0.000);

  // Pinky (group 4): joints 13-15, tip 20.
  t.rest_joints[13] = P(-0.047, 0.080, 0.000);
  t.rest_joints[14] = P(-0.051, 0.108, 0.000);
  t.rest_joints[15] = P(-0.053, 0.128, 0.000);
  t.rest_joints[20] = P(-0.054, 0.145, 0.000);

  t.parent = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 0, 10, 11, 0, 13, 14,
              3,  6, 9, 12, 15};

  for (int j = 0; j < kNumJoints; ++j) {
    if (j == 0) {
      t.bone_group[j] = -1;
    } else if (j >= 16) {
      t.bone_group[j] = j - 16;
    } else {
      t.bone_group[j] = (j - 1) / 3;
    }
  }
  return t;
}

Joints3d forward_kinematics(const HandTemplate& tmpl, const HandState& state) {
  Joints3d out;
  std::array<Mat3, kNumJoints> chain;

  const Mat3 root_rot = aa_to_matrix(state.phi);
  chain[0] = root_rot;
  out.j[0] = state.gamma;

  // parent array is topologically ordered (parent index < child index).
  for (int j = 1; j < kNumJoints; ++j) {
    const int pa = tmpl.parent[j];
    const int group = tmpl.bone_group[j];
    const double scale = 1.0 + (group >= 0 ? state.beta[group] : 0.0);
    const Vec3 offset = scale * (tmpl.rest_joints[j] - tmpl.rest_joints[pa]);
    out.j[j] = out.j[pa] + chain[pa] * offset;
    if (j <= kNumArticulated) {
      chain[j] = chain[pa] * aa_to_matrix(state.theta[j - 1]);
    } else {
      chain[j] = chain[pa];  // tips articulate with their parent
    }
  }
  return out;
}

Joints2d project_joints(const CameraIntrinsics& K, const Joints3d& joints) {
  std::vector<int> behind;
  for (int j = 0; j < kNumJoints; ++j) {
    if (joints.j[j].z() <= 1e-6) behind.push_back(j);
  }
  if (!behind.empty()) {
    std::ostringstream msg;
    msg << "project_joints: joints behind camera:";
    for (int j : behind) msg << ' ' << j;
    throw BehindCamera(msg.str());
  }
  Joints2d out;
  for (int j = 0; j < kNumJoints; ++j) out.j[j] = project(K, joints.j[j]);
  return out;
}

namespace {

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double u = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + u * ab)).norm();
}

void stamp_disc(Mask& mask, const Vec2& c, double r) {
  const int x0 = std::max(0, int(std::ceil(c.x() - r)));
  const int x1 = std::min(mask.width() - 1, int(std::floor(c.x() + r)));
  const int y0 = std::max(0, int(std::ceil(c.y() - r)));
  const int y1 = std::min(mask.height() - 1, int(std::floor(c.y() + r)));
  const double r2 = r * r;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if ((Vec2(x, y) - c).squaredNorm() <= r2) mask.at(x, y) = 1;
}

void stamp_capsule(Mask& mask, const Vec2& a, const Vec2& b, double r) {
  const int x0 = std::max(0, int(std::ceil(std::min(a.x(), b.x()) - r)));
  const int x1 =
      std::min(mask.width() - 1, int(std::floor(std::max(a.x(), b.x()) + r)));
  const int y0 = std::max(0, int(std::ceil(std::min(a.y(), b.y()) - r)));
  const int y1 =
      std::min(mask.height() - 1, int(std::floor(std::max(a.y(), b.y()) + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (dist_point_segment(Vec2(x, y), a, b) <= r) mask.at(x, y) = 1;
}

}  // namespace

Mask render_hand_mask(const CameraIntrinsics& K, const Joints2d& joints,
                      double radius_px,
                      const std::vector<std::pair<int, int>>& bones,
                      const std::array<bool, kNumJoints>* valid) {
  Mask mask(K.width, K.height, 0);
  auto ok = [&](int j) { return valid == nullptr || (*valid)[j]; };

  for (int j = 0; j < kNumJoints; ++j) {
    if (ok(j)) stamp_disc(mask, joints.j[j], radius_px);
  }
  for (const auto& [a, b] : bones) {
    if (ok(a) && ok(b)) stamp_capsule(mask, joints.j[a], joints.j[b], radius_px);
  }
  return mask;
}

}  // namespace egohand

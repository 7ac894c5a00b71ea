#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "egohand/geometry.hpp"
#include "egohand/image.hpp"

namespace egohand {

inline constexpr int kNumJoints = 21;
inline constexpr int kNumArticulated = 15;
inline constexpr int kNumShape = 10;

enum class HandSide : std::uint8_t { Left, Right };

// Per-frame hand parameters: global orientation, 15 articulated joint
// rotations, 10 shape scalars (first 5 act as per-finger bone length
// multipliers, last 5 reserved/zero), and root translation in meters.
struct HandState {
  AxisAngle phi;
  std::array<AxisAngle, kNumArticulated> theta{};
  std::array<double, kNumShape> beta{};
  Vec3 gamma = Vec3::Zero();
  HandSide side = HandSide::Right;
};

// Simplified 21-joint kinematic tree. Joint 0 is the wrist (root); each
// finger contributes three articulated joints plus a tip.
struct HandTemplate {
  std::array<Vec3, kNumJoints> rest_joints{};
  std::array<int, kNumJoints> parent{};       // parent[0] == -1
  std::array<int, kNumJoints> bone_group{};   // beta index per joint, -1 at root

  // Bones as (parent, child) pairs, derived from the parent array.
  std::vector<std::pair<int, int>> bones() const;

  double rest_bone_length(int joint) const {
    return (rest_joints[joint] - rest_joints[parent[joint]]).norm();
  }

  static HandTemplate standard(HandSide side = HandSide::Right);
};

struct Joints3d {
  std::array<Vec3, kNumJoints> j{};
};

struct Joints2d {
  std::array<Vec2, kNumJoints> j{};
};

// FK contract: joint 0 lands at gamma; every child sits at
// parent + chain_rotation * (beta-scaled rest offset); phi rotates the whole
// hand about the root.
Joints3d forward_kinematics(const HandTemplate& tmpl, const HandState& state);

// Jointwise pinhole projection; throws BehindCamera listing offending
// joint indices when any z <= 1e-6.
Joints2d project_joints(const CameraIntrinsics& K, const Joints3d& joints);

// Binary hand mask: union of radius-r discs around each valid joint and
// radius-r capsules along each bone whose endpoints are both valid.
// Distances are measured from integer pixel centers; out-of-frame pixels
// are clipped. Joint validity defaults to all-valid.
Mask render_hand_mask(const CameraIntrinsics& K, const Joints2d& joints,
                      double radius_px,
                      const std::vector<std::pair<int, int>>& bones,
                      const std::array<bool, kNumJoints>* valid = nullptr);

}  // namespace egohand

#pragma once

#include <cstdint>
#include <vector>

#include "egohand/geometry.hpp"
#include "egohand/hand.hpp"

namespace egohand {

enum class FrameTag : std::uint8_t { Camera, Canonical, World };

struct FrameTagMismatch : Error {
  explicit FrameTagMismatch(const std::string& msg) : Error(msg) {}
};

// Time-indexed hand states with per-frame visibility. Camera-tagged
// sequences travel together with a camera trajectory of equal length.
struct MotionSequence {
  std::vector<HandState> states;
  std::vector<std::uint8_t> visible;  // bool per frame
  FrameTag frame_tag = FrameTag::Camera;
  double fps = 30.0;

  int size() const { return static_cast<int>(states.size()); }
  bool is_visible(int t) const { return visible[t] != 0; }
};

// Camera-to-world poses, timestamps strictly increasing.
struct CameraTrajectory {
  std::vector<RigidTransform> poses;
  std::vector<double> timestamps;

  int size() const { return static_cast<int>(poses.size()); }
};

// Flat 61-dim state vector: phi(3), theta(45), beta(10), gamma(3).
inline constexpr int kStateDim = 61;

Eigen::VectorXd state_to_vector(const HandState& s);
HandState vector_to_state(const Eigen::VectorXd& v,
                          HandSide side = HandSide::Right);

}  // namespace egohand

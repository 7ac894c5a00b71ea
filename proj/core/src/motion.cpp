#include "egohand/motion.hpp"

namespace egohand {

Eigen::VectorXd state_to_vector(const HandState& s) {
  Eigen::VectorXd v(kStateDim);
  v.segment<3>(0) = s.phi.v;
  for (int j = 0; j < kNumArticulated; ++j)
    v.segment<3>(3 + 3 * j) = s.theta[j].v;
  for (int k = 0; k < kNumShape; ++k) v[48 + k] = s.beta[k];
  v.segment<3>(58) = s.gamma;
  return v;
}

HandState vector_to_state(const Eigen::VectorXd& v, HandSide side) {
  HandState s;
  s.phi = AxisAngle(Vec3(v.segment<3>(0)));
  for (int j = 0; j < kNumArticulated; ++j)
    s.theta[j] = AxisAngle(Vec3(v.segment<3>(3 + 3 * j)));
  for (int k = 0; k < kNumShape; ++k) s.beta[k] = v[48 + k];
  s.gamma = v.segment<3>(58);
  s.side = side;
  return s;
}

}  // namespace egohand

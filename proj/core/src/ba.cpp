#include "egohand/ba.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace egohand {

namespace {

constexpr double kBehindSentinel = 1e6;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Vec3 anchor_ray(const CameraIntrinsics& K, const Vec2& px) {
  return Vec3((px.x() - K.cx) / K.fx, (px.y() - K.cy) / K.fy, 1.0);
}

struct ObsRef {
  int track;
  int obs;
  int frame;
  int anchor_frame;
  double weight;
};

// Flattened non-anchor observations; anchor residuals vanish identically.
std::vector<ObsRef> flatten(const BAProblem& p, bool weighted_only) {
  std::vector<ObsRef> out;
  for (int l = 0; l < int(p.tracks.size()); ++l) {
    const auto& tr = p.tracks[l];
    const int anchor = tr.observations.front().frame;
    for (int o = 0; o < int(tr.observations.size()); ++o) {
      const auto& ob = tr.observations[o];
      if (ob.frame == anchor) continue;
      if (weighted_only && !(ob.confidence > 0.0)) continue;
      out.push_back({l, o, ob.frame, anchor, ob.confidence});
    }
  }
  return out;
}

}  // namespace

std::vector<FeatureTrack> mask_confidences(
    const std::vector<FeatureTrack>& tracks, const std::vector<Mask>& masks) {
  std::vector<FeatureTrack> out = tracks;
  for (auto& tr : out) {
    for (auto& ob : tr.observations) {
      const Mask& m = masks.at(ob.frame);
      const double u = ob.pixel.x();
      const double v = ob.pixel.y();
      if (u < -0.5 || u > m.width() - 0.5 || v < -0.5 ||
          v > m.height() - 0.5) {
        std::ostringstream msg;
        msg << "mask_confidences: pixel (" << u << ", " << v
            << ") outside mask of frame " << ob.frame;
        throw PixelOutOfBounds(msg.str());
      }
      const int px = std::min(int(std::lround(u)), m.width() - 1);
      const int py = std::min(int(std::lround(v)), m.height() - 1);
      ob.confidence *= 1.0 - double(m.at(std::max(px, 0), std::max(py, 0)));
    }
  }
  return out;
}

RigidTransform se3_exp(const Eigen::Matrix<double, 6, 1>& xi) {
  const Vec3 v = xi.head<3>();
  const Vec3 w = xi.tail<3>();
  const double theta = w.norm();
  Mat3 R, V;
  if (theta < 1e-10) {
    const Mat3 W = skew(w);
    R = Mat3::Identity() + W + 0.5 * W * W;
    V = Mat3::Identity() + 0.5 * W;
  } else {
    const Mat3 W = skew(w / theta);
    const double s = std::sin(theta), c = std::cos(theta);
    R = Mat3::Identity() + s * W + (1.0 - c) * W * W;
    V = Mat3::Identity() + ((1.0 - c) / theta) * W +
        ((theta - s) / theta) * W * W;
  }
  return RigidTransform(R, V * v);
}

RigidTransform apply_pose_increment(const RigidTransform& cam_to_world,
                                    const Eigen::Matrix<double, 6, 1>& xi) {
  const RigidTransform w2c = invert(cam_to_world);
  return invert(compose(se3_exp(xi), w2c));
}

namespace {

// World point of landmark l for the given state; poses are world-to-camera.
Vec3 landmark_world(const BAProblem& p, const std::vector<RigidTransform>& w2c,
                    const std::vector<double>& inv_depths, int l) {
  const auto& tr = p.tracks[l];
  const int a = tr.observations.front().frame;
  const Vec3 xa = anchor_ray(p.intrinsics, tr.observations.front().pixel) /
                  inv_depths[l];
  const RigidTransform& Pa = w2c[a];
  return Pa.R.transpose() * (xa - Pa.t);
}

Vec2 project_guarded(const CameraIntrinsics& K, const Vec3& pc, bool* ok) {
  if (pc.z() <= 1e-6) {
    *ok = false;
    return Vec2(kBehindSentinel, kBehindSentinel);
  }
  *ok = true;
  return Vec2(K.fx * pc.x() / pc.z() + K.cx, K.fy * pc.y() / pc.z() + K.cy);
}

double total_cost(const BAProblem& p, const std::vector<RigidTransform>& w2c,
                  const std::vector<double>& inv_depths,
                  const std::vector<ObsRef>& obs) {
  double cost = 0.0;
  for (const ObsRef& ref : obs) {
    const Vec3 Xw = landmark_world(p, w2c, inv_depths, ref.track);
    const Vec3 pc = w2c[ref.frame].apply(Xw);
    bool ok;
    const Vec2 pred = project_guarded(p.intrinsics, pc, &ok);
    const Vec2 r = pred - p.tracks[ref.track].observations[ref.obs].pixel;
    cost += ref.weight * (ok ? r.squaredNorm()
                             : kBehindSentinel * kBehindSentinel);
  }
  return cost;
}

}  // namespace

ResidualReport reprojection_residuals(
    const BAProblem& problem, const std::vector<RigidTransform>& poses,
    const std::vector<double>& inverse_depths) {
  std::vector<RigidTransform> w2c(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) w2c[i] = invert(poses[i]);

  ResidualReport rep;
  double wsum = 0.0, werr = 0.0;
  for (std::size_t l = 0; l < problem.tracks.size(); ++l) {
    const auto& tr = problem.tracks[l];
    const int anchor = tr.observations.front().frame;
    const Vec3 Xw = landmark_world(problem, w2c, inverse_depths, int(l));
    for (const auto& ob : tr.observations) {
      Vec2 r;
      if (ob.frame == anchor) {
        r = Vec2::Zero();  // exact by the anchored parameterization
      } else {
        bool ok;
        const Vec2 pred =
            project_guarded(problem.intrinsics, w2c[ob.frame].apply(Xw), &ok);
        r = ok ? Vec2(pred - ob.pixel)
               : Vec2(kBehindSentinel, kBehindSentinel);
      }
      rep.residuals.push_back(r);
      wsum += 2.0 * ob.confidence;
      werr += ob.confidence * r.squaredNorm();
    }
  }
  rep.weighted_rms = wsum > 0.0 ? std::sqrt(werr / wsum) : 0.0;
  return rep;
}

std::vector<ObsJacobian> evaluate_jacobians(
    const BAProblem& problem, const std::vector<RigidTransform>& poses,
    const std::vector<double>& inverse_depths) {
  std::vector<RigidTransform> w2c(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) w2c[i] = invert(poses[i]);

  const auto obs = flatten(problem, /*weighted_only=*/false);
  std::vector<ObsJacobian> out;
  out.reserve(obs.size());

  for (const ObsRef& ref : obs) {
    const auto& tr = problem.tracks[ref.track];
    const auto& ob = tr.observations[ref.obs];
    const double rho = inverse_depths[ref.track];
    const Vec3 xa =
        anchor_ray(problem.intrinsics, tr.observations.front().pixel) / rho;

    const RigidTransform& Pa = w2c[ref.anchor_frame];
    const RigidTransform& Pt = w2c[ref.frame];
    const Vec3 Xw = Pa.R.transpose() * (xa - Pa.t);
    const Vec3 pc = Pt.apply(Xw);

    ObsJacobian J;
    J.track = ref.track;
    J.obs = ref.obs;

    bool ok;
    const Vec2 pred = project_guarded(problem.intrinsics, pc, &ok);
    J.residual = ok ? Vec2(pred - ob.pixel)
                    : Vec2(kBehindSentinel, kBehindSentinel);
    if (!ok) {
      J.d_pose.setZero();
      J.d_pose_anchor.setZero();
      J.d_inv_depth.setZero();
      out.push_back(J);
      continue;
    }

    const double z = pc.z();
    Eigen::Matrix<double, 2, 3> Jproj;
    Jproj << problem.intrinsics.fx / z, 0, -problem.intrinsics.fx * pc.x() / (z * z),
        0, problem.intrinsics.fy / z, -problem.intrinsics.fy * pc.y() / (z * z);

    Eigen::Matrix<double, 3, 6> Dt;
    Dt.leftCols<3>() = Mat3::Identity();
    Dt.rightCols<3>() = -skew(pc);
    J.d_pose = Jproj * Dt;

    Eigen::Matrix<double, 3, 6> Da;
    Da.leftCols<3>() = Mat3::Identity();
    Da.rightCols<3>() = -skew(xa);
    J.d_pose_anchor = -Jproj * (Pt.R * Pa.R.transpose()) * Da;

    J.d_inv_depth = Jproj * (Pt.R * (Pa.R.transpose() * xa)) * (-1.0 / rho);
    out.push_back(J);
  }
  return out;
}

BASolution solve_ba(const BAProblem& problem, const BAOptions& opts) {
  const int T = int(problem.init_poses.size());
  const int L = int(problem.tracks.size());
  if (T < 2 || L < 6) {
    throw RankDeficient("solve_ba: need at least 2 frames and 6 tracks");
  }
  for (const auto& tr : problem.tracks) {
    if (tr.observations.size() < 2) {
      throw RankDeficient("solve_ba: track with fewer than 2 observations");
    }
  }

  // Gauge-normalize so pose 0 is the identity.
  const RigidTransform g = invert(problem.init_poses[0]);
  std::vector<RigidTransform> w2c(T);
  for (int t = 0; t < T; ++t) {
    w2c[t] = invert(compose(g, problem.init_poses[t]));
  }
  std::vector<double> rho = problem.init_inverse_depths;

  const auto obs = flatten(problem, /*weighted_only=*/true);

  // A landmark is solvable when it has weighted non-anchor observations;
  // track 0 stays frozen as the scale gauge.
  std::vector<int> lm_var(L, -1);
  {
    std::vector<char> seen(L, 0);
    for (const ObsRef& o : obs) seen[o.track] = 1;
    int idx = 0;
    for (int l = 1; l < L; ++l) {
      if (seen[l]) lm_var[l] = idx++;
    }
  }
  const int n_lm = [&] {
    int n = 0;
    for (int l = 0; l < L; ++l) n += lm_var[l] >= 0;
    return n;
  }();
  const int n_pose = 6 * (T - 1);

  BAProblem gauged = problem;  // same tracks/intrinsics; poses passed per call

  double cost = total_cost(gauged, w2c, rho, obs);
  if (!std::isfinite(cost)) {
    throw Diverged("solve_ba: non-finite cost at the initial state");
  }

  BASolution sol;
  sol.cost_history.push_back(cost);

  double lambda = opts.damping;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    // Assemble the normal equations in Schur form.
    std::vector<RigidTransform> c2w(T);
    for (int t = 0; t < T; ++t) c2w[t] = invert(w2c[t]);
    const auto jacs = evaluate_jacobians(gauged, c2w, rho);

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_pose, n_pose);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n_pose, std::max(n_lm, 1));
    Eigen::VectorXd C = Eigen::VectorXd::Zero(std::max(n_lm, 1));
    Eigen::VectorXd gp = Eigen::VectorXd::Zero(n_pose);
    Eigen::VectorXd gl = Eigen::VectorXd::Zero(std::max(n_lm, 1));

    auto pose_col = [](int frame) { return 6 * (frame - 1); };

    std::size_t ji = 0;
    for (const ObsRef& ref : obs) {
      // evaluate_jacobians covers all non-anchor obs, including zero-weight
      // ones; advance to this observation.
      while (jacs[ji].track != ref.track || jacs[ji].obs != ref.obs) ++ji;
      const ObsJacobian& J = jacs[ji];
      const double w = ref.weight;

      const int t = ref.frame, a = ref.anchor_frame;
      const int lv = lm_var[ref.track];

      if (t > 0) {
        B.block<6, 6>(pose_col(t), pose_col(t)) +=
            w * J.d_pose.transpose() * J.d_pose;
        gp.segment<6>(pose_col(t)) += w * J.d_pose.transpose() * J.residual;
      }
      if (a > 0) {
        B.block<6, 6>(pose_col(a), pose_col(a)) +=
            w * J.d_pose_anchor.transpose() * J.d_pose_anchor;
        gp.segment<6>(pose_col(a)) +=
            w * J.d_pose_anchor.transpose() * J.residual;
      }
      if (t > 0 && a > 0) {
        const Eigen::Matrix<double, 6, 6> cross =
            w * J.d_pose.transpose() * J.d_pose_anchor;
        B.block<6, 6>(pose_col(t), pose_col(a)) += cross;
        B.block<6, 6>(pose_col(a), pose_col(t)) += cross.transpose();
      }
      if (lv >= 0) {
        C[lv] += w * J.d_inv_depth.squaredNorm();
        gl[lv] += w * J.d_inv_depth.dot(J.residual);
        if (t > 0) {
          E.col(lv).segment<6>(pose_col(t)) +=
              w * J.d_pose.transpose() * J.d_inv_depth;
        }
        if (a > 0) {
          E.col(lv).segment<6>(pose_col(a)) +=
              w * J.d_pose_anchor.transpose() * J.d_inv_depth;
        }
      }
    }

    if (!B.allFinite() || !C.allFinite()) {
      throw RankDeficient("solve_ba: non-finite normal equations");
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::VectorXd Cd = C.array() + lambda;
      Eigen::MatrixXd S = B;
      S.diagonal().array() += lambda;
      Eigen::VectorXd b = -gp;
      if (n_lm > 0) {
        const Eigen::VectorXd Cinv = Cd.cwiseInverse();
        S -= E * Cinv.asDiagonal() * E.transpose();
        b += E * (Cinv.asDiagonal() * gl);
      }

      Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
      Eigen::VectorXd dp = ldlt.solve(b);
      if (ldlt.info() != Eigen::Success || !dp.allFinite()) {
        if (lambda > 1e12) {
          throw RankDeficient("solve_ba: normal equations singular beyond damping");
        }
        lambda *= 10.0;
        continue;
      }

      std::vector<RigidTransform> w2c_new = w2c;
      for (int t = 1; t < T; ++t) {
        Eigen::Matrix<double, 6, 1> xi = dp.segment<6>(6 * (t - 1));
        w2c_new[t] = compose(se3_exp(xi), w2c[t]);
      }
      std::vector<double> rho_new = rho;
      if (n_lm > 0) {
        const Eigen::VectorXd Cinv = Cd.cwiseInverse();
        const Eigen::VectorXd dl =
            Cinv.asDiagonal() * (-gl - E.transpose() * dp);
        for (int l = 0; l < L; ++l) {
          if (lm_var[l] >= 0) {
            rho_new[l] = rho[l] + dl[lm_var[l]];
            if (rho_new[l] < 1e-8) rho_new[l] = 1e-8;  // keep depth positive
          }
        }
      }

      const double new_cost = total_cost(gauged, w2c_new, rho_new, obs);
      if (std::isfinite(new_cost) && new_cost <= cost) {
        const double rel_drop = (cost - new_cost) / std::max(cost, 1e-300);
        w2c = std::move(w2c_new);
        rho = std::move(rho_new);
        cost = new_cost;
        sol.cost_history.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_drop < opts.rel_cost_tolerance) {
          iter = opts.max_iterations;  // converged
        }
      } else {
        if (!std::isfinite(new_cost)) {
          throw Diverged("solve_ba: cost became non-finite");
        }
        lambda *= 10.0;
      }
    }
    if (!accepted) break;  // no progress at any damping level
  }

  sol.iterations = int(sol.cost_history.size()) - 1;
  sol.inverse_depths = rho;
  sol.poses.poses.resize(T);
  sol.poses.timestamps.resize(T);
  for (int t = 0; t < T; ++t) {
    sol.poses.poses[t] = invert(w2c[t]);
    sol.poses.timestamps[t] = double(t);
  }
  std::vector<RigidTransform> c2w = sol.poses.poses;
  sol.final_rms_residual =
      reprojection_residuals(gauged, c2w, rho).weighted_rms;
  return sol;
}

}  // namespace egohand

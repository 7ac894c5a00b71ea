#include "egohand/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace egohand {

namespace {

void check_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Degenerate(std::string(what) + ": length mismatch");
}

PointSeq joints_at(const Joints3d& j) {
  return PointSeq(j.j.begin(), j.j.end());
}

double mpjpe_m(const JointsSeq& pred, const JointsSeq& gt,
               const SimilarityTransform& map) {
  double acc = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    double frame = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      frame += (map.apply(pred[t].j[j]) - gt[t].j[j]).norm();
    }
    acc += frame / kNumJoints;
  }
  return acc / double(pred.size());
}

}  // namespace

SimilarityTransform umeyama_align(const PointSeq& X, const PointSeq& Y,
                                  bool with_scale) {
  const std::size_t n = X.size();
  check_same_length(n, Y.size(), "umeyama_align");
  if (n < 3) throw Degenerate("umeyama_align: need at least 3 points");

  Vec3 mx = Vec3::Zero(), my = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= double(n);
  my /= double(n);

  Mat3 cov = Mat3::Zero();
  double var_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 xc = X[i] - mx;
    cov += (Y[i] - my) * xc.transpose();
    var_x += xc.squaredNorm();
  }
  cov /= double(n);
  var_x /= double(n);
  if (var_x <= 1e-18) {
    throw Degenerate("umeyama_align: coincident source points");
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (d[1] <= 1e-12 * std::max(d[0], 1e-300)) {
    throw Degenerate("umeyama_align: rank-deficient (collinear) points");
  }

  Vec3 flip = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    flip[2] = -1.0;  // reflection fix on the smallest singular direction
  }

  SimilarityTransform out;
  out.R = svd.matrixU() * flip.asDiagonal() * svd.matrixV().transpose();
  out.s = with_scale ? d.dot(flip) / var_x : 1.0;
  if (with_scale && !(out.s > 0.0)) {
    throw Degenerate("umeyama_align: nonpositive optimal scale");
  }
  out.t = my - out.s * (out.R * mx);
  return out;
}

double pa_mpjpe(const JointsSeq& pred, const JointsSeq& gt) {
  check_same_length(pred.size(), gt.size(), "pa_mpjpe");
  double acc = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const SimilarityTransform map =
        umeyama_align(joints_at(pred[t]), joints_at(gt[t]), true);
    double frame = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      frame += (map.apply(pred[t].j[j]) - gt[t].j[j]).norm();
    }
    acc += frame / kNumJoints;
  }
  return 1000.0 * acc / double(pred.size());
}

double auc_pck(const JointsSeq& pred, const JointsSeq& gt) {
  check_same_length(pred.size(), gt.size(), "auc_pck");
  std::vector<double> errors_mm;
  errors_mm.reserve(pred.size() * kNumJoints);
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const SimilarityTransform map =
        umeyama_align(joints_at(pred[t]), joints_at(gt[t]), true);
    for (int j = 0; j < kNumJoints; ++j) {
      errors_mm.push_back(1000.0 *
                          (map.apply(pred[t].j[j]) - gt[t].j[j]).norm());
    }
  }
  // Exact integral of the empirical PCK curve over tau in [0, 50]:
  // each error contributes (50 - min(e, 50)) to the area.
  double area = 0.0;
  for (double e : errors_mm) area += 50.0 - std::min(e, 50.0);
  return area / (50.0 * double(errors_mm.size()));
}

namespace {

double segment_mpjpe(const JointsSeq& pred, const JointsSeq& gt,
                     bool align_first_frame_only) {
  PointSeq src, dst;
  if (align_first_frame_only) {
    src = joints_at(pred[0]);
    dst = joints_at(gt[0]);
  } else {
    for (std::size_t t = 0; t < pred.size(); ++t) {
      for (int j = 0; j < kNumJoints; ++j) {
        src.push_back(pred[t].j[j]);
        dst.push_back(gt[t].j[j]);
      }
    }
  }
  const SimilarityTransform map = umeyama_align(src, dst, /*with_scale=*/false);
  return mpjpe_m(pred, gt, map);
}

double segmented_metric(const JointsSeq& pred, const JointsSeq& gt,
                        bool first_frame_alignment) {
  check_same_length(pred.size(), gt.size(), "w_mpjpe");
  if (pred.empty()) throw Degenerate("w_mpjpe: empty sequence");
  constexpr std::size_t kSegment = 100;
  double acc = 0.0;
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start < pred.size(); start += kSegment) {
    const std::size_t end = std::min(start + kSegment, pred.size());
    const JointsSeq ps(pred.begin() + start, pred.begin() + end);
    const JointsSeq gs(gt.begin() + start, gt.begin() + end);
    acc += segment_mpjpe(ps, gs, first_frame_alignment);
    ++n_seg;
  }
  return 1000.0 * acc / double(n_seg);
}

}  // namespace

double w_mpjpe(const JointsSeq& pred, const JointsSeq& gt) {
  return segmented_metric(pred, gt, /*first_frame_alignment=*/true);
}

double wa_mpjpe(const JointsSeq& pred, const JointsSeq& gt) {
  return segmented_metric(pred, gt, /*first_frame_alignment=*/false);
}

double rte(const PointSeq& pred_root, const PointSeq& gt_root) {
  check_same_length(pred_root.size(), gt_root.size(), "rte");
  double path = 0.0;
  for (std::size_t t = 1; t < gt_root.size(); ++t) {
    path += (gt_root[t] - gt_root[t - 1]).norm();
  }
  if (!(path > 0.0)) throw ZeroDisplacement("rte: zero GT displacement");

  const SimilarityTransform map =
      umeyama_align(pred_root, gt_root, /*with_scale=*/false);
  double err = 0.0;
  for (std::size_t t = 0; t < pred_root.size(); ++t) {
    err += (map.apply(pred_root[t]) - gt_root[t]).norm();
  }
  err /= double(pred_root.size());
  return 100.0 * err / path;
}

double accel_error(const JointsSeq& pred, const JointsSeq& gt, double fps) {
  check_same_length(pred.size(), gt.size(), "accel_error");
  if (pred.size() < 3) throw TooShort("accel_error: need at least 3 frames");
  const double f2 = fps * fps;
  double acc = 0.0;
  for (std::size_t t = 1; t + 1 < pred.size(); ++t) {
    double frame = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      const Vec3 ap =
          (pred[t + 1].j[j] - 2.0 * pred[t].j[j] + pred[t - 1].j[j]) * f2;
      const Vec3 ag =
          (gt[t + 1].j[j] - 2.0 * gt[t].j[j] + gt[t - 1].j[j]) * f2;
      frame += (ap - ag).norm();
    }
    acc += frame / kNumJoints;
  }
  return acc / double(pred.size() - 2);
}

namespace {

double rms_after(const PointSeq& pred, const PointSeq& gt,
                 const SimilarityTransform& map) {
  double acc = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    acc += (map.apply(pred[t]) - gt[t]).squaredNorm();
  }
  return std::sqrt(acc / double(pred.size()));
}

PointSeq positions_of(const CameraTrajectory& traj) {
  PointSeq out;
  out.reserve(traj.poses.size());
  for (const auto& p : traj.poses) out.push_back(p.t);
  return out;
}

}  // namespace

double ate(const PointSeq& pred, const PointSeq& gt) {
  check_same_length(pred.size(), gt.size(), "ate");
  const SimilarityTransform map = umeyama_align(pred, gt, /*with_scale=*/true);
  return 1000.0 * rms_after(pred, gt, map);
}

double ate(const CameraTrajectory& pred, const CameraTrajectory& gt) {
  return ate(positions_of(pred), positions_of(gt));
}

double ate_s(const PointSeq& pred, const PointSeq& gt, double alpha) {
  check_same_length(pred.size(), gt.size(), "ate_s");
  PointSeq scaled = pred;
  for (auto& p : scaled) p *= alpha;
  const SimilarityTransform map =
      umeyama_align(scaled, gt, /*with_scale=*/false);
  return 1000.0 * rms_after(scaled, gt, map);
}

double ate_s(const CameraTrajectory& pred, const CameraTrajectory& gt,
             double alpha) {
  return ate_s(positions_of(pred), positions_of(gt), alpha);
}

double fid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() < 2 || B.rows() < 2) {
    throw TooFewSamples("fid: need at least 2 samples per side");
  }
  if (A.cols() != B.cols()) {
    throw TooFewSamples("fid: sample dimension mismatch");
  }
  const Eigen::Index d = A.cols();

  auto moments = [d](const Eigen::MatrixXd& X, Eigen::VectorXd& mu,
                     Eigen::MatrixXd& sigma) {
    mu = X.colwise().mean();
    const Eigen::MatrixXd C = X.rowwise() - mu.transpose();
    sigma = C.transpose() * C / double(X.rows() - 1);
    sigma += 1e-8 * Eigen::MatrixXd::Identity(d, d);
  };

  Eigen::VectorXd mu1, mu2;
  Eigen::MatrixXd s1, s2;
  moments(A, mu1, s1);
  moments(B, mu2, s2);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(s1);
  const Eigen::VectorXd l1 = es1.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd root1 = es1.eigenvectors() *
                                l1.cwiseSqrt().asDiagonal() *
                                es1.eigenvectors().transpose();

  Eigen::MatrixXd M = root1 * s2 * root1;
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esM(M);
  const double tr_cross = esM.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double val = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() -
                     2.0 * tr_cross;
  return std::max(val, 0.0);
}

Eigen::MatrixXd states_to_samples(const std::vector<HandState>& states) {
  Eigen::MatrixXd out(states.size(), kStateDim);
  for (std::size_t i = 0; i < states.size(); ++i) {
    out.row(i) = state_to_vector(states[i]).transpose();
  }
  return out;
}

CameraFrameLosses camera_frame_losses(
    const std::vector<HandState>& pred_states, const JointsSeq& pred_j3,
    const std::vector<Joints2d>& pred_j2,
    const std::vector<HandState>& gt_states, const JointsSeq& gt_j3,
    const std::vector<Joints2d>& gt_j2, const LossWeights& lambdas) {
  const std::size_t T = pred_states.size();
  check_same_length(T, gt_states.size(), "camera_frame_losses");
  check_same_length(pred_j3.size(), gt_j3.size(), "camera_frame_losses");
  check_same_length(pred_j2.size(), gt_j2.size(), "camera_frame_losses");

  CameraFrameLosses out;
  for (std::size_t t = 0; t < T; ++t) {
    double l3 = 0.0, l2 = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      l3 += (pred_j3[t].j[j] - gt_j3[t].j[j]).lpNorm<1>();
      l2 += (pred_j2[t].j[j] - gt_j2[t].j[j]).lpNorm<1>();
    }
    out.l_3d += l3 / kNumJoints;
    out.l_2d += l2 / kNumJoints;

    double ltheta = 0.0;
    for (int j = 0; j < kNumArticulated; ++j) {
      ltheta += (pred_states[t].theta[j].v - gt_states[t].theta[j].v)
                    .squaredNorm();
    }
    double lbeta = 0.0;
    for (int k = 0; k < kNumShape; ++k) {
      const double db = pred_states[t].beta[k] - gt_states[t].beta[k];
      lbeta += db * db;
    }
    out.l_mano += ltheta / kNumArticulated + lbeta / kNumShape;
  }
  out.l_3d /= double(T);
  out.l_2d /= double(T);
  out.l_mano /= double(T);
  out.total = lambdas.lambda_3d * out.l_3d + lambdas.lambda_2d * out.l_2d +
              lambdas.lambda_mano * out.l_mano;
  return out;
}

}  // namespace egohand

#pragma once

#include <optional>
#include <vector>

#include "egohand/motion.hpp"

namespace egohand {

struct Degenerate : Error {
  explicit Degenerate(const std::string& msg) : Error(msg) {}
};

struct ZeroDisplacement : Error {
  explicit ZeroDisplacement(const std::string& msg) : Error(msg) {}
};

struct TooShort : Error {
  explicit TooShort(const std::string& msg) : Error(msg) {}
};

struct TooFewSamples : Error {
  explicit TooFewSamples(const std::string& msg) : Error(msg) {}
};

// y ~ s * R * x + t
struct SimilarityTransform {
  double s = 1.0;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return s * (R * p) + t; }
};

using JointsSeq = std::vector<Joints3d>;
using PointSeq = std::vector<Vec3>;

struct MetricReport {
  double pa_mpjpe = 0.0;  // mm
  double auc = 0.0;       // unitless, [0,1]
  double w_mpjpe = 0.0;   // mm
  double wa_mpjpe = 0.0;  // mm
  double rte = 0.0;       // percent
  double accel = 0.0;     // m/s^2
  double ate = 0.0;       // mm
  double ate_s = 0.0;     // mm
  double fid = 0.0;       // unitless
};

// Least-squares similarity (rigid when with_scale is false) mapping X onto
// Y, reflection-corrected. Throws Degenerate for coincident or collinear
// point sets or N < 3.
SimilarityTransform umeyama_align(const PointSeq& X, const PointSeq& Y,
                                  bool with_scale);

// Per-frame Procrustes alignment (with scale) of predicted joints onto GT,
// then mean joint distance averaged over frames, in millimeters.
double pa_mpjpe(const JointsSeq& pred, const JointsSeq& gt);

// Fraction of Procrustes-aligned joint errors under threshold tau,
// integrated over tau in [0, 50] mm (exact empirical-CDF integral),
// normalized to [0, 1].
double auc_pck(const JointsSeq& pred, const JointsSeq& gt);

// World-frame MPJPE over consecutive 100-frame segments (final short
// segment kept). W aligns each segment rigidly on its first frame's joints;
// WA aligns all joints of the segment jointly. Plain mean over segments, mm.
double w_mpjpe(const JointsSeq& pred, const JointsSeq& gt);
double wa_mpjpe(const JointsSeq& pred, const JointsSeq& gt);

// Rigid-aligned mean root position error normalized by the total GT path
// displacement, in percent.
double rte(const PointSeq& pred_root, const PointSeq& gt_root);

// Mean L2 difference between predicted and GT joint accelerations (second
// central differences scaled by fps^2), m/s^2.
double accel_error(const JointsSeq& pred, const JointsSeq& gt, double fps);

// ATE: similarity alignment (with scale), then RMS position error (mm).
double ate(const PointSeq& pred, const PointSeq& gt);
double ate(const CameraTrajectory& pred, const CameraTrajectory& gt);

// ATE-S: scale pred by the estimated alpha, rigid-only alignment, RMS (mm).
double ate_s(const PointSeq& pred, const PointSeq& gt, double alpha);
double ate_s(const CameraTrajectory& pred, const CameraTrajectory& gt,
             double alpha);

// Frechet distance between Gaussian fits of two sample sets (rows =
// samples). Covariances are regularized by +1e-8 I; the cross term uses the
// symmetric eigendecomposition of S1^(1/2) S2 S1^(1/2).
double fid(const Eigen::MatrixXd& samples_a, const Eigen::MatrixXd& samples_b);

// Stacks 61-dim state vectors as FID samples.
Eigen::MatrixXd states_to_samples(const std::vector<HandState>& states);

struct LossWeights {
  double lambda_3d = 0.05;
  double lambda_2d = 0.01;
  double lambda_mano = 0.001;
};

struct CameraFrameLosses {
  double l_3d = 0.0;    // mean over joints of per-joint L1, then over frames
  double l_2d = 0.0;
  double l_mano = 0.0;  // mean squared theta error + mean squared beta error
  double total = 0.0;   // lambda-weighted sum
};

CameraFrameLosses camera_frame_losses(
    const std::vector<HandState>& pred_states, const JointsSeq& pred_j3,
    const std::vector<Joints2d>& pred_j2,
    const std::vector<HandState>& gt_states, const JointsSeq& gt_j3,
    const std::vector<Joints2d>& gt_j2, const LossWeights& lambdas = {});

}  // namespace egohand

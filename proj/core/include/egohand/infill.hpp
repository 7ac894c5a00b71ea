#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egohand/motion.hpp"

namespace egohand {

struct NoContext : Error {
  explicit NoContext(const std::string& msg) : Error(msg) {}
};

struct WindowTooLong : Error {
  explicit WindowTooLong(const std::string& msg) : Error(msg) {}
};

struct ModelUninitialized : Error {
  explicit ModelUninitialized(const std::string& msg) : Error(msg) {}
};

struct EmptyDataset : Error {
  explicit EmptyDataset(const std::string& msg) : Error(msg) {}
};

struct DivergedLoss : Error {
  explicit DivergedLoss(const std::string& msg) : Error(msg) {}
};

// Maximal runs of invisible frames, inclusive [start, end] intervals.
// Anchors are the nearest visible frames on each side, -1 when the gap
// touches the sequence boundary.
struct GapSet {
  struct Gap {
    int start = 0;
    int end = 0;
    int left_anchor = -1;
    int right_anchor = -1;
  };
  std::vector<Gap> gaps;

  bool empty() const { return gaps.empty(); }
  int total_gap_frames() const {
    int n = 0;
    for (const auto& g : gaps) n += g.end - g.start + 1;
    return n;
  }
  bool covers(int t) const {
    for (const auto& g : gaps)
      if (t >= g.start && t <= g.end) return true;
    return false;
  }
};

GapSet detect_gaps(const MotionSequence& seq);

// Interpolation fill: gamma and beta linear in time between anchors, phi and
// each theta joint SLERPed. Gaps touching a sequence boundary hold the
// nearest anchor constant. Visible frames pass through untouched.
// Throws NoContext when no frame is visible.
MotionSequence interpolate_init(const MotionSequence& seq, const GapSet& gaps);

// Baseline: gap frames copy the nearest preceding visible state (the
// following one for leading gaps).
MotionSequence last_pose_fill(const MotionSequence& seq, const GapSet& gaps);

// Marks interior frame intervals invisible for training augmentation.
// Frames 0 and T-1 stay visible; the total masked length never exceeds
// max_gap_fraction * T. Gap lengths are uniform on {1..floor(fraction*T)}.
MotionSequence mask_augment(const MotionSequence& seq, std::uint64_t seed,
                            double max_gap_fraction, int n_gaps = 1);

// L_F term weights: translation, orientation, pose, shape.
struct InfillLossWeights {
  double w_trans = 0.05;   // gamma_1, on Gamma
  double w_orient = 2.0;   // gamma_2, on Phi
  double w_pose = 2.0;     // gamma_3, on Theta
  double w_shape = 0.05;   // gamma_4, on beta
};

struct InfillerConfig {
  int token_dim = 64;
  int layers = 3;
  int heads = 4;
  int ffn_dim = 256;
  int max_window = 128;
  int input_dim = kStateDim + 1;  // state vector + visibility channel
  int output_dim = kStateDim;
};

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct InfillBatchItem {
  MotionSequence init;    // interpolation-initialized sequence
  GapSet gaps;
  MotionSequence target;  // ground truth for the same frames
};

// Transformer encoder over per-frame state tokens with sinusoidal positional
// embeddings. Predicts residual corrections over the interpolation init;
// the output head is zero-initialized so a fresh model is the identity.
//
// Gradients are computed by closed-form layer backward passes; see
// loss_and_gradient.
class InfillerModel {
 public:
  InfillerModel() = default;
  InfillerModel(const InfillerConfig& cfg, std::uint64_t seed);

  bool initialized() const { return !params_.empty(); }
  const InfillerConfig& config() const { return cfg_; }

  const std::vector<double>& parameters() const { return params_; }
  std::vector<double>& mutable_parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  // tokens: T x input_dim. Returns T x output_dim residuals.
  RowMat forward(const RowMat& tokens) const;

  // Mean over the batch of the per-sequence L_F (summed over gap frames).
  // Accumulates d(loss)/d(params) into grad when non-null.
  double loss_and_gradient(const std::vector<InfillBatchItem>& batch,
                           const InfillLossWeights& weights,
                           std::vector<double>* grad) const;

 private:
  friend struct ModelOps;
  InfillerConfig cfg_;
  std::vector<double> params_;
};

// Builds the model input tokens for a (filled) sequence.
RowMat infill_tokens(const MotionSequence& seq);

// Applies the model residual on gap frames of seq_init; visible frames are
// bit-identical to the input. Throws WindowTooLong / ModelUninitialized.
MotionSequence infill_refine(const InfillerModel& model,
                             const MotionSequence& seq_init,
                             const GapSet& gaps);

// Adam with the step-decay schedule (lr 1e-4, x0.9 every 100 steps).
struct TrainConfig {
  int steps = 1200;
  double lr_init = 1e-4;
  double lr_decay = 0.9;
  int lr_decay_every = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double max_gap_fraction = 0.4;
  int eval_every = 100;  // fixed-mask evaluation cadence
  InfillerConfig model;
};

struct TrainResult {
  std::vector<double> step_loss;
  std::vector<double> eval_loss;  // fixed-mask loss at eval_every cadence
};

// Gradient descent with step decay on the batched L_F. Deterministic given
// config.seed. Throws EmptyDataset / DivergedLoss.
InfillerModel train_infiller(const std::vector<MotionSequence>& dataset,
                             const InfillLossWeights& weights,
                             const TrainConfig& config,
                             TrainResult* result = nullptr);

// Versioned binary checkpoint, little-endian, layout:
//   magic "HWIF" | u32 version=1
//   u32 input_dim, token_dim, layers, heads, ffn_dim, output_dim, max_window
//   u64 parameter count | that many f64s (row-major per parameter array,
//   in declaration order: input projection, per-layer norm/attention/ffn
//   blocks, final norm, output head).
void save_checkpoint(const InfillerModel& model, const std::string& path);
InfillerModel load_checkpoint(const std::string& path);

}  // namespace egohand

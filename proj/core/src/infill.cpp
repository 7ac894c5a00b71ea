#include "egohand/infill.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "egohand/rng.hpp"

namespace egohand {

GapSet detect_gaps(const MotionSequence& seq) {
  GapSet out;
  const int T = seq.size();
  int t = 0;
  while (t < T) {
    if (seq.is_visible(t)) {
      ++t;
      continue;
    }
    GapSet::Gap g;
    g.start = t;
    while (t < T && !seq.is_visible(t)) ++t;
    g.end = t - 1;
    g.left_anchor = g.start > 0 ? g.start - 1 : -1;
    g.right_anchor = g.end + 1 < T ? g.end + 1 : -1;
    out.gaps.push_back(g);
  }
  return out;
}

namespace {

HandState lerp_slerp(const HandState& a, const HandState& b, double u) {
  HandState out = a;
  out.gamma = (1.0 - u) * a.gamma + u * b.gamma;
  for (int k = 0; k < kNumShape; ++k) {
    out.beta[k] = (1.0 - u) * a.beta[k] + u * b.beta[k];
  }
  out.phi = quat_to_aa(slerp(aa_to_quat(a.phi), aa_to_quat(b.phi), u));
  for (int j = 0; j < kNumArticulated; ++j) {
    out.theta[j] =
        quat_to_aa(slerp(aa_to_quat(a.theta[j]), aa_to_quat(b.theta[j]), u));
  }
  return out;
}

void require_context(const MotionSequence& seq) {
  for (int t = 0; t < seq.size(); ++t) {
    if (seq.is_visible(t)) return;
  }
  throw NoContext("fill: entire sequence is invisible");
}

}  // namespace

MotionSequence interpolate_init(const MotionSequence& seq, const GapSet& gaps) {
  require_context(seq);
  MotionSequence out = seq;
  for (const auto& g : gaps.gaps) {
    if (g.left_anchor >= 0 && g.right_anchor >= 0) {
      const HandState& a = seq.states[g.left_anchor];
      const HandState& b = seq.states[g.right_anchor];
      const double span = double(g.right_anchor - g.left_anchor);
      for (int t = g.start; t <= g.end; ++t) {
        out.states[t] = lerp_slerp(a, b, double(t - g.left_anchor) / span);
      }
    } else {
      // Boundary gap: hold the nearest anchor constant.
      const int anchor = g.left_anchor >= 0 ? g.left_anchor : g.right_anchor;
      for (int t = g.start; t <= g.end; ++t) {
        out.states[t] = seq.states[anchor];
      }
    }
  }
  return out;
}

MotionSequence last_pose_fill(const MotionSequence& seq, const GapSet& gaps) {
  require_context(seq);
  MotionSequence out = seq;
  for (const auto& g : gaps.gaps) {
    const int anchor = g.left_anchor >= 0 ? g.left_anchor : g.right_anchor;
    for (int t = g.start; t <= g.end; ++t) {
      out.states[t] = seq.states[anchor];
    }
  }
  return out;
}

MotionSequence mask_augment(const MotionSequence& seq, std::uint64_t seed,
                            double max_gap_fraction, int n_gaps) {
  MotionSequence out = seq;
  const int T = seq.size();
  if (T < 3) return out;
  const int budget = int(std::floor(max_gap_fraction * T));
  if (budget < 1) return out;

  SplitRng rng = SplitRng(seed).derive("mask-augment");
  int used = 0;
  for (int gi = 0; gi < n_gaps && used < budget; ++gi) {
    const int max_len = std::min(budget - used, T - 2);
    const int len = int(rng.uniform_int(1, max_len));
    // Interior placement keeps frames 0 and T-1 visible.
    bool placed = false;
    for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
      const int start = int(rng.uniform_int(1, T - 1 - len));
      bool overlaps = false;
      for (int t = start; t < start + len; ++t) {
        if (!out.visible[t]) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;
      for (int t = start; t < start + len; ++t) out.visible[t] = 0;
      used += len;
      placed = true;
    }
  }
  return out;
}

MotionSequence infill_refine(const InfillerModel& model,
                             const MotionSequence& seq_init,
                             const GapSet& gaps) {
  if (!model.initialized()) {
    throw ModelUninitialized("infill_refine: model has no parameters");
  }
  if (seq_init.size() > model.config().max_window) {
    throw WindowTooLong("infill_refine: sequence exceeds model window");
  }
  const RowMat residual = model.forward(infill_tokens(seq_init));
  MotionSequence out = seq_init;
  for (const auto& g : gaps.gaps) {
    for (int t = g.start; t <= g.end; ++t) {
      const Eigen::VectorXd v =
          state_to_vector(seq_init.states[t]) + residual.row(t).transpose();
      out.states[t] = vector_to_state(v, seq_init.states[t].side);
    }
  }
  return out;
}

namespace {

std::vector<InfillBatchItem> make_batch(
    const std::vector<MotionSequence>& dataset, const std::vector<int>& idx,
    SplitRng& mask_rng, double max_gap_fraction) {
  std::vector<InfillBatchItem> batch;
  batch.reserve(idx.size());
  for (int i : idx) {
    InfillBatchItem item;
    item.target = dataset[i];
    MotionSequence masked =
        mask_augment(dataset[i], mask_rng.next_u64(), max_gap_fraction);
    item.gaps = detect_gaps(masked);
    item.init = interpolate_init(masked, item.gaps);
    batch.push_back(std::move(item));
  }
  return batch;
}

}  // namespace

InfillerModel train_infiller(const std::vector<MotionSequence>& dataset,
                             const InfillLossWeights& weights,
                             const TrainConfig& config, TrainResult* result) {
  if (dataset.empty()) {
    throw EmptyDataset("train_infiller: empty dataset");
  }
  for (const auto& seq : dataset) {
    if (seq.frame_tag != FrameTag::Canonical) {
      throw FrameTagMismatch("train_infiller: dataset must be canonical");
    }
  }

  InfillerModel model(config.model, config.seed);
  SplitRng root(config.seed);
  SplitRng mask_rng = root.derive("train-masks");

  // Fixed-mask evaluation set for the recorded loss trajectory.
  std::vector<InfillBatchItem> eval_set;
  {
    SplitRng eval_rng = root.derive("eval-masks");
    std::vector<int> all(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) all[i] = int(i);
    eval_set = make_batch(dataset, all, eval_rng, config.max_gap_fraction);
  }

  std::vector<double> grad(model.parameter_count(), 0.0);
  std::vector<double> m1(model.parameter_count(), 0.0);
  std::vector<double> m2(model.parameter_count(), 0.0);
  const int B = std::max(1, std::min<int>(config.batch_size,
                                          int(dataset.size())));

  for (int step = 0; step < config.steps; ++step) {
    std::vector<int> idx(B);
    for (int i = 0; i < B; ++i) {
      idx[i] = int((std::size_t(step) * B + i) % dataset.size());
    }
    const auto batch =
        make_batch(dataset, idx, mask_rng, config.max_gap_fraction);

    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = model.loss_and_gradient(batch, weights, &grad);
    if (!std::isfinite(loss)) {
      throw DivergedLoss("train_infiller: loss diverged");
    }
    if (result) result->step_loss.push_back(loss);

    const double lr =
        config.lr_init *
        std::pow(config.lr_decay, double(step / config.lr_decay_every));
    const double bc1 = 1.0 - std::pow(config.adam_beta1, step + 1);
    const double bc2 = 1.0 - std::pow(config.adam_beta2, step + 1);
    auto& params = model.mutable_parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      m1[i] = config.adam_beta1 * m1[i] + (1.0 - config.adam_beta1) * grad[i];
      m2[i] = config.adam_beta2 * m2[i] +
              (1.0 - config.adam_beta2) * grad[i] * grad[i];
      const double update = (m1[i] / bc1) /
                            (std::sqrt(m2[i] / bc2) + config.adam_eps);
      params[i] -= lr * (update + config.weight_decay * params[i]);
    }

    if (result && config.eval_every > 0 &&
        ((step + 1) % config.eval_every == 0 || step + 1 == config.steps)) {
      result->eval_loss.push_back(
          model.loss_and_gradient(eval_set, weights, nullptr));
    }
  }
  return model;
}

namespace {

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const InfillerModel& model, const std::string& path) {
  if (!model.initialized()) {
    throw ModelUninitialized("save_checkpoint: model has no parameters");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("save_checkpoint: cannot open " + path);
  os.write("HWIF", 4);
  const auto& c = model.config();
  write_pod<std::uint32_t>(os, 1);  // version
  write_pod<std::uint32_t>(os, std::uint32_t(c.input_dim));
  write_pod<std::uint32_t>(os, std::uint32_t(c.token_dim));
  write_pod<std::uint32_t>(os, std::uint32_t(c.layers));
  write_pod<std::uint32_t>(os, std::uint32_t(c.heads));
  write_pod<std::uint32_t>(os, std::uint32_t(c.ffn_dim));
  write_pod<std::uint32_t>(os, std::uint32_t(c.output_dim));
  write_pod<std::uint32_t>(os, std::uint32_t(c.max_window));
  write_pod<std::uint64_t>(os, std::uint64_t(model.parameter_count()));
  os.write(reinterpret_cast<const char*>(model.parameters().data()),
           std::streamsize(model.parameter_count() * sizeof(double)));
  if (!os) throw IoError("save_checkpoint: write failed for " + path);
}

InfillerModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HWIF", 4) != 0) {
    throw IoError("load_checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != 1) {
    throw IoError("load_checkpoint: unsupported version in " + path);
  }
  InfillerConfig c;
  c.input_dim = int(read_pod<std::uint32_t>(is));
  c.token_dim = int(read_pod<std::uint32_t>(is));
  c.layers = int(read_pod<std::uint32_t>(is));
  c.heads = int(read_pod<std::uint32_t>(is));
  c.ffn_dim = int(read_pod<std::uint32_t>(is));
  c.output_dim = int(read_pod<std::uint32_t>(is));
  c.max_window = int(read_pod<std::uint32_t>(is));
  const auto count = read_pod<std::uint64_t>(is);

  InfillerModel model(c, 0);
  if (count != model.parameter_count()) {
    throw IoError("load_checkpoint: parameter count mismatch in " + path);
  }
  is.read(reinterpret_cast<char*>(model.mutable_parameters().data()),
          std::streamsize(count * sizeof(double)));
  if (!is) throw IoError("load_checkpoint: truncated file " + path);
  return model;
}

}  // namespace egohand

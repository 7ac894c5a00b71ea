#include <cmath>
#include <cstring>
#include <fstream>

#include "egohand/infill.hpp"
#include "egohand/rng.hpp"

namespace egohand {

namespace {

constexpr double kLnEps = 1e-5;

using CMat = Eigen::Map<const RowMat>;
using MMat = Eigen::Map<RowMat>;
using CVec = Eigen::Map<const Eigen::VectorXd>;
using MVec = Eigen::Map<Eigen::VectorXd>;

struct Entry {
  std::size_t offset = 0;
  int rows = 0, cols = 0;  // cols == 1 for vectors
  std::size_t size() const { return std::size_t(rows) * cols; }
};

struct LayerLayout {
  Entry ln1_g, ln1_b;
  Entry wq, bq, wk, bk, wv, bv, wo, bo;
  Entry ln2_g, ln2_b;
  Entry w1, b1, w2, b2;
};

struct ParamLayout {
  Entry w_in, b_in;
  std::vector<LayerLayout> layers;
  Entry lnf_g, lnf_b, w_out, b_out;
  std::size_t total = 0;

  static ParamLayout build(const InfillerConfig& c) {
    ParamLayout l;
    std::size_t at = 0;
    auto add = [&at](int r, int co) {
      Entry e{at, r, co};
      at += e.size();
      return e;
    };
    l.w_in = add(c.token_dim, c.input_dim);
    l.b_in = add(c.token_dim, 1);
    l.layers.resize(c.layers);
    for (auto& ly : l.layers) {
      ly.ln1_g = add(c.token_dim, 1);
      ly.ln1_b = add(c.token_dim, 1);
      ly.wq = add(c.token_dim, c.token_dim);
      ly.bq = add(c.token_dim, 1);
      ly.wk = add(c.token_dim, c.token_dim);
      ly.bk = add(c.token_dim, 1);
      ly.wv = add(c.token_dim, c.token_dim);
      ly.bv = add(c.token_dim, 1);
      ly.wo = add(c.token_dim, c.token_dim);
      ly.bo = add(c.token_dim, 1);
      ly.ln2_g = add(c.token_dim, 1);
      ly.ln2_b = add(c.token_dim, 1);
      ly.w1 = add(c.ffn_dim, c.token_dim);
      ly.b1 = add(c.ffn_dim, 1);
      ly.w2 = add(c.token_dim, c.ffn_dim);
      ly.b2 = add(c.token_dim, 1);
    }
    l.lnf_g = add(c.token_dim, 1);
    l.lnf_b = add(c.token_dim, 1);
    l.w_out = add(c.output_dim, c.token_dim);
    l.b_out = add(c.output_dim, 1);
    l.total = at;
    return l;
  }
};

CMat mat(const std::vector<double>& p, const Entry& e) {
  return CMat(p.data() + e.offset, e.rows, e.cols);
}
CVec vec(const std::vector<double>& p, const Entry& e) {
  return CVec(p.data() + e.offset, e.rows);
}
MMat mat(std::vector<double>& p, const Entry& e) {
  return MMat(p.data() + e.offset, e.rows, e.cols);
}
MVec vec(std::vector<double>& p, const Entry& e) {
  return MVec(p.data() + e.offset, e.rows);
}

// y = x * W^T + b (x: T x in, W: out x in)
RowMat linear(const RowMat& x, CMat W, CVec b) {
  return (x * W.transpose()).rowwise() + b.transpose();
}

void linear_backward(const RowMat& x, CMat W, const RowMat& dy, MMat dW,
                     MVec db, RowMat* dx) {
  dW += dy.transpose() * x;
  db += dy.colwise().sum().transpose();
  if (dx) *dx = dy * W;
}

struct LnCache {
  RowMat xhat;
  Eigen::VectorXd inv_std;
};

RowMat layer_norm(const RowMat& x, CVec g, CVec b, LnCache* cache) {
  const Eigen::Index T = x.rows(), D = x.cols();
  RowMat out(T, D);
  cache->xhat.resize(T, D);
  cache->inv_std.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mu = x.row(t).mean();
    const double var = (x.row(t).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    cache->inv_std[t] = inv;
    cache->xhat.row(t) = (x.row(t).array() - mu) * inv;
    out.row(t) = cache->xhat.row(t).cwiseProduct(g.transpose()) + b.transpose();
  }
  return out;
}

RowMat layer_norm_backward(const RowMat& dy, const LnCache& cache, CVec g,
                           MVec dg, MVec db) {
  const Eigen::Index T = dy.rows(), D = dy.cols();
  RowMat dx(T, D);
  for (Eigen::Index t = 0; t < T; ++t) {
    dg += dy.row(t).cwiseProduct(cache.xhat.row(t)).transpose();
    db += dy.row(t).transpose();
    const Eigen::RowVectorXd dxhat = dy.row(t).cwiseProduct(g.transpose());
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(cache.xhat.row(t)).mean();
    dx.row(t) =
        cache.inv_std[t] *
        (dxhat.array() - m1 - cache.xhat.row(t).array() * m2).matrix();
  }
  return dx;
}

double gelu(double x) {
  const double u = 0.7978845608028654 * (x + 0.044715 * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
  const double u = 0.7978845608028654 * (x + 0.044715 * x * x * x);
  const double th = std::tanh(u);
  const double sech2 = 1.0 - th * th;
  return 0.5 * (1.0 + th) +
         0.5 * x * sech2 * 0.7978845608028654 * (1.0 + 3.0 * 0.044715 * x * x);
}

struct AttnCache {
  RowMat q, k, v;           // T x D
  std::vector<RowMat> p;    // per head, T x T
  RowMat concat;            // T x D
};

struct LayerCacheData {
  RowMat in;       // layer input
  LnCache ln1;
  RowMat ln1_out;
  AttnCache attn;
  RowMat h_mid;    // in + attention
  LnCache ln2;
  RowMat ln2_out;
  RowMat ffn_pre;  // T x F
  RowMat ffn_act;
  RowMat out;      // h_mid + ffn
};

struct ForwardCacheData {
  RowMat tokens;
  RowMat h0;
  std::vector<LayerCacheData> layers;
  LnCache lnf;
  RowMat lnf_out;
  RowMat output;
};

RowMat positional_encoding(int T, int D) {
  RowMat pe(T, D);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < D; i += 2) {
      const double freq = std::pow(10000.0, -double(i) / D);
      pe(t, i) = std::sin(t * freq);
      if (i + 1 < D) pe(t, i + 1) = std::cos(t * freq);
    }
  }
  return pe;
}

}  // namespace

struct ModelOps {
  static ForwardCacheData run_forward(const InfillerModel& m,
                                      const RowMat& tokens) {
    const auto& cfg = m.cfg_;
    const auto& p = m.params_;
    const ParamLayout L = ParamLayout::build(cfg);
    const int T = int(tokens.rows());
    const int D = cfg.token_dim;
    const int H = cfg.heads;
    const int dh = D / H;
    const double scale = 1.0 / std::sqrt(double(dh));

    ForwardCacheData c;
    c.tokens = tokens;
    c.h0 = linear(tokens, mat(p, L.w_in), vec(p, L.b_in)) +
           positional_encoding(T, D);

    RowMat h = c.h0;
    c.layers.resize(cfg.layers);
    for (int li = 0; li < cfg.layers; ++li) {
      auto& lc = c.layers[li];
      const auto& ll = L.layers[li];
      lc.in = h;
      lc.ln1_out = layer_norm(h, vec(p, ll.ln1_g), vec(p, ll.ln1_b), &lc.ln1);

      lc.attn.q = linear(lc.ln1_out, mat(p, ll.wq), vec(p, ll.bq));
      lc.attn.k = linear(lc.ln1_out, mat(p, ll.wk), vec(p, ll.bk));
      lc.attn.v = linear(lc.ln1_out, mat(p, ll.wv), vec(p, ll.bv));
      lc.attn.p.resize(H);
      lc.attn.concat.resize(T, D);
      for (int hh = 0; hh < H; ++hh) {
        const auto Q = lc.attn.q.middleCols(hh * dh, dh);
        const auto K = lc.attn.k.middleCols(hh * dh, dh);
        const auto V = lc.attn.v.middleCols(hh * dh, dh);
        RowMat S = scale * (Q * K.transpose());
        for (int t = 0; t < T; ++t) {
          const double mx = S.row(t).maxCoeff();
          S.row(t) = (S.row(t).array() - mx).exp();
          S.row(t) /= S.row(t).sum();
        }
        lc.attn.p[hh] = S;
        lc.attn.concat.middleCols(hh * dh, dh) = S * V;
      }
      RowMat attn_out = linear(lc.attn.concat, mat(p, ll.wo), vec(p, ll.bo));
      lc.h_mid = lc.in + attn_out;

      lc.ln2_out =
          layer_norm(lc.h_mid, vec(p, ll.ln2_g), vec(p, ll.ln2_b), &lc.ln2);
      lc.ffn_pre = linear(lc.ln2_out, mat(p, ll.w1), vec(p, ll.b1));
      lc.ffn_act = lc.ffn_pre.unaryExpr([](double x) { return gelu(x); });
      RowMat ffn_out = linear(lc.ffn_act, mat(p, ll.w2), vec(p, ll.b2));
      lc.out = lc.h_mid + ffn_out;
      h = lc.out;
    }

    c.lnf_out = layer_norm(h, vec(p, L.lnf_g), vec(p, L.lnf_b), &c.lnf);
    c.output = linear(c.lnf_out, mat(p, L.w_out), vec(p, L.b_out));
    return c;
  }

  // dOut: T x output_dim upstream gradient. Accumulates into grad.
  static void run_backward(const InfillerModel& m, const ForwardCacheData& c,
                           const RowMat& dOut, std::vector<double>& grad) {
    const auto& cfg = m.cfg_;
    const auto& p = m.params_;
    const ParamLayout L = ParamLayout::build(cfg);
    const int T = int(c.tokens.rows());
    const int D = cfg.token_dim;
    const int H = cfg.heads;
    const int dh = D / H;
    const double scale = 1.0 / std::sqrt(double(dh));

    RowMat d_lnf_out;
    {
      auto dW = mat(grad, L.w_out);
      auto db = vec(grad, L.b_out);
      linear_backward(c.lnf_out, mat(p, L.w_out), dOut, dW, db, &d_lnf_out);
    }
    RowMat dh_top;
    {
      auto dg = vec(grad, L.lnf_g);
      auto db = vec(grad, L.lnf_b);
      dh_top = layer_norm_backward(d_lnf_out, c.lnf, vec(p, L.lnf_g), dg, db);
    }

    for (int li = cfg.layers - 1; li >= 0; --li) {
      const auto& lc = c.layers[li];
      const auto& ll = L.layers[li];

      // FFN branch.
      RowMat d_ffn_act;
      {
        auto dW = mat(grad, ll.w2);
        auto db = vec(grad, ll.b2);
        linear_backward(lc.ffn_act, mat(p, ll.w2), dh_top, dW, db, &d_ffn_act);
      }
      RowMat d_ffn_pre =
          d_ffn_act.cwiseProduct(lc.ffn_pre.unaryExpr(
              [](double x) { return gelu_grad(x); }));
      RowMat d_ln2_out;
      {
        auto dW = mat(grad, ll.w1);
        auto db = vec(grad, ll.b1);
        linear_backward(lc.ln2_out, mat(p, ll.w1), d_ffn_pre, dW, db,
                        &d_ln2_out);
      }
      RowMat d_h_mid;
      {
        auto dg = vec(grad, ll.ln2_g);
        auto db = vec(grad, ll.ln2_b);
        d_h_mid =
            layer_norm_backward(d_ln2_out, lc.ln2, vec(p, ll.ln2_g), dg, db);
      }
      d_h_mid += dh_top;  // residual

      // Attention branch.
      RowMat d_concat;
      {
        auto dW = mat(grad, ll.wo);
        auto db = vec(grad, ll.bo);
        linear_backward(lc.attn.concat, mat(p, ll.wo), d_h_mid, dW, db,
                        &d_concat);
      }
      RowMat dq = RowMat::Zero(T, D);
      RowMat dk = RowMat::Zero(T, D);
      RowMat dv = RowMat::Zero(T, D);
      for (int hh = 0; hh < H; ++hh) {
        const auto P = lc.attn.p[hh];
        const auto Q = lc.attn.q.middleCols(hh * dh, dh);
        const auto K = lc.attn.k.middleCols(hh * dh, dh);
        const auto V = lc.attn.v.middleCols(hh * dh, dh);
        const auto dO = d_concat.middleCols(hh * dh, dh);

        RowMat dP = dO * V.transpose();
        dv.middleCols(hh * dh, dh) = P.transpose() * dO;

        RowMat dS(T, T);
        for (int t = 0; t < T; ++t) {
          const double dot = dP.row(t).dot(P.row(t));
          dS.row(t) =
              P.row(t).cwiseProduct((dP.row(t).array() - dot).matrix());
        }
        dq.middleCols(hh * dh, dh) = scale * (dS * K);
        dk.middleCols(hh * dh, dh) = scale * (dS.transpose() * Q);
      }

      RowMat d_ln1_out;
      {
        auto dWq = mat(grad, ll.wq);
        auto dbq = vec(grad, ll.bq);
        RowMat tmp;
        linear_backward(lc.ln1_out, mat(p, ll.wq), dq, dWq, dbq, &tmp);
        d_ln1_out = tmp;
        auto dWk = mat(grad, ll.wk);
        auto dbk = vec(grad, ll.bk);
        linear_backward(lc.ln1_out, mat(p, ll.wk), dk, dWk, dbk, &tmp);
        d_ln1_out += tmp;
        auto dWv = mat(grad, ll.wv);
        auto dbv = vec(grad, ll.bv);
        linear_backward(lc.ln1_out, mat(p, ll.wv), dv, dWv, dbv, &tmp);
        d_ln1_out += tmp;
      }
      RowMat d_in;
      {
        auto dg = vec(grad, ll.ln1_g);
        auto db = vec(grad, ll.ln1_b);
        d_in = layer_norm_backward(d_ln1_out, lc.ln1, vec(p, ll.ln1_g), dg, db);
      }
      dh_top = d_in + d_h_mid;  // residual into the layer input
    }

    // Input projection (token gradient itself is discarded).
    auto dW = mat(grad, L.w_in);
    auto db = vec(grad, L.b_in);
    linear_backward(c.tokens, mat(p, L.w_in), dh_top, dW, db, nullptr);
  }
};

InfillerModel::InfillerModel(const InfillerConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  if (cfg.token_dim % cfg.heads != 0) {
    throw ModelUninitialized("InfillerModel: token_dim must divide by heads");
  }
  const ParamLayout L = ParamLayout::build(cfg);
  params_.assign(L.total, 0.0);

  SplitRng rng = SplitRng(seed).derive("infiller-init");
  auto xavier = [&rng](MMat W) {
    const double s = std::sqrt(6.0 / double(W.rows() + W.cols()));
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        W(i, j) = rng.uniform(-s, s);
  };

  auto Wm = [&](const Entry& e) { return mat(params_, e); };
  auto Vm = [&](const Entry& e) { return vec(params_, e); };

  xavier(Wm(L.w_in));
  for (const auto& ll : L.layers) {
    Vm(ll.ln1_g).setOnes();
    Vm(ll.ln2_g).setOnes();
    xavier(Wm(ll.wq));
    xavier(Wm(ll.wk));
    xavier(Wm(ll.wv));
    xavier(Wm(ll.wo));
    xavier(Wm(ll.w1));
    xavier(Wm(ll.w2));
  }
  Vm(L.lnf_g).setOnes();
  // Output head stays zero: a fresh model is the identity refinement.
}

RowMat InfillerModel::forward(const RowMat& tokens) const {
  if (!initialized()) {
    throw ModelUninitialized("InfillerModel::forward: model has no parameters");
  }
  if (int(tokens.rows()) > cfg_.max_window) {
    throw WindowTooLong("InfillerModel::forward: sequence exceeds max window");
  }
  return ModelOps::run_forward(*this, tokens).output;
}

namespace {

double group_weight(int i, const InfillLossWeights& w) {
  if (i < 3) return w.w_orient;    // Phi
  if (i < 48) return w.w_pose;     // Theta
  if (i < 58) return w.w_shape;    // beta
  return w.w_trans;                // Gamma
}

Eigen::VectorXd canonical_state_vector(const HandState& s) {
  HandState c = s;
  c.phi = c.phi.canonicalized();
  for (auto& th : c.theta) th = th.canonicalized();
  return state_to_vector(c);
}

}  // namespace

RowMat infill_tokens(const MotionSequence& seq) {
  RowMat tokens(seq.size(), kStateDim + 1);
  for (int t = 0; t < seq.size(); ++t) {
    tokens.row(t).head(kStateDim) = state_to_vector(seq.states[t]).transpose();
    tokens(t, kStateDim) = seq.is_visible(t) ? 1.0 : 0.0;
  }
  return tokens;
}

double InfillerModel::loss_and_gradient(
    const std::vector<InfillBatchItem>& batch, const InfillLossWeights& w,
    std::vector<double>* grad) const {
  if (!initialized()) {
    throw ModelUninitialized("loss_and_gradient: model has no parameters");
  }
  if (grad && grad->size() != params_.size()) {
    grad->assign(params_.size(), 0.0);
  }

  const double inv_batch = 1.0 / double(batch.size());
  double loss = 0.0;
  for (const auto& item : batch) {
    if (item.init.size() > cfg_.max_window) {
      throw WindowTooLong("loss_and_gradient: sequence exceeds max window");
    }
    const RowMat tokens = infill_tokens(item.init);
    const ForwardCacheData cache = ModelOps::run_forward(*this, tokens);

    RowMat dOut = RowMat::Zero(tokens.rows(), cfg_.output_dim);
    for (const auto& gap : item.gaps.gaps) {
      for (int t = gap.start; t <= gap.end; ++t) {
        const Eigen::VectorXd init_v = state_to_vector(item.init.states[t]);
        const Eigen::VectorXd target_v =
            canonical_state_vector(item.target.states[t]);
        for (int i = 0; i < kStateDim; ++i) {
          const double r = init_v[i] + cache.output(t, i) - target_v[i];
          const double gw = group_weight(i, w);
          loss += inv_batch * gw * std::abs(r);
          // Subgradient 0 at the kink (within float slop of zero residual).
          const double sign =
              r > 1e-12 ? 1.0 : (r < -1e-12 ? -1.0 : 0.0);
          dOut(t, i) = inv_batch * gw * sign;
        }
      }
    }
    if (grad) ModelOps::run_backward(*this, cache, dOut, *grad);
  }
  if (!std::isfinite(loss)) {
    throw DivergedLoss("loss_and_gradient: non-finite loss");
  }
  return loss;
}

}  // namespace egohand

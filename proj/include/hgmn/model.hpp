// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hgmn/hypergraph.hpp"
#include "hgmn/ssm.hpp"
#include "hgmn/tape.hpp"

namespace hgmn {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int f_role = 0;       // input width of the role stream
  int f_adj = 0;        // input width of the adjacency stream
  int f_hidden = 64;    // F_h
  int state_dim = 16;   // SSM states per channel
  int num_classes = 0;  // M
  int num_layers = 2;   // hypergraph conv layers
  double lambda_reg = 0.0;
  bool disable_residual = false;  // ablation: J = X_last
  bool disable_mamba = false;     // ablation: fixed 0.5/0.5 mean fusion
};

/// All learnable parameters of the network: the two input projections, the
/// SSM fusion block with its gate head, per-layer convolution weights, the
/// residual transform, and the classifier.
struct HgmnModel {
  ModelConfig cfg;
  Matrix w_role, b_role;  // F_r -> F_h
  Matrix w_adj, b_adj;    // F_a -> F_h
  SsmParams ssm;
  Matrix w_gate, b_gate;  // 2 F_h -> 2 gate logits
  std::vector<Matrix> conv;  // delta^(l), each F_h x F_h
  Matrix w_res;              // F_h x F_h
  Matrix w_cls, b_cls;       // F_h -> M

  static HgmnModel init(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.f_role < 1 || cfg.f_adj < 1 || cfg.f_hidden < 1 ||
        cfg.num_classes < 1 || cfg.num_layers < 0 || cfg.state_dim < 1)
      throw ModelError("invalid model configuration");
    std::mt19937_64 rng(seed);
    HgmnModel m;
    m.cfg = cfg;
    m.w_role = glorot(cfg.f_role, cfg.f_hidden, rng);
    m.b_role = Matrix::Zero(1, cfg.f_hidden);
    m.w_adj = glorot(cfg.f_adj, cfg.f_hidden, rng);
    m.b_adj = Matrix::Zero(1, cfg.f_hidden);
    m.ssm = SsmParams::init(cfg.f_hidden, cfg.state_dim, rng);
    m.w_gate = glorot(2 * cfg.f_hidden, 2, rng);
    m.b_gate = Matrix::Zero(1, 2);
    for (int l = 0; l < cfg.num_layers; ++l)
      m.conv.push_back(glorot(cfg.f_hidden, cfg.f_hidden, rng));
    m.w_res = glorot(cfg.f_hidden, cfg.f_hidden, rng);
    m.w_cls = glorot(cfg.f_hidden, cfg.num_classes, rng);
    m.b_cls = Matrix::Zero(1, cfg.num_classes);
    return m;
  }

  /// Enumerate every parameter tensor with a stable name. The visiting
  /// order is fixed; optimizer state and checkpoints key off these names.
  template <class F>
  void visit(F&& f) {
    f("w_role", w_role);
    f("b_role", b_role);
    f("w_adj", w_adj);
    f("b_adj", b_adj);
    f("ssm.a_raw", ssm.a_raw);
    f("ssm.b_in", ssm.b_in);
    f("ssm.c_out", ssm.c_out);
    f("ssm.delta_raw", ssm.delta_raw);
    f("w_gate", w_gate);
    f("b_gate", b_gate);
    for (size_t l = 0; l < conv.size(); ++l)
      f("conv." + std::to_string(l), conv[l]);
    f("w_res", w_res);
    f("w_cls", w_cls);
    f("b_cls", b_cls);
  }
  template <class F>
  void visit(F&& f) const {
    const_cast<HgmnModel*>(this)->visit(
        [&](const std::string& n, Matrix& m) { f(n, static_cast<const Matrix&>(m)); });
  }

  static Matrix glorot(int rows, int cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
  }
};

/// Leaf Vars for one forward/backward pass, keyed by parameter name.
using ParamVars = std::map<std::string, Var>;

inline ParamVars emit_params(Tape& t, HgmnModel& m) {
  ParamVars vars;
  m.visit([&](const std::string& name, Matrix& mat) {
    vars.emplace(name, t.leaf(mat));
  });
  return vars;
}

struct FusionOut {
  Var xr_hat, xa_hat;  // projected streams, N x F_h
  Var gates;           // N x 2 softmax weights (unset when mamba disabled)
  Var x_f;             // fused embedding
  bool has_gates = false;
};

/// Project both streams, run the per-node two-token scan through the SSM,
/// derive the softmax gate pair, and form the convex combination
/// X_f = yr * Xr_hat + ya * Xa_hat. With disable_mamba the gates are fixed
/// at one half each and the SSM is bypassed entirely.
inline FusionOut fuse(Tape& t, const HgmnModel& m, const ParamVars& p,
                      Var x_role, Var x_adj) {
  FusionOut out;
  out.xr_hat = t.add_rowvec(t.matmul(x_role, p.at("w_role")), p.at("b_role"));
  out.xa_hat = t.add_rowvec(t.matmul(x_adj, p.at("w_adj")), p.at("b_adj"));
  if (m.cfg.disable_mamba) {
    out.x_f = t.add(t.scale(out.xr_hat, 0.5), t.scale(out.xa_hat, 0.5));
    return out;
  }
  SsmVars sv{p.at("ssm.a_raw"), p.at("ssm.b_in"), p.at("ssm.c_out"),
             p.at("ssm.delta_raw")};
  SsmDiscrete d = discretize(t, sv, m.cfg.state_dim);
  auto ys = ssm_scan(t, d, sv.c_out, {out.xr_hat, out.xa_hat}, m.cfg.state_dim);
  Var logits = t.add_rowvec(
      t.matmul(t.concat_cols(ys[0], ys[1]), p.at("w_gate")), p.at("b_gate"));
  out.gates = t.softmax_rows(logits);
  out.has_gates = true;
  Var yr = t.slice_cols(out.gates, 0, 1);
  Var ya = t.slice_cols(out.gates, 1, 1);
  out.x_f = t.add(t.row_scale(out.xr_hat, yr), t.row_scale(out.xa_hat, ya));
  return out;
}

/// One hypergraph convolution: act(P X delta). ReLU on hidden layers,
/// identity on the last.
inline Var conv_layer(Tape& t, const ad::Sparse& prop, Var x, Var delta,
                      bool apply_relu) {
  Var z = t.matmul(t.spmm(prop, x), delta);
  return apply_relu ? t.relu(z) : z;
}

struct ForwardOut {
  FusionOut fusion;
  Var x_last;   // output of the conv stack
  Var node_repr;  // J, after the residual combination
  Var logits;   // N x M
};

/// Full forward pass: fuse -> conv stack -> residual -> classifier logits.
inline ForwardOut forward(Tape& t, HgmnModel& m, const ParamVars& p,
                          const ad::Sparse& prop, Var x_role, Var x_adj) {
  ForwardOut out;
  out.fusion = fuse(t, m, p, x_role, x_adj);
  Var x = out.fusion.x_f;
  for (size_t l = 0; l < m.conv.size(); ++l)
    x = conv_layer(t, prop, x, p.at("conv." + std::to_string(l)),
                   l + 1 < m.conv.size());
  out.x_last = x;
  out.node_repr =
      m.cfg.disable_residual
          ? out.x_last
          : t.add(t.matmul(out.fusion.x_f, p.at("w_res")), out.x_last);
  out.logits = t.add_rowvec(t.matmul(out.node_repr, p.at("w_cls")),
                            p.at("b_cls"));
  return out;
}

/// Cross-entropy over the masked nodes plus lambda * sum of squared
/// parameters (all learnable tensors).
inline Var loss(Tape& t, const HgmnModel& m, const ParamVars& p, Var logits,
                const std::vector<int>& labels,
                const std::vector<std::int64_t>& mask) {
  Var l = t.masked_cross_entropy(logits, labels, mask);
  if (m.cfg.lambda_reg != 0.0) {
    Var reg{-1};
    bool first = true;
    for (auto& [name, v] : p) {
      // ablated components stay out of the objective entirely
      if (m.cfg.disable_residual && name == "w_res") continue;
      if (m.cfg.disable_mamba &&
          (name.rfind("ssm.", 0) == 0 || name == "w_gate" || name == "b_gate"))
        continue;
      Var s = t.sum_squares(v);
      reg = first ? s : t.add(reg, s);
      first = false;
    }
    l = t.add(l, t.scale(reg, m.cfg.lambda_reg));
  }
  return l;
}

/// Row-stabilized softmax of plain logits, for prediction.
inline Matrix softmax_rows_values(const Matrix& z) {
  Matrix p = z;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return p;
}

/// Argmax per row; ties break toward the lowest class id.
inline std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(static_cast<size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

/// Adam with bias correction. Weight decay is applied as L2-coupled decay
/// (added to the gradient before the moment updates).
class Adam {
 public:
  Adam(double lr = 0.003, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8, double weight_decay = 5e-4)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        weight_decay_(weight_decay) {}

  void step(HgmnModel& m, const Tape& t, const ParamVars& vars) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    m.visit([&](const std::string& name, Matrix& param) {
      Matrix g = t.gradient(vars.at(name));
      if (!g.allFinite())
        throw ModelError("non-finite gradient for parameter " + name);
      // parameters outside the active graph (e.g. ablated blocks) stay put
      if (g.isZero(0.0)) return;
      if (weight_decay_ != 0.0) g += weight_decay_ * param;
      auto& s = state_[name];
      if (s.m.size() == 0) {
        s.m = Matrix::Zero(param.rows(), param.cols());
        s.v = Matrix::Zero(param.rows(), param.cols());
      }
      s.m = beta1_ * s.m + (1.0 - beta1_) * g;
      s.v = beta2_ * s.v + (1.0 - beta2_) * g.cwiseProduct(g);
      const Matrix m_hat = s.m / bc1;
      const Matrix v_hat = s.v / bc2;
      param -= lr_ * m_hat.cwiseQuotient(
                         (v_hat.cwiseSqrt().array() + eps_).matrix());
      if (!param.allFinite())
        throw ModelError("non-finite parameter after update: " + name);
    });
  }

  double lr() const { return lr_; }

 private:
  struct Moments {
    Matrix m, v;
  };
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace hgmn

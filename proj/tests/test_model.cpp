// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "hgmn/model.hpp"

using namespace hgmn;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.f_role = 3;
  cfg.f_adj = 4;
  cfg.f_hidden = 5;
  cfg.state_dim = 2;
  cfg.num_classes = 2;
  cfg.num_layers = 2;
  return cfg;
}

Matrix random_inputs(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

/// Fixture operator: propagation matrix of the 5-node path's link hypergraph.
ad::Sparse fixture_prop(int n = 5) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  auto g = Graph::from_edges(static_cast<NodeId>(n), std::move(edges));
  auto h = build_link_hypergraph(g);
  return propagation_operator(h).matrix;
}

}  // namespace

TEST_CASE("identity operator and identity weights pass features through") {
  ad::Sparse eye(4, 4);
  eye.setIdentity();
  Tape t;
  Var x = t.leaf(random_inputs(4, 3, 1));
  Var w = t.constant(Matrix::Identity(3, 3));
  Var y = conv_layer(t, eye, x, w, false);
  CHECK(t.value(y).isApprox(t.value(x), 1e-14));
  Var yr = conv_layer(t, eye, x, w, true);
  CHECK(t.value(yr).isApprox(t.value(x).cwiseMax(0.0), 1e-14));
}

TEST_CASE("conv layer matches the dense oracle on K3") {
  auto h = build_link_hypergraph(test::triangle());
  auto prop = propagation_operator(h).matrix;
  Matrix dense = test::dense_propagation(h, Normalization::AsymmetricInverse);
  Matrix x = random_inputs(3, 4, 2), w = random_inputs(4, 4, 3);
  Tape t;
  Var y = conv_layer(t, prop, t.leaf(x), t.constant(w), true);
  Matrix expect = (dense * x * w).cwiseMax(0.0);
  CHECK(t.value(y).isApprox(expect, 1e-12));
}

TEST_CASE("forward wiring: residual adds the fused features back") {
  auto cfg = tiny_config();
  auto m = HgmnModel::init(cfg, 21);
  auto prop = fixture_prop();
  Matrix xr = random_inputs(5, 3, 4), xa = random_inputs(5, 4, 5);

  Tape t;
  auto p = emit_params(t, m);
  auto out = forward(t, m, p, prop, t.constant(xr), t.constant(xa));
  Matrix expect = t.value(out.fusion.x_f) * m.w_res + t.value(out.x_last);
  CHECK(t.value(out.node_repr).isApprox(expect, 1e-12));

  // ablated: J = X_last exactly
  m.cfg.disable_residual = true;
  Tape t2;
  auto p2 = emit_params(t2, m);
  auto out2 = forward(t2, m, p2, prop, t2.constant(xr), t2.constant(xa));
  CHECK(t2.value(out2.node_repr).isApprox(t2.value(out2.x_last), 1e-14));
}

TEST_CASE("zero conv layers with unit residual doubles the fused features") {
  auto cfg = tiny_config();
  cfg.num_layers = 0;
  auto m = HgmnModel::init(cfg, 8);
  m.w_res = Matrix::Identity(cfg.f_hidden, cfg.f_hidden);
  auto prop = fixture_prop();
  Tape t;
  auto p = emit_params(t, m);
  auto out = forward(t, m, p, prop, t.constant(random_inputs(5, 3, 6)),
                     t.constant(random_inputs(5, 4, 7)));
  CHECK(t.value(out.node_repr)
            .isApprox(2.0 * t.value(out.fusion.x_f), 1e-12));
}

TEST_CASE("softmax classifier values") {
  Matrix z(2, 2);
  z << 0.0, 0.0, 1.0, 2.0;
  Matrix p = softmax_rows_values(z);
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(1, 0) == doctest::Approx(0.26894).epsilon(1e-4));
  CHECK(p(1, 1) == doctest::Approx(0.73106).epsilon(1e-4));
  // shift invariance
  Matrix shifted = softmax_rows_values((z.array() + 100.0).matrix());
  CHECK(shifted.isApprox(p, 1e-12));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("argmax prediction breaks ties toward the lower class") {
  Matrix z(3, 3);
  z << 1.0, 3.0, 2.0,
       5.0, 5.0, 1.0,
       0.0, 0.0, 0.0;
  auto pred = predict(z);
  CHECK(pred == std::vector<int>{1, 0, 0});
}

TEST_CASE("loss values on hand logits") {
  std::vector<int> labels{0, 1, 1};
  std::vector<std::int64_t> mask{0, 1, 2};
  auto cfg = tiny_config();
  auto m = HgmnModel::init(cfg, 1);

  // uniform logits: each masked node contributes ln(M)
  Tape t;
  Var z = t.leaf(Matrix::Zero(3, 2));
  Var l = loss(t, m, emit_params(t, m), z, labels, mask);
  CHECK(t.value(l)(0, 0) ==
        doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));

  // near-perfect logits push the loss toward zero
  Matrix sharp(3, 2);
  sharp << 50.0, 0.0, 0.0, 50.0, 0.0, 50.0;
  Tape t2;
  Var l2 = loss(t2, m, emit_params(t2, m), t2.leaf(sharp), labels, mask);
  CHECK(t2.value(l2)(0, 0) < 1e-12);

  // regularization adds lambda * sum of squared parameters
  m.cfg.lambda_reg = 0.01;
  double sq = 0.0;
  m.visit([&](const std::string&, const Matrix& mat) { sq += mat.squaredNorm(); });
  Tape t3;
  Var l3 = loss(t3, m, emit_params(t3, m), t3.leaf(Matrix::Zero(3, 2)),
                labels, mask);
  CHECK(t3.value(l3)(0, 0) ==
        doctest::Approx(3.0 * std::log(2.0) + 0.01 * sq).epsilon(1e-10));
}

TEST_CASE("full-model gradients match finite differences") {
  auto cfg = tiny_config();
  cfg.lambda_reg = 0.005;
  auto m = HgmnModel::init(cfg, 42);
  auto prop = fixture_prop();
  Matrix xr = random_inputs(5, 3, 11), xa = random_inputs(5, 4, 12);
  std::vector<int> labels{0, 1, 0, 1, 1};
  std::vector<std::int64_t> mask{0, 1, 3, 4};

  auto objective = [&](HgmnModel& model) {
    Tape t;
    auto p = emit_params(t, model);
    auto out = forward(t, model, p, prop, t.constant(xr), t.constant(xa));
    return t.value(loss(t, model, p, out.logits, labels, mask))(0, 0);
  };

  Tape t;
  auto p = emit_params(t, m);
  auto out = forward(t, m, p, prop, t.constant(xr), t.constant(xa));
  t.backward(loss(t, m, p, out.logits, labels, mask));

  const double h = 1e-6;
  std::mt19937_64 pick(77);
  m.visit([&](const std::string& name, Matrix& param) {
    const Matrix analytic = t.gradient(p.at(name));
    // probe a handful of coordinates per tensor
    const int probes = std::min<int>(6, static_cast<int>(param.size()));
    for (int q = 0; q < probes; ++q) {
      const auto idx = static_cast<Eigen::Index>(
          pick() % static_cast<std::uint64_t>(param.size()));
      const double saved = param(idx);
      param(idx) = saved + h;
      const double up = objective(m);
      param(idx) = saved - h;
      const double down = objective(m);
      param(idx) = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({1.0, std::abs(numeric), std::abs(analytic(idx))});
      INFO(name << " index " << idx);
      CHECK(std::abs(analytic(idx) - numeric) / denom < 1e-4);
    }
  });
}

TEST_CASE("ablated blocks receive identically zero gradients") {
  auto cfg = tiny_config();
  auto prop = fixture_prop();
  Matrix xr = random_inputs(5, 3, 13), xa = random_inputs(5, 4, 14);
  std::vector<int> labels{0, 1, 0, 1, 1};
  std::vector<std::int64_t> mask{0, 2, 4};

  SUBCASE("residual off zeroes w_res") {
    cfg.disable_residual = true;
    auto m = HgmnModel::init(cfg, 9);
    Tape t;
    auto p = emit_params(t, m);
    auto out = forward(t, m, p, prop, t.constant(xr), t.constant(xa));
    t.backward(loss(t, m, p, out.logits, labels, mask));
    CHECK(t.gradient(p.at("w_res")).isZero(0.0));
    CHECK_FALSE(t.gradient(p.at("w_cls")).isZero(0.0));
  }
  SUBCASE("fusion off zeroes the gate and state-space parameters") {
    cfg.disable_mamba = true;
    cfg.lambda_reg = 0.01;  // regularizer must also skip the dead block
    auto m = HgmnModel::init(cfg, 9);
    Tape t;
    auto p = emit_params(t, m);
    auto out = forward(t, m, p, prop, t.constant(xr), t.constant(xa));
    t.backward(loss(t, m, p, out.logits, labels, mask));
    for (const char* name : {"ssm.a_raw", "ssm.b_in", "ssm.c_out",
                             "ssm.delta_raw", "w_gate", "b_gate"})
      CHECK(t.gradient(p.at(name)).isZero(0.0));
    CHECK_FALSE(t.gradient(p.at("w_role")).isZero(0.0));
  }
}

TEST_CASE("optimizer first step and zero-gradient behavior") {
  auto cfg = tiny_config();
  auto m = HgmnModel::init(cfg, 30);
  const Matrix w_res_before = m.w_res;
  const Matrix w_cls_before = m.w_cls;

  // a loss that touches only the classifier: gradient of everything else is 0
  Tape t;
  auto p = emit_params(t, m);
  t.backward(t.sum_squares(p.at("w_cls")));
  Adam opt(0.003, 0.9, 0.999, 1e-8, 0.0);
  opt.step(m, t, p);

  CHECK(m.w_res.isApprox(w_res_before, 0.0));  // untouched, bitwise
  // first Adam step moves each touched coordinate by about lr
  Matrix delta = (m.w_cls - w_cls_before).cwiseAbs();
  CHECK(delta.maxCoeff() <= 0.003 + 1e-9);
  CHECK(delta.minCoeff() > 0.002);
}

TEST_CASE("repeated optimizer steps reduce the training loss") {
  auto cfg = tiny_config();
  auto m = HgmnModel::init(cfg, 55);
  auto prop = fixture_prop();
  Matrix xr = random_inputs(5, 3, 15), xa = random_inputs(5, 4, 16);
  std::vector<int> labels{0, 1, 0, 1, 1};
  std::vector<std::int64_t> mask{0, 1, 2, 3, 4};
  Adam opt(0.01);
  double first = 0.0, last = 0.0;
  for (int epoch = 0; epoch < 60; ++epoch) {
    Tape t;
    auto p = emit_params(t, m);
    auto out = forward(t, m, p, prop, t.constant(xr), t.constant(xa));
    Var l = loss(t, m, p, out.logits, labels, mask);
    if (epoch == 0) first = t.value(l)(0, 0);
    last = t.value(l)(0, 0);
    t.backward(l);
    opt.step(m, t, p);
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("invalid configurations are rejected") {
  ModelConfig cfg;  // all zeros
  CHECK_THROWS_AS(HgmnModel::init(cfg, 1), ModelError);
  auto ok = tiny_config();
  ok.num_layers = -1;
  CHECK_THROWS_AS(HgmnModel::init(ok, 1), ModelError);
}

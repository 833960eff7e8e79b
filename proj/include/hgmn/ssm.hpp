// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "hgmn/tape.hpp"

namespace hgmn {

using ad::Matrix;
using ad::Tape;
using ad::Var;

/// Diagonal state-space parameters for F_h independent per-channel SISO
/// systems, each with `state_dim` states. a_raw/b_in/c_out are stored
/// flattened channel-major as 1 x (F_h * state_dim); delta_raw is 1 x F_h
/// and maps to the step size via softplus.
struct SsmParams {
  int channels = 0;
  int state_dim = 0;
  Matrix a_raw;      // negative-real diagonal of A
  Matrix b_in;       // B
  Matrix c_out;      // C
  Matrix delta_raw;  // Delta = softplus(delta_raw)

  static SsmParams init(int channels, int state_dim, std::mt19937_64& rng) {
    SsmParams p;
    p.channels = channels;
    p.state_dim = state_dim;
    p.a_raw.resize(1, channels * state_dim);
    for (int d = 0; d < channels; ++d)
      for (int k = 0; k < state_dim; ++k)
        p.a_raw(0, d * state_dim + k) = -static_cast<double>(k + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    p.b_in.resize(1, channels * state_dim);
    p.c_out.resize(1, channels * state_dim);
    const double c_scale = 1.0 / std::sqrt(static_cast<double>(state_dim));
    for (int j = 0; j < channels * state_dim; ++j) {
      p.b_in(0, j) = normal(rng);
      p.c_out(0, j) = normal(rng) * c_scale;
    }
    // softplus^{-1} of step sizes log-spaced in [0.01, 0.1]
    std::uniform_real_distribution<double> unif(std::log(0.01), std::log(0.1));
    p.delta_raw.resize(1, channels);
    for (int d = 0; d < channels; ++d) {
      const double dt = std::exp(unif(rng));
      p.delta_raw(0, d) = std::log(std::expm1(dt));
    }
    return p;
  }
};

/// Inverse of softplus; maps a desired step size to its raw parameter.
inline double inv_softplus(double y) { return std::log(std::expm1(y)); }

/// Scalar zero-order-hold discretization: Abar = e^{delta a},
/// Bbar = (e^{delta a} - 1)/(delta a) * delta b, with the a -> 0 limit
/// Bbar = delta b.
inline std::pair<double, double> zoh_discretize_scalar(double a, double b,
                                                       double delta) {
  const double za = delta * a;
  const double a_bar = std::exp(za);
  double b_bar;
  if (std::abs(za) < 1e-8)
    b_bar = delta * b * (1.0 + za / 2.0 + za * za / 6.0);
  else
    b_bar = std::expm1(za) / za * delta * b;
  return {a_bar, b_bar};
}

struct SsmVars {
  Var a_raw, b_in, c_out, delta_raw;
};

struct SsmDiscrete {
  Var a_bar, b_bar;  // 1 x (channels * state_dim)
};

/// Tape form of the ZOH discretization, differentiable in all parameters.
inline SsmDiscrete discretize(Tape& t, const SsmVars& v, int state_dim) {
  Var delta = t.softplus(v.delta_raw);
  Var delta_e = t.expand_cols(delta, state_dim);
  Var da = t.hadamard(delta_e, v.a_raw);
  SsmDiscrete d;
  d.a_bar = t.exp(da);
  d.b_bar = t.hadamard(t.zoh_phi(da), t.hadamard(delta_e, v.b_in));
  return d;
}

/// Recurrent scan h_t = Abar h_{t-1} + Bbar x_t, y_t = C h_t, evaluated for
/// a whole batch at once. Each token is rows x channels; the hidden state is
/// rows x (channels * state_dim).
inline std::vector<Var> ssm_scan(Tape& t, const SsmDiscrete& d, Var c_out,
                                 const std::vector<Var>& tokens,
                                 int state_dim) {
  if (tokens.empty()) throw ad::TapeError("scan needs at least one token");
  std::vector<Var> ys;
  ys.reserve(tokens.size());
  Var h{-1};
  bool first = true;
  for (Var x : tokens) {
    Var inject = t.col_scale(t.expand_cols(x, state_dim), d.b_bar);
    h = first ? inject : t.add(t.col_scale(h, d.a_bar), inject);
    first = false;
    ys.push_back(t.contract_cols(t.col_scale(h, c_out), state_dim));
  }
  return ys;
}

/// Non-tape convenience wrapper: run the scan on plain values.
inline std::vector<Matrix> ssm_scan_values(const SsmParams& p,
                                           const std::vector<Matrix>& tokens) {
  Tape t;
  SsmVars v{t.constant(p.a_raw), t.constant(p.b_in), t.constant(p.c_out),
            t.constant(p.delta_raw)};
  SsmDiscrete d = discretize(t, v, p.state_dim);
  std::vector<Var> xs;
  xs.reserve(tokens.size());
  for (auto& m : tokens) xs.push_back(t.constant(m));
  auto ys = ssm_scan(t, d, v.c_out, xs, p.state_dim);
  std::vector<Matrix> out;
  out.reserve(ys.size());
  for (Var y : ys) out.push_back(t.value(y));
  return out;
}

}  // namespace hgmn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "hgmn/embeddings.hpp"
#include "hgmn/graph.hpp"
#include "hgmn/hypergraph.hpp"
#include "hgmn/metrics.hpp"
#include "hgmn/model.hpp"

namespace hgmn {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  HypergraphKind hypergraph_kind = HypergraphKind::Link;
  Normalization normalization = Normalization::AsymmetricInverse;
  bool include_center = true;
  int f_hidden = 64;
  int state_dim = 16;
  int num_layers = 2;
  double lr = 0.003;
  double weight_decay = 5e-4;
  double lambda_reg = 0.0;
  int max_epochs = 500;
  int patience = 50;
  std::uint64_t seed = 0;
  bool disable_residual = false;
  bool disable_mamba = false;
  SplitSpec split;

  std::string variant_name() const {
    std::string base =
        hypergraph_kind == HypergraphKind::Link ? "HGMN(L)" : "HGMN(D)";
    if (disable_residual) base += "/residual";
    if (disable_mamba) base += "/mamba";
    return base;
  }
};

struct RunMetrics {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_f1;      // per epoch
  int best_epoch = 0;
  double train_f1 = 0.0;  // of the returned (best-val) model
  double best_val_f1 = 0.0;
  double test_f1 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  HgmnModel model;
  RunMetrics metrics;
};

namespace detail {

inline double masked_f1(const Matrix& logits, const std::vector<int>& labels,
                        const std::vector<NodeId>& ids) {
  if (ids.empty()) return 0.0;
  auto pred_all = predict(logits);
  std::vector<int> pred, truth;
  pred.reserve(ids.size());
  truth.reserve(ids.size());
  for (auto v : ids) {
    pred.push_back(pred_all[static_cast<size_t>(v)]);
    truth.push_back(labels[static_cast<size_t>(v)]);
  }
  return micro_f1(pred, truth);
}

}  // namespace detail

inline Hypergraph build_hypergraph(const Graph& g, const TrainConfig& cfg) {
  return cfg.hypergraph_kind == HypergraphKind::Link
             ? build_link_hypergraph(g, cfg.include_center)
             : build_degree_hypergraph(g);
}

/// Train one model: build the hypergraph and propagation operator, then
/// loop fuse -> conv -> residual -> loss -> Adam step with early stopping on
/// validation micro-F1. Returns the best-validation snapshot.
inline TrainResult train(const Graph& g, const Split& split,
                         const EmbeddingSet& x_role,
                         const EmbeddingSet& x_adj, const TrainConfig& cfg) {
  if (!g.has_labels()) throw TrainError("training requires labels");
  if (split.train_ids.empty()) throw TrainError("empty training split");
  const auto start = std::chrono::steady_clock::now();

  Hypergraph h = build_hypergraph(g, cfg);
  PropagationOperator prop = propagation_operator(h, cfg.normalization);

  ModelConfig mc;
  mc.f_role = static_cast<int>(x_role.dim());
  mc.f_adj = static_cast<int>(x_adj.dim());
  mc.f_hidden = cfg.f_hidden;
  mc.state_dim = cfg.state_dim;
  mc.num_classes = g.num_classes();
  mc.num_layers = cfg.num_layers;
  mc.lambda_reg = cfg.lambda_reg;
  mc.disable_residual = cfg.disable_residual;
  mc.disable_mamba = cfg.disable_mamba;
  HgmnModel model = HgmnModel::init(mc, cfg.seed);
  Adam opt(cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);

  const std::vector<std::int64_t> mask(split.train_ids.begin(),
                                       split.train_ids.end());
  // early stopping falls back to train micro-F1 when no validation ids
  const std::vector<NodeId>& monitor_ids =
      split.val_ids.empty() ? split.train_ids : split.val_ids;

  TrainResult result;
  result.model = model;
  double best_monitor = -1.0;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    try {
      Tape tape;
      ParamVars vars = emit_params(tape, model);
      Var xr = tape.constant(x_role.matrix);
      Var xa = tape.constant(x_adj.matrix);
      ForwardOut fwd = forward(tape, model, vars, prop.matrix, xr, xa);
      Var l = loss(tape, model, vars, fwd.logits, g.labels(), mask);
      result.metrics.train_loss.push_back(tape.value(l)(0, 0));

      const double monitor_f1 =
          detail::masked_f1(tape.value(fwd.logits), g.labels(), monitor_ids);
      result.metrics.val_f1.push_back(monitor_f1);
      if (monitor_f1 > best_monitor) {
        best_monitor = monitor_f1;
        result.metrics.best_epoch = epoch;
        result.model = model;  // snapshot before this epoch's update
        since_best = 0;
      } else if (++since_best > cfg.patience) {
        break;
      }

      tape.backward(l);
      opt.step(model, tape, vars);
    } catch (const ad::TapeError& e) {
      throw TrainError("training diverged at epoch " +
                       std::to_string(epoch) + ": " + e.what());
    } catch (const ModelError& e) {
      throw TrainError("training diverged at epoch " +
                       std::to_string(epoch) + ": " + e.what());
    }
  }

  // evaluate the snapshot on frozen parameters
  {
    Tape tape;
    ParamVars vars = emit_params(tape, result.model);
    Var xr = tape.constant(x_role.matrix);
    Var xa = tape.constant(x_adj.matrix);
    ForwardOut fwd = forward(tape, result.model, vars, prop.matrix, xr, xa);
    const Matrix& logits = tape.value(fwd.logits);
    result.metrics.train_f1 =
        detail::masked_f1(logits, g.labels(), split.train_ids);
    result.metrics.best_val_f1 = best_monitor;
    result.metrics.test_f1 =
        detail::masked_f1(logits, g.labels(), split.test_ids);
  }
  result.metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

struct AggregateMetrics {
  std::vector<double> trial_test_f1;
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation
  double best = 0.0;
  int failed_trials = 0;
  double wall_seconds = 0.0;
};

inline AggregateMetrics aggregate(const std::vector<double>& scores,
                                  int failed = 0) {
  AggregateMetrics a;
  a.trial_test_f1 = scores;
  a.failed_trials = failed;
  if (scores.empty()) return a;
  double sum = 0.0;
  a.best = scores.front();
  for (double s : scores) {
    sum += s;
    a.best = std::max(a.best, s);
  }
  a.mean = sum / static_cast<double>(scores.size());
  if (scores.size() > 1) {
    double ss = 0.0;
    for (double s : scores) ss += (s - a.mean) * (s - a.mean);
    a.stdev = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  }
  return a;
}

/// Fresh split per trial (seed = base seed + trial index), reporting
/// mean +/- std and max test micro-F1. Divergent trials are counted as
/// failures, not crashes.
inline AggregateMetrics multi_trial(const Graph& g, const EmbeddingSet& x_role,
                                    const EmbeddingSet& x_adj,
                                    TrainConfig cfg, int trials,
                                    std::vector<RunMetrics>* runs = nullptr) {
  if (trials < 1) throw TrainError("trials must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> scores;
  int failed = 0;
  for (int t = 0; t < trials; ++t) {
    TrainConfig trial_cfg = cfg;
    trial_cfg.seed = cfg.seed + static_cast<std::uint64_t>(t);
    trial_cfg.split.seed = trial_cfg.seed;
    try {
      Split split = sample_split(g, trial_cfg.split);
      TrainResult r = train(g, split, x_role, x_adj, trial_cfg);
      scores.push_back(r.metrics.test_f1);
      if (runs) runs->push_back(r.metrics);
    } catch (const TrainError&) {
      ++failed;
    }
  }
  AggregateMetrics a = aggregate(scores, failed);
  a.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return a;
}

struct SweepRow {
  double value = 0.0;
  AggregateMetrics metrics;
};

/// One multi_trial per value of the swept parameter
/// (lr, lambda_reg, f_hidden, or num_layers).
inline std::vector<SweepRow> sweep(const Graph& g, const EmbeddingSet& x_role,
                                   const EmbeddingSet& x_adj,
                                   const TrainConfig& base,
                                   const std::string& param,
                                   const std::vector<double>& values,
                                   int trials) {
  std::vector<SweepRow> rows;
  for (double v : values) {
    TrainConfig cfg = base;
    if (param == "lr")
      cfg.lr = v;
    else if (param == "lambda_reg")
      cfg.lambda_reg = v;
    else if (param == "f_hidden")
      cfg.f_hidden = static_cast<int>(v);
    else if (param == "num_layers")
      cfg.num_layers = static_cast<int>(v);
    else
      throw TrainError("unknown sweep parameter: " + param);
    SweepRow row;
    row.value = v;
    row.metrics = multi_trial(g, x_role, x_adj, cfg, trials);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void sweep_csv(const std::string& param,
                      const std::vector<SweepRow>& rows, std::ostream& out) {
  out << param << ",mean,std,max,trials_ok,trials_failed\n";
  for (auto& r : rows)
    out << r.value << ',' << format_pct(r.metrics.mean * 100.0) << ','
        << format_pct(r.metrics.stdev * 100.0) << ','
        << format_pct(r.metrics.best * 100.0) << ','
        << r.metrics.trial_test_f1.size() << ',' << r.metrics.failed_trials
        << '\n';
}

}  // namespace hgmn

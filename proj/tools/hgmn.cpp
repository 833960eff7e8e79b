// SPDX-License-Identifier: Apache-2.0
//
// hgmn — batch pipeline CLI: hypergraph construction, structural embedding
// generation, training with ablations, evaluation, sweeps, and reports.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "hgmn/embeddings.hpp"
#include "hgmn/graph.hpp"
#include "hgmn/hypergraph.hpp"
#include "hgmn/io.hpp"
#include "hgmn/metrics.hpp"
#include "hgmn/model.hpp"
#include "hgmn/trainer.hpp"

namespace {

using hgmn::json;

std::string resolve_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (const char* base = std::getenv("HGMN_DATA_DIR")) {
    fs::path candidate = fs::path(base) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

struct DatasetArgs {
  std::string edge_list;
  std::string labels;
  std::string planetoid_dir;
  std::string planetoid_name;

  void attach(CLI::App* cmd, bool need_labels) {
    cmd->add_option("--input", edge_list, "Edge-list file (`u v` per line)");
    if (need_labels)
      cmd->add_option("--labels", labels,
                      "Label file (node label, or one label per line)");
    cmd->add_option("--planetoid-dir", planetoid_dir,
                    "Directory with <name>.content / <name>.cites");
    cmd->add_option("--planetoid-name", planetoid_name,
                    "Dataset name inside --planetoid-dir (cora, citeseer, ...)");
  }

  hgmn::Graph load(bool need_labels) const {
    if (!planetoid_dir.empty()) {
      if (planetoid_name.empty())
        throw hgmn::GraphError("--planetoid-name required with --planetoid-dir");
      return hgmn::load_planetoid(resolve_path(planetoid_dir), planetoid_name);
    }
    if (edge_list.empty())
      throw hgmn::GraphError("no input graph given (--input or --planetoid-dir)");
    auto lg = hgmn::load_edge_list(resolve_path(edge_list));
    if (!labels.empty())
      hgmn::load_labels(lg.graph, resolve_path(labels), &lg.id_to_token);
    else if (need_labels)
      throw hgmn::GraphError("--labels required for this command");
    return std::move(lg.graph);
  }

  std::string fingerprint_source() const {
    if (!planetoid_dir.empty())
      return resolve_path(planetoid_dir) + "/" + planetoid_name + ".cites";
    return resolve_path(edge_list);
  }
};

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw hgmn::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

int cmd_build_hypergraph(const DatasetArgs& data, const std::string& kind,
                         bool include_center, const std::string& output) {
  hgmn::Graph g = data.load(false);
  hgmn::Hypergraph h =
      kind == "link" ? hgmn::build_link_hypergraph(g, include_center)
                     : hgmn::build_degree_hypergraph(g);
  {
    std::ofstream out(output);
    if (!out) throw hgmn::IoError("cannot write " + output);
    hgmn::export_incidence(h, out);
  }
  std::map<long, long> node_hist, edge_hist;
  for (Eigen::Index v = 0; v < h.num_nodes(); ++v)
    node_hist[static_cast<long>(h.node_degrees[v])]++;
  for (Eigen::Index e = 0; e < h.num_edges(); ++e)
    edge_hist[static_cast<long>(h.edge_degrees[e])]++;
  json header;
  header["kind"] = kind;
  header["N"] = h.num_nodes();
  header["N_E"] = h.num_edges();
  header["node_degree_histogram"] = node_hist;
  header["edge_degree_histogram"] = edge_hist;
  write_json(header, output + ".json");
  std::cout << "N=" << h.num_nodes() << " N_E=" << h.num_edges() << '\n';
  std::cout << "node degree histogram:";
  for (auto& [d, c] : node_hist) std::cout << ' ' << d << ':' << c;
  std::cout << "\nhyperedge degree histogram:";
  for (auto& [d, c] : edge_hist) std::cout << ' ' << d << ':' << c;
  std::cout << '\n';
  return 0;
}

hgmn::EmbeddingSet make_role(const hgmn::Graph& g, int dim_points) {
  hgmn::WaveletConfig wc;
  wc.num_points = dim_points;
  return hgmn::role_embeddings(g, wc);
}

hgmn::EmbeddingSet make_adj(const hgmn::Graph& g, const hgmn::WalkConfig& wc,
                            std::ostream& log) {
  if (g.num_edges() == 0) {
    // edgeless degenerate case: initialization-only embeddings
    log << "warning: graph has no edges; adjacency embeddings are "
           "initialization only\n";
    std::mt19937_64 rng(wc.seed);
    std::uniform_real_distribution<double> u(-0.5 / wc.dim, 0.5 / wc.dim);
    hgmn::EmbeddingSet e;
    e.kind = hgmn::EmbeddingKind::Adjacency;
    e.matrix.resize(static_cast<Eigen::Index>(g.num_nodes()), wc.dim);
    for (Eigen::Index i = 0; i < e.matrix.rows(); ++i)
      for (int j = 0; j < wc.dim; ++j) e.matrix(i, j) = u(rng);
    return e;
  }
  int isolated = 0;
  auto e = hgmn::adjacency_embeddings(g, wc, &isolated);
  if (isolated > 0)
    log << "warning: " << isolated
        << " isolated node(s) kept their initialization rows\n";
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HGMN node-classification pipeline"};
  app.require_subcommand(1);

  // ---- build-hypergraph ----
  auto* bh = app.add_subcommand("build-hypergraph",
                                "Construct a hypergraph and export incidence");
  DatasetArgs bh_data;
  bh_data.attach(bh, false);
  std::string bh_kind = "link";
  bool bh_center = true;
  std::string bh_out = "hypergraph.txt";
  bh->add_option("--kind", bh_kind, "link or degree")
      ->check(CLI::IsMember({"link", "degree"}));
  bh->add_flag("--include-center,!--no-include-center", bh_center,
               "Include the central node in its link hyperedge");
  bh->add_option("--output", bh_out, "Incidence output path");

  // ---- embed ----
  auto* em = app.add_subcommand("embed", "Generate structural embeddings");
  DatasetArgs em_data;
  em_data.attach(em, false);
  bool em_role = false, em_adj = false;
  int em_points = 25;
  hgmn::WalkConfig em_walk;
  std::string em_prefix = "embeddings";
  em->add_flag("--role", em_role, "Generate role embeddings");
  em->add_flag("--adj", em_adj, "Generate adjacency embeddings");
  em->add_option("--dim-points", em_points,
                 "Characteristic-function grid points (F_r = 2 * this)");
  em->add_option("--adj-dim", em_walk.dim, "Adjacency embedding width");
  em->add_option("--p", em_walk.p, "Walk return parameter");
  em->add_option("--q", em_walk.q, "Walk in-out parameter");
  em->add_option("--walk-len", em_walk.walk_len, "Walk length");
  em->add_option("--walks", em_walk.walks_per_node, "Walks per node");
  em->add_option("--window", em_walk.window, "Skip-gram window");
  em->add_option("--epochs", em_walk.epochs, "Skip-gram epochs");
  em->add_option("--seed", em_walk.seed, "RNG seed");
  em->add_option("--out-prefix", em_prefix, "Output prefix");

  // ---- train / sweep shared options ----
  auto add_train_opts = [](CLI::App* cmd, DatasetArgs& data,
                           std::string& config_path, hgmn::TrainConfig& cfg,
                           std::string& kind, std::string& ablate,
                           std::string& role_path, std::string& adj_path,
                           int& trials, std::string& prefix) {
    data.attach(cmd, true);
    cmd->add_option("--config", config_path, "TrainConfig JSON file");
    cmd->add_option("--kind", kind, "link or degree")
        ->check(CLI::IsMember({"", "link", "degree"}));
    cmd->add_option("--lr", cfg.lr, "Learning rate");
    cmd->add_option("--weight-decay", cfg.weight_decay, "Adam weight decay");
    cmd->add_option("--lambda-reg", cfg.lambda_reg, "L2 coefficient in the loss");
    cmd->add_option("--f-hidden", cfg.f_hidden, "Hidden width F_h");
    cmd->add_option("--state-dim", cfg.state_dim, "SSM state dimension");
    cmd->add_option("--num-layers", cfg.num_layers, "Conv layers");
    cmd->add_option("--max-epochs", cfg.max_epochs, "Epoch cap");
    cmd->add_option("--patience", cfg.patience, "Early-stopping patience");
    cmd->add_option("--seed", cfg.seed, "Base RNG seed");
    cmd->add_option("--train-frac", cfg.split.train_frac, "Training fraction");
    cmd->add_flag("--imbalance-cap", cfg.split.imbalance_cap,
                  "Cap class imbalance in the train pool");
    cmd->add_option("--ablate", ablate, "residual or mamba")
        ->check(CLI::IsMember({"", "residual", "mamba"}));
    cmd->add_option("--role-embeddings", role_path,
                    "Precomputed role embedding file");
    cmd->add_option("--adj-embeddings", adj_path,
                    "Precomputed adjacency embedding file");
    cmd->add_option("--trials", trials, "Number of trials");
    cmd->add_option("--out-prefix", prefix, "Output prefix");
  };

  auto* tr = app.add_subcommand("train", "Train HGMN and report metrics");
  DatasetArgs tr_data;
  std::string tr_config, tr_kind, tr_ablate, tr_role, tr_adj;
  hgmn::TrainConfig tr_cfg;
  int tr_trials = 1;
  std::string tr_prefix = "run";
  add_train_opts(tr, tr_data, tr_config, tr_cfg, tr_kind, tr_ablate, tr_role,
                 tr_adj, tr_trials, tr_prefix);

  auto* sw = app.add_subcommand("sweep", "Grid sweep over one parameter");
  DatasetArgs sw_data;
  std::string sw_config, sw_kind, sw_ablate, sw_role, sw_adj;
  hgmn::TrainConfig sw_cfg;
  int sw_trials = 1;
  std::string sw_prefix = "sweep";
  std::string sw_param = "lr";
  std::string sw_values = "0.003";
  add_train_opts(sw, sw_data, sw_config, sw_cfg, sw_kind, sw_ablate, sw_role,
                 sw_adj, sw_trials, sw_prefix);
  sw->add_option("--param", sw_param, "lr, lambda_reg, f_hidden, or num_layers");
  sw->add_option("--values", sw_values, "Comma-separated values");

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  DatasetArgs ev_data;
  ev_data.attach(ev, true);
  std::string ev_ckpt, ev_role, ev_adj, ev_kind = "link";
  bool ev_center = true;
  std::string ev_norm = "asymmetric-inverse";
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint JSON")->required();
  ev->add_option("--role-embeddings", ev_role, "Role embedding file")->required();
  ev->add_option("--adj-embeddings", ev_adj, "Adjacency embedding file")
      ->required();
  ev->add_option("--kind", ev_kind, "link or degree")
      ->check(CLI::IsMember({"link", "degree"}));
  ev->add_flag("--include-center,!--no-include-center", ev_center, "");
  ev->add_option("--normalization", ev_norm, "")
      ->check(CLI::IsMember({"asymmetric-inverse", "symmetric-half"}));

  // ---- report ----
  auto* rp = app.add_subcommand("report", "Render a results table");
  std::vector<std::string> rp_metrics;
  double rp_baseline = 0.0;
  bool rp_have_baseline = false;
  bool rp_csv = false;
  rp->add_option("--metrics", rp_metrics, "Aggregate metrics JSON files")
      ->required();
  rp->add_option("--baseline", rp_baseline, "Best baseline score (percent)")
      ->each([&](const std::string&) { rp_have_baseline = true; });
  rp->add_flag("--csv", rp_csv, "Emit CSV instead of aligned text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
  }

  try {
    if (bh->parsed())
      return cmd_build_hypergraph(bh_data, bh_kind, bh_center, bh_out);

    if (em->parsed()) {
      if (!em_role && !em_adj)
        throw hgmn::EmbeddingError("nothing to do: pass --role and/or --adj");
      hgmn::Graph g = em_data.load(false);
      std::vector<std::string> outputs;
      if (em_role) {
        auto e = make_role(g, em_points);
        hgmn::save_embeddings(e, em_prefix + ".role.txt");
        outputs.push_back(em_prefix + ".role.txt");
      }
      if (em_adj) {
        auto e = make_adj(g, em_walk, std::cerr);
        hgmn::save_embeddings(e, em_prefix + ".adj.txt");
        outputs.push_back(em_prefix + ".adj.txt");
      }
      json cfg_snapshot{{"role", em_role},
                        {"adj", em_adj},
                        {"dim_points", em_points},
                        {"adj_dim", em_walk.dim},
                        {"p", em_walk.p},
                        {"q", em_walk.q},
                        {"walk_len", em_walk.walk_len},
                        {"walks_per_node", em_walk.walks_per_node},
                        {"window", em_walk.window},
                        {"epochs", em_walk.epochs}};
      write_json(hgmn::make_manifest(cfg_snapshot,
                                     em_data.fingerprint_source(),
                                     em_walk.seed, outputs),
                 em_prefix + ".manifest.json");
      return 0;
    }

    auto run_training = [&](DatasetArgs& data, const std::string& config_path,
                            hgmn::TrainConfig cfg, const std::string& kind,
                            const std::string& ablate,
                            const std::string& role_path,
                            const std::string& adj_path, int trials,
                            const std::string& prefix, CLI::App* cmd,
                            bool do_sweep, const std::string& param,
                            const std::string& values_csv) -> int {
      if (!config_path.empty()) {
        std::ifstream in(resolve_path(config_path));
        if (!in) throw hgmn::IoError("cannot open config " + config_path);
        json j;
        in >> j;
        hgmn::TrainConfig file_cfg = hgmn::train_config_from_json(j);
        // the file is the base; flags that were actually given win
        auto take = [&](const char* flag, auto member_file, auto member_cli,
                        auto& dst) {
          dst = cmd->count(flag) ? member_cli : member_file;
        };
        hgmn::TrainConfig merged = file_cfg;
        take("--lr", file_cfg.lr, cfg.lr, merged.lr);
        take("--weight-decay", file_cfg.weight_decay, cfg.weight_decay,
             merged.weight_decay);
        take("--lambda-reg", file_cfg.lambda_reg, cfg.lambda_reg,
             merged.lambda_reg);
        take("--f-hidden", file_cfg.f_hidden, cfg.f_hidden, merged.f_hidden);
        take("--state-dim", file_cfg.state_dim, cfg.state_dim,
             merged.state_dim);
        take("--num-layers", file_cfg.num_layers, cfg.num_layers,
             merged.num_layers);
        take("--max-epochs", file_cfg.max_epochs, cfg.max_epochs,
             merged.max_epochs);
        take("--patience", file_cfg.patience, cfg.patience, merged.patience);
        take("--seed", file_cfg.seed, cfg.seed, merged.seed);
        take("--train-frac", file_cfg.split.train_frac, cfg.split.train_frac,
             merged.split.train_frac);
        take("--imbalance-cap", file_cfg.split.imbalance_cap,
             cfg.split.imbalance_cap, merged.split.imbalance_cap);
        cfg = merged;
      }
      if (!kind.empty())
        cfg.hypergraph_kind = kind == "link" ? hgmn::HypergraphKind::Link
                                             : hgmn::HypergraphKind::Degree;
      if (ablate == "residual") cfg.disable_residual = true;
      if (ablate == "mamba") cfg.disable_mamba = true;

      hgmn::Graph g = data.load(true);
      hgmn::EmbeddingSet role =
          role_path.empty()
              ? make_role(g, 25)
              : hgmn::load_embeddings(resolve_path(role_path),
                                      hgmn::EmbeddingKind::Role);
      hgmn::WalkConfig wc;
      wc.seed = cfg.seed;
      hgmn::EmbeddingSet adj =
          adj_path.empty() ? make_adj(g, wc, std::cerr)
                           : hgmn::load_embeddings(resolve_path(adj_path),
                                                   hgmn::EmbeddingKind::Adjacency);

      if (do_sweep) {
        std::vector<double> vals;
        std::stringstream ss(values_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        auto rows = hgmn::sweep(g, role, adj, cfg, param, vals, trials);
        std::ofstream out(prefix + ".csv");
        if (!out) throw hgmn::IoError("cannot write " + prefix + ".csv");
        hgmn::sweep_csv(param, rows, out);
        write_json(hgmn::make_manifest(hgmn::train_config_to_json(cfg),
                                       data.fingerprint_source(), cfg.seed,
                                       {prefix + ".csv"}),
                   prefix + ".manifest.json");
        std::cout << "wrote " << prefix << ".csv (" << rows.size()
                  << " rows)\n";
        return 0;
      }

      std::vector<hgmn::RunMetrics> runs;
      hgmn::AggregateMetrics agg =
          hgmn::multi_trial(g, role, adj, cfg, trials, &runs);

      // re-train the best-seed trial to produce the checkpoint
      std::string ckpt_path;
      if (!agg.trial_test_f1.empty()) {
        size_t best = 0;
        for (size_t i = 1; i < agg.trial_test_f1.size(); ++i)
          if (agg.trial_test_f1[i] > agg.trial_test_f1[best]) best = i;
        hgmn::TrainConfig best_cfg = cfg;
        best_cfg.seed = cfg.seed + best;
        best_cfg.split.seed = best_cfg.seed;
        hgmn::Split split = hgmn::sample_split(g, best_cfg.split);
        auto result = hgmn::train(g, split, role, adj, best_cfg);
        ckpt_path = prefix + ".checkpoint.json";
        hgmn::save_checkpoint(result.model, ckpt_path);
      }

      json metrics;
      metrics["variant"] = cfg.variant_name();
      metrics["aggregate"] = hgmn::aggregate_to_json(agg);
      json run_list = json::array();
      for (auto& r : runs) run_list.push_back(hgmn::run_metrics_to_json(r));
      metrics["runs"] = std::move(run_list);
      write_json(metrics, prefix + ".metrics.json");
      std::vector<std::string> outputs{prefix + ".metrics.json"};
      if (!ckpt_path.empty()) outputs.push_back(ckpt_path);
      write_json(hgmn::make_manifest(hgmn::train_config_to_json(cfg),
                                     data.fingerprint_source(), cfg.seed,
                                     outputs),
                 prefix + ".manifest.json");
      std::cout << cfg.variant_name() << ": mean test micro-F1 "
                << hgmn::format_pct(agg.mean * 100.0) << " +/- "
                << hgmn::format_pct(agg.stdev * 100.0) << ", max "
                << hgmn::format_pct(agg.best * 100.0) << " over "
                << agg.trial_test_f1.size() << " trial(s)";
      if (agg.failed_trials) std::cout << ", " << agg.failed_trials << " failed";
      std::cout << '\n';
      return 0;
    };

    if (tr->parsed())
      return run_training(tr_data, tr_config, tr_cfg, tr_kind, tr_ablate,
                          tr_role, tr_adj, tr_trials, tr_prefix, tr, false,
                          "", "");
    if (sw->parsed())
      return run_training(sw_data, sw_config, sw_cfg, sw_kind, sw_ablate,
                          sw_role, sw_adj, sw_trials, sw_prefix, sw, true,
                          sw_param, sw_values);

    if (ev->parsed()) {
      hgmn::Graph g = ev_data.load(true);
      hgmn::HgmnModel model = hgmn::load_checkpoint(resolve_path(ev_ckpt));
      auto role = hgmn::load_embeddings(resolve_path(ev_role),
                                        hgmn::EmbeddingKind::Role);
      auto adj = hgmn::load_embeddings(resolve_path(ev_adj),
                                       hgmn::EmbeddingKind::Adjacency);
      hgmn::Hypergraph h =
          ev_kind == "link" ? hgmn::build_link_hypergraph(g, ev_center)
                            : hgmn::build_degree_hypergraph(g);
      auto prop = hgmn::propagation_operator(
          h, ev_norm == "asymmetric-inverse"
                 ? hgmn::Normalization::AsymmetricInverse
                 : hgmn::Normalization::SymmetricHalf);
      hgmn::Tape tape;
      auto vars = hgmn::emit_params(tape, model);
      auto fwd = hgmn::forward(tape, model, vars, prop.matrix,
                               tape.constant(role.matrix),
                               tape.constant(adj.matrix));
      auto pred = hgmn::predict(tape.value(fwd.logits));
      double f1 = hgmn::micro_f1(pred, g.labels());
      std::cout << "micro-F1 (all labeled nodes): "
                << hgmn::format_pct(f1 * 100.0) << '\n';
      return 0;
    }

    if (rp->parsed()) {
      std::vector<hgmn::ReportRow> rows;
      for (auto& path : rp_metrics) {
        std::ifstream in(resolve_path(path));
        if (!in) throw hgmn::IoError("cannot open " + path);
        json j;
        in >> j;
        hgmn::ReportRow row;
        row.name = j.value("variant", path);
        const auto& agg = j.at("aggregate");
        row.mean = agg.at("mean").get<double>() * 100.0;
        row.stdev = agg.at("std").get<double>() * 100.0;
        row.best = agg.at("max").get<double>() * 100.0;
        rows.push_back(std::move(row));
      }
      const double* baseline = rp_have_baseline ? &rp_baseline : nullptr;
      if (rp_csv)
        hgmn::render_report_csv(rows, std::cout, baseline);
      else
        hgmn::render_report(rows, std::cout, baseline);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

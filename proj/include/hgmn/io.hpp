// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "hgmn/model.hpp"
#include "hgmn/trainer.hpp"

namespace hgmn {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kCheckpointVersion = 1;

using json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json matrix_to_json(const Matrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = std::move(data);
  return j;
}

inline Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw IoError("checkpoint tensor size mismatch");
  size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(i, c) = data[k++].get<double>();
  return m;
}

inline json model_config_to_json(const ModelConfig& c) {
  return json{{"f_role", c.f_role},
              {"f_adj", c.f_adj},
              {"f_hidden", c.f_hidden},
              {"state_dim", c.state_dim},
              {"num_classes", c.num_classes},
              {"num_layers", c.num_layers},
              {"lambda_reg", c.lambda_reg},
              {"disable_residual", c.disable_residual},
              {"disable_mamba", c.disable_mamba}};
}

inline ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.f_role = j.at("f_role").get<int>();
  c.f_adj = j.at("f_adj").get<int>();
  c.f_hidden = j.at("f_hidden").get<int>();
  c.state_dim = j.at("state_dim").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.lambda_reg = j.at("lambda_reg").get<double>();
  c.disable_residual = j.at("disable_residual").get<bool>();
  c.disable_mamba = j.at("disable_mamba").get<bool>();
  return c;
}

/// Versioned JSON checkpoint: config plus every parameter tensor with shape
/// metadata. Doubles are written at full precision so save/load round-trips
/// are exact.
inline json checkpoint_to_json(const HgmnModel& m) {
  json j;
  j["format"] = "hgmn-checkpoint";
  j["version"] = kCheckpointVersion;
  j["config"] = model_config_to_json(m.cfg);
  json params = json::object();
  m.visit([&](const std::string& name, const Matrix& mat) {
    params[name] = matrix_to_json(mat);
  });
  j["params"] = std::move(params);
  return j;
}

inline HgmnModel checkpoint_from_json(const json& j) {
  if (j.value("format", "") != "hgmn-checkpoint")
    throw IoError("not a checkpoint file");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw IoError("unsupported checkpoint version");
  HgmnModel m = HgmnModel::init(model_config_from_json(j.at("config")), 0);
  const auto& params = j.at("params");
  m.visit([&](const std::string& name, Matrix& mat) {
    if (!params.contains(name))
      throw IoError("checkpoint missing tensor " + name);
    Matrix loaded = matrix_from_json(params.at(name));
    if (loaded.rows() != mat.rows() || loaded.cols() != mat.cols())
      throw IoError("checkpoint shape mismatch for " + name);
    mat = std::move(loaded);
  });
  return m;
}

inline void save_checkpoint(const HgmnModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << checkpoint_to_json(m).dump(2) << '\n';
}

inline HgmnModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  in >> j;
  return checkpoint_from_json(j);
}

inline json train_config_to_json(const TrainConfig& c) {
  return json{{"hypergraph_kind", kind_name(c.hypergraph_kind)},
              {"normalization", c.normalization == Normalization::AsymmetricInverse
                                    ? "asymmetric-inverse"
                                    : "symmetric-half"},
              {"include_center", c.include_center},
              {"f_hidden", c.f_hidden},
              {"state_dim", c.state_dim},
              {"num_layers", c.num_layers},
              {"lr", c.lr},
              {"weight_decay", c.weight_decay},
              {"lambda_reg", c.lambda_reg},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed},
              {"disable_residual", c.disable_residual},
              {"disable_mamba", c.disable_mamba},
              {"train_frac", c.split.train_frac},
              {"val_frac", c.split.val_frac},
              {"imbalance_cap", c.split.imbalance_cap},
              {"cap_ratio", c.split.cap_ratio}};
}

/// Parse a TrainConfig from JSON, rejecting unknown keys by name.
inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    if (k == "hypergraph_kind") {
      const std::string s = v.get<std::string>();
      if (s == "link")
        c.hypergraph_kind = HypergraphKind::Link;
      else if (s == "degree")
        c.hypergraph_kind = HypergraphKind::Degree;
      else
        throw IoError("hypergraph_kind must be 'link' or 'degree'");
    } else if (k == "normalization") {
      const std::string s = v.get<std::string>();
      if (s == "asymmetric-inverse")
        c.normalization = Normalization::AsymmetricInverse;
      else if (s == "symmetric-half")
        c.normalization = Normalization::SymmetricHalf;
      else
        throw IoError("normalization must be 'asymmetric-inverse' or 'symmetric-half'");
    } else if (k == "include_center") {
      c.include_center = v.get<bool>();
    } else if (k == "f_hidden") {
      c.f_hidden = v.get<int>();
    } else if (k == "state_dim") {
      c.state_dim = v.get<int>();
    } else if (k == "num_layers") {
      c.num_layers = v.get<int>();
    } else if (k == "lr") {
      c.lr = v.get<double>();
    } else if (k == "weight_decay") {
      c.weight_decay = v.get<double>();
    } else if (k == "lambda_reg") {
      c.lambda_reg = v.get<double>();
    } else if (k == "max_epochs") {
      c.max_epochs = v.get<int>();
    } else if (k == "patience") {
      c.patience = v.get<int>();
    } else if (k == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else if (k == "disable_residual") {
      c.disable_residual = v.get<bool>();
    } else if (k == "disable_mamba") {
      c.disable_mamba = v.get<bool>();
    } else if (k == "train_frac") {
      c.split.train_frac = v.get<double>();
    } else if (k == "val_frac") {
      c.split.val_frac = v.get<double>();
    } else if (k == "imbalance_cap") {
      c.split.imbalance_cap = v.get<bool>();
    } else if (k == "cap_ratio") {
      c.split.cap_ratio = v.get<double>();
    } else {
      throw IoError("unknown config key: " + k);
    }
  }
  if (c.lr <= 0.0) throw IoError("lr must be positive");
  if (c.max_epochs < 1) throw IoError("max_epochs must be >= 1");
  return c;
}

/// FNV-1a content hash, used as the dataset fingerprint in manifests.
inline std::string fingerprint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for fingerprinting");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

/// Run manifest: everything needed to reproduce a command's outputs.
inline json make_manifest(const json& config_snapshot,
                          const std::string& dataset_path,
                          std::uint64_t seed,
                          const std::vector<std::string>& outputs) {
  json j;
  j["tool_version"] = kToolVersion;
  j["config"] = config_snapshot;
  j["dataset"] = dataset_path;
  j["dataset_fingerprint"] = fingerprint_file(dataset_path);
  j["seed"] = seed;
  j["outputs"] = outputs;
  return j;
}

inline json run_metrics_to_json(const RunMetrics& m) {
  return json{{"train_loss", m.train_loss},
              {"val_f1", m.val_f1},
              {"best_epoch", m.best_epoch},
              {"train_f1", m.train_f1},
              {"best_val_f1", m.best_val_f1},
              {"test_f1", m.test_f1}};
}

inline json aggregate_to_json(const AggregateMetrics& a) {
  return json{{"trial_test_f1", a.trial_test_f1},
              {"mean", a.mean},
              {"std", a.stdev},
              {"max", a.best},
              {"failed_trials", a.failed_trials}};
}

}  // namespace hgmn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hgmn {

using NodeId = std::int64_t;

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable undirected graph in CSR form. Neighbor lists are sorted,
/// deduplicated, and free of self-loops. Optional per-node class labels.
class Graph {
 public:
  Graph() = default;

  /// Build from an edge list. Edges are symmetrized and deduplicated;
  /// self-loops are dropped.
  static Graph from_edges(NodeId num_nodes,
                          std::vector<std::pair<NodeId, NodeId>> edges) {
    if (num_nodes < 1) throw GraphError("graph must have at least one node");
    std::vector<std::pair<NodeId, NodeId>> sym;
    sym.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
        throw GraphError("edge endpoint out of range: " + std::to_string(u) +
                         " " + std::to_string(v));
      if (u == v) continue;  // self-loops stripped at load
      sym.emplace_back(u, v);
      sym.emplace_back(v, u);
    }
    std::sort(sym.begin(), sym.end());
    sym.erase(std::unique(sym.begin(), sym.end()), sym.end());

    Graph g;
    g.num_nodes_ = num_nodes;
    g.row_offsets_.assign(static_cast<size_t>(num_nodes) + 1, 0);
    g.col_indices_.reserve(sym.size());
    for (auto [u, v] : sym) {
      g.row_offsets_[static_cast<size_t>(u) + 1]++;
      g.col_indices_.push_back(v);
    }
    for (size_t i = 1; i < g.row_offsets_.size(); ++i)
      g.row_offsets_[i] += g.row_offsets_[i - 1];
    return g;
  }

  NodeId num_nodes() const { return num_nodes_; }
  std::int64_t num_edges() const {
    return static_cast<std::int64_t>(col_indices_.size()) / 2;
  }

  std::int64_t degree(NodeId v) const {
    check_node(v);
    return row_offsets_[static_cast<size_t>(v) + 1] -
           row_offsets_[static_cast<size_t>(v)];
  }

  /// Sorted neighbor list of v.
  std::pair<const NodeId*, const NodeId*> neighbors(NodeId v) const {
    check_node(v);
    const NodeId* base = col_indices_.data();
    return {base + row_offsets_[static_cast<size_t>(v)],
            base + row_offsets_[static_cast<size_t>(v) + 1]};
  }

  bool has_edge(NodeId u, NodeId v) const {
    auto [b, e] = neighbors(u);
    return std::binary_search(b, e, v);
  }

  const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<NodeId>& col_indices() const { return col_indices_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }

  void attach_labels(std::vector<int> labels, int num_classes) {
    if (static_cast<NodeId>(labels.size()) != num_nodes_)
      throw GraphError("label count does not match node count");
    for (int y : labels)
      if (y < 0 || y >= num_classes)
        throw GraphError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    labels_ = std::move(labels);
    num_classes_ = num_classes;
  }

 private:
  void check_node(NodeId v) const {
    if (v < 0 || v >= num_nodes_)
      throw GraphError("node id " + std::to_string(v) + " out of range");
  }

  NodeId num_nodes_ = 0;
  std::vector<std::int64_t> row_offsets_;
  std::vector<NodeId> col_indices_;
  std::vector<int> labels_;
  int num_classes_ = 0;
};

/// Result of parsing an edge list with arbitrary node tokens.
struct LoadedGraph {
  Graph graph;
  std::vector<std::string> id_to_token;  // remap table, first-appearance order
};

/// Parse whitespace-separated `u v` pairs, one per line. `#` starts a
/// comment. Tokens that are not contiguous integers are remapped by
/// first appearance.
inline LoadedGraph load_edge_list_stream(std::istream& in,
                                         const std::string& origin = "<stream>") {
  std::unordered_map<std::string, NodeId> token_to_id;
  std::vector<std::string> id_to_token;
  std::vector<std::pair<NodeId, NodeId>> edges;

  auto intern = [&](const std::string& tok) -> NodeId {
    auto it = token_to_id.find(tok);
    if (it != token_to_id.end()) return it->second;
    NodeId id = static_cast<NodeId>(id_to_token.size());
    token_to_id.emplace(tok, id);
    id_to_token.push_back(tok);
    return id;
  };

  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;  // blank line
    if (!(ls >> b) || (ls >> extra))
      throw GraphError(origin + ":" + std::to_string(lineno) +
                       ": expected two tokens per edge line");
    const NodeId ia = intern(a);
    const NodeId ib = intern(b);
    edges.emplace_back(ia, ib);
  }
  if (id_to_token.empty())
    throw GraphError(origin + ": empty graph");

  LoadedGraph out;
  out.graph = Graph::from_edges(static_cast<NodeId>(id_to_token.size()),
                                std::move(edges));
  out.id_to_token = std::move(id_to_token);
  return out;
}

/// Load an edge-list file and write the token remap sidecar
/// (`<path>.remap.tsv`, two columns `token\tid`).
inline LoadedGraph load_edge_list(const std::string& path,
                                  bool write_remap = true) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open edge list: " + path);
  LoadedGraph lg = load_edge_list_stream(in, path);
  if (write_remap) {
    std::ofstream side(path + ".remap.tsv");
    for (size_t i = 0; i < lg.id_to_token.size(); ++i)
      side << lg.id_to_token[i] << '\t' << i << '\n';
  }
  return lg;
}

inline void save_edge_list(const Graph& g, std::ostream& out) {
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto [b, e] = g.neighbors(u);
    for (const NodeId* p = b; p != e; ++p)
      if (u < *p) out << u << ' ' << *p << '\n';
  }
}

/// Load a per-node label file: lines of `node_or_token label`, or a bare
/// label per line (node = line index). Labels are remapped to [0, M) by
/// first appearance when non-integer.
inline void load_labels(Graph& g, const std::string& path,
                        const std::vector<std::string>* id_to_token = nullptr) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open label file: " + path);
  std::unordered_map<std::string, NodeId> token_to_id;
  if (id_to_token)
    for (size_t i = 0; i < id_to_token->size(); ++i)
      token_to_id.emplace((*id_to_token)[i], static_cast<NodeId>(i));

  std::unordered_map<std::string, int> class_ids;
  std::vector<int> labels(static_cast<size_t>(g.num_nodes()), -1);
  std::string line;
  std::int64_t lineno = 0;
  NodeId implicit = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string a, b;
    if (!(ls >> a)) continue;
    NodeId node;
    std::string cls;
    if (ls >> b) {
      if (id_to_token) {
        auto it = token_to_id.find(a);
        if (it == token_to_id.end())
          throw GraphError(path + ":" + std::to_string(lineno) +
                           ": unknown node token " + a);
        node = it->second;
      } else {
        node = std::stoll(a);
      }
      cls = b;
    } else {
      node = implicit++;
      cls = a;
    }
    if (node < 0 || node >= g.num_nodes())
      throw GraphError(path + ":" + std::to_string(lineno) +
                       ": node out of range");
    auto [it, inserted] =
        class_ids.emplace(cls, static_cast<int>(class_ids.size()));
    labels[static_cast<size_t>(node)] = it->second;
    (void)inserted;
  }
  for (size_t v = 0; v < labels.size(); ++v)
    if (labels[v] < 0)
      throw GraphError(path + ": node " + std::to_string(v) + " has no label");
  g.attach_labels(std::move(labels), static_cast<int>(class_ids.size()));
}

/// Load a citation dataset in the published .content/.cites text layout:
/// `<dir>/<name>.content` lines are `id feat... label`, `<dir>/<name>.cites`
/// lines are `id id`. Citations to unknown ids are skipped.
inline Graph load_planetoid(const std::string& dir, const std::string& name) {
  const std::string content_path = dir + "/" + name + ".content";
  const std::string cites_path = dir + "/" + name + ".cites";
  std::ifstream content(content_path);
  if (!content) throw GraphError("missing file: " + content_path);
  std::ifstream cites(cites_path);
  if (!cites) throw GraphError("missing file: " + cites_path);

  std::unordered_map<std::string, NodeId> token_to_id;
  std::unordered_map<std::string, int> class_ids;
  std::vector<int> labels;
  std::string line;
  while (std::getline(content, line)) {
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(std::move(t));
    if (toks.size() < 2)
      throw GraphError(content_path + ": content line needs id and label");
    NodeId id = static_cast<NodeId>(token_to_id.size());
    if (!token_to_id.emplace(toks.front(), id).second)
      throw GraphError(content_path + ": duplicate node id " + toks.front());
    auto [it, ins] = class_ids.emplace(toks.back(),
                                       static_cast<int>(class_ids.size()));
    (void)ins;
    labels.push_back(it->second);
  }
  if (token_to_id.empty()) throw GraphError(content_path + ": empty dataset");

  std::vector<std::pair<NodeId, NodeId>> edges;
  while (std::getline(cites, line)) {
    std::istringstream ls(line);
    std::string a, b;
    if (!(ls >> a >> b)) continue;
    auto ia = token_to_id.find(a);
    auto ib = token_to_id.find(b);
    if (ia == token_to_id.end() || ib == token_to_id.end()) continue;
    edges.emplace_back(ia->second, ib->second);
  }
  Graph g = Graph::from_edges(static_cast<NodeId>(token_to_id.size()),
                              std::move(edges));
  g.attach_labels(std::move(labels), static_cast<int>(class_ids.size()));
  return g;
}

/// Train/val/test node index sets.
struct Split {
  std::vector<NodeId> train_ids;
  std::vector<NodeId> val_ids;
  std::vector<NodeId> test_ids;
  std::uint64_t seed = 0;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_frac = 0.6;      // of labeled nodes; remainder is test
  double val_frac = 0.2;        // carved out of the training pool
  bool imbalance_cap = false;   // cap majority:minority in the train pool
  double cap_ratio = 0.33;      // minority/majority lower bound (1 : 0.33)
};

/// Stratified random split, deterministic given the seed. With the
/// imbalance cap enabled, per-class training counts are clipped so the
/// largest class is at most minority/cap_ratio times the smallest.
inline Split sample_split(const Graph& g, const SplitSpec& spec) {
  if (!g.has_labels()) throw GraphError("sample_split requires labels");
  const int M = g.num_classes();
  std::vector<std::vector<NodeId>> by_class(static_cast<size_t>(M));
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    by_class[static_cast<size_t>(g.labels()[static_cast<size_t>(v)])]
        .push_back(v);
  for (int c = 0; c < M; ++c)
    if (by_class[static_cast<size_t>(c)].empty())
      throw GraphError("class " + std::to_string(c) + " has no nodes");

  std::mt19937_64 rng(spec.seed);
  Split out;
  out.seed = spec.seed;

  std::vector<std::vector<NodeId>> train_by_class(static_cast<size_t>(M));
  for (int c = 0; c < M; ++c) {
    auto& ids = by_class[static_cast<size_t>(c)];
    std::shuffle(ids.begin(), ids.end(), rng);
    auto n_train = static_cast<size_t>(
        std::max<double>(1.0, std::floor(spec.train_frac *
                                         static_cast<double>(ids.size()))));
    n_train = std::min(n_train, ids.size());
    train_by_class[static_cast<size_t>(c)]
        .assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_ids.insert(out.test_ids.end(),
                        ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                        ids.end());
  }

  if (spec.imbalance_cap) {
    size_t minority = SIZE_MAX;
    for (auto& v : train_by_class) minority = std::min(minority, v.size());
    auto cap = static_cast<size_t>(
        std::floor(static_cast<double>(minority) / spec.cap_ratio));
    for (auto& v : train_by_class)
      if (v.size() > cap) v.resize(cap);
  }

  for (auto& v : train_by_class) {
    auto n_val = static_cast<size_t>(
        std::floor(spec.val_frac * static_cast<double>(v.size())));
    out.val_ids.insert(out.val_ids.end(), v.begin(),
                       v.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train_ids.insert(out.train_ids.end(),
                         v.begin() + static_cast<std::ptrdiff_t>(n_val),
                         v.end());
  }
  std::sort(out.train_ids.begin(), out.train_ids.end());
  std::sort(out.val_ids.begin(), out.val_ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());
  return out;
}

}  // namespace hgmn

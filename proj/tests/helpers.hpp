// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "hgmn/graph.hpp"
#include "hgmn/hypergraph.hpp"

namespace hgmn::test {

inline Graph path3() {
  return Graph::from_edges(3, {{0, 1}, {1, 2}});
}

inline Graph triangle() {
  return Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
}

inline Graph cycle4() {
  return Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
}

inline Graph star(int leaves) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, std::move(edges));
}

/// Two triangles joined by one edge, classes = triangle membership.
inline Graph two_triangles() {
  Graph g = Graph::from_edges(
      6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}});
  g.attach_labels({0, 0, 0, 1, 1, 1}, 2);
  return g;
}

inline Graph erdos_renyi(int n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (unit(rng) < p) edges.emplace_back(u, v);
  return Graph::from_edges(n, std::move(edges));
}

/// Brute-force hypergraph enumeration, independent of the sparse builders.
struct DenseHypergraph {
  Eigen::MatrixXd incidence;  // N x N_E, entries {0,1}
  Eigen::VectorXd edge_degrees, node_degrees;
};

inline DenseHypergraph dense_link_hypergraph(const Graph& g,
                                             bool include_center = true) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  DenseHypergraph d;
  d.incidence = Eigen::MatrixXd::Zero(n, n);
  for (NodeId e = 0; e < g.num_nodes(); ++e) {
    auto [b, end] = g.neighbors(e);
    for (const NodeId* p = b; p != end; ++p) d.incidence(*p, e) = 1.0;
    if (include_center || b == end) d.incidence(e, e) = 1.0;
  }
  d.edge_degrees = d.incidence.colwise().sum();
  d.node_degrees = d.incidence.rowwise().sum();  // unit weights
  return d;
}

inline DenseHypergraph dense_degree_hypergraph(const Graph& g) {
  std::vector<std::int64_t> uniq;
  for (NodeId v = 0; v < g.num_nodes(); ++v) uniq.push_back(g.degree(v));
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  DenseHypergraph d;
  d.incidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.num_nodes()),
                                      static_cast<Eigen::Index>(uniq.size()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto it = std::lower_bound(uniq.begin(), uniq.end(), g.degree(v));
    d.incidence(v, it - uniq.begin()) = 1.0;
  }
  d.edge_degrees = d.incidence.colwise().sum();
  d.node_degrees = d.incidence.rowwise().sum();
  return d;
}

/// Dense evaluation of Dv^a H W De^{-1} H^T Dv^a.
inline Eigen::MatrixXd dense_propagation(const Hypergraph& h,
                                         Normalization norm) {
  const Eigen::MatrixXd incidence(h.incidence);
  const double a = norm == Normalization::AsymmetricInverse ? -1.0 : -0.5;
  Eigen::MatrixXd dv =
      h.node_degrees.array().pow(a).matrix().asDiagonal();
  Eigen::MatrixXd de_inv =
      h.edge_degrees.array().inverse().matrix().asDiagonal();
  Eigen::MatrixXd w = h.edge_weights.asDiagonal();
  return dv * incidence * w * de_inv * incidence.transpose() * dv;
}

/// Scratch directory under the system temp root, cleaned up on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("hgmn_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  out << contents;
}

}  // namespace hgmn::test

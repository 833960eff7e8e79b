// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgmn/graph.hpp"

namespace hgmn {

enum class HypergraphKind { Link, Degree };
enum class Normalization { AsymmetricInverse, SymmetricHalf };

using SparseMat = Eigen::SparseMatrix<double>;

struct HypergraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sparse incidence structure: N nodes x N_E hyperedges, entries in {0,1},
/// with hyperedge weights and the two degree vectors.
struct Hypergraph {
  SparseMat incidence;           // N x N_E
  Eigen::VectorXd edge_weights;  // w(e), diagonal of W_H
  Eigen::VectorXd node_degrees;  // d(v) = sum_e theta(v,e) w(e)
  Eigen::VectorXd edge_degrees;  // d(e) = sum_v theta(v,e)
  HypergraphKind kind = HypergraphKind::Link;

  Eigen::Index num_nodes() const { return incidence.rows(); }
  Eigen::Index num_edges() const { return incidence.cols(); }
};

inline void compute_degrees(Hypergraph& h) {
  h.edge_degrees = Eigen::VectorXd::Zero(h.num_edges());
  h.node_degrees = Eigen::VectorXd::Zero(h.num_nodes());
  for (int e = 0; e < h.incidence.outerSize(); ++e) {
    for (SparseMat::InnerIterator it(h.incidence, e); it; ++it) {
      h.edge_degrees[it.col()] += 1.0;
      h.node_degrees[it.row()] += h.edge_weights[it.col()];
    }
  }
}

/// One hyperedge per node v: v's neighborhood, plus v itself when
/// include_center is set. Isolated nodes yield singleton hyperedges.
inline Hypergraph build_link_hypergraph(const Graph& g,
                                        bool include_center = true) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Hypergraph h;
  h.kind = HypergraphKind::Link;
  std::vector<Eigen::Triplet<double>> trips;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    auto [b, e] = g.neighbors(v);
    bool center_covered = false;
    for (const NodeId* p = b; p != e; ++p) {
      trips.emplace_back(static_cast<int>(*p), static_cast<int>(v), 1.0);
      if (*p == v) center_covered = true;
    }
    if ((include_center && !center_covered) || b == e)
      trips.emplace_back(static_cast<int>(v), static_cast<int>(v), 1.0);
  }
  h.incidence.resize(n, n);
  h.incidence.setFromTriplets(trips.begin(), trips.end());
  h.edge_weights = Eigen::VectorXd::Ones(n);
  compute_degrees(h);
  return h;
}

/// One hyperedge per distinct degree value; hyperedges partition V.
inline Hypergraph build_degree_hypergraph(const Graph& g) {
  std::map<std::int64_t, int> degree_to_edge;
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    degree_to_edge.emplace(g.degree(v), 0);
  int next = 0;
  for (auto& [deg, idx] : degree_to_edge) idx = next++;

  Hypergraph h;
  h.kind = HypergraphKind::Degree;
  std::vector<Eigen::Triplet<double>> trips;
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    trips.emplace_back(static_cast<int>(v), degree_to_edge[g.degree(v)], 1.0);
  h.incidence.resize(static_cast<Eigen::Index>(g.num_nodes()), next);
  h.incidence.setFromTriplets(trips.begin(), trips.end());
  h.edge_weights = Eigen::VectorXd::Ones(next);
  compute_degrees(h);
  return h;
}

struct PropagationOperator {
  SparseMat matrix;  // N x N
  HypergraphKind source_kind = HypergraphKind::Link;
  Normalization normalization = Normalization::AsymmetricInverse;
};

/// P = Dv^a H W De^{-1} H^T Dv^a with a = -1 (AsymmetricInverse) or
/// a = -1/2 (SymmetricHalf).
inline PropagationOperator propagation_operator(
    const Hypergraph& h, Normalization norm = Normalization::AsymmetricInverse) {
  for (Eigen::Index v = 0; v < h.num_nodes(); ++v)
    if (h.node_degrees[v] <= 0.0)
      throw HypergraphError("node " + std::to_string(v) +
                            " has zero hypergraph degree");
  for (Eigen::Index e = 0; e < h.num_edges(); ++e)
    if (h.edge_degrees[e] <= 0.0)
      throw HypergraphError("hyperedge " + std::to_string(e) + " is empty");

  const double expo = (norm == Normalization::AsymmetricInverse) ? -1.0 : -0.5;
  Eigen::VectorXd dv = h.node_degrees.array().pow(expo);
  Eigen::VectorXd de_inv = h.edge_degrees.array().inverse();

  SparseMat left = dv.asDiagonal() * h.incidence;  // Dv^a H
  SparseMat mid = left * h.edge_weights.cwiseProduct(de_inv).asDiagonal();
  PropagationOperator p;
  p.matrix = mid * SparseMat(left.transpose());
  p.source_kind = h.kind;
  p.normalization = norm;
  return p;
}

inline const char* kind_name(HypergraphKind k) {
  return k == HypergraphKind::Link ? "link" : "degree";
}

/// Coordinate-format export: `node_id edge_id weight` per incidence entry.
inline void export_incidence(const Hypergraph& h, std::ostream& out) {
  for (int e = 0; e < h.incidence.outerSize(); ++e)
    for (SparseMat::InnerIterator it(h.incidence, e); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << h.edge_weights[it.col()]
          << '\n';
}

}  // namespace hgmn

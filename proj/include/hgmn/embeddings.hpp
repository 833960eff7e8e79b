// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgmn/graph.hpp"

namespace hgmn {

struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EmbeddingKind { Role, Adjacency };
enum class Provenance { Generated, Loaded };

struct EmbeddingSet {
  Eigen::MatrixXd matrix;  // N x F
  EmbeddingKind kind = EmbeddingKind::Role;
  Provenance provenance = Provenance::Generated;

  Eigen::Index dim() const { return matrix.cols(); }
};

struct WaveletConfig {
  std::vector<double> scales;  // empty: pick one scale from spectral bounds
  int num_points = 25;         // T; characteristic function grid size
  double t_max = 100.0;
  int chebyshev_order = 30;
  Eigen::Index exact_threshold = 2000;  // eigendecomposition up to this N
  double tolerance = 1e-4;              // on wavelet coefficients
};

struct WalkConfig {
  double p = 1.0;
  double q = 1.0;
  int walk_len = 80;
  int walks_per_node = 10;
  int window = 10;
  int dim = 128;  // F_a
  int negatives = 5;
  int epochs = 5;
  std::uint64_t seed = 0;
};

namespace detail {

/// Symmetric normalized Laplacian; diagonal entries for isolated nodes are
/// zero so their heat-kernel column is the unit vector.
inline Eigen::SparseMatrix<double> normalized_laplacian(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd dinv_sqrt(n);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const auto d = g.degree(v);
    dinv_sqrt[v] = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
    if (d > 0) trips.emplace_back(static_cast<int>(v), static_cast<int>(v), 1.0);
  }
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto [b, e] = g.neighbors(u);
    for (const NodeId* pv = b; pv != e; ++pv)
      trips.emplace_back(static_cast<int>(u), static_cast<int>(*pv),
                         -dinv_sqrt[u] * dinv_sqrt[*pv]);
  }
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(trips.begin(), trips.end());
  return lap;
}

/// Chebyshev coefficients of exp(-s * lambda) on [0, 2]:
/// c_k = (2 - [k=0]) * e^{-s} * (-1)^k * I_k(s).
inline std::vector<double> heat_cheb_coeffs(double s, int order) {
  std::vector<double> c(static_cast<size_t>(order) + 1);
  const double es = std::exp(-s);
  for (int k = 0; k <= order; ++k) {
    const double ik = std::cyl_bessel_i(static_cast<double>(k), s);
    c[static_cast<size_t>(k)] = (k == 0 ? 1.0 : 2.0) * es *
                                (k % 2 == 0 ? 1.0 : -1.0) * ik;
  }
  return c;
}

}  // namespace detail

/// Heat-kernel wavelet role embeddings. For each node v, the wavelet
/// coefficients psi_v (column v of U e^{-s Lambda} U^T) are treated as an
/// empirical distribution; the embedding row holds the sampled
/// characteristic-function values [Re phi_v(t_j), Im phi_v(t_j)] for each
/// scale and grid point. Deterministic; F_r = 2 * T * |scales|.
inline EmbeddingSet role_embeddings(const Graph& g, const WaveletConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const Eigen::SparseMatrix<double> lap = detail::normalized_laplacian(g);

  const bool exact = n <= cfg.exact_threshold;
  Eigen::MatrixXd eigvecs;
  Eigen::VectorXd eigvals;
  double lambda2 = 0.0, lambda_max = 0.0;
  if (exact) {
    const Eigen::MatrixXd dense_lap(lap);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_lap);
    eigvecs = solver.eigenvectors();
    eigvals = solver.eigenvalues();
    for (Eigen::Index i = 0; i < n; ++i)
      if (eigvals[i] > 1e-9) {
        lambda2 = eigvals[i];
        break;
      }
    lambda_max = eigvals[n - 1];
  } else {
    // spectral bounds for the scale heuristic only; the normalized
    // Laplacian spectrum lies in [0, 2]
    lambda2 = 1.0 / static_cast<double>(n);
    lambda_max = 2.0;
  }

  std::vector<double> scales = cfg.scales;
  if (scales.empty()) {
    double s = 1.0;
    if (lambda2 > 0.0) {
      const double geo = std::sqrt(lambda2 * lambda_max);
      const double s_min = -std::log(0.95) / geo;
      const double s_max = -std::log(0.85) / geo;
      s = 0.5 * (s_min + s_max);
    }
    scales.push_back(s);
  }

  const int T = cfg.num_points;
  if (T < 1) throw EmbeddingError("num_points must be >= 1");
  std::vector<double> grid(static_cast<size_t>(T));
  for (int j = 0; j < T; ++j)
    grid[static_cast<size_t>(j)] =
        T == 1 ? 0.0 : cfg.t_max * static_cast<double>(j) /
                           static_cast<double>(T - 1);

  EmbeddingSet out;
  out.kind = EmbeddingKind::Role;
  out.matrix.resize(n, 2 * T * static_cast<Eigen::Index>(scales.size()));

  // characteristic function of one psi column at the grid points
  auto emit_rows = [&](size_t si, Eigen::Index v,
                       const Eigen::VectorXd& psi_col) {
    for (int j = 0; j < T; ++j) {
      const double tj = grid[static_cast<size_t>(j)];
      double re = 0.0, im = 0.0;
      for (Eigen::Index u = 0; u < n; ++u) {
        re += std::cos(tj * psi_col[u]);
        im += std::sin(tj * psi_col[u]);
      }
      const auto base = static_cast<Eigen::Index>(si) * 2 * T + 2 * j;
      out.matrix(v, base) = re / static_cast<double>(n);
      out.matrix(v, base + 1) = im / static_cast<double>(n);
    }
  };

  for (size_t si = 0; si < scales.size(); ++si) {
    const double s = scales[si];
    if (s <= 0.0) throw EmbeddingError("wavelet scale must be positive");
    if (exact) {
      const Eigen::MatrixXd psi =
          eigvecs * (-s * eigvals.array()).exp().matrix().asDiagonal() *
          eigvecs.transpose();
      for (Eigen::Index v = 0; v < n; ++v) emit_rows(si, v, psi.col(v));
    } else {
      const auto coeffs = detail::heat_cheb_coeffs(s, cfg.chebyshev_order);
      const double tail = std::abs(coeffs.back());
      if (tail > cfg.tolerance)
        throw EmbeddingError(
            "Chebyshev order " + std::to_string(cfg.chebyshev_order) +
            " too low for tolerance (tail estimate " + std::to_string(tail) +
            "); increase chebyshev_order");
      Eigen::SparseMatrix<double> shifted = lap;
      for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= 1.0;
      // T_k(L - I) recurrence over column blocks to bound memory
      const Eigen::Index block = 512;
      for (Eigen::Index lo = 0; lo < n; lo += block) {
        const Eigen::Index w = std::min(block, n - lo);
        Eigen::MatrixXd t0 = Eigen::MatrixXd::Zero(n, w);
        for (Eigen::Index j = 0; j < w; ++j) t0(lo + j, j) = 1.0;
        Eigen::MatrixXd t1 = shifted * t0;
        Eigen::MatrixXd psi = coeffs[0] * t0 + coeffs[1] * t1;
        for (size_t k = 2; k < coeffs.size(); ++k) {
          Eigen::MatrixXd t2 = 2.0 * (shifted * t1) - t0;
          psi += coeffs[k] * t2;
          t0.swap(t1);
          t1.swap(t2);
        }
        for (Eigen::Index j = 0; j < w; ++j)
          emit_rows(si, lo + j, psi.col(j));
      }
    }
  }
  if (!out.matrix.allFinite())
    throw EmbeddingError("non-finite role embedding");
  return out;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) {
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  for (std::uint64_t x : {a, b}) {
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    h = (h ^ x) * 0xc4ceb9fe1a85ec53ull;
    h ^= h >> 29;
  }
  return h;
}

/// One p/q-biased second-order walk starting at `start`.
inline std::vector<NodeId> biased_walk(const Graph& g, NodeId start, int len,
                                       double p, double q,
                                       std::mt19937_64& rng) {
  std::vector<NodeId> walk{start};
  if (g.degree(start) == 0) return walk;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(walk.size()) < len) {
    const NodeId cur = walk.back();
    auto [b, e] = g.neighbors(cur);
    const auto deg = e - b;
    if (deg == 0) break;
    NodeId next;
    if (walk.size() == 1 || (p == 1.0 && q == 1.0)) {
      next = b[static_cast<std::ptrdiff_t>(unit(rng) * static_cast<double>(deg)) %
               deg];
    } else {
      const NodeId prev = walk[walk.size() - 2];
      // rejection sampling against the max of {1/p, 1, 1/q}
      const double wmax = std::max({1.0 / p, 1.0, 1.0 / q});
      for (;;) {
        const NodeId cand =
            b[static_cast<std::ptrdiff_t>(unit(rng) * static_cast<double>(deg)) %
              deg];
        double w;
        if (cand == prev)
          w = 1.0 / p;
        else if (g.has_edge(prev, cand))
          w = 1.0;
        else
          w = 1.0 / q;
        if (unit(rng) * wmax <= w) {
          next = cand;
          break;
        }
      }
    }
    walk.push_back(next);
  }
  return walk;
}

}  // namespace detail

/// Biased random walks + skip-gram with negative sampling. Walk RNG streams
/// derive from (seed, node, walk index); the skip-gram pass is sequential,
/// so output is deterministic given the config.
inline EmbeddingSet adjacency_embeddings(const Graph& g, const WalkConfig& cfg,
                                         int* isolated_warnings = nullptr) {
  if (g.num_nodes() < 2) throw EmbeddingError("need at least two nodes");
  if (g.num_edges() < 1) throw EmbeddingError("need at least one edge");
  if (cfg.p <= 0.0 || cfg.q <= 0.0)
    throw EmbeddingError("walk parameters p and q must be positive");
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const int f = cfg.dim;

  std::vector<std::vector<NodeId>> walks;
  walks.reserve(static_cast<size_t>(n) * static_cast<size_t>(cfg.walks_per_node));
  int isolated = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (g.degree(v) == 0) {
      ++isolated;
      continue;  // contributes no walks; row keeps its initialization
    }
    for (int w = 0; w < cfg.walks_per_node; ++w) {
      std::mt19937_64 rng(detail::mix_seed(cfg.seed,
                                           static_cast<std::uint64_t>(v),
                                           static_cast<std::uint64_t>(w)));
      walks.push_back(
          detail::biased_walk(g, v, cfg.walk_len, cfg.p, cfg.q, rng));
    }
  }
  if (isolated_warnings) *isolated_warnings = isolated;

  // unigram^(3/4) negative-sampling distribution over walk frequencies
  std::vector<double> cum(static_cast<size_t>(n), 0.0);
  {
    std::vector<double> freq(static_cast<size_t>(n), 0.0);
    for (auto& walk : walks)
      for (NodeId v : walk) freq[static_cast<size_t>(v)] += 1.0;
    double total = 0.0;
    for (Eigen::Index v = 0; v < n; ++v) {
      total += std::pow(freq[static_cast<size_t>(v)], 0.75);
      cum[static_cast<size_t>(v)] = total;
    }
    if (total <= 0.0) throw EmbeddingError("no walk tokens generated");
    for (auto& c : cum) c /= total;
  }

  std::mt19937_64 rng(detail::mix_seed(cfg.seed, 0x5eed, 0x1abe1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd in(n, f), out_vecs(n, f);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) {
      in(i, j) = (unit(rng) - 0.5) / static_cast<double>(f);
      out_vecs(i, j) = 0.0;
    }

  auto sample_negative = [&]() -> NodeId {
    const double r = unit(rng);
    auto it = std::lower_bound(cum.begin(), cum.end(), r);
    return static_cast<NodeId>(it - cum.begin());
  };

  const double lr0 = 0.025, lr_min = 1e-4;
  const long total_steps =
      static_cast<long>(cfg.epochs) * static_cast<long>(walks.size());
  long step = 0;
  Eigen::VectorXd acc(f);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (auto& walk : walks) {
      const double lr = std::max(
          lr_min, lr0 * (1.0 - static_cast<double>(step) /
                                   static_cast<double>(std::max(1L, total_steps))));
      ++step;
      for (size_t i = 0; i < walk.size(); ++i) {
        const auto center = walk[i];
        const size_t lo = i >= static_cast<size_t>(cfg.window)
                              ? i - static_cast<size_t>(cfg.window)
                              : 0;
        const size_t hi = std::min(walk.size() - 1,
                                   i + static_cast<size_t>(cfg.window));
        for (size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const auto context = walk[j];
          acc.setZero();
          for (int neg = 0; neg <= cfg.negatives; ++neg) {
            const NodeId target = neg == 0 ? context : sample_negative();
            if (neg > 0 && target == context) continue;
            const double label = neg == 0 ? 1.0 : 0.0;
            const double dot = in.row(center).dot(out_vecs.row(target));
            const double grad = (label - 1.0 / (1.0 + std::exp(-dot))) * lr;
            acc += grad * out_vecs.row(target).transpose();
            out_vecs.row(target) += grad * in.row(center);
          }
          in.row(center) += acc.transpose();
        }
      }
    }
  }

  EmbeddingSet result;
  result.kind = EmbeddingKind::Adjacency;
  result.matrix = std::move(in);
  if (!result.matrix.allFinite())
    throw EmbeddingError("non-finite adjacency embedding");
  return result;
}

/// Text embedding format: header `N F`, then N whitespace-separated rows.
inline void save_embeddings(const EmbeddingSet& e, std::ostream& out) {
  out.precision(17);
  out << e.matrix.rows() << ' ' << e.matrix.cols() << '\n';
  for (Eigen::Index i = 0; i < e.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.matrix.cols(); ++j)
      out << (j ? " " : "") << e.matrix(i, j);
    out << '\n';
  }
}

inline void save_embeddings(const EmbeddingSet& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw EmbeddingError("cannot write " + path);
  save_embeddings(e, out);
}

inline EmbeddingSet load_embeddings(std::istream& in, EmbeddingKind kind,
                                    const std::string& origin = "<stream>") {
  Eigen::Index n = 0, f = 0;
  if (!(in >> n >> f) || n < 1 || f < 1)
    throw EmbeddingError(origin + ": bad header, expected `N F`");
  EmbeddingSet e;
  e.kind = kind;
  e.provenance = Provenance::Loaded;
  e.matrix.resize(n, f);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < f; ++j)
      if (!(in >> e.matrix(i, j)))
        throw EmbeddingError(origin + ": expected " + std::to_string(n) +
                             " rows of " + std::to_string(f) +
                             " values, failed at row " + std::to_string(i));
  return e;
}

inline EmbeddingSet load_embeddings(const std::string& path,
                                    EmbeddingKind kind) {
  std::ifstream in(path);
  if (!in) throw EmbeddingError("cannot open " + path);
  return load_embeddings(in, kind, path);
}

}  // namespace hgmn

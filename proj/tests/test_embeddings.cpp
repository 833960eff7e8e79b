// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "hgmn/embeddings.hpp"

using namespace hgmn;

TEST_CASE("single node: characteristic function of the unit spike") {
  // N=1, no edges: the heat kernel column is the unit vector, so the
  // characteristic function is exactly cos(t) + i sin(t)
  auto g = Graph::from_edges(1, {});
  WaveletConfig cfg;
  cfg.scales = {0.7};
  cfg.num_points = 5;
  cfg.t_max = 4.0;
  auto e = role_embeddings(g, cfg);
  REQUIRE(e.matrix.rows() == 1);
  REQUIRE(e.matrix.cols() == 10);
  for (int j = 0; j < 5; ++j) {
    const double tj = 4.0 * j / 4.0;
    CHECK(e.matrix(0, 2 * j) == doctest::Approx(std::cos(tj)).epsilon(1e-12));
    CHECK(e.matrix(0, 2 * j + 1) ==
          doctest::Approx(std::sin(tj)).epsilon(1e-12));
  }
}

TEST_CASE("structurally equivalent star leaves share one embedding row") {
  auto e = role_embeddings(test::star(4), {});
  for (int leaf = 2; leaf <= 4; ++leaf)
    CHECK(e.matrix.row(leaf).isApprox(e.matrix.row(1), 1e-9));
  CHECK_FALSE(e.matrix.row(0).isApprox(e.matrix.row(1), 1e-6));
}

TEST_CASE("disjoint copies produce identical rows") {
  // two disjoint triangles: node v and v+3 play the same structural role
  auto g = Graph::from_edges(
      6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  WaveletConfig cfg;
  cfg.scales = {1.0};
  auto e = role_embeddings(g, cfg);
  for (int v = 0; v < 3; ++v)
    CHECK(e.matrix.row(v).isApprox(e.matrix.row(v + 3), 1e-9));
}

TEST_CASE("role embeddings are invariant under node relabeling") {
  std::mt19937_64 rng(31);
  auto g = test::erdos_renyi(12, 0.3, rng);
  WaveletConfig cfg;
  cfg.scales = {0.8};
  auto base = role_embeddings(g, cfg);

  // relabel v -> (v + 5) mod 12 and rebuild
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto [b, e] = g.neighbors(u);
    for (const NodeId* p = b; p != e; ++p)
      if (u < *p) edges.emplace_back((u + 5) % 12, (*p + 5) % 12);
  }
  auto perm = role_embeddings(Graph::from_edges(12, std::move(edges)), cfg);
  for (NodeId v = 0; v < 12; ++v)
    CHECK(perm.matrix.row((v + 5) % 12).isApprox(base.matrix.row(v), 1e-8));
}

TEST_CASE("characteristic-function values stay on or inside the unit circle") {
  std::mt19937_64 rng(37);
  auto g = test::erdos_renyi(15, 0.25, rng);
  auto e = role_embeddings(g, {});
  const int T = 25;
  for (Eigen::Index v = 0; v < e.matrix.rows(); ++v) {
    for (int j = 0; j < T; ++j) {
      const double re = e.matrix(v, 2 * j), im = e.matrix(v, 2 * j + 1);
      CHECK(re * re + im * im <= 1.0 + 1e-9);
    }
    // t = 0 always gives phi = 1
    CHECK(e.matrix(v, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.matrix(v, 1) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("polynomial heat-kernel path agrees with the exact one") {
  std::mt19937_64 rng(41);
  auto g = test::erdos_renyi(18, 0.3, rng);
  WaveletConfig exact_cfg;
  exact_cfg.scales = {0.6};
  auto exact = role_embeddings(g, exact_cfg);

  WaveletConfig cheb_cfg = exact_cfg;
  cheb_cfg.exact_threshold = 0;  // force the polynomial approximation
  auto cheb = role_embeddings(g, cheb_cfg);
  CHECK((exact.matrix - cheb.matrix).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("too low a polynomial order is rejected with guidance") {
  std::mt19937_64 rng(43);
  auto g = test::erdos_renyi(10, 0.3, rng);
  WaveletConfig cfg;
  cfg.scales = {30.0};  // large scale needs a long expansion
  cfg.exact_threshold = 0;
  cfg.chebyshev_order = 5;
  cfg.tolerance = 1e-8;
  CHECK_THROWS_WITH_AS(role_embeddings(g, cfg),
                       doctest::Contains("increase chebyshev_order"),
                       EmbeddingError);
}

TEST_CASE("every walk step follows an edge") {
  std::mt19937_64 rng(47);
  auto g = test::erdos_renyi(20, 0.2, rng);
  for (auto [p, q] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {4.0, 0.25}}) {
    for (NodeId start = 0; start < g.num_nodes(); ++start) {
      std::mt19937_64 walk_rng(start * 7 + 1);
      auto walk = detail::biased_walk(g, start, 30, p, q, walk_rng);
      CHECK(walk.front() == start);
      for (size_t i = 1; i < walk.size(); ++i)
        CHECK(g.has_edge(walk[i - 1], walk[i]));
      if (g.degree(start) > 0) CHECK(walk.size() == 30);
    }
  }
}

TEST_CASE("adjacency embeddings are deterministic and seed-sensitive") {
  auto g = test::two_triangles();
  WalkConfig cfg;
  cfg.dim = 12;
  cfg.walk_len = 20;
  cfg.walks_per_node = 4;
  cfg.epochs = 2;
  cfg.seed = 5;
  auto a = adjacency_embeddings(g, cfg);
  auto b = adjacency_embeddings(g, cfg);
  CHECK(a.matrix == b.matrix);  // bitwise
  cfg.seed = 6;
  auto c = adjacency_embeddings(g, cfg);
  CHECK_FALSE(a.matrix.isApprox(c.matrix, 1e-6));
}

TEST_CASE("disconnected communities separate in embedding space") {
  // two disjoint triangles: within-triangle similarity should dominate
  auto g = Graph::from_edges(
      6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  WalkConfig cfg;
  cfg.dim = 16;
  cfg.walk_len = 40;
  cfg.walks_per_node = 8;
  cfg.window = 5;
  cfg.seed = 11;
  auto e = adjacency_embeddings(g, cfg);
  auto cosine = [&](int u, int v) {
    return e.matrix.row(u).dot(e.matrix.row(v)) /
           (e.matrix.row(u).norm() * e.matrix.row(v).norm());
  };
  double within = 0.0, across = 0.0;
  int nw = 0, na = 0;
  for (int u = 0; u < 6; ++u)
    for (int v = u + 1; v < 6; ++v)
      if ((u < 3) == (v < 3)) {
        within += cosine(u, v);
        ++nw;
      } else {
        across += cosine(u, v);
        ++na;
      }
  CHECK(within / nw > across / na);
}

TEST_CASE("isolated nodes are counted and keep their initialization") {
  auto g = Graph::from_edges(4, {{0, 1}});
  WalkConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 1;
  int isolated = -1;
  auto e = adjacency_embeddings(g, cfg, &isolated);
  CHECK(isolated == 2);
  // untrained rows stay at the small uniform init
  CHECK(e.matrix.row(2).cwiseAbs().maxCoeff() < 0.5 / 8.0 + 1e-12);
}

TEST_CASE("adjacency embedding error contracts") {
  WalkConfig cfg;
  CHECK_THROWS_AS(adjacency_embeddings(Graph::from_edges(1, {}), cfg),
                  EmbeddingError);
  CHECK_THROWS_AS(adjacency_embeddings(Graph::from_edges(3, {}), cfg),
                  EmbeddingError);
  cfg.p = 0.0;
  CHECK_THROWS_AS(adjacency_embeddings(test::triangle(), cfg),
                  EmbeddingError);
}

TEST_CASE("save and load round-trip embeddings exactly") {
  std::mt19937_64 rng(53);
  auto g = test::erdos_renyi(8, 0.4, rng);
  WaveletConfig cfg;
  cfg.num_points = 6;
  auto e = role_embeddings(g, cfg);
  std::stringstream buf;
  save_embeddings(e, buf);
  auto back = load_embeddings(buf, EmbeddingKind::Role);
  CHECK(back.provenance == Provenance::Loaded);
  CHECK(back.matrix.isApprox(e.matrix, 1e-15));
}

TEST_CASE("loading rejects malformed files with located errors") {
  std::istringstream bad_header("x y\n1 2\n");
  CHECK_THROWS_WITH_AS(
      load_embeddings(bad_header, EmbeddingKind::Role, "emb.txt"),
      doctest::Contains("bad header"), EmbeddingError);

  std::istringstream truncated("3 2\n1 2\n3 4\n");
  CHECK_THROWS_WITH_AS(
      load_embeddings(truncated, EmbeddingKind::Role, "emb.txt"),
      doctest::Contains("row 2"), EmbeddingError);

  CHECK_THROWS_AS(load_embeddings("/nonexistent/emb.txt", EmbeddingKind::Role),
                  EmbeddingError);
}

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "pottsmix/errors.hpp"
#include "pottsmix/lattice.hpp"

using namespace pottsmix;

namespace {

std::map<std::size_t, std::size_t> degree_histogram(const Graph& g) {
  std::map<std::size_t, std::size_t> h;
  for (Vertex v = 0; v < g.vertex_count(); ++v) ++h[g.degree(v)];
  return h;
}

}  // namespace

TEST_CASE("torus sizes") {
  Graph t32 = build_torus({3, 2});
  CHECK(t32.vertex_count() == 9);
  CHECK(t32.edge_count() == 18);
  CHECK(degree_histogram(t32) == std::map<std::size_t, std::size_t>{{4, 9}});

  Graph t43 = build_torus({4, 3});
  CHECK(t43.vertex_count() == 64);
  CHECK(t43.edge_count() == 192);

  CHECK_THROWS_AS(build_torus({2, 2}), DegenerateTorusError);
}

TEST_CASE("torus is vertex transitive in degree") {
  for (int d = 1; d <= 3; ++d)
    for (int L = 3; L <= 5; ++L) {
      Graph g = build_torus({L, d});
      auto h = degree_histogram(g);
      REQUIRE(h.size() == 1);
      CHECK(h.begin()->first == static_cast<std::size_t>(2 * d));
    }
}

TEST_CASE("torus coordinates are row-major, last coordinate fastest") {
  Torus t({4, 3});
  for (Vertex v = 0; v < t.graph().vertex_count(); ++v) {
    auto c = t.coords(v);
    CHECK(static_cast<Vertex>(c[0] * 16 + c[1] * 4 + c[2]) == v);
    CHECK(t.vertex(c) == v);
    for (int dir = 0; dir < 3; ++dir) {
      Vertex w = t.shift(v, dir, +1);
      CHECK(t.shift(w, dir, -1) == v);
      auto e = t.edge_at(v, dir);
      CHECK(t.graph().edge_index(v, w) == e);
      CHECK(t.edge_base(e) == std::pair<Vertex, int>{v, dir});
    }
  }
}

TEST_CASE("edges are canonical and sorted") {
  Graph g(4, {{3, 1}, {0, 2}, {2, 1}});
  auto es = g.edges();
  REQUIRE(es.size() == 3);
  for (const Edge& e : es) CHECK(e.u < e.v);
  CHECK(std::is_sorted(es.begin(), es.end()));
  CHECK(g.edge_index(1, 3).has_value());
  CHECK_FALSE(g.edge_index(0, 3).has_value());
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), InvalidArgument);
  CHECK_THROWS_AS(Graph(3, {{0, 5}}), InvalidArgument);
}

TEST_CASE("box graphs") {
  std::vector<int> s22{2, 2}, s3{3}, s111{1, 1, 1};
  Graph c4 = build_box(s22);
  CHECK(c4.vertex_count() == 4);
  CHECK(c4.edge_count() == 4);
  CHECK(degree_histogram(c4) == std::map<std::size_t, std::size_t>{{2, 4}});
  Graph p3 = build_box(s3);
  CHECK(p3.vertex_count() == 3);
  CHECK(p3.edge_count() == 2);
  Graph one = build_box(s111);
  CHECK(one.vertex_count() == 1);
  CHECK(one.edge_count() == 0);
}

TEST_CASE("tree statistics") {
  std::vector<int> star{-1, 0, 0, 0};
  auto ts = tree_stats(build_tree(star));
  CHECK(ts.max_degree == 3);
  CHECK(ts.depth == 1);

  std::vector<int> path{-1, 0, 1, 2, 3};
  ts = tree_stats(build_tree(path));
  CHECK(ts.max_degree == 2);
  CHECK(ts.depth == 4);

  std::vector<int> single{-1};
  ts = tree_stats(build_tree(single));
  CHECK(ts.depth == 0);

  std::vector<int> two_roots{-1, -1};
  CHECK_THROWS_AS(build_tree(two_roots), InvalidArgument);
  std::vector<int> cycle{-1, 2, 1};
  CHECK_THROWS_AS(build_tree(cycle), InvalidArgument);
}

TEST_CASE("induced and spanning subgraphs") {
  std::vector<int> s22{2, 2};
  Graph c4 = build_box(s22);  // ids 0 1 / 2 3, cycle 0-1-3-2-0
  std::vector<Vertex> adj{0, 1}, opp{0, 3};
  CHECK(induced_subgraph(c4, adj).edge_count() == 1);
  Graph iso = induced_subgraph(c4, opp);
  CHECK(iso.vertex_count() == 2);
  CHECK(iso.edge_count() == 0);

  Graph t = build_torus({4, 2});
  std::vector<Vertex> all(t.vertex_count());
  for (Vertex v = 0; v < all.size(); ++v) all[v] = v;
  CHECK(induced_subgraph(t, all) == t);

  std::vector<std::uint32_t> keep{0, 2};
  Graph sp = spanning_subgraph(c4, keep);
  CHECK(sp.vertex_count() == 4);
  CHECK(sp.edge_count() == 2);
  CHECK(sp.edges()[0] == c4.edge(0));
  CHECK(sp.edges()[1] == c4.edge(2));
}

TEST_CASE("graph text round trip keeps isolated vertices") {
  Graph g(6, {{0, 1}, {1, 2}, {2, 4}});
  std::istringstream in(g.to_text());
  CHECK(Graph::from_text(in) == g);

  std::istringstream bare("0 1\n1 2\n# comment\n");
  Graph p = Graph::from_text(bare);
  CHECK(p.vertex_count() == 3);
  CHECK(p.edge_count() == 2);

  std::istringstream bad("0 x\n");
  CHECK_THROWS_AS(Graph::from_text(bad), InvalidArgument);
}

TEST_CASE("half grid encode and decode round trip") {
  for (auto spec : {TorusSpec{3, 2}, TorusSpec{4, 3}}) {
    HalfGrid hg(spec);
    CHECK(hg.side() == 2 * spec.side);
    std::size_t expected = 1;
    for (int i = 0; i < spec.dim; ++i) expected *= 2 * spec.side;
    REQUIRE(hg.cell_count() == expected);
    for (std::uint32_t c = 0; c < hg.cell_count(); ++c) {
      auto y = hg.decode(c);
      CHECK(hg.encode(y) == c);
      for (int dir = 0; dir < spec.dim; ++dir) {
        CHECK(hg.coord(c, dir) == y[dir]);
        CHECK(hg.step(hg.step(c, dir, +1), dir, -1) == c);
      }
    }
  }
}

TEST_CASE("half grid vertex and edge cells") {
  Torus t({3, 2});
  HalfGrid hg(t.spec());
  std::set<std::uint32_t> seen;
  for (Vertex v = 0; v < t.graph().vertex_count(); ++v) {
    auto c = hg.vertex_cell(t, v);
    CHECK(hg.is_vertex_cell(c));
    auto y = hg.decode(c);
    auto x = t.coords(v);
    CHECK(y[0] == 2 * x[0]);
    CHECK(y[1] == 2 * x[1]);
    seen.insert(c);
  }
  for (std::uint32_t e = 0; e < t.graph().edge_count(); ++e) {
    auto c = hg.edge_cell(t, e);
    CHECK_FALSE(hg.is_vertex_cell(c));
    auto [v, dir] = t.edge_base(e);
    auto y = hg.decode(c);
    auto x = t.coords(v);
    CHECK(y[dir] == 2 * x[dir] + 1);
    CHECK(y[1 - dir] == 2 * x[1 - dir]);
    seen.insert(c);
  }
  CHECK(seen.size() == 9 + 18);
}

TEST_CASE("random graphs keep adjacency consistent") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + rng() % 8;
    std::vector<std::pair<Vertex, Vertex>> es;
    for (Vertex a = 0; a < n; ++a)
      for (Vertex b = a + 1; b < n; ++b)
        if (rng() % 2) es.push_back({b, a});
    Graph g(n, es);
    std::size_t deg_sum = 0;
    for (Vertex v = 0; v < n; ++v) {
      deg_sum += g.degree(v);
      auto nb = g.neighbors(v);
      auto inc = g.incident_edges(v);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const Edge& e = g.edge(inc[k]);
        CHECK(((e.u == v && e.v == nb[k]) || (e.v == v && e.u == nb[k])));
      }
    }
    CHECK(deg_sum == 2 * g.edge_count());
  }
}

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "pottsmix/errors.hpp"
#include "pottsmix/pwidth.hpp"

using namespace pottsmix;

namespace {

std::size_t edges_between(const Graph& g, std::uint32_t a, std::uint32_t b) {
  std::size_t c = 0;
  for (const Edge& e : g.edges())
    if ((((a >> e.u) & 1) && ((b >> e.v) & 1)) || (((a >> e.v) & 1) && ((b >> e.u) & 1))) ++c;
  return c;
}

// Every hierarchical partition of S written out explicitly as its vector of
// per-vertex separation costs; PW is the min over trees of the max entry.
std::vector<std::vector<std::size_t>> all_trees(const Graph& g, std::uint32_t s) {
  const std::size_t n = g.vertex_count();
  if (std::popcount(s) == 1) return {std::vector<std::size_t>(n, 0)};
  std::vector<std::vector<std::size_t>> out;
  const std::uint32_t low = s & (~s + 1), rest = s ^ low;
  for (std::uint32_t sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
    std::uint32_t a = sub | low, b = s ^ a;
    std::size_t w = edges_between(g, a, b);
    auto ta = all_trees(g, a), tb = all_trees(g, b);
    for (const auto& x : ta)
      for (const auto& y : tb) {
        std::vector<std::size_t> cost(n, 0);
        for (std::size_t v = 0; v < n; ++v) {
          if ((a >> v) & 1) cost[v] = x[v] + w;
          if ((b >> v) & 1) cost[v] = y[v] + w;
        }
        out.push_back(std::move(cost));
      }
    if (sub == 0) break;
  }
  return out;
}

std::size_t brute_pw(const Graph& g, std::size_t* tree_count = nullptr) {
  if (g.vertex_count() == 0) return 0;
  auto trees = all_trees(g, (1u << g.vertex_count()) - 1);
  if (tree_count) *tree_count = trees.size();
  std::size_t best = SIZE_MAX;
  for (const auto& t : trees) best = std::min(best, *std::max_element(t.begin(), t.end()));
  return best;
}

bool connected(std::size_t n, std::uint32_t mask, const std::vector<std::pair<Vertex, Vertex>>& pairs) {
  std::uint32_t reach = 1;
  for (std::size_t round = 0; round < n; ++round)
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if ((mask >> i) & 1) {
        auto [a, b] = pairs[i];
        if (((reach >> a) | (reach >> b)) & 1) reach |= (1u << a) | (1u << b);
      }
  return reach == (1u << n) - 1;
}

std::vector<std::pair<Vertex, Vertex>> all_pairs(std::size_t n) {
  std::vector<std::pair<Vertex, Vertex>> p;
  for (Vertex a = 0; a < n; ++a)
    for (Vertex b = a + 1; b < n; ++b) p.push_back({a, b});
  return p;
}

Graph random_connected(std::size_t n, double density, std::mt19937& rng) {
  auto pairs = all_pairs(n);
  std::bernoulli_distribution keep(density);
  while (true) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if (keep(rng)) mask |= 1u << i;
    if (!connected(n, mask, pairs)) continue;
    std::vector<std::pair<Vertex, Vertex>> es;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      if ((mask >> i) & 1) es.push_back(pairs[i]);
    return Graph(n, es);
  }
}

void check_witness(const Graph& g, const PwResult& r) {
  CHECK_NOTHROW(r.witness.validate(g));
  CHECK(r.witness.sep() == r.width);
  std::size_t worst = 0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) worst = std::max(worst, r.witness.separation_cost(v));
  CHECK(worst == r.width);
}

}  // namespace

TEST_CASE("tree enumeration has the double factorial count") {
  // (2n-3)!! labelled rooted binary hierarchies.
  const std::size_t expected[] = {1, 1, 3, 15, 105, 945};
  for (std::size_t n = 1; n <= 6; ++n) {
    std::size_t count = 0;
    brute_pw(Graph(n, {}), &count);
    CHECK(count == expected[n - 1]);
  }
}

TEST_CASE("separation costs of simple partitions") {
  Graph single(1, {});
  auto r = pw_exact(single);
  CHECK(r.width == 0);
  CHECK(r.witness.sep() == 0);

  Graph k2(2, {{0, 1}});
  r = pw_exact(k2);
  CHECK(r.width == 1);
  CHECK(r.witness.separation_cost(0) == 1);
  CHECK(r.witness.separation_cost(1) == 1);

  Graph empty(5, {});
  auto hp = HierarchicalPartition::build(empty, [](const std::vector<Vertex>& s) {
    return std::pair{std::vector<Vertex>(s.begin(), s.begin() + 1), std::vector<Vertex>(s.begin() + 1, s.end())};
  });
  CHECK_NOTHROW(hp.validate(empty));
  CHECK(hp.sep() == 0);
}

TEST_CASE("validate rejects malformed partitions") {
  Graph k2(2, {{0, 1}});
  using Node = HierarchicalPartition::Node;
  auto bad_weight = HierarchicalPartition::from_nodes(2, {Node{{0, 1}, 1, 2, 0}, Node{{0}}, Node{{1}}});
  CHECK_THROWS_AS(bad_weight.validate(k2), ConsistencyError);
  auto overlap = HierarchicalPartition::from_nodes(2, {Node{{0, 1}, 1, 2, 1}, Node{{0}}, Node{{0}}});
  CHECK_THROWS_AS(overlap.validate(k2), ConsistencyError);
  auto good = HierarchicalPartition::from_nodes(2, {Node{{0, 1}, 1, 2, 1}, Node{{0}}, Node{{1}}});
  CHECK_NOTHROW(good.validate(k2));
  CHECK(good.to_text() == "3 1\n  1 0\n  2 0\n");
}

TEST_CASE("small exact widths") {
  CHECK(pw_exact(Graph(3, {{0, 1}, {1, 2}})).width == 2);
  CHECK(pw_exact(Graph(4, {{0, 1}, {0, 2}, {0, 3}})).width == 3);
  CHECK(brute_pw(Graph(3, {{0, 1}, {1, 2}})) == 2);
  CHECK(brute_pw(Graph(4, {{0, 1}, {0, 2}, {0, 3}})) == 3);
  CHECK_THROWS_AS(pw_exact(Graph(17, {})), BudgetExceeded);
}

TEST_CASE("exact width agrees with brute force on all connected graphs up to five vertices") {
  for (std::size_t n = 1; n <= 5; ++n) {
    auto pairs = all_pairs(n);
    for (std::uint32_t mask = 0; mask < (1u << pairs.size()); ++mask) {
      if (!connected(n, mask, pairs)) continue;
      std::vector<std::pair<Vertex, Vertex>> es;
      for (std::size_t i = 0; i < pairs.size(); ++i)
        if ((mask >> i) & 1) es.push_back(pairs[i]);
      Graph g(n, es);
      auto r = pw_exact(g);
      CHECK(r.width == brute_pw(g));
      check_witness(g, r);
    }
  }
}

TEST_CASE("exact width agrees with brute force on random graphs with six and seven vertices") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    Graph g = random_connected(6 + trial % 2, 0.2 + 0.6 * (trial % 5) / 4.0, rng);
    auto r = pw_exact(g);
    CHECK(r.width == brute_pw(g));
    check_witness(g, r);
  }
}

TEST_CASE("subadditivity over bipartitions") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 4 + rng() % 7;
    Graph g = random_connected(n, 0.4, rng);
    std::vector<Vertex> a, b;
    for (Vertex v = 0; v < n; ++v) (rng() % 2 ? a : b).push_back(v);
    if (a.empty() || b.empty()) continue;
    std::size_t lhs = pw_exact(g).width;
    std::size_t rhs = cut_size(g, a, b) + std::max(pw_exact(induced_subgraph(g, a)).width,
                                                   pw_exact(induced_subgraph(g, b)).width);
    CHECK(lhs <= rhs);
  }
}

TEST_CASE("monotone under spanning subgraphs") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    Graph g = random_connected(7, 0.5, rng);
    std::vector<std::uint32_t> keep;
    for (std::uint32_t e = 0; e < g.edge_count(); ++e)
      if (rng() % 3) keep.push_back(e);
    CHECK(pw_exact(spanning_subgraph(g, keep)).width <= pw_exact(g).width);
  }
}

TEST_CASE("constructive box partitions") {
  for (auto sides : std::vector<std::vector<int>>{{2, 2}, {1, 1, 1}, {3}, {4, 2}, {3, 3}, {5, 3}, {2, 2, 2}, {4, 4, 2}}) {
    CAPTURE(sides.size());
    std::vector<int> s = sides;
    Graph g = build_box(s);
    auto hp = pw_constructive_box(sides);
    CHECK_NOTHROW(hp.validate(g));
    CHECK(static_cast<double>(hp.sep()) <= 9 * box_aspect(sides));
    if (g.vertex_count() <= 16) CHECK(pw_exact(g).width <= hp.sep());
  }
  CHECK(box_aspect({2, 2}) == 2.0);
  CHECK(pw_constructive_box({1, 1, 1}).sep() == 0);
}

TEST_CASE("constructive torus partitions") {
  for (auto spec : {TorusSpec{3, 2}, TorusSpec{4, 2}, TorusSpec{5, 2}, TorusSpec{3, 3}, TorusSpec{6, 2}}) {
    Graph g = build_torus(spec);
    auto hp = pw_constructive_torus(spec);
    CHECK_NOTHROW(hp.validate(g));
    CHECK(static_cast<double>(hp.sep()) <= 15 * std::pow(spec.side, spec.dim - 1));
  }
  CHECK(pw_constructive_torus({3, 2}).sep() <= 45);
  CHECK(pw_constructive_torus({4, 2}).sep() <= 60);
}

TEST_CASE("constructive tree partitions") {
  std::vector<std::vector<int>> parents{{-1}, {-1, 0, 1, 2, 3}, {-1, 0, 0, 0}, {-1, 0, 0, 1, 1, 2, 2, 3}};
  std::mt19937 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> p{-1};
    std::size_t n = 2 + rng() % 12;
    for (std::size_t v = 1; v < n; ++v) p.push_back(static_cast<int>(rng() % v));
    parents.push_back(p);
  }
  for (const auto& p : parents) {
    Tree t = build_tree(p);
    auto st = tree_stats(t);
    auto hp = pw_constructive_tree(t);
    CHECK_NOTHROW(hp.validate(t.graph));
    CHECK(hp.sep() <= st.max_degree * st.depth);
    CHECK(pw_exact(t.graph).width <= hp.sep());
  }
  Tree path = build_tree(std::vector<int>{-1, 0, 1, 2, 3});
  CHECK(pw_constructive_tree(path).sep() <= 8);
  Tree star = build_tree(std::vector<int>{-1, 0, 0, 0});
  CHECK(pw_constructive_tree(star).sep() == 3);
  CHECK(pw_constructive_tree(build_tree(std::vector<int>{-1})).sep() == 0);
}

TEST_CASE("mixing bound") {
  Graph single(1, {});
  ModelParams m(3, 1.7);
  CHECK(log_mixing_bound(m, single, 0) == doctest::Approx(std::log(2 + std::log(2.0))));
  Graph k2(2, {{0, 1}});
  CHECK(log_mixing_bound(m, k2, 1) == doctest::Approx(5 * 1.7 + std::log(2 + 2 * std::log(2.0) + 1.7)));
}

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "pottsmix/errors.hpp"
#include "pottsmix/logsum.hpp"
#include "pottsmix/potts.hpp"

using namespace pottsmix;

namespace {

// Plain recursive oracles, kept separate from the library's grouped sums.
std::size_t dfs_components(const Graph& g, std::uint64_t mask) {
  std::vector<int> seen(g.vertex_count(), 0);
  std::function<void(Vertex)> visit = [&](Vertex v) {
    seen[v] = 1;
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
      if (!((mask >> i) & 1)) continue;
      const Edge& e = g.edge(i);
      if (e.u == v && !seen[e.v]) visit(e.v);
      if (e.v == v && !seen[e.u]) visit(e.u);
    }
  };
  std::size_t c = 0;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (!seen[v]) {
      ++c;
      visit(v);
    }
  return c;
}

double brute_gibbs(int q, double beta, const Graph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<int> s(n, 0);
  double z = 0;
  while (true) {
    int h = 0;
    for (const Edge& e : g.edges()) h += s[e.u] != s[e.v];
    z += std::exp(-beta * h);
    std::size_t k = 0;
    while (k < n && ++s[k] == q) s[k++] = 0;
    if (k == n) break;
  }
  return z;
}

double brute_fk(int q, double beta, const Graph& g) {
  const double p = 1 - std::exp(-beta);
  double z = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << g.edge_count()); ++mask) {
    int k = std::popcount(mask);
    z += std::pow(p, k) * std::pow(1 - p, double(g.edge_count()) - k) * std::pow(q, double(dfs_components(g, mask)));
  }
  return z;
}

Graph cycle(std::size_t n) {
  std::vector<std::pair<Vertex, Vertex>> es;
  for (Vertex v = 0; v < n; ++v) es.push_back({v, static_cast<Vertex>((v + 1) % n)});
  return Graph(n, es);
}

Graph path(std::size_t n) {
  std::vector<std::pair<Vertex, Vertex>> es;
  for (Vertex v = 0; v + 1 < n; ++v) es.push_back({v, v + 1});
  return Graph(n, es);
}

}  // namespace

TEST_CASE("model parameters") {
  ModelParams m(10, 1.5);
  CHECK(m.p() == doctest::Approx(1 - std::exp(-1.5)).epsilon(1e-14));
  CHECK(m.e_dis(2) == doctest::Approx(3.0 - std::log(10.0)));
  CHECK(m.e_ord(2) == doctest::Approx(-2 * std::log(1 - std::exp(-1.5))));
  CHECK(m.kappa() == doctest::Approx(0.5 * std::log(std::exp(1.5) - 1)));
  CHECK_THROWS_AS(ModelParams(1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(ModelParams(2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(ModelParams(2, -1.0), InvalidArgument);
}

TEST_CASE("spin config validation and indexing") {
  Graph g = path(3);
  SpinConfig s(3);
  s[1] = 2;
  CHECK_NOTHROW(s.validate(g, 3));
  CHECK_THROWS_AS(s.validate(g, 2), InvalidArgument);
  CHECK_THROWS_AS(SpinConfig(2).validate(g, 3), InvalidArgument);
  CHECK(s.index(3) == 6);  // vertex 0 is the least significant digit
  CHECK(SpinConfig::from_index(6, 3, 3) == s);
  for (std::uint64_t i = 0; i < 27; ++i) CHECK(SpinConfig::from_index(i, 3, 3).index(3) == i);
}

TEST_CASE("spin hex round trip beyond 64 bits") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 1 + rng() % 60;
    int q = 2 + rng() % 99;
    SpinConfig s(n);
    for (auto& c : s.colors) c = static_cast<std::uint16_t>(rng() % q);
    CHECK(SpinConfig::from_hex(s.to_hex(q), n, q) == s);
  }
  SpinConfig s(3);
  s[0] = 1;
  CHECK(s.to_hex(2) == "1");
  CHECK_THROWS_AS(SpinConfig::from_hex("zz", 3, 2), InvalidArgument);
  CHECK_THROWS_AS(SpinConfig::from_hex("8", 3, 2), InvalidArgument);
}

TEST_CASE("hamiltonian and mono edges") {
  Graph c4 = cycle(4);
  CHECK(hamiltonian(c4, SpinConfig(4, 1)) == 0);
  SpinConfig alt(4);
  alt[1] = alt[3] = 1;
  CHECK(hamiltonian(c4, alt) == 4);
  CHECK(mono_edges(c4, alt).none());
  CHECK(mono_edges(c4, SpinConfig(4, 2)) == BitVector::all(4));

  Graph t = build_torus({3, 2});
  SpinConfig one(9);
  one[4] = 1;
  CHECK(hamiltonian(t, one) == 4);

  SpinConfig distinct(4);
  for (Vertex v = 0; v < 4; ++v) distinct[v] = static_cast<std::uint16_t>(v);
  CHECK(mono_edges(c4, distinct).none());

  std::mt19937 rng(11);
  Graph p3 = path(3);
  for (int trial = 0; trial < 100; ++trial) {
    SpinConfig s(3);
    for (auto& c : s.colors) c = rng() % 3;
    auto mono = mono_edges(p3, s);
    for (std::size_t i = 0; i < p3.edge_count(); ++i)
      CHECK(mono.test(i) == (s[p3.edge(i).u] == s[p3.edge(i).v]));
    CHECK(mono.count() + hamiltonian(p3, s) == p3.edge_count());
  }
}

TEST_CASE("partition function small cases") {
  Graph single(1, {});
  CHECK(std::exp(log_partition_function_exact({7, 1.0}, single)) == doctest::Approx(7.0));
  Graph edge(2, {{0, 1}});
  CHECK(std::exp(log_partition_function_exact({2, std::log(2.0)}, edge)) == doctest::Approx(3.0).epsilon(1e-14));
  Graph c4 = cycle(4);
  CHECK(std::exp(log_partition_function_exact({2, 1.0}, c4)) == doctest::Approx(brute_gibbs(2, 1.0, c4)).epsilon(1e-12));
  CHECK_THROWS_AS(log_partition_function_exact({3, 1.0}, build_torus({3, 2})), BudgetExceeded);
  CHECK_NOTHROW(log_partition_function_exact({3, 1.0}, build_torus({3, 2}), EnumerationBudget::states(20000)));
}

TEST_CASE("fk weight closed forms") {
  Graph c4 = cycle(4);
  ModelParams m(3, 0.7);
  const double p = m.p();
  CHECK(std::exp(log_fk_weight(m, c4, EdgeConfig(4))) == doctest::Approx(std::pow(1 - p, 4) * 81));
  CHECK(std::exp(log_fk_weight(m, c4, BitVector::all(4))) == doctest::Approx(std::pow(p, 4) * 3));
}

TEST_CASE("three measures share one normalisation") {
  std::vector<std::pair<const char*, Graph>> graphs{
      {"edge", Graph(2, {{0, 1}})}, {"path4", path(4)},         {"cycle4", cycle(4)},
      {"star4", Graph(4, {{0, 1}, {0, 2}, {0, 3}})}, {"cycle5", cycle(5)}};
  for (auto& [name, g] : graphs)
    for (int q : {2, 3})
      for (double beta : {0.3, 1.0, 2.2}) {
        CAPTURE(name);
        ModelParams m(q, beta);
        double oracle = std::log(brute_gibbs(q, beta, g));
        CHECK(log_partition_function_exact(m, g) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(log_fk_sum_exact(m, g) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(log_es_sum_exact(m, g) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(std::log(brute_fk(q, beta, g)) == doctest::Approx(oracle).epsilon(1e-12));
      }
}

TEST_CASE("es weight") {
  Graph edge(2, {{0, 1}});
  ModelParams m(2, 1.3);
  SpinConfig split(2);
  split[1] = 1;
  CHECK(log_es_weight(m, edge, split, BitVector::all(1)) == kLogZero);
  CHECK(std::exp(log_es_weight(m, edge, SpinConfig(2), BitVector::all(1))) == doctest::Approx(m.p()));
  CHECK(std::exp(log_es_weight(m, edge, split, EdgeConfig(1))) == doctest::Approx(1 - m.p()));
}

TEST_CASE("component identities on the 3x3 torus") {
  Graph t = build_torus({3, 2});
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    std::uint64_t mask = rng() & ((1u << 18) - 1);
    auto a = EdgeConfig::from_mask(18, mask);
    auto b = bond_boundary(t, a);
    CHECK(component_count(t, a) == dfs_components(t, mask));
    CHECK(component_count(t, a) == covered_component_count(t, a) + (9 - b.covered_vertices));
    std::size_t d1 = 0, d2 = 0;
    std::vector<int> covered(9, 0);
    for (std::size_t i = 0; i < 18; ++i)
      if (a.test(i)) covered[t.edge(i).u] = covered[t.edge(i).v] = 1;
    for (std::size_t i = 0; i < 18; ++i) {
      if (a.test(i)) continue;
      int k = covered[t.edge(i).u] + covered[t.edge(i).v];
      d1 += k == 1;
      d2 += k == 2;
    }
    CHECK(b.delta1 == d1);
    CHECK(b.delta2 == d2);
  }
}

TEST_CASE("contour form of the fk weight") {
  Torus t({3, 2});
  const Graph& g = t.graph();
  ModelParams m(10, 1.5);
  CHECK(log_fk_weight_contour_form(m, t, BitVector::all(18)) ==
        doctest::Approx(std::log(10.0) - m.e_ord(2) * 9).epsilon(1e-12));
  CHECK(log_fk_weight_contour_form(m, t, EdgeConfig(18)) == doctest::Approx(-m.e_dis(2) * 9).epsilon(1e-12));
  auto single = EdgeConfig::from_mask(18, 1);
  auto b = bond_boundary(g, single);
  CHECK(b.delta1 == 6);
  CHECK(b.delta2 == 0);
  CHECK(log_fk_weight_contour_form(m, t, single) == doctest::Approx(log_fk_weight(m, g, single)).epsilon(1e-12));
  CHECK_THROWS_AS(log_fk_weight_contour_form({2, 0.5}, t, single), InvalidArgument);

  // Sampled here; the acceptance binary covers all 2^18 configurations.
  std::mt19937_64 rng(9);
  for (auto [q, beta] : {std::pair{2, 1.0}, {10, 1.5}, {100, 2.5}}) {
    ModelParams mm(q, beta);
    for (int trial = 0; trial < 3000; ++trial) {
      auto a = EdgeConfig::from_mask(18, rng() & ((1u << 18) - 1));
      double x = log_fk_weight(mm, g, a), y = log_fk_weight_contour_form(mm, t, a);
      CHECK(std::abs(std::expm1(x - y)) <= 1e-9);
    }
  }
}

TEST_CASE("set partitions are counted by Bell numbers") {
  const std::size_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877};
  for (std::size_t n = 0; n < 8; ++n) {
    std::size_t count = 0;
    for_each_set_partition(n, [&](const std::vector<std::uint16_t>&, std::size_t) { ++count; });
    CHECK(count == bell[n]);
  }
}

TEST_CASE("mono edge distribution matches spin enumeration") {
  Graph t = build_torus({3, 2});
  for (int q : {2, 3, 10}) {
    ModelParams m(q, 1.1);
    auto dist = log_mono_edge_distribution(m, t);
    REQUIRE(dist.size() == 19);
    double total = 0;
    for (double x : dist) total += x == kLogZero ? 0 : std::exp(x);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    if (q == 2 || q == 3) {
      std::vector<double> oracle(19, 0.0);
      std::uint64_t states = static_cast<std::uint64_t>(std::pow(q, 9));
      double z = 0;
      for (std::uint64_t i = 0; i < states; ++i) {
        auto s = SpinConfig::from_index(i, 9, q);
        auto k = mono_edges(t, s).count();
        double w = std::exp(-m.beta * double(18 - k));
        oracle[k] += w;
        z += w;
      }
      for (std::size_t k = 0; k <= 18; ++k) {
        double got = dist[k] == kLogZero ? 0 : std::exp(dist[k]);
        CHECK(got == doctest::Approx(oracle[k] / z).epsilon(1e-10));
      }
    }
  }
}

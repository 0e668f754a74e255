#include "pottsmix/potts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "pottsmix/errors.hpp"
#include "pottsmix/logsum.hpp"
#include "pottsmix/union_find.hpp"

namespace pottsmix {

ModelParams::ModelParams(int q_, double beta_) : q(q_), beta(beta_) {
  if (q < 2) throw InvalidArgument("q must be >= 2");
  if (!(beta > 0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive and finite");
}

double ModelParams::p() const { return -std::expm1(-beta); }
double ModelParams::log_p() const { return std::log(-std::expm1(-beta)); }
double ModelParams::kappa() const { return 0.5 * std::log(std::expm1(beta)); }

void SpinConfig::validate(const Graph& g, int q) const {
  if (colors.size() != g.vertex_count()) throw InvalidArgument("spin configuration length != |V|");
  for (auto c : colors)
    if (c >= q) throw InvalidArgument("color out of range");
}

std::uint64_t SpinConfig::index(int q) const {
  std::uint64_t idx = 0;
  for (std::size_t k = colors.size(); k-- > 0;) idx = idx * q + colors[k];
  return idx;
}

SpinConfig SpinConfig::from_index(std::uint64_t index, std::size_t n, int q) {
  SpinConfig s(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.colors[k] = static_cast<std::uint16_t>(index % q);
    index /= q;
  }
  return s;
}

std::string SpinConfig::to_hex(int q) const {
  // Little-endian base-2^32 big integer.
  std::vector<std::uint32_t> big{0};
  for (std::size_t k = colors.size(); k-- > 0;) {
    std::uint64_t carry = colors[k];
    for (auto& limb : big) {
      std::uint64_t x = std::uint64_t{limb} * q + carry;
      limb = static_cast<std::uint32_t>(x);
      carry = x >> 32;
    }
    if (carry) big.push_back(static_cast<std::uint32_t>(carry));
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (auto limb : big)
    for (int nib = 0; nib < 8; ++nib) out.push_back(digits[(limb >> (4 * nib)) & 15u]);
  while (out.size() > 1 && out.back() == '0') out.pop_back();
  std::reverse(out.begin(), out.end());
  return out;
}

SpinConfig SpinConfig::from_hex(const std::string& hex, std::size_t n, int q) {
  std::vector<std::uint32_t> big((hex.size() + 7) / 8 + 1, 0);
  for (std::size_t k = 0; k < hex.size(); ++k) {
    char c = hex[hex.size() - 1 - k];
    unsigned nib;
    if (c >= '0' && c <= '9') nib = c - '0';
    else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
    else throw InvalidArgument("bad hex digit in spin string");
    big[k / 8] |= nib << (4 * (k % 8));
  }
  SpinConfig s(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::uint64_t rem = 0;
    for (std::size_t k = big.size(); k-- > 0;) {
      std::uint64_t x = (rem << 32) | big[k];
      big[k] = static_cast<std::uint32_t>(x / q);
      rem = x % q;
    }
    s.colors[v] = static_cast<std::uint16_t>(rem);
  }
  for (auto limb : big)
    if (limb) throw InvalidArgument("spin string encodes more than q^n states");
  return s;
}

void EnumerationBudget::require(double log_states, const std::string& what) const {
  if (log_states > max_log_states)
    throw BudgetExceeded(what + ": " + std::to_string(std::exp(log_states)) + " states exceeds budget " +
                         std::to_string(std::exp(max_log_states)));
}

std::size_t hamiltonian(const Graph& g, const SpinConfig& sigma) {
  std::size_t h = 0;
  for (const auto& e : g.edges()) h += sigma[e.u] != sigma[e.v];
  return h;
}

EdgeConfig mono_edges(const Graph& g, const SpinConfig& sigma) {
  EdgeConfig a(g.edge_count());
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (sigma[edges[i].u] == sigma[edges[i].v]) a.set(i);
  return a;
}

std::size_t component_count(const Graph& g, const EdgeConfig& a) {
  UnionFind uf(g.vertex_count());
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (a.test(i)) uf.unite(edges[i].u, edges[i].v);
  return uf.components();
}

std::size_t largest_component(const Graph& g, const EdgeConfig& a) {
  UnionFind uf(g.vertex_count());
  auto edges = g.edges();
  std::size_t best = g.vertex_count() ? 1 : 0;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (a.test(i) && uf.unite(edges[i].u, edges[i].v))
      best = std::max<std::size_t>(best, uf.component_size(edges[i].u));
  return best;
}

double log_gibbs_weight(const ModelParams& m, const Graph& g, const SpinConfig& sigma) {
  return -m.beta * static_cast<double>(hamiltonian(g, sigma));
}

double log_partition_function_exact(const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  const std::size_t n = g.vertex_count();
  budget.require(n * std::log(static_cast<double>(m.q)), "partition function");
  const std::uint64_t states = static_cast<std::uint64_t>(std::llround(std::pow(m.q, n)));
  // Group by energy, then combine: the sum is exact in integer counts.
  std::vector<double> count(g.edge_count() + 1, 0.0);
  SpinConfig s(n);
  for (std::uint64_t idx = 0; idx < states; ++idx) {
    count[hamiltonian(g, s)] += 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (++s.colors[k] < m.q) break;
      s.colors[k] = 0;
    }
  }
  LogSumExp acc;
  for (std::size_t h = 0; h < count.size(); ++h) acc.add_weighted(-m.beta * h, count[h]);
  return acc.value();
}

double log_fk_weight(const ModelParams& m, const Graph& g, const EdgeConfig& a) {
  const double k = static_cast<double>(a.count());
  const double rest = static_cast<double>(g.edge_count()) - k;
  return k * m.log_p() + rest * m.log_1mp() +
         static_cast<double>(component_count(g, a)) * std::log(static_cast<double>(m.q));
}

double log_fk_sum_exact(const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  const std::size_t ne = g.edge_count();
  budget.require(ne * std::log(2.0), "FK sum");
  if (ne > 62) throw BudgetExceeded("FK sum: too many edges");
  // Group by (|A|, c(V,A)).
  const std::size_t n = g.vertex_count();
  std::vector<double> count((ne + 1) * (n + 1), 0.0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ne); ++mask) {
    auto a = EdgeConfig::from_mask(ne, mask);
    count[a.count() * (n + 1) + component_count(g, a)] += 1.0;
  }
  LogSumExp acc;
  const double lq = std::log(static_cast<double>(m.q));
  for (std::size_t k = 0; k <= ne; ++k)
    for (std::size_t c = 0; c <= n; ++c)
      acc.add_weighted(k * m.log_p() + (ne - k) * m.log_1mp() + c * lq, count[k * (n + 1) + c]);
  return acc.value();
}

BondBoundary bond_boundary(const Graph& g, const EdgeConfig& a) {
  std::vector<char> covered(g.vertex_count(), 0);
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (a.test(i)) covered[edges[i].u] = covered[edges[i].v] = 1;
  BondBoundary b;
  for (char c : covered) b.covered_vertices += c;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (a.test(i)) continue;
    int k = covered[edges[i].u] + covered[edges[i].v];
    if (k == 1) ++b.delta1;
    if (k == 2) ++b.delta2;
  }
  return b;
}

std::size_t covered_component_count(const Graph& g, const EdgeConfig& a) {
  auto b = bond_boundary(g, a);
  return component_count(g, a) - (g.vertex_count() - b.covered_vertices);
}

double log_fk_weight_contour_form(const ModelParams& m, const Torus& t, const EdgeConfig& a) {
  if (!(m.beta > std::log(2.0))) throw InvalidArgument("contour-form weight needs beta > log 2");
  const Graph& g = t.graph();
  const int d = t.dim();
  auto b = bond_boundary(g, a);
  const double uncovered = static_cast<double>(g.vertex_count() - b.covered_vertices);
  return static_cast<double>(covered_component_count(g, a)) * std::log(static_cast<double>(m.q)) -
         m.e_dis(d) * uncovered - m.e_ord(d) * static_cast<double>(b.covered_vertices) -
         m.kappa() * static_cast<double>(b.norm());
}

double log_es_weight(const ModelParams& m, const Graph& g, const SpinConfig& sigma, const EdgeConfig& a) {
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (a.test(i) && sigma[edges[i].u] != sigma[edges[i].v]) return kLogZero;
  const double k = static_cast<double>(a.count());
  return k * m.log_p() + (static_cast<double>(g.edge_count()) - k) * m.log_1mp();
}

double log_es_sum_exact(const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  const std::size_t n = g.vertex_count(), ne = g.edge_count();
  budget.require(n * std::log(static_cast<double>(m.q)), "ES double sum");
  if (ne > 62) throw BudgetExceeded("ES sum: too many edges");
  const std::uint64_t states = static_cast<std::uint64_t>(std::llround(std::pow(m.q, n)));
  // Pairs (sigma, A) with A outside E(sigma) carry zero weight, so only
  // submasks of E(sigma) are visited. Counted by |A|.
  std::vector<double> count(ne + 1, 0.0);
  auto edges = g.edges();
  for (std::uint64_t idx = 0; idx < states; ++idx) {
    auto s = SpinConfig::from_index(idx, n, m.q);
    std::uint64_t mono = 0;
    for (std::size_t i = 0; i < ne; ++i)
      if (s[edges[i].u] == s[edges[i].v]) mono |= std::uint64_t{1} << i;
    for (std::uint64_t sub = mono;; sub = (sub - 1) & mono) {
      count[std::popcount(sub)] += 1.0;
      if (sub == 0) break;
    }
  }
  LogSumExp acc;
  for (std::size_t k = 0; k <= ne; ++k) acc.add_weighted(k * m.log_p() + (ne - k) * m.log_1mp(), count[k]);
  return acc.value();
}

std::vector<double> log_mono_edge_distribution(const ModelParams& m, const Graph& g) {
  const std::size_t n = g.vertex_count(), ne = g.edge_count();
  if (n > 14) throw BudgetExceeded("set-partition enumeration limited to 14 vertices");
  // log of the falling factorial q(q-1)...(q-k+1), -inf once k > q.
  std::vector<double> log_falling(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k)
    log_falling[k] = static_cast<int>(k) > m.q ? kLogZero : log_falling[k - 1] + std::log(double(m.q - k + 1));
  std::vector<LogSumExp> by_m(ne + 1);
  auto edges = g.edges();
  for_each_set_partition(n, [&](const std::vector<std::uint16_t>& labels, std::size_t blocks) {
    if (log_falling[blocks] == kLogZero) return;
    std::size_t mono = 0;
    for (const auto& e : edges) mono += labels[e.u] == labels[e.v];
    by_m[mono].add(log_falling[blocks]);
  });
  LogSumExp z;
  std::vector<double> out(ne + 1);
  for (std::size_t k = 0; k <= ne; ++k) {
    // Gibbs weight e^{-beta H} with H = |E| - k.
    out[k] = by_m[k].value() == kLogZero ? kLogZero : by_m[k].value() - m.beta * double(ne - k);
    z.add(out[k]);
  }
  for (auto& x : out)
    if (x != kLogZero) x -= z.value();
  return out;
}

}  // namespace pottsmix

#include "pottsmix/pwidth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "pottsmix/bitvector.hpp"
#include "pottsmix/errors.hpp"

namespace pottsmix {

std::size_t cut_size(const Graph& g, const std::vector<Vertex>& a, const std::vector<Vertex>& b) {
  std::vector<char> side(g.vertex_count(), 0);
  for (auto v : a) side[v] = 1;
  for (auto v : b) side[v] = 2;
  std::size_t c = 0;
  for (const auto& e : g.edges())
    if (side[e.u] && side[e.v] && side[e.u] != side[e.v]) ++c;
  return c;
}

HierarchicalPartition HierarchicalPartition::build(const Graph& g, const Splitter& split) {
  HierarchicalPartition hp;
  hp.n_ = g.vertex_count();
  std::vector<Vertex> all(hp.n_);
  std::iota(all.begin(), all.end(), 0u);
  hp.nodes_.push_back({all});
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (hp.nodes_[id].vertices.size() <= 1) continue;
    auto [a, b] = split(hp.nodes_[id].vertices);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t w = cut_size(g, a, b);
    int left = static_cast<int>(hp.nodes_.size());
    hp.nodes_.push_back({std::move(a)});
    hp.nodes_.push_back({std::move(b)});
    hp.nodes_[id].left = left;
    hp.nodes_[id].right = left + 1;
    hp.nodes_[id].weight = w;
    stack.push_back(left + 1);
    stack.push_back(left);
  }
  return hp;
}

HierarchicalPartition HierarchicalPartition::from_nodes(std::size_t n, std::vector<Node> nodes) {
  HierarchicalPartition hp;
  hp.n_ = n;
  hp.nodes_ = std::move(nodes);
  return hp;
}

void HierarchicalPartition::validate(const Graph& g) const {
  if (n_ != g.vertex_count()) throw ConsistencyError("partition is over a different vertex count");
  if (n_ == 0) return;
  if (nodes_.empty()) throw ConsistencyError("partition has no root");
  std::vector<Vertex> all(n_);
  std::iota(all.begin(), all.end(), 0u);
  if (nodes_[0].vertices != all) throw ConsistencyError("root subset is not V");
  std::vector<char> reached(nodes_.size(), 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (reached[id]) throw ConsistencyError("partition tree revisits a node");
    reached[id] = 1;
    const Node& nd = nodes_[id];
    if (nd.is_leaf()) {
      if (nd.vertices.size() != 1) throw ConsistencyError("leaf is not a singleton");
      if (nd.weight != 0) throw ConsistencyError("leaf carries a weight");
      continue;
    }
    if (nd.right < 0) throw ConsistencyError("internal node with one child");
    const auto& a = nodes_[nd.left].vertices;
    const auto& b = nodes_[nd.right].vertices;
    if (a.empty() || b.empty()) throw ConsistencyError("empty child subset");
    std::vector<Vertex> merged;
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged));
    if (merged != nd.vertices || std::adjacent_find(merged.begin(), merged.end()) != merged.end())
      throw ConsistencyError("children do not partition their parent");
    if (cut_size(g, a, b) != nd.weight) throw ConsistencyError("stored cut weight differs from recomputed cut");
    stack.push_back(nd.left);
    stack.push_back(nd.right);
  }
}

std::size_t HierarchicalPartition::separation_cost(Vertex x) const {
  if (x >= n_) throw InvalidArgument("vertex " + std::to_string(x) + " not in partition");
  std::size_t cost = 0;
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    cost += nodes_[id].weight;
    const auto& lv = nodes_[nodes_[id].left].vertices;
    id = std::binary_search(lv.begin(), lv.end(), x) ? nodes_[id].left : nodes_[id].right;
  }
  return cost;
}

std::size_t HierarchicalPartition::sep() const {
  if (nodes_.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, acc] = stack.back();
    stack.pop_back();
    const Node& nd = nodes_[id];
    if (nd.is_leaf()) {
      best = std::max(best, acc);
      continue;
    }
    stack.emplace_back(nd.left, acc + nd.weight);
    stack.emplace_back(nd.right, acc + nd.weight);
  }
  return best;
}

std::string HierarchicalPartition::to_text() const {
  std::ostringstream os;
  if (nodes_.empty()) return "";
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const Node& nd = nodes_[id];
    BitVector bits(n_);
    for (auto v : nd.vertices) bits.set(v);
    os << std::string(2 * depth, ' ') << bits.to_hex() << ' ' << nd.weight << '\n';
    if (!nd.is_leaf()) {
      stack.emplace_back(nd.right, depth + 1);
      stack.emplace_back(nd.left, depth + 1);
    }
  }
  return os.str();
}

namespace {

// Lexicographic order of the sorted vertex lists of two distinct masks.
bool lex_less(std::uint32_t a, std::uint32_t b) {
  std::uint32_t diff = a ^ b;
  std::uint32_t x = diff & (~diff + 1);  // lowest differing vertex
  std::uint32_t above = ~((x << 1) - 1);
  if (a & x) return (b & above) != 0;
  return (a & above) == 0;
}

std::vector<Vertex> mask_vertices(std::uint32_t mask) {
  std::vector<Vertex> out;
  for (; mask; mask &= mask - 1) out.push_back(static_cast<Vertex>(std::countr_zero(mask)));
  return out;
}

}  // namespace

PwResult pw_exact(const Graph& g) {
  const std::size_t n = g.vertex_count();
  if (n > 16) throw BudgetExceeded("pw_exact supports at most 16 vertices");
  if (n == 0) return {0, HierarchicalPartition::from_nodes(0, {})};
  const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1);
  std::vector<std::uint32_t> adj(n, 0);
  for (const auto& e : g.edges()) {
    adj[e.u] |= 1u << e.v;
    adj[e.v] |= 1u << e.u;
  }
  // inner[S] = edges with both ends in S.
  std::vector<std::uint16_t> inner(std::size_t{1} << n, 0);
  for (std::uint32_t s = 1; s <= full; ++s) {
    std::uint32_t v = std::countr_zero(s);
    std::uint32_t rest = s & (s - 1);
    inner[s] = static_cast<std::uint16_t>(inner[rest] + std::popcount(adj[v] & rest));
  }
  constexpr std::uint16_t kInf = std::numeric_limits<std::uint16_t>::max();
  std::vector<std::uint16_t> pw(std::size_t{1} << n, kInf);
  std::vector<std::uint32_t> choice(std::size_t{1} << n, 0);
  for (std::uint32_t s = 1; s <= full; ++s) {
    if (std::popcount(s) == 1) {
      pw[s] = 0;
      continue;
    }
    // S1 keeps the lowest vertex; it is then the lexicographically smaller side.
    const std::uint32_t low = s & (~s + 1);
    const std::uint32_t rest = s ^ low;
    std::uint16_t best = kInf;
    std::uint32_t best_s1 = 0;
    for (std::uint32_t sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
      std::uint32_t s1 = sub | low, s2 = s ^ s1;
      auto cost = static_cast<std::uint16_t>(inner[s] - inner[s1] - inner[s2] + std::max(pw[s1], pw[s2]));
      if (cost < best || (cost == best && lex_less(s1, best_s1))) {
        best = cost;
        best_s1 = s1;
      }
      if (sub == 0) break;
    }
    pw[s] = best;
    choice[s] = best_s1;
  }

  std::vector<HierarchicalPartition::Node> nodes;
  nodes.push_back({mask_vertices(full)});
  std::vector<std::pair<int, std::uint32_t>> stack{{0, full}};
  while (!stack.empty()) {
    auto [id, s] = stack.back();
    stack.pop_back();
    if (std::popcount(s) == 1) continue;
    std::uint32_t s1 = choice[s], s2 = s ^ s1;
    int left = static_cast<int>(nodes.size());
    nodes.push_back({mask_vertices(s1)});
    nodes.push_back({mask_vertices(s2)});
    nodes[id].left = left;
    nodes[id].right = left + 1;
    nodes[id].weight = inner[s] - inner[s1] - inner[s2];
    stack.emplace_back(left + 1, s2);
    stack.emplace_back(left, s1);
  }
  return {pw[full], HierarchicalPartition::from_nodes(n, std::move(nodes))};
}

namespace {

// Axis-aligned block of a box or torus: per direction a start, a length and
// whether it still wraps around (only a full periodic circle does).
struct Block {
  std::vector<int> start, len;
  std::vector<bool> wraps;
};

std::pair<Block, Block> halve(const Block& b, int dir) {
  Block lo = b, hi = b;
  int cut = (b.len[dir] + 1) / 2;  // ceil(len / 2)
  lo.len[dir] = cut;
  hi.start[dir] = b.start[dir] + cut;
  hi.len[dir] = b.len[dir] - cut;
  lo.wraps[dir] = hi.wraps[dir] = false;
  return {lo, hi};
}

std::pair<Block, Block> split_block(const Block& b) {
  const int d = static_cast<int>(b.len.size());
  for (int i = 0; i < d; ++i)
    if (b.wraps[i]) return halve(b, i);
  int longest = 0;
  for (int i = 1; i < d; ++i)
    if (b.len[i] > b.len[longest]) longest = i;
  return halve(b, longest);
}

HierarchicalPartition build_blocks(const Graph& g, const std::vector<int>& sides, bool periodic) {
  const int d = static_cast<int>(sides.size());
  std::vector<std::size_t> stride(d, 1);
  for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * sides[i + 1];
  auto vertices_of = [&](const Block& b) {
    std::vector<Vertex> out;
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= b.len[i];
    std::vector<int> off(d, 0);
    for (std::size_t k = 0; k < count; ++k) {
      std::size_t v = 0;
      for (int i = 0; i < d; ++i) v += stride[i] * ((b.start[i] + off[i]) % sides[i]);
      out.push_back(static_cast<Vertex>(v));
      for (int i = d - 1; i >= 0; --i) {
        if (++off[i] < b.len[i]) break;
        off[i] = 0;
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  // Blocks are tracked alongside their vertex sets, keyed by the sorted list.
  std::map<std::vector<Vertex>, Block> known;
  Block root{std::vector<int>(d, 0), sides, std::vector<bool>(d, periodic)};
  known.emplace(vertices_of(root), root);
  return HierarchicalPartition::build(g, [&](const std::vector<Vertex>& set) {
    auto it = known.find(set);
    if (it == known.end()) throw ConsistencyError("block partition lost track of a block");
    auto [lo, hi] = split_block(it->second);
    auto a = vertices_of(lo), b = vertices_of(hi);
    known.emplace(a, lo);
    known.emplace(b, hi);
    return std::make_pair(a, b);
  });
}

}  // namespace

HierarchicalPartition pw_constructive_box(const std::vector<int>& sides) {
  return build_blocks(build_box(sides), sides, false);
}

HierarchicalPartition pw_constructive_torus(const TorusSpec& spec) {
  Torus t(spec);
  return build_blocks(t.graph(), std::vector<int>(spec.dim, spec.side), true);
}

HierarchicalPartition pw_constructive_tree(const Tree& tree) {
  const std::size_t n = tree.graph.vertex_count();
  // A set {v} u subtrees(children[k..]) is identified by (v, k).
  std::vector<std::vector<Vertex>> subtree(n);
  std::vector<Vertex> order{tree.root};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (Vertex c : tree.children[order[i]]) order.push_back(c);
  for (std::size_t i = order.size(); i-- > 0;) {
    Vertex v = order[i];
    subtree[v].push_back(v);
    for (Vertex c : tree.children[v]) subtree[v].insert(subtree[v].end(), subtree[c].begin(), subtree[c].end());
  }
  auto region = [&](Vertex v, std::size_t k) {
    std::vector<Vertex> out{v};
    for (std::size_t j = k; j < tree.children[v].size(); ++j) {
      const auto& s = subtree[tree.children[v][j]];
      out.insert(out.end(), s.begin(), s.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  std::map<std::vector<Vertex>, std::pair<Vertex, std::size_t>> known;
  known.emplace(region(tree.root, 0), std::make_pair(tree.root, std::size_t{0}));
  return HierarchicalPartition::build(tree.graph, [&](const std::vector<Vertex>& set) {
    auto it = known.find(set);
    if (it == known.end()) throw ConsistencyError("tree partition lost track of a region");
    auto [v, k] = it->second;
    Vertex child = tree.children[v][k];
    auto a = region(child, 0), b = region(v, k + 1);
    known.emplace(a, std::make_pair(child, std::size_t{0}));
    known.emplace(b, std::make_pair(v, k + 1));
    return std::make_pair(a, b);
  });
}

double box_aspect(const std::vector<int>& sides) {
  double vol = 1;
  for (int s : sides) vol *= s;
  return vol / *std::min_element(sides.begin(), sides.end());
}

double log_mixing_bound(const ModelParams& m, const Graph& g, std::size_t pw) {
  return 5.0 * m.beta * static_cast<double>(pw) +
         std::log(2.0 + static_cast<double>(g.vertex_count()) * std::log(2.0) +
                  m.beta * static_cast<double>(g.edge_count()));
}

}  // namespace pottsmix

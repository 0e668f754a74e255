#include "pottsmix/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "pottsmix/errors.hpp"

namespace pottsmix {

Graph::Graph(std::size_t vertex_count, std::vector<std::pair<Vertex, Vertex>> edges) : n_(vertex_count) {
  edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a >= n_ || b >= n_)
      throw InvalidArgument("edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    if (a == b) throw InvalidArgument("self-loop at vertex " + std::to_string(a));
    edges_.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw InvalidArgument("parallel edges");

  offsets_.assign(n_ + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adj_.resize(2 * edges_.size());
  inc_.resize(2 * edges_.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    adj_[fill[e.u]] = e.v;
    inc_[fill[e.u]++] = i;
    adj_[fill[e.v]] = e.u;
    inc_[fill[e.v]++] = i;
  }
}

std::size_t Graph::max_degree() const {
  std::size_t m = 0;
  for (Vertex v = 0; v < n_; ++v) m = std::max(m, degree(v));
  return m;
}

std::optional<std::size_t> Graph::edge_index(Vertex a, Vertex b) const {
  Edge key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::string Graph::to_text() const {
  std::ostringstream os;
  os << "# vertices " << n_ << "\n";
  for (const auto& e : edges_) os << e.u << " " << e.v << "\n";
  return os.str();
}

Graph Graph::from_text(std::istream& in) {
  std::vector<std::pair<Vertex, Vertex>> edges;
  std::size_t n = 0;
  bool declared = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') {
      std::string key;
      std::size_t value;
      if (ls >> key >> value && key == "vertices") {
        n = value;
        declared = true;
      }
      continue;
    }
    long a, b;
    std::istringstream es(line);
    std::string rest;
    if (!(es >> a >> b) || (es >> rest) || a < 0 || b < 0)
      throw InvalidArgument("graph text line " + std::to_string(lineno) + ": expected 'u v'");
    edges.emplace_back(static_cast<Vertex>(a), static_cast<Vertex>(b));
    if (!declared) n = std::max<std::size_t>(n, std::max(a, b) + 1);
  }
  return Graph(n, std::move(edges));
}

std::size_t TorusSpec::volume() const {
  std::size_t v = 1;
  for (int i = 0; i < dim; ++i) v *= static_cast<std::size_t>(side);
  return v;
}

Torus::Torus(TorusSpec spec) : spec_(spec) {
  if (spec.dim < 1) throw InvalidArgument("torus dimension must be >= 1");
  if (spec.side < 3)
    throw DegenerateTorusError("torus side " + std::to_string(spec.side) + " < 3 gives parallel edges");
  const int d = spec.dim;
  const std::size_t n = spec.volume();
  stride_.assign(d, 1);
  for (int i = d - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * spec.side;

  std::vector<std::pair<Vertex, Vertex>> pairs;
  pairs.reserve(n * d);
  for (Vertex v = 0; v < n; ++v)
    for (int i = 0; i < d; ++i) pairs.emplace_back(v, shift(v, i, +1));
  graph_ = Graph(n, pairs);

  dir_edge_.resize(n * d);
  edge_base_.resize(n * d);
  for (Vertex v = 0; v < n; ++v)
    for (int i = 0; i < d; ++i) {
      auto e = static_cast<std::uint32_t>(*graph_.edge_index(v, shift(v, i, +1)));
      dir_edge_[v * d + i] = e;
      edge_base_[e] = {v, i};
    }
}

std::vector<int> Torus::coords(Vertex v) const {
  std::vector<int> c(spec_.dim);
  for (int i = 0; i < spec_.dim; ++i) c[i] = static_cast<int>((v / stride_[i]) % spec_.side);
  return c;
}

Vertex Torus::vertex(std::span<const int> c) const {
  std::size_t v = 0;
  for (int i = 0; i < spec_.dim; ++i) {
    int x = ((c[i] % spec_.side) + spec_.side) % spec_.side;
    v += stride_[i] * x;
  }
  return static_cast<Vertex>(v);
}

Vertex Torus::shift(Vertex v, int dir, int sign) const {
  int x = static_cast<int>((v / stride_[dir]) % spec_.side);
  int nx = (x + sign + spec_.side) % spec_.side;
  return static_cast<Vertex>(v + (static_cast<long>(nx) - x) * static_cast<long>(stride_[dir]));
}

Graph build_torus(const TorusSpec& spec) { return Torus(spec).graph(); }

Graph build_box(std::span<const int> sides) {
  if (sides.empty()) throw InvalidArgument("box needs at least one side");
  for (int s : sides)
    if (s < 1) throw InvalidArgument("box sides must be >= 1");
  const int d = static_cast<int>(sides.size());
  std::vector<std::size_t> stride(d, 1);
  for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * sides[i + 1];
  std::size_t n = stride[0] * sides[0];
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (std::size_t v = 0; v < n; ++v)
    for (int i = 0; i < d; ++i)
      if (static_cast<int>((v / stride[i]) % sides[i]) + 1 < sides[i])
        pairs.emplace_back(static_cast<Vertex>(v), static_cast<Vertex>(v + stride[i]));
  return Graph(n, std::move(pairs));
}

Tree build_tree(std::span<const int> parent) {
  const std::size_t n = parent.size();
  if (n == 0) throw InvalidArgument("empty parent list");
  Tree t;
  t.parent.assign(parent.begin(), parent.end());
  t.children.resize(n);
  int roots = 0;
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (std::size_t v = 0; v < n; ++v) {
    int p = parent[v];
    if (p < 0) {
      ++roots;
      t.root = static_cast<Vertex>(v);
      continue;
    }
    if (static_cast<std::size_t>(p) >= n) throw InvalidArgument("parent id out of range");
    if (static_cast<std::size_t>(p) == v) throw InvalidArgument("cycle in parent list (self-parent)");
    t.children[p].push_back(static_cast<Vertex>(v));
    pairs.emplace_back(static_cast<Vertex>(p), static_cast<Vertex>(v));
  }
  if (roots != 1) throw InvalidArgument("parent list must have exactly one root");
  // Every vertex must reach the root; otherwise the parent pointers loop.
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t x = v, hops = 0;
    while (parent[x] >= 0) {
      x = static_cast<std::size_t>(parent[x]);
      if (++hops > n) throw InvalidArgument("cycle in parent list");
    }
  }
  t.graph = Graph(n, std::move(pairs));
  return t;
}

TreeStats tree_stats(const Tree& tree) {
  TreeStats s;
  s.max_degree = tree.graph.max_degree();
  std::vector<std::pair<Vertex, std::size_t>> stack{{tree.root, 0}};
  while (!stack.empty()) {
    auto [v, depth] = stack.back();
    stack.pop_back();
    s.depth = std::max(s.depth, depth);
    for (Vertex c : tree.children[v]) stack.emplace_back(c, depth + 1);
  }
  return s;
}

Graph induced_subgraph(const Graph& g, std::span<const Vertex> subset) {
  std::vector<long> relabel(g.vertex_count(), -1);
  for (std::size_t k = 0; k < subset.size(); ++k) {
    Vertex v = subset[k];
    if (v >= g.vertex_count()) throw InvalidArgument("subset vertex " + std::to_string(v) + " out of range");
    if (relabel[v] >= 0) throw InvalidArgument("duplicate vertex in subset");
    relabel[v] = static_cast<long>(k);
  }
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (const auto& e : g.edges())
    if (relabel[e.u] >= 0 && relabel[e.v] >= 0)
      pairs.emplace_back(static_cast<Vertex>(relabel[e.u]), static_cast<Vertex>(relabel[e.v]));
  return Graph(subset.size(), std::move(pairs));
}

Graph spanning_subgraph(const Graph& g, std::span<const std::uint32_t> edge_ids) {
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (auto id : edge_ids) {
    if (id >= g.edge_count()) throw InvalidArgument("edge id out of range");
    pairs.emplace_back(g.edge(id).u, g.edge(id).v);
  }
  return Graph(g.vertex_count(), std::move(pairs));
}

HalfGrid::HalfGrid(TorusSpec spec) : side2_(2 * spec.side), dim_(spec.dim) {
  if (spec.side < 3) throw DegenerateTorusError("half grid needs L >= 3");
  stride_.assign(dim_, 1);
  for (int i = dim_ - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * side2_;
  count_ = stride_[0] * side2_;
}

std::uint32_t HalfGrid::encode(std::span<const int> y) const {
  std::size_t c = 0;
  for (int i = 0; i < dim_; ++i) c += stride_[i] * (((y[i] % side2_) + side2_) % side2_);
  return static_cast<std::uint32_t>(c);
}

std::vector<int> HalfGrid::decode(std::uint32_t cell) const {
  std::vector<int> y(dim_);
  decode(cell, y);
  return y;
}

void HalfGrid::decode(std::uint32_t cell, std::span<int> out) const {
  for (int i = 0; i < dim_; ++i) out[i] = coord(cell, i);
}

std::uint32_t HalfGrid::step(std::uint32_t cell, int dir, int sign) const {
  int y = coord(cell, dir);
  int ny = (y + sign + side2_) % side2_;
  return static_cast<std::uint32_t>(cell + (static_cast<long>(ny) - y) * static_cast<long>(stride_[dir]));
}

std::uint32_t HalfGrid::vertex_cell(const Torus& t, Vertex v) const {
  std::size_t c = 0;
  auto x = t.coords(v);
  for (int i = 0; i < dim_; ++i) c += stride_[i] * (2 * x[i]);
  return static_cast<std::uint32_t>(c);
}

std::uint32_t HalfGrid::edge_cell(const Torus& t, std::uint32_t e) const {
  auto [v, dir] = t.edge_base(e);
  return static_cast<std::uint32_t>(vertex_cell(t, v) + stride_[dir]);
}

bool HalfGrid::is_vertex_cell(std::uint32_t cell) const {
  for (int i = 0; i < dim_; ++i)
    if (coord(cell, i) & 1) return false;
  return true;
}

}  // namespace pottsmix

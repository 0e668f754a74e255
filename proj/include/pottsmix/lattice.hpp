#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pottsmix {

using Vertex = std::uint32_t;

struct Edge {
  Vertex u;  // u < v
  Vertex v;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// Simple undirected graph with dense vertex ids and a canonically sorted edge
// list (lexicographic on (min, max)). Immutable after construction.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t vertex_count, std::vector<std::pair<Vertex, Vertex>> edges);

  std::size_t vertex_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t i) const { return edges_[i]; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  // Edge ids parallel to neighbors(v).
  std::span<const std::uint32_t> incident_edges(Vertex v) const {
    return {inc_.data() + offsets_[v], inc_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }
  std::size_t max_degree() const;
  std::optional<std::size_t> edge_index(Vertex a, Vertex b) const;

  // One "u v" line per edge, preceded by a "# vertices N" header so isolated
  // trailing vertices survive the round trip.
  std::string to_text() const;
  static Graph from_text(std::istream& in);

  bool operator==(const Graph& o) const { return n_ == o.n_ && edges_ == o.edges_; }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Vertex> adj_;
  std::vector<std::uint32_t> inc_;
};

struct TorusSpec {
  int side = 3;  // L
  int dim = 2;   // d
  std::size_t volume() const;
};

// T_{L,d} together with its coordinate system. Vertex ids are row-major
// (the last coordinate varies fastest).
class Torus {
 public:
  explicit Torus(TorusSpec spec);

  const TorusSpec& spec() const { return spec_; }
  int side() const { return spec_.side; }
  int dim() const { return spec_.dim; }
  const Graph& graph() const { return graph_; }

  std::vector<int> coords(Vertex v) const;
  Vertex vertex(std::span<const int> coords) const;
  // Neighbor of v one step in direction i (sign +1 or -1).
  Vertex shift(Vertex v, int dir, int sign) const;
  // Id of the edge {v, v + e_dir}.
  std::uint32_t edge_at(Vertex v, int dir) const { return dir_edge_[v * spec_.dim + dir]; }
  // Lower endpoint (v with edge = {v, v + e_dir}) and direction of edge e.
  std::pair<Vertex, int> edge_base(std::uint32_t e) const { return edge_base_[e]; }

 private:
  TorusSpec spec_;
  Graph graph_;
  std::vector<std::size_t> stride_;
  std::vector<std::uint32_t> dir_edge_;
  std::vector<std::pair<Vertex, int>> edge_base_;
};

Graph build_torus(const TorusSpec& spec);

// Open-boundary grid with the given side lengths, row-major ids.
Graph build_box(std::span<const int> sides);

struct TreeStats {
  std::size_t max_degree = 0;
  std::size_t depth = 0;
};

struct Tree {
  Graph graph;
  Vertex root = 0;
  std::vector<int> parent;  // parent[root] = -1
  std::vector<std::vector<Vertex>> children;
};

// parent[v] is v's parent, -1 for the single root.
Tree build_tree(std::span<const int> parent);
TreeStats tree_stats(const Tree& tree);

// Vertices of S (in the given order) relabeled 0..|S|-1.
Graph induced_subgraph(const Graph& g, std::span<const Vertex> subset);

// Subgraph (V, E0) keeping the listed edge ids.
Graph spanning_subgraph(const Graph& g, std::span<const std::uint32_t> edge_ids);

// Half-integer cells of the torus: y in {0..2L-1}^d with center y/2.
// Row-major ids like the torus itself.
class HalfGrid {
 public:
  explicit HalfGrid(TorusSpec spec);

  int side() const { return side2_; }  // 2L
  int dim() const { return dim_; }
  std::size_t cell_count() const { return count_; }
  std::size_t stride(int dir) const { return stride_[dir]; }

  std::uint32_t encode(std::span<const int> y) const;
  std::vector<int> decode(std::uint32_t cell) const;
  void decode(std::uint32_t cell, std::span<int> out) const;
  int coord(std::uint32_t cell, int dir) const {
    return static_cast<int>((cell / stride_[dir]) % side2_);
  }
  std::uint32_t step(std::uint32_t cell, int dir, int sign) const;

  std::uint32_t vertex_cell(const Torus& t, Vertex v) const;
  std::uint32_t edge_cell(const Torus& t, std::uint32_t e) const;
  bool is_vertex_cell(std::uint32_t cell) const;

 private:
  int side2_;
  int dim_;
  std::size_t count_;
  std::vector<std::size_t> stride_;
};

}  // namespace pottsmix

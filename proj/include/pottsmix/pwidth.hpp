#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pottsmix/lattice.hpp"
#include "pottsmix/potts.hpp"

namespace pottsmix {

// Rooted binary tree of vertex subsets. nodes[0] is the root (= V); every
// internal node's children partition it; leaves are singletons.
class HierarchicalPartition {
 public:
  struct Node {
    std::vector<Vertex> vertices;  // sorted
    int left = -1;
    int right = -1;
    std::size_t weight = 0;  // edges between the two children; 0 at leaves
    bool is_leaf() const { return left < 0; }
  };

  using Splitter = std::function<std::pair<std::vector<Vertex>, std::vector<Vertex>>(const std::vector<Vertex>&)>;

  // Recursively splits V with `split` until singletons; cut weights are
  // counted from the graph.
  static HierarchicalPartition build(const Graph& g, const Splitter& split);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t vertex_count() const { return n_; }

  // Throws ConsistencyError if the structure or any stored weight is wrong.
  void validate(const Graph& g) const;

  std::size_t separation_cost(Vertex x) const;
  std::size_t sep() const;

  // One node per line, two spaces of indent per depth: "<subset hex> <weight>".
  std::string to_text() const;

  // Assembles a partition from explicit nodes (used by the exact solver).
  static HierarchicalPartition from_nodes(std::size_t n, std::vector<Node> nodes);

 private:
  std::size_t n_ = 0;
  std::vector<Node> nodes_;
};

struct PwResult {
  std::size_t width = 0;
  HierarchicalPartition witness;
};

// Exact PW by subset DP; |V| <= 16. Ties go to the lexicographically smallest
// S1 (as a sorted vertex list).
PwResult pw_exact(const Graph& g);

// Number of edges between two disjoint vertex sets.
std::size_t cut_size(const Graph& g, const std::vector<Vertex>& a, const std::vector<Vertex>& b);

HierarchicalPartition pw_constructive_box(const std::vector<int>& sides);
HierarchicalPartition pw_constructive_torus(const TorusSpec& spec);
HierarchicalPartition pw_constructive_tree(const Tree& tree);

// A(box) = volume / smallest side.
double box_aspect(const std::vector<int>& sides);

// log of e^{5 beta pw} (2 + |V| log 2 + beta |E|).
double log_mixing_bound(const ModelParams& m, const Graph& g, std::size_t pw);

}  // namespace pottsmix

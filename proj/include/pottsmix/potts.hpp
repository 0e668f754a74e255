#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pottsmix/bitvector.hpp"
#include "pottsmix/lattice.hpp"

namespace pottsmix {

struct ModelParams {
  int q = 2;
  double beta = 1.0;

  ModelParams() = default;
  ModelParams(int q, double beta);

  double p() const;         // 1 - e^{-beta}
  double log_p() const;     // log(1 - e^{-beta})
  double log_1mp() const { return -beta; }
  double e_dis(int d) const { return d * beta - std::log(static_cast<double>(q)); }
  double e_ord(int d) const { return -d * log_p(); }
  double kappa() const;     // (1/2) log(e^beta - 1)
};

// Colors are stored 0-based: value k means color k+1.
struct SpinConfig {
  std::vector<std::uint16_t> colors;

  SpinConfig() = default;
  explicit SpinConfig(std::size_t n, std::uint16_t color = 0) : colors(n, color) {}
  std::size_t size() const { return colors.size(); }
  std::uint16_t operator[](std::size_t v) const { return colors[v]; }
  std::uint16_t& operator[](std::size_t v) { return colors[v]; }
  bool operator==(const SpinConfig&) const = default;

  void validate(const Graph& g, int q) const;

  // Mixed-radix index with vertex 0 as the least significant base-q digit;
  // used to index exact state spaces.
  std::uint64_t index(int q) const;
  static SpinConfig from_index(std::uint64_t index, std::size_t n, int q);

  // The base-q number above, written in hexadecimal (arbitrary size).
  std::string to_hex(int q) const;
  static SpinConfig from_hex(const std::string& hex, std::size_t n, int q);
};

using EdgeConfig = BitVector;

// Enumeration size caps. Counts are natural logs of the number of states.
struct EnumerationBudget {
  double max_log_states = std::log(6561.0) + 1e-9;
  static EnumerationBudget states(double n) { return {std::log(n) + 1e-9}; }
  void require(double log_states, const std::string& what) const;
};

std::size_t hamiltonian(const Graph& g, const SpinConfig& sigma);
EdgeConfig mono_edges(const Graph& g, const SpinConfig& sigma);

// Number of connected components of (V, A), isolated vertices included.
std::size_t component_count(const Graph& g, const EdgeConfig& a);
std::size_t largest_component(const Graph& g, const EdgeConfig& a);

double log_gibbs_weight(const ModelParams& m, const Graph& g, const SpinConfig& sigma);
double log_partition_function_exact(const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});

double log_fk_weight(const ModelParams& m, const Graph& g, const EdgeConfig& a);
// Sum of FK weights over all 2^|E| bond configurations.
double log_fk_sum_exact(const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});

// Boundary statistics of A on the torus.
struct BondBoundary {
  std::size_t covered_vertices = 0;  // |V(A)|
  std::size_t delta1 = 0;            // edges not in A with one endpoint in V(A)
  std::size_t delta2 = 0;            // edges not in A with both endpoints in V(A)
  std::size_t norm() const { return delta1 + 2 * delta2; }
};
BondBoundary bond_boundary(const Graph& g, const EdgeConfig& a);
// c~(A): components of (V(A), A).
std::size_t covered_component_count(const Graph& g, const EdgeConfig& a);

// Contour-form weight; requires beta > log 2 so that kappa > 0.
double log_fk_weight_contour_form(const ModelParams& m, const Torus& t, const EdgeConfig& a);

// log of the ES weight, or kLogZero when A is not inside E(sigma).
double log_es_weight(const ModelParams& m, const Graph& g, const SpinConfig& sigma, const EdgeConfig& a);
double log_es_sum_exact(const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});

// Calls f(partition_labels, block_count) for every set partition of {0..n-1},
// labels as restricted growth strings.
template <class F>
void for_each_set_partition(std::size_t n, F&& f) {
  if (n == 0) {
    std::vector<std::uint16_t> empty;
    f(empty, std::size_t{0});
    return;
  }
  std::vector<std::uint16_t> a(n, 0), m(n, 0);  // m[i] = max(a[0..i-1])
  while (true) {
    std::size_t blocks = static_cast<std::size_t>(std::max(m[n - 1], a[n - 1])) + 1;
    f(a, blocks);
    std::size_t i = n - 1;
    while (i > 0 && a[i] > m[i]) --i;  // a[i] == m[i] + 1 is the cap
    if (i == 0) return;
    ++a[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      m[j] = std::max(m[j - 1], a[j - 1]);
    }
  }
}

// Exact law of |E(sigma)| under the Gibbs measure, via set partitions of V
// weighted by the number q(q-1)...(q-k+1) of colorings realising each one.
// Entry m is log mu(|E(sigma)| = m); feasible for |V| <= ~12 at any q.
std::vector<double> log_mono_edge_distribution(const ModelParams& m, const Graph& g);

}  // namespace pottsmix

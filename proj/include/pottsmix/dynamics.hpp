#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pottsmix/lattice.hpp"
#include "pottsmix/potts.hpp"
#include "pottsmix/rng.hpp"
#include "pottsmix/union_find.hpp"

namespace pottsmix {

enum class Kernel { HeatBath, SwendsenWang };
std::string kernel_name(Kernel k);
Kernel parse_kernel(const std::string& name);

struct ChainState {
  SpinConfig sigma;
  std::uint64_t step_count = 0;
  Philox rng;
};

// Reusable buffers and precomputed constants for one (params, graph) pair.
class Sampler {
 public:
  Sampler(const ModelParams& m, const Graph& g);

  const ModelParams& params() const { return params_; }
  const Graph& graph() const { return *graph_; }

  void hb_step(ChainState& s);
  void sw_step(ChainState& s);
  // SW step that also reports the intermediate bond set A (kept edges).
  void sw_step(ChainState& s, EdgeConfig& bonds);
  void step(Kernel k, ChainState& s) { k == Kernel::HeatBath ? hb_step(s) : sw_step(s); }

  // Site and previous color touched by the most recent hb_step.
  Vertex last_site() const { return last_site_; }
  std::uint16_t last_old_color() const { return last_old_color_; }

 private:
  void sw_impl(ChainState& s, EdgeConfig* bonds);

  ModelParams params_;
  const Graph* graph_;
  std::uint64_t keep_threshold_;
  std::vector<double> exp_beta_;  // e^{beta k}, k = 0..max degree
  UnionFind uf_;
  std::vector<std::uint16_t> new_color_;
  std::vector<std::uint16_t> nb_colors_;
  std::vector<std::uint16_t> nb_counts_;
  Vertex last_site_ = 0;
  std::uint16_t last_old_color_ = 0;
};

void hb_step(const ModelParams& m, const Graph& g, ChainState& s);
void sw_step(const ModelParams& m, const Graph& g, ChainState& s);

// Dense row-stochastic matrix over all q^|V| colorings, states indexed by
// SpinConfig::index.
struct TransitionMatrix {
  int q = 0;
  std::size_t vertex_count = 0;
  Eigen::MatrixXd P;
  std::size_t size() const { return static_cast<std::size_t>(P.rows()); }
};

TransitionMatrix hb_matrix(const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});
TransitionMatrix sw_matrix(const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});
TransitionMatrix kernel_matrix(Kernel k, const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});

// Exact Gibbs distribution in SpinConfig::index order.
Eigen::VectorXd gibbs_distribution(const ModelParams& m, const Graph& g, const EnumerationBudget& budget = {});

struct Observation {
  std::uint64_t step = 0;
  std::size_t energy = 0;
  std::size_t mono_edges = 0;
  std::size_t max_component = 0;  // largest monochromatic cluster
  bool in_s = false;
};

using MembershipFn = std::function<bool(const SpinConfig&, const Observation&)>;

Observation observe(const Graph& g, const SpinConfig& sigma, std::uint64_t step, const MembershipFn& in_s);

// Runs `steps` kernel steps and records the initial state plus every step.
std::vector<Observation> run_trajectory(const ModelParams& m, const Graph& g, Kernel kernel, ChainState& state,
                                        std::uint64_t steps, const MembershipFn& in_s = {});

void write_trajectory_csv(std::ostream& os, const std::vector<Observation>& obs, std::uint64_t rng_stream);

}  // namespace pottsmix

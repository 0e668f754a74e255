#include "pottsmix/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "pottsmix/errors.hpp"

namespace pottsmix {

std::string kernel_name(Kernel k) { return k == Kernel::HeatBath ? "hb" : "sw"; }

Kernel parse_kernel(const std::string& name) {
  if (name == "hb" || name == "heat-bath") return Kernel::HeatBath;
  if (name == "sw" || name == "swendsen-wang") return Kernel::SwendsenWang;
  throw InvalidArgument("unknown kernel '" + name + "' (expected hb or sw)");
}

Sampler::Sampler(const ModelParams& m, const Graph& g)
    : params_(m), graph_(&g), keep_threshold_(bernoulli_threshold(m.p())), uf_(g.vertex_count()) {
  std::size_t dmax = g.max_degree();
  exp_beta_.resize(dmax + 1);
  for (std::size_t k = 0; k <= dmax; ++k) exp_beta_[k] = std::exp(m.beta * static_cast<double>(k));
  new_color_.resize(g.vertex_count());
  nb_colors_.reserve(dmax);
  nb_counts_.reserve(dmax);
}

void Sampler::hb_step(ChainState& s) {
  const Graph& g = *graph_;
  const int q = params_.q;
  Vertex v = s.rng.below(static_cast<std::uint32_t>(g.vertex_count()));
  last_site_ = v;
  last_old_color_ = s.sigma[v];
  nb_colors_.clear();
  nb_counts_.clear();
  for (Vertex w : g.neighbors(v)) {
    auto c = s.sigma[w];
    auto it = std::find(nb_colors_.begin(), nb_colors_.end(), c);
    if (it == nb_colors_.end()) {
      nb_colors_.push_back(c);
      nb_counts_.push_back(1);
    } else {
      ++nb_counts_[it - nb_colors_.begin()];
    }
  }
  const std::size_t distinct = nb_colors_.size();
  double total = static_cast<double>(q - static_cast<int>(distinct));
  for (auto n : nb_counts_) total += exp_beta_[n];
  double r = s.rng.uniform() * total;
  for (std::size_t k = 0; k < distinct; ++k) {
    double w = exp_beta_[nb_counts_[k]];
    if (r < w) {
      s.sigma[v] = nb_colors_[k];
      ++s.step_count;
      return;
    }
    r -= w;
  }
  // Uniform among the colors absent from the neighborhood.
  int free_colors = q - static_cast<int>(distinct);
  if (free_colors == 0) {  // rounding pushed r past the last bucket
    s.sigma[v] = nb_colors_.back();
    ++s.step_count;
    return;
  }
  int k = std::min(static_cast<int>(r), free_colors - 1);
  for (int c = 0; c < q; ++c) {
    if (std::find(nb_colors_.begin(), nb_colors_.end(), c) != nb_colors_.end()) continue;
    if (k-- == 0) {
      s.sigma[v] = static_cast<std::uint16_t>(c);
      break;
    }
  }
  ++s.step_count;
}

void Sampler::sw_step(ChainState& s) { sw_impl(s, nullptr); }
void Sampler::sw_step(ChainState& s, EdgeConfig& bonds) { sw_impl(s, &bonds); }

void Sampler::sw_impl(ChainState& s, EdgeConfig* bonds) {
  const Graph& g = *graph_;
  const std::size_t n = g.vertex_count();
  uf_.reset(n);
  if (bonds) *bonds = EdgeConfig(g.edge_count());
  auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (s.sigma[e.u] != s.sigma[e.v]) continue;
    if (s.rng() < keep_threshold_) {
      uf_.unite(e.u, e.v);
      if (bonds) bonds->set(i);
    }
  }
  constexpr std::uint16_t kUnset = 0xffff;
  std::fill(new_color_.begin(), new_color_.end(), kUnset);
  for (Vertex v = 0; v < n; ++v) {
    auto root = uf_.find(v);
    if (new_color_[root] == kUnset) new_color_[root] = static_cast<std::uint16_t>(s.rng.below(params_.q));
    s.sigma[v] = new_color_[root];
  }
  ++s.step_count;
}

void hb_step(const ModelParams& m, const Graph& g, ChainState& s) { Sampler(m, g).hb_step(s); }
void sw_step(const ModelParams& m, const Graph& g, ChainState& s) { Sampler(m, g).sw_step(s); }

namespace {

std::uint64_t state_count(const ModelParams& m, const Graph& g, const EnumerationBudget& budget,
                          const char* what) {
  budget.require(static_cast<double>(g.vertex_count()) * std::log(static_cast<double>(m.q)), what);
  return static_cast<std::uint64_t>(std::llround(std::pow(m.q, g.vertex_count())));
}

}  // namespace

TransitionMatrix hb_matrix(const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  const std::uint64_t N = state_count(m, g, budget, "heat-bath matrix");
  const std::size_t n = g.vertex_count();
  TransitionMatrix tm{m.q, n, Eigen::MatrixXd::Zero(N, N)};
  std::vector<std::uint64_t> place(n, 1);
  for (std::size_t k = 1; k < n; ++k) place[k] = place[k - 1] * m.q;
  std::vector<double> w(m.q);
  for (std::uint64_t idx = 0; idx < N; ++idx) {
    auto s = SpinConfig::from_index(idx, n, m.q);
    for (Vertex v = 0; v < n; ++v) {
      std::fill(w.begin(), w.end(), 0.0);
      for (Vertex u : g.neighbors(v)) w[s[u]] += 1.0;
      double total = 0;
      for (auto& x : w) total += (x = std::exp(m.beta * x));
      const std::uint64_t base = idx - s[v] * place[v];
      for (int c = 0; c < m.q; ++c) tm.P(idx, base + c * place[v]) += w[c] / total / static_cast<double>(n);
    }
  }
  return tm;
}

TransitionMatrix sw_matrix(const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  const std::uint64_t N = state_count(m, g, budget, "Swendsen-Wang matrix");
  const std::size_t n = g.vertex_count(), ne = g.edge_count();
  if (n > 16 || ne > 40) throw BudgetExceeded("Swendsen-Wang matrix: graph too large for row enumeration");
  TransitionMatrix tm{m.q, n, Eigen::MatrixXd::Zero(N, N)};
  auto edges = g.edges();
  const double lp = m.log_p(), l1mp = m.log_1mp();

  // The law of the cluster partition depends on sigma only through E(sigma).
  // Partitions are keyed by their restricted-growth labels, 4 bits a vertex.
  using PartitionLaw = std::vector<std::pair<std::uint64_t, double>>;
  std::unordered_map<std::uint64_t, PartitionLaw> cache;
  UnionFind uf(n);
  auto law_for = [&](std::uint64_t mono) -> const PartitionLaw& {
    auto it = cache.find(mono);
    if (it != cache.end()) return it->second;
    std::unordered_map<std::uint64_t, double> acc;
    const int m_size = std::popcount(mono);
    std::vector<std::uint8_t> label(n);
    for (std::uint64_t sub = mono;; sub = (sub - 1) & mono) {
      uf.reset(n);
      for (std::uint64_t bits = sub; bits; bits &= bits - 1) {
        const auto& e = edges[std::countr_zero(bits)];
        uf.unite(e.u, e.v);
      }
      std::fill(label.begin(), label.end(), 0xff);
      std::uint8_t next = 0;
      std::uint64_t key = 0;
      for (Vertex v = 0; v < n; ++v) {
        auto r = uf.find(v);
        if (label[r] == 0xff) label[r] = next++;
        key |= std::uint64_t{label[r]} << (4 * v);
      }
      const int k = std::popcount(sub);
      acc[key] += std::exp(k * lp + (m_size - k) * l1mp);
      if (sub == 0) break;
    }
    PartitionLaw law(acc.begin(), acc.end());
    std::sort(law.begin(), law.end());
    return cache.emplace(mono, std::move(law)).first->second;
  };

  std::vector<std::uint64_t> place(n, 1);
  for (std::size_t k = 1; k < n; ++k) place[k] = place[k - 1] * m.q;
  std::vector<int> block_color;
  for (std::uint64_t idx = 0; idx < N; ++idx) {
    auto s = SpinConfig::from_index(idx, n, m.q);
    std::uint64_t mono = 0;
    for (std::size_t i = 0; i < ne; ++i)
      if (s[edges[i].u] == s[edges[i].v]) mono |= std::uint64_t{1} << i;
    for (const auto& [key, weight] : law_for(mono)) {
      int blocks = 0;
      for (std::size_t v = 0; v < n; ++v) blocks = std::max(blocks, static_cast<int>((key >> (4 * v)) & 15u) + 1);
      const double share = weight * std::pow(static_cast<double>(m.q), -blocks);
      block_color.assign(blocks, 0);
      while (true) {
        std::uint64_t target = 0;
        for (std::size_t v = 0; v < n; ++v) target += place[v] * block_color[(key >> (4 * v)) & 15u];
        tm.P(idx, target) += share;
        int b = 0;
        while (b < blocks && ++block_color[b] == m.q) block_color[b++] = 0;
        if (b == blocks) break;
      }
    }
  }
  return tm;
}

TransitionMatrix kernel_matrix(Kernel k, const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  return k == Kernel::HeatBath ? hb_matrix(m, g, budget) : sw_matrix(m, g, budget);
}

Eigen::VectorXd gibbs_distribution(const ModelParams& m, const Graph& g, const EnumerationBudget& budget) {
  const std::uint64_t N = state_count(m, g, budget, "Gibbs distribution");
  Eigen::VectorXd mu(N);
  for (std::uint64_t idx = 0; idx < N; ++idx)
    mu[idx] = std::exp(log_gibbs_weight(m, g, SpinConfig::from_index(idx, g.vertex_count(), m.q)));
  return mu / mu.sum();
}

Observation observe(const Graph& g, const SpinConfig& sigma, std::uint64_t step, const MembershipFn& in_s) {
  Observation o;
  o.step = step;
  o.energy = hamiltonian(g, sigma);
  o.mono_edges = g.edge_count() - o.energy;
  o.max_component = largest_component(g, mono_edges(g, sigma));
  if (in_s) o.in_s = in_s(sigma, o);
  return o;
}

std::vector<Observation> run_trajectory(const ModelParams& m, const Graph& g, Kernel kernel, ChainState& state,
                                        std::uint64_t steps, const MembershipFn& in_s) {
  Sampler sampler(m, g);
  std::vector<Observation> out;
  out.reserve(steps + 1);
  out.push_back(observe(g, state.sigma, state.step_count, in_s));
  for (std::uint64_t t = 0; t < steps; ++t) {
    sampler.step(kernel, state);
    out.push_back(observe(g, state.sigma, state.step_count, in_s));
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<Observation>& obs, std::uint64_t rng_stream) {
  os << "step,energy,mono_edges,max_component,in_S,rng_stream_id\n";
  for (const auto& o : obs)
    os << o.step << ',' << o.energy << ',' << o.mono_edges << ',' << o.max_component << ',' << (o.in_s ? 1 : 0)
       << ',' << rng_stream << '\n';
}

}  // namespace pottsmix

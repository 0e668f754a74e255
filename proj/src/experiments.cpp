#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "pottsmix/errors.hpp"
#include "pottsmix/harness.hpp"

namespace pottsmix {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SectorScanOptions scan_options(const ExperimentConfig& cfg) {
  SectorScanOptions opt;
  // The pseudo-critical point is always located with the SW set S at
  // alpha = 1/3, whatever bottleneck set the experiment itself uses.
  opt.alpha = 1.0 / 3.0;
  opt.seed = cfg.seed;
  opt.steps_per_point = cfg.scan_steps;
  opt.burn_in = std::max<std::uint64_t>(cfg.scan_steps / 10, 10);
  opt.spacing = cfg.scan_spacing;
  opt.workers = cfg.workers;
  return opt;
}

std::string job_name(const char* kind, const ExperimentConfig& cfg, int L, int replica) {
  std::ostringstream os;
  os << kind << "/q=" << cfg.q << "/d=" << cfg.d << "/L=" << L << "/rep=" << replica;
  return os.str();
}

struct ReplicaTally {
  std::uint64_t trials = 0;
  std::uint64_t escapes = 0;
  std::uint64_t restarts = 0;
  std::uint64_t checks = 0;
};

EscapeRow fold_rows(const ExperimentConfig& cfg, int L, double beta, double alpha, const std::vector<ReplicaTally>& reps,
                    std::size_t first, std::uint64_t* checks) {
  EscapeRow row;
  row.q = cfg.q;
  row.d = cfg.d;
  row.L = L;
  row.beta = beta;
  row.alpha = alpha;
  row.kernel = cfg.kernel;
  row.seed = cfg.seed;
  for (int r = 0; r < cfg.replicas; ++r) {
    const auto& t = reps[first + r];
    row.steps += t.trials;
    row.escapes += t.escapes;
    row.restarts += t.restarts;
    *checks += t.checks;
    row.replica_rates.push_back(t.trials ? static_cast<double>(t.escapes) / static_cast<double>(t.trials) : 0.0);
  }
  row.rate = row.steps ? static_cast<double>(row.escapes) / static_cast<double>(row.steps) : 0.0;
  row.ci = wilson_interval(row.escapes, row.steps);
  row.low_confidence = row.escapes < 10;
  return row;
}

}  // namespace

double experiment_beta(const ExperimentConfig& cfg, int L, PseudoCriticalResult* source) {
  if (cfg.beta_policy == BetaPolicy::Fixed) return cfg.beta;
  using Key = std::tuple<int, int, int, std::uint64_t, std::uint64_t, double>;
  static std::mutex mutex;
  static std::map<Key, PseudoCriticalResult> cache;
  Key key{cfg.q, cfg.d, L, cfg.seed, cfg.scan_steps, cfg.scan_spacing};
  PseudoCriticalResult r;
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) r = it->second;
  }
  if (r.method.empty()) {
    r = pseudo_critical_beta(cfg.q, cfg.d, L, scan_options(cfg));
    std::lock_guard lock(mutex);
    cache.emplace(key, r);
  }
  if (source) *source = r;
  return r.beta * cfg.beta_scale;
}

namespace {

// Shared driver: `advance` performs one counted unit (an SW step or an HB
// sweep) and `member` decides membership in the bottleneck set.
template <class Advance, class Member>
ReplicaTally escape_chain(std::uint64_t steps, std::uint64_t burn_in, std::uint64_t excursion_cap, ChainState& st,
                          std::size_t n, Advance advance, Member member) {
  ReplicaTally tally;
  auto restart = [&] {
    st.sigma = SpinConfig(n, 0);
    for (std::uint64_t t = 0; t < burn_in; ++t) advance(st);
  };
  restart();
  bool in = member(st.sigma);
  std::uint64_t outside = 0;
  while (tally.trials < steps) {
    advance(st);
    bool now = member(st.sigma);
    if (in) {
      ++tally.trials;
      if (!now) ++tally.escapes;
      outside = 0;
    } else if (!now && ++outside >= excursion_cap) {
      if (++tally.restarts > steps + 1000)
        throw BudgetExceeded("escape chain keeps leaving the bottleneck set right after burn-in");
      restart();
      now = member(st.sigma);
      outside = 0;
    }
    in = now;
  }
  return tally;
}

}  // namespace

EscapeReport sw_escape_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.kernel = Kernel::SwendsenWang;
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  EscapeReport report;
  const double alpha = cfg.alpha_value();
  std::vector<double> betas;
  for (int L : cfg.sizes) {
    PseudoCriticalResult src;
    betas.push_back(experiment_beta(cfg, L, &src));
    if (cfg.beta_policy == BetaPolicy::PseudoCritical) report.beta_sources.push_back(src);
  }
  const std::size_t jobs = cfg.sizes.size() * cfg.replicas;
  auto tallies = run_jobs<ReplicaTally>(jobs, cfg.workers, [&](std::size_t j) {
    const std::size_t li = j / cfg.replicas;
    const int L = cfg.sizes[li];
    const int rep = static_cast<int>(j % cfg.replicas);
    const TorusSpec spec{L, cfg.d};
    const Graph g = build_torus(spec);
    Sampler sampler(ModelParams(cfg.q, betas[li]), g);
    const std::size_t thr = ordered_threshold(spec, alpha);
    ChainState st{SpinConfig(g.vertex_count(), 0), 0, Philox(cfg.seed, stream_id(job_name("sw-escape", cfg, L, rep)))};
    return escape_chain(
        cfg.steps, cfg.burn_in, cfg.excursion_cap, st, g.vertex_count(), [&](ChainState& s) { sampler.sw_step(s); },
        [&](const SpinConfig& sigma) { return count_mono_edges(g, sigma) >= thr; });
  });
  std::uint64_t unused = 0;
  for (std::size_t li = 0; li < cfg.sizes.size(); ++li)
    report.rows.push_back(fold_rows(cfg, cfg.sizes[li], betas[li], alpha, tallies, li * cfg.replicas, &unused));
  report.wall_seconds = seconds_since(t0);
  return report;
}

EscapeReport hb_persistence_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.kernel = Kernel::HeatBath;
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  EscapeReport report;
  const double alpha = cfg.alpha_value();
  std::vector<double> betas;
  for (int L : cfg.sizes) {
    PseudoCriticalResult src;
    betas.push_back(experiment_beta(cfg, L, &src));
    if (cfg.beta_policy == BetaPolicy::PseudoCritical) report.beta_sources.push_back(src);
  }
  const std::size_t jobs = cfg.sizes.size() * cfg.replicas;
  auto tallies = run_jobs<ReplicaTally>(jobs, cfg.workers, [&](std::size_t j) {
    const std::size_t li = j / cfg.replicas;
    const int L = cfg.sizes[li];
    const int rep = static_cast<int>(j % cfg.replicas);
    const TorusSpec spec{L, cfg.d};
    const Graph g = build_torus(spec);
    const std::size_t n = g.vertex_count();
    Sampler sampler(ModelParams(cfg.q, betas[li]), g);
    const std::size_t thr = cluster_threshold(spec, alpha);
    if (2 * thr <= n + 1)
      throw InvalidArgument("hat-Omega threshold must exceed half the volume for the direct-transition check");
    UnionFind uf(n);
    std::vector<std::size_t> counts(cfg.q, 0);
    std::uint64_t checks = 0;
    ChainState st{SpinConfig(n, 0), 0, Philox(cfg.seed, stream_id(job_name("hb-persistence", cfg, L, rep)))};
    auto recount = [&](const SpinConfig& sigma) {
      std::fill(counts.begin(), counts.end(), 0);
      for (auto c : sigma.colors) ++counts[c];
    };
    // A color can hold a cluster of thr vertices only if it has thr sites;
    // thr > (n+1)/2 makes that color unique.
    auto heavy_color = [&]() -> int {
      for (int c = 0; c < cfg.q; ++c)
        if (counts[c] >= thr) return c;
      return -1;
    };
    auto sweep = [&](ChainState& s) {
      recount(s.sigma);
      for (std::size_t k = 0; k < n; ++k) {
        int before = heavy_color();
        sampler.hb_step(s);
        Vertex v = sampler.last_site();
        auto old = sampler.last_old_color(), now = s.sigma[v];
        --counts[old];
        ++counts[now];
        int after = heavy_color();
        ++checks;
        if (before >= 0 && after >= 0 && before != after) {
          int cl_after = dominant_cluster_color(g, s.sigma, thr, uf);
          s.sigma[v] = old;
          int cl_before = dominant_cluster_color(g, s.sigma, thr, uf);
          s.sigma[v] = now;
          if (cl_before >= 0 && cl_after >= 0 && cl_before != cl_after)
            throw ConsistencyError("heat bath moved directly between hat-Omega_" + std::to_string(cl_before + 1) +
                                   " and hat-Omega_" + std::to_string(cl_after + 1));
        }
      }
    };
    auto tally = escape_chain(cfg.steps, cfg.burn_in, cfg.excursion_cap, st, n, sweep, [&](const SpinConfig& sigma) {
      return dominant_cluster_color(g, sigma, thr, uf) == 0;
    });
    tally.checks = checks;
    return tally;
  });
  for (std::size_t li = 0; li < cfg.sizes.size(); ++li)
    report.rows.push_back(fold_rows(cfg, cfg.sizes[li], betas[li], alpha, tallies, li * cfg.replicas,
                                    &report.direct_transition_checks));
  report.wall_seconds = seconds_since(t0);
  return report;
}

HistogramRow histogram_summary(int L, int d, double beta, double alpha, std::vector<double> dist, bool exact) {
  HistogramRow row;
  row.L = L;
  row.beta = beta;
  row.exact = exact;
  const double ne = static_cast<double>(dist.size() - 1);
  for (std::size_t m = 0; m < dist.size(); ++m) {
    double x = static_cast<double>(m);
    if (x > alpha * ne && x < (1 - alpha) * ne) row.m_mid += dist[m];
    if (x >= (1 - alpha) * ne - 1e-9) row.m_ord += dist[m];
  }
  (void)d;
  row.distribution = std::move(dist);
  return row;
}

std::vector<HistogramRow> mono_edge_histogram(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.validate();
  const double alpha = cfg.alpha_value();
  std::vector<HistogramRow> rows;
  for (int L : cfg.sizes) {
    const TorusSpec spec{L, cfg.d};
    const double beta = experiment_beta(cfg, L);
    const std::size_t ne = static_cast<std::size_t>(cfg.d) * spec.volume();
    if (ne <= 18) {
      auto logs = log_mono_edge_distribution(ModelParams(cfg.q, beta), build_torus(spec));
      std::vector<double> dist(logs.size());
      for (std::size_t m = 0; m < logs.size(); ++m) dist[m] = std::exp(logs[m]);
      rows.push_back(histogram_summary(L, cfg.d, beta, alpha, std::move(dist), true));
    } else {
      auto opt = scan_options(cfg);
      opt.alpha = alpha;
      auto rw = cached_sector_reweighting(cfg.q, spec, opt);
      rows.push_back(histogram_summary(L, cfg.d, beta, alpha, rw->mono_edge_distribution(beta), false));
    }
  }
  return rows;
}

std::vector<AutocorrRow> autocorrelation_experiment(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.validate();
  std::vector<double> betas;
  for (int L : cfg.sizes) betas.push_back(experiment_beta(cfg, L));
  return run_jobs<AutocorrRow>(cfg.sizes.size(), cfg.workers, [&](std::size_t li) {
    const int L = cfg.sizes[li];
    const Graph g = build_torus({L, cfg.d});
    Sampler sampler(ModelParams(cfg.q, betas[li]), g);
    ChainState st{SpinConfig(g.vertex_count(), 0), 0, Philox(cfg.seed, stream_id(job_name("autocorr", cfg, L, 0)))};
    for (std::uint64_t t = 0; t < cfg.burn_in; ++t) sampler.step(cfg.kernel, st);
    std::vector<double> series;
    series.reserve(cfg.steps - cfg.burn_in);
    for (std::uint64_t t = cfg.burn_in; t < cfg.steps; ++t) {
      sampler.step(cfg.kernel, st);
      series.push_back(static_cast<double>(count_mono_edges(g, st.sigma)));
    }
    AutocorrRow row;
    row.L = L;
    row.beta = betas[li];
    row.tau = integrated_autocorrelation(series);
    row.samples = series.size();
    return row;
  });
}

bool CouplingReport::ok() const {
  if (subset_violations || lower_violations || upper_violations || split_violations) return false;
  if (std::abs(mean_deleted - expected_deleted) > 4 * deleted_sd_of_mean + 1e-12) return false;
  for (const auto& t : tails)
    if (!t.below_simple_bound || !t.consistent_with_tail) return false;
  return true;
}

CouplingReport deletion_tail_check(const ExperimentConfig& cfg, int L, double beta,
                                   const std::vector<double>& alpha_tildes) {
  const TorusSpec spec{L, cfg.d};
  const Graph g = build_torus(spec);
  const std::size_t n = g.vertex_count(), ne = g.edge_count();
  const ModelParams m(cfg.q, beta);
  Sampler sampler(m, g);
  CouplingReport rep;
  rep.q = cfg.q;
  rep.L = L;
  rep.d = cfg.d;
  rep.beta = beta;
  rep.steps = cfg.steps;
  const double del = std::exp(-beta);
  for (double a : alpha_tildes) {
    TailRow t;
    t.alpha_tilde = a;
    t.threshold = ceil_fraction(a, ne);
    t.log_simple_bound = -beta * a * static_cast<double>(ne) + static_cast<double>(ne) * std::log(2.0);
    rep.tails.push_back(t);
  }
  // Exact tails depend on m = |E(sigma)| only; memoised per m.
  std::vector<std::vector<double>> tail_cache(ne + 1);
  auto tail_for = [&](std::size_t mono, std::size_t k) {
    auto& row = tail_cache[mono];
    if (row.empty()) {
      for (const auto& t : rep.tails) row.push_back(std::exp(log_binomial_tail(mono, del, t.threshold)));
    }
    return row[k];
  };

  ChainState st{SpinConfig(n, 0), 0, Philox(cfg.seed, stream_id(job_name("coupling", cfg, L, 0)))};
  EdgeConfig bonds(ne);
  double sum_deleted = 0, sum_expected = 0, sum_var = 0;
  std::vector<double> tail_sum(rep.tails.size(), 0.0);
  for (std::uint64_t t = 0; t < cfg.steps; ++t) {
    const SpinConfig before = st.sigma;
    const EdgeConfig mono = mono_edges(g, before);
    sampler.sw_step(st, bonds);
    // (sigma_t, A_t) and (sigma_{t+1}, A_t) are both Edwards-Sokal pairs.
    const EdgeConfig mono_after = mono_edges(g, st.sigma);
    if (!bonds.is_subset_of(mono) || !bonds.is_subset_of(mono_after)) ++rep.subset_violations;
    const std::size_t mcount = mono.count(), acount = bonds.count();
    const std::size_t cmax_sigma = largest_component(g, mono);
    const std::size_t cmax_bonds = largest_component(g, bonds);
    if (cmax_sigma < cmax_bonds) ++rep.lower_violations;
    if (cmax_sigma > cmax_bonds + (mcount - acount) + 1) ++rep.upper_violations;
    if (cmax_sigma > cmax_bonds * (mcount - acount + 1)) ++rep.split_violations;
    const std::size_t deleted = mcount - acount;
    sum_deleted += static_cast<double>(deleted);
    sum_expected += del * static_cast<double>(mcount);
    sum_var += del * (1 - del) * static_cast<double>(mcount);
    for (std::size_t k = 0; k < rep.tails.size(); ++k) {
      if (deleted >= rep.tails[k].threshold) ++rep.tails[k].events;
      tail_sum[k] += tail_for(mcount, k);
    }
  }
  const double steps = static_cast<double>(cfg.steps);
  rep.mean_deleted = sum_deleted / steps;
  rep.expected_deleted = sum_expected / steps;
  rep.deleted_sd_of_mean = std::sqrt(sum_var) / steps;
  for (std::size_t k = 0; k < rep.tails.size(); ++k) {
    auto& t = rep.tails[k];
    t.frequency = static_cast<double>(t.events) / steps;
    t.mean_binomial_tail = tail_sum[k] / steps;
    t.below_simple_bound = t.frequency <= std::exp(std::min(0.0, t.log_simple_bound));
    t.consistent_with_tail = wilson_interval(t.events, cfg.steps).low <= t.mean_binomial_tail;
  }
  return rep;
}

}  // namespace pottsmix

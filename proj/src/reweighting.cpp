#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "pottsmix/errors.hpp"
#include "pottsmix/harness.hpp"
#include "pottsmix/logsum.hpp"

namespace pottsmix {

namespace {

struct Sample {
  std::vector<std::uint64_t> hist;
  std::vector<std::uint16_t> series;
};

// Chain restricted to one sector, annealed along `betas` in the given order.
std::vector<Sample> run_sector(int q, const TorusSpec& spec, bool ordered, const std::vector<double>& betas,
                               std::size_t threshold, const SectorScanOptions& opt) {
  const Graph g = build_torus(spec);
  const std::size_t n = g.vertex_count(), ne = g.edge_count();
  std::ostringstream name;
  name << "scan/" << (ordered ? "ord" : "dis") << "/q=" << q << "/L=" << spec.side << "/d=" << spec.dim;
  ChainState st{SpinConfig(n, 0), 0, Philox(opt.seed, stream_id(name.str()))};
  auto inside = [&](std::size_t m) { return (m >= threshold) == ordered; };
  auto randomize = [&] {
    do {
      for (auto& c : st.sigma.colors) c = static_cast<std::uint16_t>(st.rng.below(q));
    } while (!inside(count_mono_edges(g, st.sigma)));
  };
  if (!ordered) randomize();
  std::size_t m = count_mono_edges(g, st.sigma);

  std::vector<Sample> out;
  for (double beta : betas) {
    Sample smp;
    smp.hist.assign(ne + 1, 0);
    smp.series.reserve(opt.steps_per_point);
    if (beta == 0) {
      // Independent uniform colorings conditioned on the sector.
      for (std::uint64_t t = 0; t < opt.steps_per_point; ++t) {
        randomize();
        m = count_mono_edges(g, st.sigma);
        ++smp.hist[m];
        smp.series.push_back(static_cast<std::uint16_t>(m));
      }
    } else {
      Sampler sampler(ModelParams(q, beta), g);
      SpinConfig backup;
      auto move = [&] {
        backup = st.sigma;
        sampler.sw_step(st);
        std::size_t m2 = count_mono_edges(g, st.sigma);
        if (inside(m2)) m = m2;
        else st.sigma = backup;
        for (std::size_t k = 0; k < n; ++k) {
          sampler.hb_step(st);
          Vertex v = sampler.last_site();
          auto old = sampler.last_old_color(), now = st.sigma[v];
          if (old == now) continue;
          long delta = 0;
          for (Vertex w : g.neighbors(v)) delta += (st.sigma[w] == now) - (st.sigma[w] == old);
          std::size_t m3 = static_cast<std::size_t>(static_cast<long>(m) + delta);
          if (inside(m3)) m = m3;
          else st.sigma[v] = old;
        }
      };
      for (std::uint64_t t = 0; t < opt.burn_in; ++t) move();
      for (std::uint64_t t = 0; t < opt.steps_per_point; ++t) {
        move();
        ++smp.hist[m];
        smp.series.push_back(static_cast<std::uint16_t>(m));
      }
    }
    out.push_back(std::move(smp));
  }
  return out;
}

// log of the sample average of e^{delta (m - E)} and its standard error,
// the latter from batch means so that autocorrelation of the weights
// themselves is accounted for.
std::pair<double, double> log_mean_exp(const std::vector<std::uint16_t>& series, double delta, std::size_t ne) {
  constexpr std::size_t kBatches = 20;
  double shift = -std::numeric_limits<double>::infinity();
  for (auto m : series) shift = std::max(shift, delta * (static_cast<double>(m) - static_cast<double>(ne)));
  const std::size_t n = series.size(), per = std::max<std::size_t>(1, n / kBatches);
  std::vector<double> batch;
  double total = 0, acc = 0;
  std::size_t in_batch = 0;
  for (std::size_t t = 0; t < n; ++t) {
    double w = std::exp(delta * (static_cast<double>(series[t]) - static_cast<double>(ne)) - shift);
    total += w;
    acc += w;
    if (++in_batch == per) {
      batch.push_back(acc / static_cast<double>(per));
      acc = 0;
      in_batch = 0;
    }
  }
  const double mean = total / static_cast<double>(n);
  double var = 0;
  for (double b : batch) var += (b - mean) * (b - mean);
  const double k = static_cast<double>(batch.size());
  double se = k > 1 ? std::sqrt(var / (k - 1) / k) / mean : 0.0;
  return {shift + std::log(mean), se};
}

}  // namespace

// Inverse of erfc by Newton iteration on the monotone function.
static double inverse_erfc(double y) {
  double x = 1.0;
  for (int i = 0; i < 100; ++i) {
    double f = std::erfc(x) - y;
    double df = -2.0 / std::sqrt(M_PI) * std::exp(-x * x);
    double step = f / df;
    x -= step;
    if (std::abs(step) < 1e-12) break;
  }
  return x;
}

SectorReweighting::SectorReweighting(int q, const TorusSpec& spec, const SectorScanOptions& opt)
    : q_(q), spec_(spec), edges_(static_cast<std::size_t>(spec.dim) * spec.volume()),
      threshold_(ordered_threshold(spec, opt.alpha)) {
  if (!(opt.spacing > 0) || opt.steps_per_point < 10) throw InvalidArgument("sector scan needs spacing > 0 and >= 10 steps");
  const double n = static_cast<double>(spec.volume());
  const int d = spec.dim;
  const double center = std::log(static_cast<double>(q)) / d;
  // Ordered anchor: single-flip expansion W_S = q (1 + N (q-1) e^{-2d beta}),
  // taken where the correction is below 1%.
  const double anchor = std::max(center + opt.half_width + 0.5, std::log(n * (q - 1) / 0.01) / (2.0 * d));
  auto grid = [&](double lo, double hi) {
    std::vector<double> g;
    long k0 = std::lround(std::floor(lo / opt.spacing)), k1 = std::lround(std::ceil(hi / opt.spacing));
    for (long k = std::max(0L, k0); k <= k1; ++k) g.push_back(static_cast<double>(k) * opt.spacing);
    return g;
  };
  std::vector<double> dis_grid = grid(0.0, center + opt.half_width);
  std::vector<double> ord_grid = grid(center - opt.half_width, anchor);
  std::vector<double> ord_run(ord_grid.rbegin(), ord_grid.rend());

  auto jobs = run_jobs<std::vector<Sample>>(2, opt.workers, [&](std::size_t j) {
    return j == 0 ? run_sector(q, spec, false, dis_grid, threshold_, opt)
                  : run_sector(q, spec, true, ord_run, threshold_, opt);
  });
  std::reverse(jobs[1].begin(), jobs[1].end());

  auto assemble = [&](const std::vector<double>& betas, std::vector<Sample>& samples, std::vector<Point>& pts) {
    for (std::size_t k = 0; k < betas.size(); ++k)
      pts.push_back(Point{betas[k], 0.0, std::move(samples[k].hist), std::move(samples[k].series)});
  };
  assemble(dis_grid, jobs[0], dis_);
  assemble(ord_grid, jobs[1], ord_);

  // Neighbouring log ratios log W(b_{k+1}) - log W(b_k).
  auto ratios = [&](const std::vector<Point>& pts, bool ordered) {
    std::vector<double> r;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const auto& a = pts[k];
      const auto& b = pts[k + 1];
      double delta = b.beta - a.beta;
      auto [fwd, se_f] = log_mean_exp(a.series, delta, edges_);
      auto [bwd_raw, se_b] = log_mean_exp(b.series, -delta, edges_);
      double bwd = -bwd_raw;
      double se = std::sqrt(se_f * se_f + se_b * se_b);
      overlaps_.push_back({ordered, a.beta, b.beta, fwd, bwd, se});
      max_discrepancy_ = std::max(max_discrepancy_, std::abs(fwd - bwd) / std::max(se, 1e-12));
      double wf = 1.0 / std::max(se_f * se_f, 1e-18), wb = 1.0 / std::max(se_b * se_b, 1e-18);
      r.push_back((wf * fwd + wb * bwd) / (wf + wb));
    }
    return r;
  };
  auto rd = ratios(dis_, false);
  {
    // Two-sided normal quantile at family-wise level 1e-3 over all pairs.
    const double pairs = static_cast<double>(dis_.size() + ord_.size() - 2);
    tolerance_ = std::sqrt(2.0) * inverse_erfc(1e-3 / pairs);
  }
  dis_[0].log_w = n * std::log(static_cast<double>(q));  // beta = 0; mu_0(S) is negligible
  for (std::size_t k = 0; k < rd.size(); ++k) dis_[k + 1].log_w = dis_[k].log_w + rd[k];
  auto ro = ratios(ord_, true);
  const double top = ord_.back().beta;
  ord_.back().log_w = std::log(static_cast<double>(q)) + std::log1p(n * (q - 1) * std::exp(-2.0 * d * top));
  for (std::size_t k = ro.size(); k-- > 0;) ord_[k].log_w = ord_[k + 1].log_w - ro[k];
}

double SectorReweighting::log_weight_from(const Point& p, double beta) const {
  auto [lm, se] = log_mean_exp(p.series, beta - p.beta, edges_);
  (void)se;
  return p.log_w + lm;
}

double SectorReweighting::log_weight(bool ordered, double beta) const {
  const auto& pts = sector(ordered);
  const Point* best = &pts.front();
  for (const auto& p : pts)
    if (std::abs(p.beta - beta) < std::abs(best->beta - beta)) best = &p;
  return log_weight_from(*best, beta);
}

double SectorReweighting::ordered_fraction(double beta) const {
  double lo = log_weight(true, beta), ld = log_weight(false, beta);
  return 1.0 / (1.0 + std::exp(ld - lo));
}

std::vector<double> SectorReweighting::mono_edge_distribution(double beta) const {
  std::vector<double> out(edges_ + 1, 0.0);
  const double f = ordered_fraction(beta);
  for (bool ordered : {false, true}) {
    const auto& pts = sector(ordered);
    const Point* best = &pts.front();
    for (const auto& p : pts)
      if (std::abs(p.beta - beta) < std::abs(best->beta - beta)) best = &p;
    std::vector<double> logs(edges_ + 1, kLogZero);
    LogSumExp total;
    for (std::size_t m = 0; m <= edges_; ++m) {
      if (!best->hist[m]) continue;
      logs[m] = std::log(static_cast<double>(best->hist[m])) + (beta - best->beta) * static_cast<double>(m);
      total.add(logs[m]);
    }
    const double mix = ordered ? f : 1.0 - f;
    for (std::size_t m = 0; m <= edges_; ++m)
      if (best->hist[m]) out[m] += mix * std::exp(logs[m] - total.value());
  }
  return out;
}

double SectorReweighting::beta_min() const { return ord_.front().beta; }
double SectorReweighting::beta_max() const { return dis_.back().beta; }

std::vector<double> SectorReweighting::grid() const {
  std::vector<double> g;
  for (const auto& p : dis_)
    if (p.beta >= beta_min() - 1e-12) g.push_back(p.beta);
  return g;
}

namespace {

template <class F>
double bisect(F f, double lo, double hi, int iterations = 80) {
  double flo = f(lo);
  for (int i = 0; i < iterations; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::string bracket_message(const std::string& what, double lo, double flo, double hi, double fhi) {
  std::ostringstream os;
  os << what << ": no sign change on [" << lo << ", " << hi << "], f(lo) = " << flo << ", f(hi) = " << fhi;
  return os.str();
}

}  // namespace

PseudoCriticalResult pseudo_critical_beta_census(const OmegaCensus& census, int q) {
  auto f = [&](double beta) {
    auto s = omega_sums(census, ModelParams(q, beta));
    return s.log_z_ord - s.log_z_dis;
  };
  const double center = std::log(static_cast<double>(q)) / census.spec.dim;
  double lo = std::max(0.02, center - 0.5), hi = center + 0.5;
  for (int widen = 0; (f(lo) < 0) == (f(hi) < 0); ++widen) {
    if (widen == 4) throw BracketError(bracket_message("census pseudo-critical beta", lo, f(lo), hi, f(hi)));
    lo = std::max(0.02, lo - 0.5);
    hi += 0.5;
  }
  PseudoCriticalResult r;
  r.method = "census";
  r.bracket_low = lo;
  r.bracket_high = hi;
  r.beta = bisect(f, lo, hi);
  for (int k = 0; k <= 40; ++k) {
    double beta = lo + (hi - lo) * k / 40.0;
    double nu = omega_sums(census, ModelParams(q, beta)).nu_ord();
    if (!r.scan.empty() && nu < r.scan.back().ordered_fraction - 1e-12) r.monotone = false;
    r.scan.push_back({beta, nu});
  }
  return r;
}

std::shared_ptr<const SectorReweighting> cached_sector_reweighting(int q, const TorusSpec& spec,
                                                                   const SectorScanOptions& opt) {
  using Key = std::tuple<int, int, int, double, std::uint64_t, std::uint64_t, std::uint64_t, double, double>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const SectorReweighting>> cache;
  Key key{q, spec.side, spec.dim, opt.alpha, opt.seed, opt.steps_per_point, opt.burn_in, opt.spacing, opt.half_width};
  {
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto made = std::make_shared<const SectorReweighting>(q, spec, opt);
  std::lock_guard lock(mutex);
  return cache.emplace(key, made).first->second;
}

PseudoCriticalResult pseudo_critical_beta_sampled(int q, const TorusSpec& spec, const SectorScanOptions& opt) {
  auto rw = cached_sector_reweighting(q, spec, opt);
  const double lq = std::log(static_cast<double>(q));
  auto f = [&](double beta) { return rw->log_weight(true, beta) - rw->log_weight(false, beta) - lq; };
  PseudoCriticalResult r;
  r.method = "reweighting";
  r.bracket_low = rw->beta_min();
  r.bracket_high = rw->beta_max();
  r.overlap_discrepancy = rw->max_overlap_discrepancy();
  r.overlap_consistent = rw->overlap_consistent();
  for (double beta : rw->grid()) {
    double nu = rw->ordered_fraction(beta);
    if (!r.scan.empty() && nu < r.scan.back().ordered_fraction - 1e-12) r.monotone = false;
    r.scan.push_back({beta, nu});
  }
  double flo = f(r.bracket_low), fhi = f(r.bracket_high);
  if ((flo < 0) == (fhi < 0))
    throw BracketError(bracket_message("sampled pseudo-critical beta", r.bracket_low, flo, r.bracket_high, fhi));
  if (!r.overlap_consistent) {
    std::ostringstream os;
    os << "histogram overlap check failed at L=" << spec.side << ": discrepancy " << r.overlap_discrepancy
       << " standard errors";
    throw ConsistencyError(os.str());
  }
  r.beta = bisect(f, r.bracket_low, r.bracket_high);
  return r;
}

const OmegaCensus& cached_census(const TorusSpec& spec) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<OmegaCensus>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{spec.side, spec.dim}];
  if (!slot) slot = std::make_unique<OmegaCensus>(omega_census(ContourGeometry(spec)));
  return *slot;
}

PseudoCriticalResult pseudo_critical_beta(int q, int d, int L, const SectorScanOptions& opt,
                                          std::size_t census_edges) {
  TorusSpec spec{L, d};
  if (static_cast<std::size_t>(d) * spec.volume() <= census_edges)
    return pseudo_critical_beta_census(cached_census(spec), q);
  return pseudo_critical_beta_sampled(q, spec, opt);
}

}  // namespace pottsmix

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pottsmix/contour.hpp"
#include "pottsmix/dynamics.hpp"
#include "pottsmix/lattice.hpp"
#include "pottsmix/potts.hpp"

namespace pottsmix {

enum class BetaPolicy { Fixed, PseudoCritical };

struct ExperimentConfig {
  int q = 0;
  int d = 2;
  BetaPolicy beta_policy = BetaPolicy::PseudoCritical;
  double beta = 0;          // used when beta_policy == Fixed
  double beta_scale = 1.0;  // multiplies the pseudo-critical value
  std::vector<int> sizes;
  std::optional<double> alpha;
  std::uint64_t steps = 100000;
  std::uint64_t burn_in = 1000;
  int replicas = 1;
  std::uint64_t seed = 1;
  std::string output_dir;
  Kernel kernel = Kernel::SwendsenWang;
  unsigned workers = 1;
  // Consecutive steps outside S after which the chain restarts from the
  // constant configuration.
  std::uint64_t excursion_cap = 2000;
  // Pseudo-critical scan: steps per grid point and grid spacing.
  std::uint64_t scan_steps = 3000;
  double scan_spacing = 0.02;

  // 1/3 for the SW bottleneck, 1/(4d) for heat bath.
  double alpha_value() const;
  void validate() const;
  void set(const std::string& key, const std::string& value);
  std::string to_json() const;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
// Keys that must be present before an experiment can run.
std::vector<std::string> missing_config_keys(const ExperimentConfig& cfg);

std::string beta_policy_name(BetaPolicy p);

// ---------------------------------------------------------------- statistics

struct Interval {
  double low = 0;
  double high = 0;
};

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.96);

struct AutocorrResult {
  double tau_int = 0.5;
  std::size_t window = 0;
  double error = 0;  // Sokal's estimate of the statistical error of tau_int
};

// Integrated autocorrelation time with Sokal's self-consistent window
// (smallest W with W >= c * tau_int(W)).
AutocorrResult integrated_autocorrelation(const std::vector<double>& x, double c = 6.0);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// log P(Bin(m, p) >= k), computed in the log domain.
double log_binomial_tail(std::size_t m, double p, std::size_t k);

// ---------------------------------------------------------- bottleneck sets

// Smallest integer m with m >= (1 - alpha) * count.
std::size_t ceil_fraction(double fraction, std::size_t count);
// S = {sigma : |E(sigma)| >= (1-alpha) d L^d}.
std::size_t ordered_threshold(const TorusSpec& spec, double alpha);
// Threshold on the largest single-color cluster for hat-Omega_k.
std::size_t cluster_threshold(const TorusSpec& spec, double alpha);

// Color k such that sigma has a monochromatic k-cluster with at least
// `threshold` vertices, or -1. Uses `uf` as scratch space.
int dominant_cluster_color(const Graph& g, const SpinConfig& sigma, std::size_t threshold, UnionFind& uf);

std::size_t count_mono_edges(const Graph& g, const SpinConfig& sigma);

// ------------------------------------------------------------- worker pool

// Runs job(i) for i in [0, n) on `workers` threads. Results come back in job
// order, so any fold over them is independent of scheduling.
template <class R>
std::vector<R> run_jobs(std::size_t n, unsigned workers, const std::function<R(std::size_t)>& job) {
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(job(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ------------------------------------------------------- pseudo-critical

// Sector reweighting for the ordered set S and its complement. Each sector
// is sampled by an SW + heat bath chain restricted to it (moves leaving the
// sector are rejected) on a beta grid; neighbouring grid points are joined by
// forward and backward exponential reweighting, and the two ends are anchored
// at beta = 0 (disordered, W = q^N) and at large beta (ordered, low-temperature
// expansion).
struct SectorScanOptions {
  double alpha = 1.0 / 3.0;
  std::uint64_t seed = 1;
  std::uint64_t steps_per_point = 3000;
  std::uint64_t burn_in = 300;
  double spacing = 0.02;
  double half_width = 0.6;  // window around (1/d) log q covered by both sectors
  unsigned workers = 1;
};

class SectorReweighting {
 public:
  struct Overlap {
    bool ordered = false;
    double beta_low = 0;
    double beta_high = 0;
    double forward = 0;   // log W(high) - log W(low) from samples at low
    double backward = 0;  // same ratio from samples at high
    double std_error = 0;
  };

  SectorReweighting(int q, const TorusSpec& spec, const SectorScanOptions& opt);

  // log of the total Gibbs weight e^{-beta H} of the sector.
  double log_weight(bool ordered, double beta) const;
  // mu_beta(S).
  double ordered_fraction(double beta) const;
  // Reweighted distribution of |E(sigma)| at beta (index = mono edge count).
  std::vector<double> mono_edge_distribution(double beta) const;
  // Largest |forward - backward| discrepancy of neighbouring log ratios, in
  // units of the combined standard error; the tolerance is the Bonferroni
  // normal quantile for a family-wise level of 1e-3 over all pairs.
  double max_overlap_discrepancy() const { return max_discrepancy_; }
  double overlap_tolerance() const { return tolerance_; }
  bool overlap_consistent() const { return max_discrepancy_ <= tolerance_; }
  const std::vector<Overlap>& overlaps() const { return overlaps_; }
  // Range of beta where both sectors have samples.
  double beta_min() const;
  double beta_max() const;
  std::vector<double> grid() const;
  std::size_t threshold() const { return threshold_; }
  std::size_t edge_count() const { return edges_; }

 private:
  struct Point {
    double beta = 0;
    double log_w = 0;
    std::vector<std::uint64_t> hist;     // counts of |E(sigma)|
    std::vector<std::uint16_t> series;  // |E(sigma)| in sampling order
  };
  double log_weight_from(const Point& p, double beta) const;
  const std::vector<Point>& sector(bool ordered) const { return ordered ? ord_ : dis_; }

  int q_;
  TorusSpec spec_;
  std::size_t edges_;
  std::size_t threshold_;
  std::vector<Point> ord_, dis_;
  double max_discrepancy_ = 0;
  double tolerance_ = 4.0;
  std::vector<Overlap> overlaps_;
};

struct ScanPoint {
  double beta = 0;
  double ordered_fraction = 0;
};

struct PseudoCriticalResult {
  double beta = 0;
  std::string method;  // "census" or "reweighting"
  double bracket_low = 0;
  double bracket_high = 0;
  std::vector<ScanPoint> scan;
  bool monotone = true;
  double overlap_discrepancy = 0;
  bool overlap_consistent = true;
};

// Exact census route (T_{L,d} small enough to enumerate): bisects
// Z_ord(beta) = Z_dis(beta) with Z_ord normalised per ordered color.
PseudoCriticalResult pseudo_critical_beta_census(const OmegaCensus& census, int q);
// Sampling route for larger tori: mu(S) = q/(q+1).
PseudoCriticalResult pseudo_critical_beta_sampled(int q, const TorusSpec& spec, const SectorScanOptions& opt);
// Picks the census route when 2^|E| fits `census_edges`, sampling otherwise.
PseudoCriticalResult pseudo_critical_beta(int q, int d, int L, const SectorScanOptions& opt = {},
                                          std::size_t census_edges = 18);

// Sector scans are expensive; identical requests share one instance.
std::shared_ptr<const SectorReweighting> cached_sector_reweighting(int q, const TorusSpec& spec,
                                                                   const SectorScanOptions& opt);

// Census for a torus, cached per process.
const OmegaCensus& cached_census(const TorusSpec& spec);

// ---------------------------------------------------------------- experiments

struct EscapeRow {
  int q = 0;
  int d = 0;
  int L = 0;
  double beta = 0;
  double alpha = 0;
  Kernel kernel = Kernel::SwendsenWang;
  std::uint64_t steps = 0;  // trials started inside S
  std::uint64_t escapes = 0;
  double rate = 0;
  Interval ci;
  std::uint64_t seed = 0;
  bool low_confidence = false;
  std::uint64_t restarts = 0;
  std::vector<double> replica_rates;
};

struct EscapeReport {
  std::vector<EscapeRow> rows;
  std::vector<PseudoCriticalResult> beta_sources;  // one per L when pseudo-critical
  std::uint64_t direct_transition_checks = 0;      // heat bath only
  std::uint64_t direct_transition_violations = 0;
  double wall_seconds = 0;
};

// Per-L beta under the configured policy.
double experiment_beta(const ExperimentConfig& cfg, int L, PseudoCriticalResult* source = nullptr);

EscapeReport sw_escape_experiment(const ExperimentConfig& cfg);
// Per-sweep escape from hat-Omega_1; every single-site update is also checked
// for a direct move between hat-Omega_k and hat-Omega_l (k != l), which
// throws ConsistencyError.
EscapeReport hb_persistence_experiment(const ExperimentConfig& cfg);

struct HistogramRow {
  int L = 0;
  double beta = 0;
  std::vector<double> distribution;  // mu(|E(sigma)| = m)
  double m_mid = 0;
  double m_ord = 0;
  bool exact = false;
};

std::vector<HistogramRow> mono_edge_histogram(const ExperimentConfig& cfg);
HistogramRow histogram_summary(int L, int d, double beta, double alpha, std::vector<double> dist, bool exact);

struct AutocorrRow {
  int L = 0;
  double beta = 0;
  AutocorrResult tau;
  std::uint64_t samples = 0;
};

// Integrated autocorrelation time of |E(sigma)| per L.
std::vector<AutocorrRow> autocorrelation_experiment(const ExperimentConfig& cfg);

struct TailRow {
  double alpha_tilde = 0;
  std::size_t threshold = 0;
  std::uint64_t events = 0;
  double frequency = 0;
  double log_simple_bound = 0;   // -beta a dL^d + dL^d log 2
  double mean_binomial_tail = 0;  // average of the exact conditional tail
  bool below_simple_bound = true;
  bool consistent_with_tail = true;  // Wilson lower limit <= exact tail
};

struct CouplingReport {
  int q = 0;
  int L = 0;
  int d = 0;
  double beta = 0;
  std::uint64_t steps = 0;
  std::uint64_t subset_violations = 0;    // A not inside E(sigma)
  std::uint64_t lower_violations = 0;     // max C(sigma) < max C(V,A)
  std::uint64_t upper_violations = 0;     // max C(sigma) > max C(V,A) + |E(sigma)\A| + 1
  // max C(sigma) > (|E(sigma)\A| + 1) max C(V,A). Deleting k edges splits a
  // cluster into at most k+1 pieces, so this one cannot fail; the additive
  // form above can, once a cluster holds several components of (V,A).
  std::uint64_t split_violations = 0;
  double mean_deleted = 0;
  double expected_deleted = 0;
  double deleted_sd_of_mean = 0;
  std::vector<TailRow> tails;
  bool ok() const;
};

// Runs `cfg.steps` SW steps on T_{L,d} at fixed beta and checks the
// Edwards-Sokal invariants on every (sigma, A) pair.
CouplingReport deletion_tail_check(const ExperimentConfig& cfg, int L, double beta,
                                   const std::vector<double>& alpha_tildes);

// ----------------------------------------------------------------- output

void write_escape_csv(std::ostream& os, const std::vector<EscapeRow>& rows);
// Line plot of log10(rate) against L (log-scale y axis).
void write_escape_svg(std::ostream& os, const std::vector<EscapeRow>& rows, const std::string& title);

struct RunManifest {
  std::string kind;
  std::string config_json;
  std::string code_version;
  std::vector<std::uint64_t> seeds;
  double wall_seconds = 0;
  std::vector<std::string> row_json;
  std::string to_json() const;
};

std::string code_version();

// Entry point of the `pottsmix` tool. Returns 0 on success, 1 on internal
// errors, 2 on usage errors.
int cli_main(int argc, char** argv);

}  // namespace pottsmix

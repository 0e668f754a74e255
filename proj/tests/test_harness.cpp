#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pottsmix/errors.hpp"
#include "pottsmix/harness.hpp"
#include "pottsmix/logsum.hpp"

using namespace pottsmix;

namespace {

// Runs the tool entry point with stdout and stderr captured.
struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pottsmix");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  CliRun r;
  try {
    r.code = cli_main(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.q = 10;
  cfg.beta_policy = BetaPolicy::Fixed;
  cfg.beta = 1.4;
  cfg.sizes = {4};
  cfg.steps = 1500;
  cfg.burn_in = 50;
  cfg.seed = 7;
  return cfg;
}

// Ordered minus disordered census weight with FK weights (e^beta - 1)^|A| q^c,
// in long double, no log-sum-exp.
long double census_gap(const OmegaCensus& c, int q, double beta) {
  long double ord = 0, dis = 0;
  const long double w = std::expm1(static_cast<long double>(beta));
  for (const auto& [key, n] : c.counts) {
    auto [cls, k, comps, ext] = key;
    long double t = n * std::pow(w, k) * std::pow(static_cast<long double>(q), comps);
    if (cls == static_cast<int>(OmegaClass::Ord)) ord += t / q;
    if (cls == static_cast<int>(OmegaClass::Dis)) dis += t;
  }
  return std::log(ord) - std::log(dis);
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment line\n"
      "q = 10   # trailing comment\n"
      "L = 4,6, 8\n"
      "alpha = 1/3\n"
      "beta = pseudo-critical\n"
      "beta_scale = 1.2\n"
      "steps = 5000\n"
      "burn-in = 100\n"
      "\n"
      "kernel = hb\n"
      "workers = 3\n");
  auto cfg = parse_config(in);
  CHECK(cfg.q == 10);
  CHECK(cfg.sizes == std::vector<int>{4, 6, 8});
  REQUIRE(cfg.alpha);
  CHECK(*cfg.alpha == doctest::Approx(1.0 / 3.0));
  CHECK(cfg.beta_policy == BetaPolicy::PseudoCritical);
  CHECK(cfg.beta_scale == 1.2);
  CHECK(cfg.steps == 5000);
  CHECK(cfg.burn_in == 100);
  CHECK(cfg.kernel == Kernel::HeatBath);
  CHECK(cfg.workers == 3);
  CHECK_NOTHROW(cfg.validate());
  CHECK(missing_config_keys(cfg).empty());
  auto j = nlohmann::json::parse(cfg.to_json());
  CHECK(j["q"] == 10);

  std::istringstream fixed("q = 3\nbeta = 0.8\nL = 5\n");
  auto f = parse_config(fixed);
  CHECK(f.beta_policy == BetaPolicy::Fixed);
  CHECK(f.beta == 0.8);

  std::istringstream unknown("q = 3\ncolour = 2\n");
  CHECK_THROWS_AS(parse_config(unknown), InvalidArgument);
  std::istringstream no_eq("q 3\n");
  CHECK_THROWS_AS(parse_config(no_eq), InvalidArgument);
  ExperimentConfig c;
  CHECK_THROWS_AS(c.set("q", "ten"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/cfg"), InvalidArgument);
}

TEST_CASE("config validation and defaults") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.alpha_value() == doctest::Approx(1.0 / 3.0));
  cfg.kernel = Kernel::HeatBath;
  CHECK(cfg.alpha_value() == doctest::Approx(1.0 / 8.0));

  auto bad = small_config();
  bad.q = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.alpha = 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.steps = bad.burn_in;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.replicas = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.beta = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.sizes = {2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  ExperimentConfig empty;
  CHECK(missing_config_keys(empty) == std::vector<std::string>{"q", "L"});
  empty.beta_policy = BetaPolicy::Fixed;
  CHECK(missing_config_keys(empty) == std::vector<std::string>{"q", "L", "beta"});
}

TEST_CASE("wilson interval") {
  auto r = wilson_interval(0, 0);
  CHECK(r.low == 0);
  CHECK(r.high == 1);
  for (auto [k, n] : {std::pair{0, 10}, {3, 10}, {10, 10}, {47, 1000}, {1, 100000}}) {
    const double z = 1.96, p = double(k) / n;
    // Endpoints solve (p - x)^2 = z^2 x (1 - x) / n.
    auto iv = wilson_interval(k, n, z);
    for (double x : {iv.low, iv.high}) {
      if (x == 0 && k == 0) continue;
      if (x == 1 && k == n) continue;
      CHECK((p - x) * (p - x) == doctest::Approx(z * z * x * (1 - x) / n).epsilon(1e-9));
    }
    CHECK(iv.low <= p);
    CHECK(iv.high >= p);
  }
}

TEST_CASE("integrated autocorrelation time") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> iid(200000);
  for (auto& x : iid) x = g(rng);
  auto r = integrated_autocorrelation(iid);
  CHECK(r.tau_int == doctest::Approx(0.5).epsilon(0.05));

  for (double phi : {0.5, 0.8}) {
    std::vector<double> ar(400000);
    double x = 0;
    for (auto& v : ar) v = x = phi * x + g(rng);
    auto a = integrated_autocorrelation(ar);
    const double exact = (1 + phi) / (2 * (1 - phi));
    CHECK(std::abs(a.tau_int - exact) < 5 * a.error + 0.02 * exact);
    CHECK(a.window >= 6 * a.tau_int - 1);
  }
}

TEST_CASE("linear fit and binomial tail") {
  auto f = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.intercept == doctest::Approx(1));
  CHECK(f.r2 == doctest::Approx(1));
  auto n = linear_fit({0, 1, 2, 3}, {1, -1, -1, 1});
  CHECK(n.slope == doctest::Approx(0).epsilon(1e-12));
  CHECK(n.r2 == doctest::Approx(0).epsilon(1e-12));

  for (std::size_t m : {1, 7, 40}) {
    for (double p : {0.1, 0.5, 0.93}) {
      for (std::size_t k = 0; k <= m; k += (m > 10 ? 5 : 1)) {
        long double direct = 0;
        for (std::size_t j = k; j <= m; ++j) {
          long double c = 1;
          for (std::size_t i = 0; i < j; ++i) c = c * (m - i) / (i + 1);
          direct += c * std::pow((long double)p, j) * std::pow(1.0L - p, m - j);
        }
        CHECK(log_binomial_tail(m, p, k) == doctest::Approx(static_cast<double>(std::log(direct))).epsilon(1e-9));
      }
    }
  }
  CHECK(log_binomial_tail(5, 0.3, 6) == kLogZero);
  CHECK(log_binomial_tail(5, 0.0, 1) == kLogZero);
  CHECK(log_binomial_tail(5, 1.0, 5) == 0.0);
}

TEST_CASE("bottleneck thresholds") {
  CHECK(ceil_fraction(2.0 / 3.0, 72) == 48);
  CHECK(ceil_fraction(0.5, 7) == 4);
  CHECK(ceil_fraction(0.0, 7) == 0);
  CHECK(ordered_threshold({6, 2}, 1.0 / 3.0) == 48);
  CHECK(ordered_threshold({3, 2}, 1.0 / 3.0) == 12);
  CHECK(cluster_threshold({6, 2}, 1.0 / 8.0) == 32);

  Torus t({4, 2});
  UnionFind uf(t.graph().vertex_count());
  SpinConfig sigma(16, 2);
  CHECK(dominant_cluster_color(t.graph(), sigma, 16, uf) == 2);
  CHECK(count_mono_edges(t.graph(), sigma) == 32);
  // Split into two monochromatic 2x4 slabs.
  for (Vertex v = 0; v < 16; ++v) sigma.colors[v] = t.coords(v)[0] < 2 ? 0 : 1;
  CHECK(dominant_cluster_color(t.graph(), sigma, 9, uf) == -1);
  CHECK(dominant_cluster_color(t.graph(), sigma, 8, uf) >= 0);
  CHECK(count_mono_edges(t.graph(), sigma) == 24);
}

TEST_CASE("worker pool keeps job order and propagates failures") {
  std::function<int(std::size_t)> sq = [](std::size_t i) { return static_cast<int>(i * i); };
  for (unsigned w : {1u, 2u, 8u}) {
    auto r = run_jobs<int>(50, w, sq);
    REQUIRE(r.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(r[i] == static_cast<int>(i * i));
  }
  CHECK(run_jobs<int>(0, 4, sq).empty());
  std::function<int(std::size_t)> bad = [](std::size_t i) -> int {
    if (i == 13) throw ConsistencyError("job 13");
    return 0;
  };
  CHECK_THROWS_AS(run_jobs<int>(30, 4, bad), ConsistencyError);
}

TEST_CASE("census pseudo-critical beta") {
  const auto& census = cached_census({3, 2});
  for (int q : {10, 100}) {
    CAPTURE(q);
    auto r = pseudo_critical_beta_census(census, q);
    CHECK(r.method == "census");
    CHECK(r.bracket_low < r.beta);
    CHECK(r.beta < r.bracket_high);
    CHECK(r.monotone);
    // Independent bisection on the linear-domain census sums.
    double lo = 0.05, hi = 6;
    REQUIRE(census_gap(census, q, lo) < 0);
    REQUIRE(census_gap(census, q, hi) > 0);
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (census_gap(census, q, mid) < 0 ? lo : hi) = mid;
    }
    CHECK(r.beta == doctest::Approx(lo).epsilon(1e-8));
    CHECK(std::abs(r.beta - 0.5 * std::log(double(q))) < 0.3);
  }
  CHECK(pseudo_critical_beta(10, 2, 3).method == "census");
}

TEST_CASE("sector reweighting reproduces the exact ordered fraction on a small torus") {
  const TorusSpec spec{3, 2};
  const int q = 10;
  SectorScanOptions opt;
  opt.seed = 3;
  opt.steps_per_point = 4000;
  opt.workers = 4;
  SectorReweighting sr(q, spec, opt);
  CHECK(sr.threshold() == 12);
  CHECK(sr.edge_count() == 18);
  CHECK(sr.overlap_tolerance() > 3);
  Graph g = build_torus(spec);
  for (double beta : {1.0, 1.2, 1.4, 1.6}) {
    auto dist = log_mono_edge_distribution(ModelParams(q, beta), g);
    LogSumExp in, all;
    for (std::size_t m = 0; m < dist.size(); ++m) {
      all.add(dist[m]);
      if (m >= 12) in.add(dist[m]);
    }
    double exact = std::exp(in.value() - all.value());
    CAPTURE(beta);
    CHECK(std::abs(sr.ordered_fraction(beta) - exact) < 0.05);
    auto rw = sr.mono_edge_distribution(beta);
    double total = 0;
    for (double p : rw) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("escape experiment is reproducible and independent of worker count") {
  auto cfg = small_config();
  cfg.replicas = 3;
  cfg.sizes = {4, 5};
  auto csv = [&](unsigned workers) {
    auto c = cfg;
    c.workers = workers;
    auto rep = sw_escape_experiment(c);
    std::ostringstream os;
    write_escape_csv(os, rep.rows);
    return std::pair{os.str(), rep};
  };
  auto [a, rep] = csv(1);
  auto [b, rep3] = csv(3);
  CHECK(a == b);
  CHECK(a == csv(1).first);
  CHECK(a.rfind("q,", 0) == 0);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) {
    CHECK(row.steps == cfg.steps * cfg.replicas);
    CHECK(row.replica_rates.size() == 3);
    double mean = (row.replica_rates[0] + row.replica_rates[1] + row.replica_rates[2]) / 3;
    CHECK(row.rate == doctest::Approx(mean));
    CHECK(row.ci.low <= row.rate);
    CHECK(row.rate <= row.ci.high);
    CHECK(row.kernel == Kernel::SwendsenWang);
  }
  cfg.seed = 8;
  auto other = sw_escape_experiment(cfg);
  std::ostringstream os;
  write_escape_csv(os, other.rows);
  CHECK(os.str() != a);
}

TEST_CASE("replica escape rates scatter like binomial draws") {
  // At beta well below the transition the chain leaves S often, so the 20
  // replica rates should spread like independent binomial proportions.
  auto cfg = small_config();
  cfg.beta = 1.2;
  cfg.replicas = 20;
  cfg.steps = 2000;
  cfg.workers = 4;
  auto row = sw_escape_experiment(cfg).rows.at(0);
  REQUIRE(row.escapes > 100);
  double var = 0;
  for (double r : row.replica_rates) var += (r - row.rate) * (r - row.rate);
  var /= 19;
  const double binom = row.rate * (1 - row.rate) / cfg.steps;
  // Successive trials are correlated, so allow a generous factor either way.
  CHECK(var < 30 * binom);
  CHECK(var > binom / 30);
}

TEST_CASE("heat bath persistence has no direct transitions") {
  auto cfg = small_config();
  cfg.kernel = Kernel::HeatBath;
  cfg.beta = 1.6;
  cfg.steps = 300;
  cfg.replicas = 2;
  auto rep = hb_persistence_experiment(cfg);
  CHECK(rep.direct_transition_checks > 0);
  CHECK(rep.direct_transition_violations == 0);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].kernel == Kernel::HeatBath);
  CHECK(rep.rows[0].alpha == doctest::Approx(0.125));
}

TEST_CASE("deletion tail check on a small torus") {
  auto cfg = small_config();
  cfg.steps = 3000;
  auto rep = deletion_tail_check(cfg, 4, 1.6, {0.25, 0.5});
  CHECK(rep.subset_violations == 0);
  CHECK(rep.lower_violations == 0);
  CHECK(rep.split_violations == 0);
  CHECK(rep.upper_violations <= rep.steps);
  CHECK(std::abs(rep.mean_deleted - rep.expected_deleted) < 5 * rep.deleted_sd_of_mean + 1e-9);
  REQUIRE(rep.tails.size() == 2);
  for (const auto& t : rep.tails) {
    CHECK(t.consistent_with_tail);
    CHECK(t.below_simple_bound);
  }
  CHECK(rep.ok() == (rep.upper_violations == 0));
}

TEST_CASE("additive cluster bound fails once a cluster splits") {
  // sigma constant on a 10-vertex path, A drops the middle edge: the cluster
  // has 10 vertices, the largest bond component 5, one edge deleted.
  Graph g = build_box(std::vector<int>{10});
  SpinConfig sigma(10, 0);
  EdgeConfig mono = mono_edges(g, sigma), a = mono;
  a.reset(4);
  REQUIRE(a.is_subset_of(mono));
  REQUIRE(log_es_weight(ModelParams(2, 1.0), g, sigma, a) != kLogZero);
  const std::size_t cs = largest_component(g, mono), ca = largest_component(g, a);
  const std::size_t deleted = mono.count() - a.count();
  CHECK(cs == 10);
  CHECK(ca == 5);
  CHECK(deleted == 1);
  CHECK(cs > ca + deleted + 1);
  CHECK(cs <= ca * (deleted + 1));
}

TEST_CASE("histogram summary on a small torus is exact") {
  auto cfg = small_config();
  cfg.sizes = {3};
  auto rows = mono_edge_histogram(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].exact);
  double total = 0;
  for (double p : rows[0].distribution) total += p;
  CHECK(total == doctest::Approx(1.0));
  auto dist = log_mono_edge_distribution(ModelParams(10, 1.4), build_torus({3, 2}));
  REQUIRE(dist.size() == rows[0].distribution.size());
  double ord = 0;
  for (std::size_t m = 0; m < dist.size(); ++m) {
    CHECK(rows[0].distribution[m] == doctest::Approx(std::exp(dist[m])));
    if (m >= 12) ord += std::exp(dist[m]);
  }
  CHECK(rows[0].m_ord == doctest::Approx(ord));
}

TEST_CASE("manifest and svg output") {
  RunManifest m;
  m.kind = "sw-escape";
  m.config_json = small_config().to_json();
  m.code_version = code_version();
  m.seeds = {7};
  m.row_json = {R"({"L":4})"};
  auto j = nlohmann::json::parse(m.to_json());
  CHECK(j["kind"] == "sw-escape");
  CHECK(j["seeds"][0] == 7);
  CHECK(j["config"]["q"] == 10);
  CHECK(j["rows"][0]["L"] == 4);
  CHECK(!code_version().empty());

  auto rep = sw_escape_experiment(small_config());
  std::ostringstream svg;
  write_escape_svg(svg, rep.rows, "test");
  CHECK(svg.str().find("<svg") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"pw", "--torus", "3,2", "--bogus"}).code == 2);
  auto pw = run_cli({"pw", "--box", "2,2"});
  CHECK(pw.code == 0);
  CHECK(pw.out.find("2") != std::string::npos);
  auto missing = run_cli({"experiment", "sw-escape", "--set", "q=10"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("L") != std::string::npos);
  CHECK(run_cli({"experiment", "sw-escape", "--set", "q=10", "--set", "L=2"}).code == 2);
  CHECK(run_cli({"experiment", "nonsense", "--set", "q=10", "--set", "L=4", "--set", "beta=1"}).code == 2);
  auto exact = run_cli({"exact", "--torus", "3,2", "--q", "10", "--beta", "1.4", "--census"});
  CHECK(exact.code == 0);
  CHECK(exact.out.find("nu_ord") != std::string::npos);
  auto z = run_cli({"exact", "--box", "2,2", "--q", "3", "--beta", "0.7"});
  CHECK(z.code == 0);
  CHECK(z.out.find("log_Z_fk") != std::string::npos);
  auto c = run_cli({"contours", "--torus", "3,2", "--config", "1"});
  CHECK(c.code == 0);

  auto dir = std::filesystem::temp_directory_path() / "pottsmix_cli_test";
  std::filesystem::remove_all(dir);
  auto e = run_cli({"experiment", "sw-escape", "--set", "q=10", "--set", "L=4", "--set", "beta=1.4", "--set",
                    "steps=300", "--set", "burn_in=20", "--set", "out=" + dir.string(), "--plot"});
  CHECK(e.code == 0);
  CHECK(std::filesystem::exists(dir / "sw-escape.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "sw-escape.svg"));
  std::ifstream mf(dir / "manifest.json");
  auto mj = nlohmann::json::parse(mf);
  CHECK(mj["kind"] == "sw-escape");
  std::filesystem::remove_all(dir);
}

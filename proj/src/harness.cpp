#include "pottsmix/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "pottsmix/errors.hpp"
#include "pottsmix/logsum.hpp"

namespace pottsmix {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

// Accepts "1/3" as well as decimals.
double parse_fraction(const std::string& key, const std::string& v) {
  auto slash = v.find('/');
  if (slash == std::string::npos) return parse_double(key, v);
  double den = parse_double(key, trim(v.substr(slash + 1)));
  if (den == 0) throw InvalidArgument("config key '" + key + "': zero denominator");
  return parse_double(key, trim(v.substr(0, slash))) / den;
}

}  // namespace

std::string beta_policy_name(BetaPolicy p) { return p == BetaPolicy::Fixed ? "fixed" : "pseudo-critical"; }

double ExperimentConfig::alpha_value() const {
  if (alpha) return *alpha;
  return kernel == Kernel::HeatBath ? 1.0 / (4.0 * d) : 1.0 / 3.0;
}

void ExperimentConfig::validate() const {
  if (q < 2) throw InvalidArgument("q must be at least 2");
  if (d < 1) throw InvalidArgument("d must be at least 1");
  double a = alpha_value();
  if (!(a > 0 && a < 0.5)) throw InvalidArgument("alpha must lie in (0, 1/2)");
  if (steps <= burn_in) throw InvalidArgument("steps must exceed burn_in");
  if (replicas < 1) throw InvalidArgument("replicas must be at least 1");
  if (beta_policy == BetaPolicy::Fixed && !(beta > 0)) throw InvalidArgument("fixed beta must be positive");
  if (!(beta_scale > 0)) throw InvalidArgument("beta_scale must be positive");
  if (!(scan_spacing > 0)) throw InvalidArgument("scan_spacing must be positive");
  for (int L : sizes)
    if (L < 3) throw DegenerateTorusError("torus side must be at least 3, got " + std::to_string(L));
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "q") {
    q = static_cast<int>(parse_uint(key, v));
  } else if (key == "d") {
    d = static_cast<int>(parse_uint(key, v));
  } else if (key == "beta") {
    if (v == "pseudo-critical") {
      beta_policy = BetaPolicy::PseudoCritical;
    } else {
      beta = parse_double(key, v);
      beta_policy = BetaPolicy::Fixed;
    }
  } else if (key == "beta_policy") {
    if (v == "fixed") beta_policy = BetaPolicy::Fixed;
    else if (v == "pseudo-critical") beta_policy = BetaPolicy::PseudoCritical;
    else throw InvalidArgument("beta_policy must be 'fixed' or 'pseudo-critical'");
  } else if (key == "beta_scale") {
    beta_scale = parse_double(key, v);
  } else if (key == "L" || key == "sizes") {
    sizes.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) sizes.push_back(static_cast<int>(parse_uint(key, trim(item))));
    if (sizes.empty()) throw InvalidArgument("config key 'L' needs at least one size");
  } else if (key == "alpha") {
    alpha = parse_fraction(key, v);
  } else if (key == "steps") {
    steps = parse_uint(key, v);
  } else if (key == "burn_in" || key == "burn-in") {
    burn_in = parse_uint(key, v);
  } else if (key == "replicas") {
    replicas = static_cast<int>(parse_uint(key, v));
  } else if (key == "seed") {
    seed = parse_uint(key, v);
  } else if (key == "output_dir" || key == "out") {
    output_dir = v;
  } else if (key == "kernel") {
    kernel = parse_kernel(v);
  } else if (key == "workers") {
    workers = static_cast<unsigned>(parse_uint(key, v));
  } else if (key == "excursion_cap") {
    excursion_cap = parse_uint(key, v);
  } else if (key == "scan_steps") {
    scan_steps = parse_uint(key, v);
  } else if (key == "scan_spacing") {
    scan_spacing = parse_double(key, v);
  } else {
    throw InvalidArgument("unknown config key '" + key + "'");
  }
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["q"] = q;
  j["d"] = d;
  j["beta_policy"] = beta_policy_name(beta_policy);
  if (beta_policy == BetaPolicy::Fixed) j["beta"] = beta;
  j["beta_scale"] = beta_scale;
  j["L"] = sizes;
  j["alpha"] = alpha_value();
  j["steps"] = steps;
  j["burn_in"] = burn_in;
  j["replicas"] = replicas;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["kernel"] = kernel_name(kernel);
  j["workers"] = workers;
  j["excursion_cap"] = excursion_cap;
  j["scan_steps"] = scan_steps;
  j["scan_spacing"] = scan_spacing;
  return j.dump();
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  return parse_config(in);
}

std::vector<std::string> missing_config_keys(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.q == 0) out.push_back("q");
  if (cfg.sizes.empty()) out.push_back("L");
  if (cfg.beta_policy == BetaPolicy::Fixed && cfg.beta == 0) out.push_back("beta");
  return out;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0, 1};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

AutocorrResult integrated_autocorrelation(const std::vector<double>& x, double c) {
  AutocorrResult r;
  const std::size_t n = x.size();
  if (n < 2) return r;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> dx(n);
  for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] - mean;
  double c0 = 0;
  for (double v : dx) c0 += v * v;
  c0 /= static_cast<double>(n);
  if (c0 <= 0) return r;
  double tau = 0.5;
  std::size_t t = 1;
  for (; t < n; ++t) {
    double ct = 0;
    for (std::size_t i = 0; i + t < n; ++i) ct += dx[i] * dx[i + t];
    ct /= static_cast<double>(n);
    tau += ct / c0;
    if (static_cast<double>(t) >= c * tau) break;
  }
  r.tau_int = tau;
  r.window = t;
  r.error = tau * std::sqrt(2.0 * (2.0 * static_cast<double>(t) + 1.0) / static_cast<double>(n));
  return r;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear_fit needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw InvalidArgument("linear_fit: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

double log_binomial_tail(std::size_t m, double p, std::size_t k) {
  if (k == 0) return 0.0;
  if (k > m || p <= 0) return kLogZero;
  if (p >= 1) return 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  LogSumExp acc;
  for (std::size_t j = k; j <= m; ++j) {
    double lchoose = std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0);
    acc.add(lchoose + static_cast<double>(j) * lp + static_cast<double>(m - j) * lq);
  }
  return std::min(0.0, acc.value());
}

std::size_t ceil_fraction(double fraction, std::size_t count) {
  double x = fraction * static_cast<double>(count);
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

std::size_t ordered_threshold(const TorusSpec& spec, double alpha) {
  return ceil_fraction(1.0 - alpha, static_cast<std::size_t>(spec.dim) * spec.volume());
}

std::size_t cluster_threshold(const TorusSpec& spec, double alpha) { return ceil_fraction(1.0 - alpha, spec.volume()); }

int dominant_cluster_color(const Graph& g, const SpinConfig& sigma, std::size_t threshold, UnionFind& uf) {
  uf.reset(g.vertex_count());
  for (const auto& e : g.edges())
    if (sigma[e.u] == sigma[e.v]) uf.unite(e.u, e.v);
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (uf.find(v) == v && uf.component_size(v) >= threshold) return sigma[v];
  return -1;
}

std::size_t count_mono_edges(const Graph& g, const SpinConfig& sigma) {
  std::size_t m = 0;
  for (const auto& e : g.edges()) m += sigma[e.u] == sigma[e.v];
  return m;
}

void write_escape_csv(std::ostream& os, const std::vector<EscapeRow>& rows) {
  os << "q,d,L,beta,alpha,kernel,steps,escapes,rate,ci_low,ci_high,seed\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.q << ',' << r.d << ',' << r.L << ',' << r.beta << ',' << r.alpha << ',' << kernel_name(r.kernel) << ','
       << r.steps << ',' << r.escapes << ',' << r.rate << ',' << r.ci.low << ',' << r.ci.high << ',' << r.seed
       << '\n';
}

void write_escape_svg(std::ostream& os, const std::vector<EscapeRow>& rows, const std::string& title) {
  constexpr double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 50;
  std::vector<const EscapeRow*> pts;
  for (const auto& r : rows)
    if (r.rate > 0) pts.push_back(&r);
  double xmin = 0, xmax = 1, ymin = -1, ymax = 0;
  if (!pts.empty()) {
    xmin = xmax = pts[0]->L;
    ymin = ymax = std::log10(pts[0]->rate);
    for (auto* r : pts) {
      xmin = std::min<double>(xmin, r->L);
      xmax = std::max<double>(xmax, r->L);
      ymin = std::min(ymin, std::log10(std::max(r->ci.low, r->rate * 1e-3)));
      ymax = std::max(ymax, std::log10(r->ci.high));
    }
  }
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax <= ymin) ymax = ymin + 1;
  if (xmax <= xmin) xmax = xmin + 1;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * (H - top - bottom); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  for (double y = ymin; y <= ymax + 1e-9; y += 1)
    os << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">1e"
       << static_cast<int>(y) << "</text>\n";
  for (auto* r : pts)
    os << "<text x=\"" << sx(r->L) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << r->L << "</text>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">L</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\">escape rate</text>\n";
  if (!pts.empty()) {
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (auto* r : pts) os << sx(r->L) << ',' << sy(std::log10(r->rate)) << ' ';
    os << "\"/>\n";
    for (auto* r : pts) {
      double x = sx(r->L);
      os << "<line x1=\"" << x << "\" x2=\"" << x << "\" y1=\"" << sy(std::log10(std::max(r->ci.low, 1e-300)))
         << "\" y2=\"" << sy(std::log10(r->ci.high)) << "\" stroke=\"gray\"/>\n";
      os << "<circle cx=\"" << x << "\" cy=\"" << sy(std::log10(r->rate)) << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
  }
  os << "</svg>\n";
}

std::string RunManifest::to_json() const {
  json j;
  j["kind"] = kind;
  j["config"] = json::parse(config_json);
  j["code_version"] = code_version;
  j["seeds"] = seeds;
  j["wall_seconds"] = wall_seconds;
  j["csv_schema"] = "escape/v1: q,d,L,beta,alpha,kernel,steps,escapes,rate,ci_low,ci_high,seed";
  json rows = json::array();
  for (const auto& r : row_json) rows.push_back(json::parse(r));
  j["rows"] = rows;
  return j.dump(2);
}

std::string code_version() { return POTTSMIX_VERSION; }

}  // namespace pottsmix

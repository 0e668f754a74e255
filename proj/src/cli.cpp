#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "pottsmix/errors.hpp"
#include "pottsmix/harness.hpp"
#include "pottsmix/pwidth.hpp"
#include "pottsmix/spectral.hpp"

namespace pottsmix {

namespace {

using nlohmann::json;

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("bad integer list for ") + what + ": '" + s + "'");
    }
  }
  if (out.empty()) throw InvalidArgument(std::string("empty list for ") + what);
  return out;
}

TorusSpec parse_torus(const std::string& s) {
  auto v = parse_int_list(s, "--torus");
  if (v.size() != 2) throw InvalidArgument("--torus expects L,d");
  return {v[0], v[1]};
}

struct GraphSource {
  std::string graph_file;
  std::string torus;
  std::string box;
  std::string tree;

  void add_options(CLI::App* app, bool with_tree) {
    app->add_option("--graph", graph_file, "edge-list file (\"# vertices N\" header, one \"u v\" per line)");
    app->add_option("--torus", torus, "periodic lattice T_{L,d} as L,d");
    app->add_option("--box", box, "box with the given side lengths, e.g. 3,4");
    if (with_tree) app->add_option("--tree", tree, "tree as a parent list, root marked -1, e.g. -1,0,0,1");
  }

  int given() const { return !graph_file.empty() + !torus.empty() + !box.empty() + !tree.empty(); }

  std::pair<std::string, Graph> load() const {
    if (given() != 1) throw InvalidArgument("give exactly one of --graph, --torus, --box" + std::string(", --tree"));
    if (!graph_file.empty()) {
      std::ifstream in(graph_file);
      if (!in) throw InvalidArgument("cannot open graph file " + graph_file);
      return {graph_file, Graph::from_text(in)};
    }
    if (!torus.empty()) return {"torus " + torus, build_torus(parse_torus(torus))};
    if (!box.empty()) {
      auto sides = parse_int_list(box, "--box");
      return {"box " + box, build_box(sides)};
    }
    auto parents = parse_int_list(tree, "--tree");
    return {"tree", build_tree(parents).graph};
  }
};

void print_usage(std::ostream& os, const CLI::App& app) { os << app.help(); }

int cmd_exact(const GraphSource& src, int q, double beta, bool census, bool spectral, bool bounds,
              const std::string& kernel_str, bool pseudo) {
  if (census || pseudo) {
    if (src.torus.empty()) throw InvalidArgument("--census and --pseudo-critical need --torus");
    TorusSpec spec = parse_torus(src.torus);
    const auto& c = cached_census(spec);
    if (pseudo) {
      auto r = pseudo_critical_beta_census(c, q);
      std::cout << std::setprecision(12) << "pseudo_critical_beta " << r.beta << "\n";
      if (!census) return 0;
    }
    auto s = omega_sums(c, ModelParams(q, beta));
    std::cout << std::setprecision(12)
              << "L,d,q,beta,log_Z,log_Z_ord,log_Z_dis,log_Z_tun,nu_ord,nu_dis,nu_tun,n_ord,n_dis,n_tun\n"
              << spec.side << ',' << spec.dim << ',' << q << ',' << beta << ',' << s.log_z << ',' << s.log_z_ord
              << ',' << s.log_z_dis << ',' << s.log_z_tun << ',' << s.nu_ord() << ',' << s.nu_dis() << ','
              << s.nu_tun() << ',' << c.class_counts[0] << ',' << c.class_counts[1] << ',' << c.class_counts[2]
              << '\n';
    return 0;
  }
  auto [name, g] = src.load();
  ModelParams m(q, beta);
  if (spectral || bounds) {
    Kernel k = parse_kernel(kernel_str);
    auto tm = kernel_matrix(k, m, g);
    auto mu = gibbs_distribution(m, g);
    auto rep = verify_bounds(tm.P, mu);
    std::cout << analysis_json(name, m, k, rep) << '\n';
    return rep.ok() ? 0 : 1;
  }
  std::cout << std::setprecision(15) << "log_Z_gibbs " << log_partition_function_exact(m, g) << '\n'
            << "log_Z_fk " << log_fk_sum_exact(m, g) << '\n'
            << "log_Z_es " << log_es_sum_exact(m, g) << '\n';
  return 0;
}

int cmd_simulate(const GraphSource& src, int q, double beta, const std::string& kernel_str, std::uint64_t steps,
                 std::uint64_t seed, const std::string& init, double alpha, const std::string& out) {
  auto [name, g] = src.load();
  ModelParams m(q, beta);
  Kernel k = parse_kernel(kernel_str);
  const std::uint64_t stream = stream_id("simulate/" + kernel_name(k));
  ChainState st{SpinConfig(g.vertex_count(), 0), 0, Philox(seed, stream)};
  if (init == "random") {
    for (auto& c : st.sigma.colors) c = static_cast<std::uint16_t>(st.rng.below(q));
  } else if (init != "const") {
    throw InvalidArgument("--init must be 'const' or 'random'");
  }
  const std::size_t thr = ceil_fraction(1.0 - alpha, g.edge_count());
  auto obs = run_trajectory(m, g, k, st, steps, [thr](const SpinConfig&, const Observation& o) {
    return o.mono_edges >= thr;
  });
  if (out.empty()) {
    write_trajectory_csv(std::cout, obs, stream);
  } else {
    std::ofstream os(out);
    if (!os) throw InvalidArgument("cannot write " + out);
    write_trajectory_csv(os, obs, stream);
  }
  return 0;
}

int cmd_pw(const GraphSource& src, bool constructive) {
  HierarchicalPartition part;
  std::size_t width = 0;
  if (constructive) {
    if (!src.box.empty()) {
      part = pw_constructive_box(parse_int_list(src.box, "--box"));
    } else if (!src.torus.empty()) {
      part = pw_constructive_torus(parse_torus(src.torus));
    } else if (!src.tree.empty()) {
      auto parents = parse_int_list(src.tree, "--tree");
      part = pw_constructive_tree(build_tree(parents));
    } else {
      throw InvalidArgument("--constructive needs --box, --torus or --tree");
    }
    width = part.sep();
  } else {
    auto [name, g] = src.load();
    auto r = pw_exact(g);
    width = r.width;
    part = std::move(r.witness);
  }
  std::cout << "PW " << width << '\n' << part.to_text();
  return 0;
}

int cmd_contours(const std::string& torus, const std::string& bonds, bool census, bool pieces) {
  if (torus.empty()) throw InvalidArgument("contours needs --torus");
  TorusSpec spec = parse_torus(torus);
  ContourGeometry geo(spec);
  if (census) {
    const auto& c = cached_census(spec);
    json j;
    j["torus"] = {{"L", spec.side}, {"d", spec.dim}};
    j["configurations"] = c.total();
    j["ord"] = c.class_counts[0];
    j["dis"] = c.class_counts[1];
    j["tun"] = c.class_counts[2];
    j["ext_rule"] = {{"flat_interface", c.rule_counts[0]}, {"larger_volume", c.rule_counts[1]},
                     {"origin", c.rule_counts[2]}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  if (pieces) {
    auto pc = piece_count_census(geo);
    json j;
    j["contours_by_norm"] = pc.contours_by_norm;
    j["interfaces_by_norm"] = pc.interfaces_by_norm;
    j["contours_around_origin_by_norm"] = pc.contours_around_origin_by_norm;
    j["min_contour_norm"] = pc.min_contour_norm;
    j["min_interface_norm"] = pc.min_interface_norm;
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  const std::size_t ne = geo.torus().graph().edge_count();
  EdgeConfig a = bonds.empty() ? EdgeConfig(ne) : BitVector::from_hex(bonds, ne);
  std::cout << decomposition_json(geo, classify(geo, a)) << '\n';
  return 0;
}

json pseudo_json(const PseudoCriticalResult& r) {
  json scan = json::array();
  for (const auto& p : r.scan) scan.push_back({p.beta, p.ordered_fraction});
  return {{"beta", r.beta},
          {"method", r.method},
          {"bracket", {r.bracket_low, r.bracket_high}},
          {"monotone", r.monotone},
          {"overlap_discrepancy", r.overlap_discrepancy},
          {"overlap_consistent", r.overlap_consistent},
          {"scan", scan}};
}

json escape_row_json(const EscapeRow& r) {
  return {{"q", r.q},         {"d", r.d},           {"L", r.L},
          {"beta", r.beta},   {"alpha", r.alpha},   {"kernel", kernel_name(r.kernel)},
          {"steps", r.steps}, {"escapes", r.escapes}, {"rate", r.rate},
          {"ci_low", r.ci.low}, {"ci_high", r.ci.high}, {"seed", r.seed},
          {"low_confidence", r.low_confidence}, {"restarts", r.restarts}, {"replica_rates", r.replica_rates}};
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
}

int cmd_experiment(const std::string& kind, const std::string& config_file, const std::vector<std::string>& sets,
                   bool plot, const CLI::App& usage) {
  ExperimentConfig cfg;
  if (!config_file.empty()) cfg = parse_config_file(config_file);
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto missing = missing_config_keys(cfg);
  if (!missing.empty()) {
    std::cerr << "missing config keys:";
    for (const auto& k : missing) std::cerr << ' ' << k;
    std::cerr << "\n";
    print_usage(std::cerr, usage);
    return 2;
  }
  cfg.validate();

  auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.kind = kind;
  manifest.code_version = code_version();
  manifest.seeds = {cfg.seed};
  std::ostringstream csv;
  std::vector<EscapeRow> plot_rows;

  if (kind == "sw-escape" || kind == "hb-persistence") {
    auto rep = kind == "sw-escape" ? sw_escape_experiment(cfg) : hb_persistence_experiment(cfg);
    write_escape_csv(csv, rep.rows);
    for (const auto& r : rep.rows) manifest.row_json.push_back(escape_row_json(r).dump());
    for (const auto& b : rep.beta_sources) manifest.row_json.push_back(json{{"pseudo_critical", pseudo_json(b)}}.dump());
    if (kind == "hb-persistence")
      manifest.row_json.push_back(json{{"direct_transition_checks", rep.direct_transition_checks},
                                       {"direct_transition_violations", rep.direct_transition_violations}}
                                      .dump());
    for (const auto& r : rep.rows)
      if (r.low_confidence)
        std::cerr << "warning: L=" << r.L << " has only " << r.escapes << " escape events (low confidence)\n";
    plot_rows = rep.rows;
  } else if (kind == "histogram") {
    csv << "L,beta,m,probability\n" << std::setprecision(10);
    for (const auto& row : mono_edge_histogram(cfg)) {
      for (std::size_t m = 0; m < row.distribution.size(); ++m)
        csv << row.L << ',' << row.beta << ',' << m << ',' << row.distribution[m] << '\n';
      manifest.row_json.push_back(
          json{{"L", row.L}, {"beta", row.beta}, {"m_mid", row.m_mid}, {"m_ord", row.m_ord}, {"exact", row.exact}}
              .dump());
    }
  } else if (kind == "autocorr") {
    csv << "L,beta,tau_int,window,error,samples\n" << std::setprecision(10);
    for (const auto& r : autocorrelation_experiment(cfg)) {
      csv << r.L << ',' << r.beta << ',' << r.tau.tau_int << ',' << r.tau.window << ',' << r.tau.error << ','
          << r.samples << '\n';
      manifest.row_json.push_back(json{{"L", r.L}, {"beta", r.beta}, {"tau_int", r.tau.tau_int}}.dump());
    }
  } else if (kind == "deletion-tail") {
    csv << "L,beta,alpha_tilde,threshold,events,frequency,log_simple_bound,mean_binomial_tail\n"
        << std::setprecision(10);
    for (int L : cfg.sizes) {
      auto rep = deletion_tail_check(cfg, L, experiment_beta(cfg, L), {0.25, 0.5, 1.0});
      for (const auto& t : rep.tails)
        csv << L << ',' << rep.beta << ',' << t.alpha_tilde << ',' << t.threshold << ',' << t.events << ','
            << t.frequency << ',' << t.log_simple_bound << ',' << t.mean_binomial_tail << '\n';
      manifest.row_json.push_back(json{{"L", L},
                                       {"ok", rep.ok()},
                                       {"subset_violations", rep.subset_violations},
                                       {"lower_violations", rep.lower_violations},
                                       {"upper_violations", rep.upper_violations},
                                       {"split_violations", rep.split_violations},
                                       {"mean_deleted", rep.mean_deleted},
                                       {"expected_deleted", rep.expected_deleted}}
                                      .dump());
    }
  } else if (kind == "pseudo-critical") {
    csv << "q,d,L,beta,method\n" << std::setprecision(12);
    for (int L : cfg.sizes) {
      PseudoCriticalResult r;
      experiment_beta(cfg, L, &r);
      csv << cfg.q << ',' << cfg.d << ',' << L << ',' << r.beta << ',' << r.method << '\n';
      manifest.row_json.push_back(pseudo_json(r).dump());
    }
  } else {
    throw InvalidArgument("unknown experiment '" + kind +
                          "' (sw-escape, hb-persistence, histogram, autocorr, deletion-tail, pseudo-critical)");
  }

  manifest.config_json = cfg.to_json();
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << csv.str();
  if (!cfg.output_dir.empty()) {
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / (kind + ".csv"), csv.str());
    write_text(dir / "manifest.json", manifest.to_json());
    if (plot && !plot_rows.empty()) {
      std::ostringstream svg;
      write_escape_svg(svg, plot_rows, kind + " (q=" + std::to_string(cfg.q) + ")");
      write_text(dir / (kind + ".svg"), svg.str());
    }
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Potts model mixing: exact analysis, sampling, partition width and contours"};
  app.name("pottsmix");
  app.require_subcommand(0, 1);

  GraphSource exact_src, sim_src, pw_src;
  int q = 2;
  double beta = 1.0;
  std::string kernel = "sw";
  bool census = false, spectral = false, bounds = false, pseudo = false;
  auto* exact = app.add_subcommand("exact", "partition functions, spectral analysis, bound checks");
  exact_src.add_options(exact, false);
  exact->add_option("--q", q, "number of colors")->required();
  exact->add_option("--beta", beta, "inverse temperature");
  exact->add_option("--kernel", kernel, "hb or sw");
  exact->add_flag("--census", census, "contour census decomposition of Z (torus only)");
  exact->add_flag("--pseudo-critical", pseudo, "census pseudo-critical beta (torus only)");
  exact->add_flag("--spectral", spectral, "mixing time, inverse gap, conductance as JSON");
  exact->add_flag("--bounds", bounds, "same as --spectral; exit 1 if a bound fails");

  std::uint64_t steps = 1000, seed = 1;
  std::string init = "const", out;
  double alpha = 1.0 / 3.0;
  auto* simulate = app.add_subcommand("simulate", "write a trajectory CSV");
  sim_src.add_options(simulate, false);
  simulate->add_option("--q", q)->required();
  simulate->add_option("--beta", beta)->required();
  simulate->add_option("--kernel", kernel, "hb or sw");
  simulate->add_option("--steps", steps);
  simulate->add_option("--seed", seed);
  simulate->add_option("--init", init, "const or random");
  simulate->add_option("--alpha", alpha, "S = {|E(sigma)| >= (1-alpha)|E|}");
  simulate->add_option("--out", out, "CSV path (default stdout)");

  bool constructive = false;
  auto* pw = app.add_subcommand("pw", "partition width and a witness partition");
  pw_src.add_options(pw, true);
  pw->add_flag("--constructive", constructive, "explicit box/torus/tree construction instead of the exact DP");

  std::string torus, bonds_hex;
  bool pieces = false, contour_census = false;
  auto* contours = app.add_subcommand("contours", "contour decomposition dump or census");
  contours->add_option("--torus", torus, "L,d")->required();
  contours->add_option("--bonds,--config", bonds_hex, "bond configuration as hex (edge 0 = least significant bit)");
  contours->add_flag("--census", contour_census, "class counts over all bond configurations");
  contours->add_flag("--pieces", pieces, "distinct contours and interfaces by norm");

  std::string kind, config_file;
  std::vector<std::string> sets;
  bool plot = false;
  auto* experiment = app.add_subcommand("experiment", "escape-rate, histogram and coupling experiments");
  experiment->add_option("kind", kind, "sw-escape | hb-persistence | histogram | autocorr | deletion-tail | pseudo-critical")
      ->required();
  experiment->add_option("--config", config_file, "key = value file");
  experiment->add_option("--set", sets, "override, key=value (repeatable)");
  experiment->add_flag("--plot", plot, "also write an SVG of log-rate against L");

  if (argc <= 1) {
    print_usage(std::cerr, app);
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    print_usage(std::cerr, app);
    return 2;
  }

  try {
    if (*exact) return cmd_exact(exact_src, q, beta, census, spectral, bounds, kernel, pseudo);
    if (*simulate) return cmd_simulate(sim_src, q, beta, kernel, steps, seed, init, alpha, out);
    if (*pw) return cmd_pw(pw_src, constructive);
    if (*contours) return cmd_contours(torus, bonds_hex, contour_census, pieces);
    if (*experiment) return cmd_experiment(kind, config_file, sets, plot, *experiment);
    print_usage(std::cerr, app);
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pottsmix

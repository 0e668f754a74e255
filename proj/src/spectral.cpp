#include "pottsmix/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "pottsmix/errors.hpp"

namespace pottsmix {

namespace {

bool all_reachable(const Eigen::MatrixXd& P, bool forward) {
  const Eigen::Index n = P.rows();
  std::vector<char> seen(n, 0);
  std::vector<Eigen::Index> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    auto x = stack.back();
    stack.pop_back();
    for (Eigen::Index y = 0; y < n; ++y) {
      double w = forward ? P(x, y) : P(y, x);
      if (w > 0 && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

void require_square(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols() || P.rows() == 0) throw InvalidArgument("transition matrix must be square and nonempty");
}

}  // namespace

Eigen::VectorXd stationary(const Eigen::MatrixXd& P) {
  require_square(P);
  if (!all_reachable(P, true) || !all_reachable(P, false))
    throw ReducibleChainError("transition matrix is reducible");
  const Eigen::Index n = P.rows();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::VectorXd mu = A.partialPivLu().solve(b);
  // One step of iterative refinement keeps the residual at rounding level.
  mu += A.partialPivLu().solve(b - A * mu);
  return mu;
}

double detailed_balance_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu) {
  Eigen::MatrixXd F = mu.asDiagonal() * P;
  return (F - F.transpose()).cwiseAbs().maxCoeff();
}

double stationarity_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu) {
  return (mu.transpose() * P - mu.transpose()).cwiseAbs().maxCoeff();
}

Eigen::VectorXd reversible_spectrum(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu) {
  require_square(P);
  if (detailed_balance_error(P, mu) > 1e-10) throw NonReversibleError("chain is not reversible w.r.t. mu");
  Eigen::VectorXd s = mu.cwiseSqrt();
  Eigen::VectorXd inv = s.cwiseInverse();
  Eigen::MatrixXd S = s.asDiagonal() * P * inv.asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = solver.eigenvalues().reverse();
  return ev;
}

double inverse_gap(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu) {
  if (P.rows() < 2) throw InvalidArgument("inverse gap needs at least two states");
  auto ev = reversible_spectrum(P, mu);
  return 1.0 / (1.0 - ev[1]);
}

double worst_tv_distance(const Eigen::MatrixXd& Pt, const Eigen::VectorXd& mu) {
  double worst = 0;
  for (Eigen::Index x = 0; x < Pt.rows(); ++x)
    worst = std::max(worst, 0.5 * (Pt.row(x).transpose() - mu).cwiseAbs().sum());
  return worst;
}

long mixing_time(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu, long cap) {
  require_square(P);
  const double threshold = 1.0 / (2.0 * std::exp(1.0));
  const Eigen::Index n = P.rows();
  if (worst_tv_distance(Eigen::MatrixXd::Identity(n, n), mu) <= threshold) return 0;
  // powers[j] = P^{2^j}; stop once the newest power has mixed.
  std::vector<Eigen::MatrixXd> powers{P};
  double last = worst_tv_distance(P, mu);
  while (last > threshold) {
    long next = 1L << powers.size();
    if (next / 2 >= cap) throw MixingCapExceeded(cap, last);
    Eigen::MatrixXd sq = powers.back() * powers.back();
    powers.push_back(std::move(sq));
    last = worst_tv_distance(powers.back(), mu);
  }
  // Largest t with d(t) > threshold, built greedily from the high bit down.
  Eigen::MatrixXd cur = Eigen::MatrixXd::Identity(n, n);
  long t = 0;
  for (std::size_t j = powers.size() - 1; j-- > 0;) {
    Eigen::MatrixXd cand = cur * powers[j];
    if (worst_tv_distance(cand, mu) > threshold) {
      cur = std::move(cand);
      t += 1L << j;
    }
  }
  if (t + 1 > cap) throw MixingCapExceeded(cap, worst_tv_distance(cur, mu));
  return t + 1;
}

double conductance_of_set(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu, const std::vector<bool>& S) {
  const Eigen::Index n = P.rows();
  if (static_cast<Eigen::Index>(S.size()) != n) throw InvalidArgument("set indicator has wrong length");
  double mu_s = 0, flow = 0;
  for (Eigen::Index x = 0; x < n; ++x) {
    if (!S[x]) continue;
    mu_s += mu[x];
    for (Eigen::Index y = 0; y < n; ++y)
      if (!S[y]) flow += mu[x] * P(x, y);
  }
  std::size_t members = std::count(S.begin(), S.end(), true);
  if (members == 0 || members == S.size()) throw InvalidArgument("conductance needs a proper nonempty set");
  return flow / (mu_s * (1.0 - mu_s));
}

ConductanceResult conductance(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu, std::size_t exact_limit) {
  require_square(P);
  const std::size_t n = static_cast<std::size_t>(P.rows());
  if (n < 2) throw InvalidArgument("conductance needs at least two states");
  ConductanceResult best;
  best.value = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd F = mu.asDiagonal() * P;

  if (n <= exact_limit) {
    // Since Q(S,S^c) = Q(S^c,S) for stationary mu, scanning sets that avoid
    // the last state covers every unordered pair {S, S^c}.
    const std::size_t m = n - 1;
    std::vector<bool> in(n, false);
    double q_flow = 0, mu_s = 0;
    std::uint64_t best_code = 0;
    for (std::uint64_t i = 1; i < (std::uint64_t{1} << m); ++i) {
      const std::size_t j = std::countr_zero(i);
      double into_j = 0, out_of_j = 0;
      for (std::size_t x = 0; x < n; ++x) {
        if (x == j) continue;
        if (in[x]) into_j += F(x, j);
        else out_of_j += F(j, x);
      }
      if (!in[j]) {
        q_flow += out_of_j - into_j;
        mu_s += mu[j];
      } else {
        q_flow += into_j - out_of_j;
        mu_s -= mu[j];
      }
      in[j] = !in[j];
      double phi = q_flow / (mu_s * (1.0 - mu_s));
      if (phi < best.value) {
        best.value = phi;
        best_code = i ^ (i >> 1);
      }
    }
    best.set.assign(n, false);
    for (std::size_t x = 0; x < m; ++x) best.set[x] = (best_code >> x) & 1u;
    best.value = conductance_of_set(P, mu, best.set);
    best.exact = true;
    return best;
  }

  // Sweep over prefixes of the states ordered by the second eigenvector.
  Eigen::VectorXd s = mu.cwiseSqrt();
  Eigen::MatrixXd S = s.asDiagonal() * P * s.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  Eigen::VectorXd f = solver.eigenvectors().col(n - 2).cwiseQuotient(s);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
  std::vector<bool> in(n, false);
  double q_flow = 0, mu_s = 0;
  std::size_t best_k = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t j = order[k];
    double into_j = 0, out_of_j = 0;
    for (std::size_t x = 0; x < n; ++x) {
      if (x == j) continue;
      if (in[x]) into_j += F(x, j);
      else out_of_j += F(j, x);
    }
    q_flow += out_of_j - into_j;
    mu_s += mu[j];
    in[j] = true;
    double phi = q_flow / (mu_s * (1.0 - mu_s));
    if (phi < best.value) {
      best.value = phi;
      best_k = k + 1;
    }
  }
  best.set.assign(n, false);
  for (std::size_t k = 0; k < best_k; ++k) best.set[order[k]] = true;
  best.value = conductance_of_set(P, mu, best.set);
  best.exact = false;
  return best;
}

Eigen::MatrixXd product_chain(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& P2) {
  const Eigen::Index n1 = P1.rows(), n2 = P2.rows();
  Eigen::MatrixXd R(n1 * n2, n1 * n2);
  for (Eigen::Index a = 0; a < n1; ++a)
    for (Eigen::Index b = 0; b < n1; ++b) R.block(a * n2, b * n2, n2, n2) = P1(a, b) * P2;
  return R;
}

Eigen::VectorXd product_distribution(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2) {
  Eigen::VectorXd r(mu1.size() * mu2.size());
  for (Eigen::Index a = 0; a < mu1.size(); ++a) r.segment(a * mu2.size(), mu2.size()) = mu1[a] * mu2;
  return r;
}

BoundsReport verify_bounds(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu) {
  BoundsReport r;
  r.tau = mixing_time(P, mu);
  r.mu_min = mu.minCoeff();
  r.inv_gap = inverse_gap(P, mu);
  r.inv_gap_sq = inverse_gap(P * P, mu);
  r.gap_rhs = r.inv_gap_sq * (2.0 - std::log(r.mu_min));
  r.gap_ok = static_cast<double>(r.tau) <= r.gap_rhs;
  auto c = conductance(P, mu);
  r.conductance = c.value;
  r.conductance_exact = c.exact;
  const double factor = (std::exp(1.0) - 1.0) / std::exp(1.0);
  r.cond_lhs = factor / c.value;
  r.cond_ok = static_cast<double>(r.tau) >= r.cond_lhs;
  r.cond_certified = c.exact ? r.cond_ok : static_cast<double>(r.tau) >= 2.0 * factor * r.inv_gap;
  return r;
}

SubgraphReport verify_subgraph_lemma(const ModelParams& m, const Graph& g, const std::vector<std::uint32_t>& e0,
                                     const EnumerationBudget& budget) {
  Graph g0 = spanning_subgraph(g, e0);
  auto pg = sw_matrix(m, g, budget);
  auto pg0 = sw_matrix(m, g0, budget);
  auto mu = gibbs_distribution(m, g, budget);
  auto mu0 = gibbs_distribution(m, g0, budget);
  SubgraphReport r;
  r.lhs = inverse_gap(pg.P * pg.P, mu);
  const double removed = static_cast<double>(g.edge_count() - g0.edge_count());
  r.rhs = inverse_gap(pg0.P * pg0.P, mu0) * std::exp(5.0 * m.beta * removed);
  r.ok = r.lhs <= r.rhs * (1.0 + 1e-12);
  return r;
}

std::string analysis_json(const std::string& graph_name, const ModelParams& m, Kernel kernel,
                          const BoundsReport& report) {
  nlohmann::json j;
  j["graph"] = graph_name;
  j["q"] = m.q;
  j["beta"] = m.beta;
  j["kernel"] = kernel_name(kernel);
  j["tau"] = report.tau;
  j["inv_gap"] = report.inv_gap;
  j["conductance"] = report.conductance;
  j["conductance_exact"] = report.conductance_exact;
  // lhs/rhs/ok describe the gap bound tau <= rhs; the conductance lower bound
  // rides along in its own fields.
  j["bounds"] = {{"lhs", report.tau},
                 {"rhs", report.gap_rhs},
                 {"ok", report.ok()},
                 {"gap_ok", report.gap_ok},
                 {"conductance_lhs", report.cond_lhs},
                 {"conductance_ok", report.cond_ok},
                 {"conductance_certified", report.cond_certified}};
  return j.dump(2);
}

}  // namespace pottsmix

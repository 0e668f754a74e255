#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pottsmix/dynamics.hpp"
#include "pottsmix/lattice.hpp"
#include "pottsmix/potts.hpp"

namespace pottsmix {

// Solves mu P = mu, sum mu = 1. Throws ReducibleChainError when P is not
// irreducible (checked by forward and backward reachability from state 0).
Eigen::VectorXd stationary(const Eigen::MatrixXd& P);

double detailed_balance_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu);
double stationarity_error(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu);

// Eigenvalues of a reversible P (descending), from D^{1/2} P D^{-1/2}.
Eigen::VectorXd reversible_spectrum(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu);

// 1 / (1 - lambda_2). Throws NonReversibleError if detailed balance fails
// beyond 1e-10.
double inverse_gap(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu);

// Worst-case total variation distance max_x (1/2)|Pt(x,.) - mu|_1.
double worst_tv_distance(const Eigen::MatrixXd& Pt, const Eigen::VectorXd& mu);

// Least t with worst_tv_distance(P^t) <= 1/(2e). Uses repeated squaring and
// then bisection, which is exact because d(t) is non-increasing.
long mixing_time(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu, long cap = 1000000);

// Phi_S = Q(S, S^c) / (mu(S) mu(S^c)).
double conductance_of_set(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu, const std::vector<bool>& S);

struct ConductanceResult {
  double value = 0;       // Phi(P) when exact, else Phi_S of the best sweep set
  std::vector<bool> set;  // minimising (or best found) set
  bool exact = false;
};

// Exact minimum by a Gray-code scan over all subsets when |Omega| <= exact_limit;
// otherwise the best sweep cut along the second eigenvector, an upper bound.
ConductanceResult conductance(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu, std::size_t exact_limit = 22);

// Kronecker product: state (x, y) has index x * |Omega_2| + y.
Eigen::MatrixXd product_chain(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& P2);
Eigen::VectorXd product_distribution(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2);

struct BoundsReport {
  long tau = 0;
  double mu_min = 0;
  double inv_gap = 0;      // inverse gap of P
  double inv_gap_sq = 0;   // inverse gap of P^2
  double gap_rhs = 0;      // inv_gap_sq * log(e^2 / mu_min)
  bool gap_ok = false;     // tau <= gap_rhs
  double conductance = 0;
  bool conductance_exact = false;
  double cond_lhs = 0;     // (e-1)/e / Phi
  bool cond_ok = false;    // tau >= cond_lhs
  // Cheeger gives Phi >= gap/2, so tau >= 2(e-1)/(e gap) certifies the lower
  // bound even when Phi itself was not computed exactly.
  bool cond_certified = false;
  double gap_slack() const { return gap_rhs - static_cast<double>(tau); }
  double cond_slack() const { return static_cast<double>(tau) - cond_lhs; }
  bool ok() const { return gap_ok && cond_ok; }
};

BoundsReport verify_bounds(const Eigen::MatrixXd& P, const Eigen::VectorXd& mu);

struct SubgraphReport {
  double lhs = 0;  // inverse gap of (P_G^SW)^2
  double rhs = 0;  // inverse gap of (P_G0^SW)^2 times e^{5 beta |E \ E0|}
  bool ok = false;
};

SubgraphReport verify_subgraph_lemma(const ModelParams& m, const Graph& g, const std::vector<std::uint32_t>& e0,
                                     const EnumerationBudget& budget = {});

std::string analysis_json(const std::string& graph_name, const ModelParams& m, Kernel kernel,
                          const BoundsReport& report);

}  // namespace pottsmix

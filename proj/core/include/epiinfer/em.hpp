#pragma once

#include "epiinfer/complete_mle.hpp"

#include <string>
#include <vector>

namespace epi {

// y_0..y_n (0-based labels). dt holds either one interval for every step or
// one per step.
struct DiscreteChainObs {
  int n_states = 0;
  std::vector<int> states;
  std::vector<double> dt;

  int n() const { return static_cast<int>(states.size()) - 1; }
  double step(int i) const { return dt.size() == 1 ? dt[0] : dt[i]; }
  double total_time() const;
  void validate() const;
};

// Observe a simulated path at t = 0, dt, ..., n*dt.
DiscreteChainObs sample_ctmc(const CtmcPath& path, double dt, int n);

// Throws unless off-diagonals are >= 0 and rows sum to zero within tol.
void check_qmatrix(const Mat& Q, double tol = 1e-12);

// exp(tQ) with negative round-off clipped and rows renormalized.
Mat transition_matrix(const Mat& Q, double t);

// int_0^t exp(sQ) e_k e_l^T exp((t-s)Q) ds, read off the upper-right block
// of exp(t [[Q, e_k e_l^T], [0, Q]]).
Mat van_loan_integrals(const Mat& Q, double t, int k, int l);

// Expected sufficient statistics given the discrete observations:
// N(k,l) = E(N_kl | Y), R(k) = E(R_k | Y).
TransitionCounts e_step(const Mat& Q, const DiscreteChainObs& obs);
Mat m_step(const TransitionCounts& stats);

// sum_i log P^{dt_i}(Q)_{y_{i-1} y_i}
double discrete_loglik(const Mat& Q, const DiscreteChainObs& obs);

struct EmOptions {
  int max_iter = 2000;
  double tol = 1e-8;               // relative log-likelihood change
  double monotone_slack = 1e-10;   // allowed decrease per step before throwing
  double identifiability_cond = 1e8;
};

struct EmResult {
  Mat Q;
  std::vector<double> loglik;      // one entry per iterate, starting at Q0
  int iterations = 0;
  bool converged = false;
  double max_violation = 0.0;      // largest observed decrease (<= slack)
  Mat hessian;                     // of the loglik in the free off-diagonal rates
  Mat cov;                         // -hessian^-1 when it is negative definite
  std::vector<std::pair<int, int>> rate_index;  // (k,l) for each free rate
  std::vector<std::string> warnings;
};

EmResult em_fit(const DiscreteChainObs& obs, const Mat& Q0, const EmOptions& o = {});

}  // namespace epi

#pragma once

#include "epiinfer/estimate.hpp"
#include "epiinfer/models.hpp"
#include "epiinfer/rng.hpp"
#include "epiinfer/simulate.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace epi {

// ---- continuously observed SIR ----

struct SirSufficient {
  double infections = 0, recoveries = 0;
  double int_si = 0, int_i = 0;  // integral of S*I and of I (counts) over [0, T]
};
SirSufficient sir_sufficient(const JumpPath& path);

// lambda_hat = N * #inf / int S I dt, gamma_hat = #rec / int I dt. cov is the
// inverse Fisher information of the jump process along the ODE at theta_hat,
// divided by N. A coordinate with no events is NaN and flagged.
EstimateResult sir_mle_complete(const JumpPath& path, bool with_cov = true);

// Fisher information of the density-dependent jump process for one unit of
// population: integral over the ODE path of sum_j grad r_j grad r_j^T / r_j.
Mat jump_fisher_information(const Model& m, const Vec& theta, const Vec& z0, double T,
                            int intervals = 2048);

struct R0Estimate {
  double r0 = 0.0;
  double variance = 0.0;
};
// R0 = lambda/gamma with the delta-method variance.
R0Estimate r0_estimate(const EstimateResult& est);

// ---- finite-state jump processes and chains ----

struct CtmcPath {
  int n_states = 0;
  int x0 = 0;
  double T = 0.0;
  std::vector<double> times;
  std::vector<int> states;  // state entered at times[k]
  int state_at(double t) const;
};
CtmcPath simulate_ctmc(const Mat& Q, int x0, double T, SeedSpec seed);
std::vector<int> simulate_markov_chain(const Mat& P, int x0, int n, SeedSpec seed);

// N(i,j) transition counts; R(i) occupation times (jump processes) or
// number of visits before the last step (chains).
struct TransitionCounts {
  Mat N;
  Vec R;
};
TransitionCounts ctmc_counts(const CtmcPath& path);
TransitionCounts chain_counts(const std::vector<int>& seq, int n_states);

struct QmatrixEstimate {
  Mat Q;
  std::vector<bool> missing;  // rows with zero occupation time
};
QmatrixEstimate qmatrix_mle(const TransitionCounts& c);
QmatrixEstimate qmatrix_mle(const CtmcPath& path);

struct ChainEstimate {
  Mat P;
  Mat cov;                    // over vec entries i*S + j
  std::vector<bool> missing;  // never-left states
};
ChainEstimate chain_transition_mle(const std::vector<int>& seq, int n_states);

using TransitionFamily = std::function<Mat(const Vec&)>;
// Maximizes sum N_ij log Q_theta(i,j) in transformed coordinates; cov is the
// inverse observed information of the summed log-likelihood.
EstimateResult chain_parametric_mle(const TransitionCounts& c, const TransitionFamily& q_param,
                                    const Vec& theta0, const std::vector<ParamDomain>& domains,
                                    std::vector<std::string> names = {});
double chain_loglik(const TransitionCounts& c, const Mat& P);

// ---- chain-binomial models ----

struct GreenwoodEstimate {
  double p_mle = 0.0;
  double p_cls = 0.0;
};
GreenwoodEstimate greenwood_estimators(const std::vector<double>& s);

struct ReedFrostEstimate {
  double q = 1.0;
  bool boundary = false;
};
ReedFrostEstimate reed_frost_mle(const std::vector<double>& s, const std::vector<double>& i);

struct BirthDeathEstimate {
  double p = 0.0, q = 0.0;
  double q_asymptotic = 0.0;   // B/(D+R) (1 - B/n), asymptotically equivalent form
  Mat cov;
  double B = 0, D = 0, R = 0, N00 = 0, n = 0;
  bool boundary = false;
};
BirthDeathEstimate bd_chain_mle(const std::vector<int>& I);

// ---- branching processes ----

enum class OffspringFamily { None, Poisson, Geometric, FractionalLinear };

struct BranchingEstimate {
  double m = 0.0;
  double sigma2 = 0.0;
  Vec param;                           // family-specific plug-in parameters
  std::optional<double> extinction;    // smallest fixed point of g on [0,1]
  bool extinct = false;
};
BranchingEstimate branching_estimators(const std::vector<double>& Z,
                                       OffspringFamily family = OffspringFamily::None);
// Offspring generating function g(s; param) of a named family.
double offspring_pgf(OffspringFamily family, const Vec& param, double s);
double extinction_probability(OffspringFamily family, const Vec& param);

// ---- AR(1) ----

struct Ar1Estimate {
  double a = 0.0;
  double gamma2 = 0.0;
};
Ar1Estimate ar1_mle(const std::vector<double>& x);

}  // namespace epi

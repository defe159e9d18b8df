#pragma once

#include "epiinfer/rng.hpp"
#include "epiinfer/types.hpp"

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace epi {

// ---- data-augmentation MCMC for removal-only SIR data ----
//
// Rates are on the count scale: infection lambda*S*I, removal gamma*I. The
// first infection sigma1 < 0 brings in the initial infective, after which
// S = S0 and I = 1; removals are observed at tau (tau_1 = 0) on [sigma1, T].

struct AugmentedState {
  double sigma1 = -1.0;
  std::vector<double> sigma_rest;  // sorted infection times after sigma1
  std::vector<double> tau;         // sorted removal times, tau[0] = 0
  double lambda = 0.1;
  double gamma = 1.0;
  int S0 = 0;

  int m() const { return 1 + static_cast<int>(sigma_rest.size()); }
  int n() const { return static_cast<int>(tau.size()); }
};

struct EventIntegrals {
  double SI = 0.0;  // int S I ds over [sigma1, T]
  double I = 0.0;   // int I ds
  bool valid = false;
};
EventIntegrals augmented_integrals(const AugmentedState& s, double T);

// Log of the augmented likelihood without the constant exp(N T) factor of
// the dominating measure. Returns -inf for impossible augmentations.
double augmented_loglik(const AugmentedState& s, double T);

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct McmcOptions {
  GammaPrior lambda_prior{0.1, 1.0};
  GammaPrior gamma_prior{0.1, 0.1};
  double rho = 1.0;                       // prior rate for -sigma1
  std::array<double, 3> move_probs{1.0 / 3, 1.0 / 3, 1.0 / 3};  // move, remove, add
  long iterations = 10000;
  long burn_in = 5000;
  double T = std::numeric_limits<double>::quiet_NaN();  // default: last removal
  bool record_infections = false;
  bool prior_only = false;                // likelihood exponent forced to zero
};

struct McmcChains {
  std::vector<double> lambda, gamma, sigma1;
  std::vector<int> m;
  std::vector<std::vector<double>> sigma_rest;  // only with record_infections
  std::array<double, 3> acceptance{0, 0, 0};    // per move type
  std::array<long, 3> proposals{0, 0, 0};
  double T = 0.0;
};

// tau: removal times, shifted internally so that the first one is 0.
McmcChains mcmc_oneill_roberts(const std::vector<double>& tau, int S0, const McmcOptions& o,
                               SeedSpec seed);

// ---- SIR event simulation used by ABC ----

struct SirEvents {
  std::vector<double> infection;  // infection times of every infected individual
  std::vector<double> removal;    // removal time per individual, inf if still infected
};
// Markov SIR on the count scale from S0 susceptibles and I0 infectives at
// t = 0, stopped at t_max or extinction.
SirEvents simulate_sir_events(double lambda, double gamma, int S0, int I0, double t_max, Rng& rng);

// Sorted finite removal times.
std::vector<double> removal_times(const SirEvents& e);

// int_0^T |R_obs(s) - R_sim(s)| ds for right-continuous counting curves
// built from the given event times.
double summary_path_l1(const std::vector<double>& r_obs, const std::vector<double>& r_sim, double T);

struct SummaryConfig {
  double period = 1.0;
  int n_periods = 15;
  int J0 = 3;  // early incidence for periods 0..J0, sojourn over the first J0 periods
};
// R_T; removals per period; new infections for j = 0..J0; mean time from
// infection to removal (censored at T) for infections in [0, J0*period).
Vec summary_vector(const SirEvents& e, const SummaryConfig& c);

// ---- ABC ----

enum class AbcKernel { Epanechnikov, Uniform };

struct WeightedSample {
  std::vector<Vec> draws;
  std::vector<double> weights;
  std::vector<Vec> summaries;  // empty for distance-based runs
  Vec s_obs;
  Vec scale;                   // per-statistic SDs (H)
  double delta = 0.0;
  std::string kernel;
  std::string summary;
  long simulations = 0;

  double total_weight() const;
  std::vector<double> column(int j) const;
};

using PriorSampler = std::function<Vec(Rng&)>;
using SummarySimulator = std::function<Vec(const Vec&, Rng&)>;
using DistanceSimulator = std::function<double(const Vec&, Rng&)>;

// delta is chosen so that a fraction p_delta of the simulations receives
// positive weight; W_i = K(d_i / delta) with K(0) = 1.
std::vector<double> abc_weights(const std::vector<double>& d, double p_delta, AbcKernel k,
                                double& delta);

WeightedSample abc_rejection(const Vec& s_obs, const PriorSampler& prior,
                             const SummarySimulator& sim, long n_sims, double p_delta, AbcKernel k,
                             SeedSpec seed);
WeightedSample abc_rejection_distance(const PriorSampler& prior, const DistanceSimulator& dist,
                                      long n_sims, double p_delta, AbcKernel k, SeedSpec seed);

// Support of each parameter for the adjustment transforms: log when only the
// lower bound is finite, logit when both are, identity otherwise.
struct Support {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

WeightedSample adjust_locl(const WeightedSample& s, const std::vector<Support>& support);

struct NchConfig {
  int networks = 10;
  int hidden = 8;
  double weight_decay = 1e-3;
  int max_iter = 500;
  std::uint64_t seed = 1;
};
WeightedSample adjust_nch(const WeightedSample& s, const std::vector<Support>& support,
                          const NchConfig& c = {});

struct PosteriorSummary {
  Vec mean, median, mode, lo95, hi95;
};
PosteriorSummary posterior_summaries(const WeightedSample& s);

}  // namespace epi

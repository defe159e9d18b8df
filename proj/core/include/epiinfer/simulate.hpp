#pragma once

#include "epiinfer/models.hpp"
#include "epiinfer/rng.hpp"

#include <vector>

namespace epi {

// Event record of one realization at population size N. Exact (Gillespie)
// paths store one jump index per event time; tau-leaped paths store a vector
// of jump counts per leap end instead.
struct JumpPath {
  ModelPtr model;
  Vec theta;
  double N = 0.0;
  Vec x0;                       // initial counts
  double T = 0.0;
  std::vector<double> times;    // strictly increasing
  std::vector<int> jumps;       // exact paths
  std::vector<IVec> leaps;      // tau-leaped paths (per-jump counts)

  bool exact() const { return leaps.empty(); }
  std::size_t n_events() const { return times.size(); }
  Vec increment(std::size_t k) const;
  Vec state_at(double t) const;  // right-continuous counts
  Vec final_state() const;
  // Keep only the part of the path on [0, t_end].
  JumpPath truncated(double t_end) const;
};

// Regular-grid record: values row k-1 holds the normalized state at t_k = k dt,
// k = 1..n; the initial state is kept separately.
struct SampledSeries {
  double dt = 1.0;
  Vec x0;
  Mat values;                   // n x p
  std::vector<bool> observed;   // per-coordinate mask
  double N = 0.0;               // 0 when unknown
  double eps = 0.0;

  int n() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
  double horizon() const { return dt * n(); }
  double time(int k) const { return dt * k; }
  // State at t_k with t_0 = 0 mapping to x0.
  Vec at(int k) const { return k == 0 ? x0 : Vec(values.row(k - 1).transpose()); }
  SampledSeries subsample(int every) const;
};

JumpPath gillespie(ModelPtr model, const Vec& theta, double N, const Vec& x0, double T,
                   SeedSpec seed, std::size_t max_events = 50000000);

JumpPath tau_leap(ModelPtr model, const Vec& theta, double N, const Vec& x0, double T, double tau,
                  SeedSpec seed);

SampledSeries sample_path(const JumpPath& path, double dt);

// Euler-Maruyama with noise scale eps and step dt; states are projected onto
// the admissible set after every step. Every `record_every` steps one row is
// kept.
SampledSeries euler_maruyama(const Model& model, const Vec& theta, double eps, const Vec& x0,
                             double T, double dt, SeedSpec seed, int record_every = 1);

// Returns x_0..x_n.
std::vector<double> simulate_ar1(double a, double gamma, double x0, int n, SeedSpec seed);

// Simulate n steps of a discrete-time chain model from x0.
std::vector<Vec> simulate_chain(const Model& model, const Vec& theta, const Vec& x0, int n,
                                SeedSpec seed);

// Final size of an epidemic path: decrease of the first (susceptible) count.
double final_size(const JumpPath& path);

struct FilterResult {
  std::vector<std::size_t> kept, dropped;
  double threshold = 0.0;
};

// Threshold = mean(final sizes) - k * spread, where spread is the empirical
// SD (default) or the standard error of the mean.
FilterResult non_extinct_filter(const std::vector<JumpPath>& paths, double k = 1.0,
                                bool use_standard_error = false);
FilterResult non_extinct_filter(const std::vector<double>& final_sizes, double k = 1.0,
                                bool use_standard_error = false);

}  // namespace epi

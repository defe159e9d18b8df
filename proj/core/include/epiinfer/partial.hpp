#pragma once

#include "epiinfer/estimate.hpp"
#include "epiinfer/models.hpp"
#include "epiinfer/ode.hpp"
#include "epiinfer/optim.hpp"
#include "epiinfer/simulate.hpp"

#include <limits>
#include <vector>

namespace epi {

// One observed coordinate; the initial value xi of `hidden` is unknown and
// joins the free drift parameters: eta = (theta[free]..., xi). Parameters
// not listed in `free` (including the diffusion ones) are read from theta.
struct PartialConfig {
  int observed = 0;
  int hidden = 1;
  std::vector<int> free;  // empty -> all drift parameters
  Vec theta;
  Vec x0;                 // x0[hidden] is overwritten by xi
  double xi_lo = -std::numeric_limits<double>::infinity();
  double xi_hi = std::numeric_limits<double>::infinity();
  bool weighted = false;  // log Sigma_oo + A_k^2 / Sigma_oo variant
  bool transform = true;
  double ode_tol = 1e-9;
  int quad_panels = 16;   // Gauss-Legendre panels per axis for Lambda and V
  bool richardson = true; // recompute at twice the panels and report the change
  NelderMeadOptions nm{};
  BfgsOptions bfgs{};
};

// Free drift indices after defaulting.
std::vector<int> free_indices(const Model& m, const PartialConfig& c);
Vec eta_to_theta(const Model& m, const PartialConfig& c, const Vec& eta);
Vec eta_to_x0(const PartialConfig& c, const Vec& eta);
Vec theta_to_eta(const Model& m, const PartialConfig& c, const Vec& theta, double xi);

// obs1 holds X_o(t_0), ..., X_o(t_n). Returns A_1..A_n.
std::vector<double> ak_residuals(const Model& m, const Vec& theta, int observed,
                                 const std::vector<double>& obs1, const OdeSolution& sol,
                                 double dt);

// (1/(eps^2 dt)) sum A_k^2, or the weighted variant when c.weighted is set.
double contrast_partial(const Model& m, const PartialConfig& c, const Vec& eta,
                        const std::vector<double>& obs1, double eps, double dt);

struct PartialInformation {
  Mat Lambda;   // int D D^T dt
  Mat V;        // covariance of the limiting score, V1 + V2 + V2^T + V3
  Mat V1, V2, V3;
  double cond = 0.0;
  double quad_rel_change = 0.0;  // Richardson check, 0 if disabled
};

// Lambda and V at eta via composite Gauss-Legendre on [0,T] and on the
// triangle {s < t}.
PartialInformation partial_information(const Model& m, const PartialConfig& c, const Vec& eta,
                                       double T);

EstimateResult estimate_partial(const Model& m, const SampledSeries& obs, double eps,
                                const Vec& eta_init, const PartialConfig& c);

// Closed-form validation case: dx1 = (a x1 + b x2) dt + sigma dB1,
// dx2 = (a + h) x2 dt + sigma dB2, x1 observed, x2(0) = xi, eta = (a, b' = b xi, h).
struct Ou2dClosedForm {
  Mat Lambda;
  Mat V;
};
Ou2dClosedForm ou2d_closed_form(double a, double bp, double h, double sigma, double T,
                                double x1_0 = 1.0, double b = 1.0);
// D_1, D_2, D_3 at t.
Vec ou2d_d(double a, double bp, double h, double x1_0, double t);

// Gamma_1(eta0, eta, t) = b_o(alpha0, z(eta0,t)) - b_o(alpha, z(eta,t))
//                         - d_o b_o(alpha, z(eta,t)) (z_o(eta0,t) - z_o(eta,t)).
std::vector<double> gamma1(const Model& m, const PartialConfig& c, const Vec& eta0,
                           const Vec& eta, const std::vector<double>& times);

struct IdentifiabilityReport {
  std::vector<Vec> etas;
  std::vector<double> max_abs_gamma1;
  double tolerance = 0.0;
  bool identifiable = true;  // every eta != eta0 has max |Gamma_1| > tolerance
  Mat Lambda;                // at eta0, in (R0, d, s0) coordinates
  double cond = 0.0;
  Vec eigenvalues;
};

// SIR with only I observed: eta = (lambda, gamma, s0), i0 fixed.
IdentifiabilityReport sir_partial_identifiability_check(const Vec& eta0, double i0, double T,
                                                        const std::vector<Vec>& grid,
                                                        double tolerance = 1e-6);

// Lambda transported to (R0, d, s0) for the SIR parametrization eta = (lambda, gamma, s0).
Mat sir_lambda_r0d(const Mat& Lambda_eta, const Vec& eta);

}  // namespace epi

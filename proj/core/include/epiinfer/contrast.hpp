#pragma once

#include "epiinfer/estimate.hpp"
#include "epiinfer/models.hpp"
#include "epiinfer/ode.hpp"
#include "epiinfer/optim.hpp"
#include "epiinfer/simulate.hpp"

#include <vector>

namespace epi {

struct ContrastOptions {
  double regularization = 1e-10;  // relative ridge added to singular Sigma
  int simpson_intervals = 16;     // per sampling interval for S_k (even, >= 8)
  bool transform = true;          // optimize in log/logit coordinates
  double ode_tol = 1e-8;
  NelderMeadOptions nm{};
  BfgsOptions bfgs{};
};

// B_k = X(t_k) - z(t_k) - Phi(t_k, t_{k-1}) (X(t_{k-1}) - z(t_{k-1})), k = 1..n.
std::vector<Vec> bk_residuals(const SampledSeries& obs, const OdeSolution& sol);

// S_k = (1/dt) int_{t_{k-1}}^{t_k} Phi(t_k,s) Sigma(s, z(s)) Phi(t_k,s)^T ds by
// composite Simpson.
std::vector<Mat> sk_covariances(const Model& m, const Vec& theta, const OdeSolution& sol,
                                double dt, int n, int intervals = 16);

// Ridge-regularized Sigma for observations on the boundary of the state space.
Mat regularize(const Mat& S, double rel);

// High-frequency contrast with Sigma evaluated at the previous observation.
double contrast_hf(const Model& m, const Vec& theta, const SampledSeries& obs, double eps,
                   const ContrastOptions& o = {});
EstimateResult estimate_hf(const Model& m, const SampledSeries& obs, double eps, const Vec& init,
                           const ContrastOptions& o = {});

// Low-frequency contrast (drift and diffusion share alpha).
double contrast_lf(const Model& m, const Vec& alpha, const SampledSeries& obs, double eps,
                   const ContrastOptions& o = {});
EstimateResult estimate_lf(const Model& m, const SampledSeries& obs, double eps, const Vec& init,
                           const ContrastOptions& o = {});

struct InfoMatrices {
  Mat Ib;      // drift information, a x a
  Mat Isigma;  // diffusion information, b x b
};
InfoMatrices info_matrices(const Model& m, const Vec& theta, const Vec& x0, double T,
                           int intervals = 2048, double regularization = 1e-10);
// M(alpha) = dt * sum_k G_k^T S_k^-1 G_k on the grid t_k = k dt, k = 1..n.
Mat lf_information(const Model& m, const Vec& alpha, const Vec& x0, double dt, int n,
                   int intervals = 16);

struct Ellipsoid {
  Vec center;
  Mat cov;
  Mat axes;     // columns are unit eigenvectors of cov
  Vec radii;    // sqrt(chi2 * eigenvalue)
  double level = 0.95;
  double chi2 = 0.0;

  double mahalanobis2(const Vec& x) const;
  bool contains(const Vec& x) const { return mahalanobis2(x) <= chi2; }
  // 2-D boundary polyline (only for two-dimensional ellipsoids).
  Mat boundary(int points = 200) const;
};
Ellipsoid confidence_ellipsoid(const Vec& center, const Mat& cov, double level = 0.95);
Ellipsoid confidence_ellipsoid(const EstimateResult& est, double level = 0.95);

}  // namespace epi

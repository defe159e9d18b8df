#pragma once

#include "epiinfer/models.hpp"

#include <vector>

namespace epi {

struct OdeOptions {
  double tol = 1e-8;
  double h_max = 0.0;                 // 0 -> T/256
  bool sensitivities = false;         // dz/deta
  bool resolvent_sensitivities = false;
  bool covariance = false;            // C' = J C + C J^T + Sigma, C(0) = 0
  std::vector<int> hidden;            // coordinates whose initial value is a parameter
  std::vector<double> stops;          // times the integrator must land on exactly
  int max_steps = 2000000;
};

// Dense solution of the deterministic limit together with the fundamental
// matrix Psi (Phi(t,s) = Psi(t) Psi(s)^-1) and, on request, the
// sensitivities with respect to eta = (alpha, initial values of hidden
// coordinates).
class OdeSolution {
 public:
  int dim() const { return p_; }
  int n_sens() const { return q_; }
  double horizon() const { return T_; }
  const Vec& x0() const { return x0_; }
  const Vec& theta() const { return theta_; }
  const std::vector<double>& mesh() const { return t_; }
  bool has_sensitivities() const { return sens_; }
  bool has_resolvent_sensitivities() const { return dpsi_; }
  bool has_covariance() const { return cov_; }

  Vec z(double t) const;
  Mat psi(double t) const;
  Mat resolvent(double t, double s) const;
  Mat dz(double t) const;                          // p x q
  std::vector<Mat> dpsi(double t) const;           // q matrices p x p
  std::vector<Mat> dresolvent(double t, double s) const;
  Mat covariance(double t) const;                  // integral_0^t Phi Sigma Phi^T

  // Full augmented state at t (used by callers needing several blocks).
  Vec state(double t) const;

 private:
  friend OdeSolution solve_ode(const Model&, const Vec&, const Vec&, double, const OdeOptions&);
  void check_time(double t) const;
  Vec block(const Vec& y, int off, int len) const { return y.segment(off, len); }

  int p_ = 0, q_ = 0;
  double T_ = 0.0;
  Vec x0_, theta_;
  bool sens_ = false, dpsi_ = false, cov_ = false;
  int off_psi_ = 0, off_s_ = 0, off_dpsi_ = 0, off_c_ = 0;
  std::vector<double> t_;
  std::vector<Vec> y_, f_;
};

// Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output.
// theta is the full parameter vector; sensitivities are taken with respect
// to the first n_drift entries followed by the initial values listed in
// opts.hidden.
OdeSolution solve_ode(const Model& m, const Vec& theta, const Vec& x0, double T,
                      const OdeOptions& opts = {});

inline Mat resolvent(const OdeSolution& sol, double t, double s) { return sol.resolvent(t, s); }

OdeSolution sensitivities(const Model& m, const Vec& theta, const Vec& x0, double T,
                          OdeOptions opts = {});

}  // namespace epi

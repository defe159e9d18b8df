#include "epiinfer/contrast.hpp"

#include "epiinfer/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace epi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

OdeSolution solve_on_grid(const Model& m, const Vec& theta, const Vec& x0, double dt, int n,
                          double tol, bool sens) {
  OdeOptions o;
  o.tol = tol;
  o.sensitivities = sens;
  for (int k = 1; k < n; ++k) o.stops.push_back(k * dt);
  return solve_ode(m, theta, x0, n * dt, o);
}

void check_obs(const Model& m, const SampledSeries& obs) {
  require(obs.n() >= 1, "contrast: empty observation series");
  require(obs.dim() == m.dim() && obs.x0.size() == m.dim(), "contrast: dimension mismatch");
  require(obs.dt > 0.0, "contrast: sampling interval must be positive");
}

std::vector<double> simpson_weights(int intervals) {
  std::vector<double> w(intervals + 1);
  for (int j = 0; j <= intervals; ++j)
    w[j] = (j == 0 || j == intervals) ? 1.0 : (j % 2 ? 4.0 : 2.0);
  return w;
}

}  // namespace

Mat regularize(const Mat& S, double rel) {
  const double tr = S.trace();
  const double ridge = rel * (tr > 0.0 ? tr : 1.0);
  Mat R = 0.5 * (S + S.transpose());
  R.diagonal().array() += ridge;
  return R;
}

std::vector<Vec> bk_residuals(const SampledSeries& obs, const OdeSolution& sol) {
  const int n = obs.n();
  if (std::abs(sol.horizon() - obs.horizon()) > 1e-9 * std::max(1.0, obs.horizon()))
    throw InvalidArgument("bk_residuals: ODE horizon does not match the observation grid");
  require(sol.dim() == obs.dim(), "bk_residuals: dimension mismatch");
  std::vector<Vec> B(n);
  Vec zprev = sol.z(0.0);
  Mat psiprev = sol.psi(0.0);
  for (int k = 1; k <= n; ++k) {
    const double tk = obs.time(k);
    const Vec zk = sol.z(tk);
    const Mat psik = sol.psi(tk);
    const Mat Phi = psiprev.transpose().partialPivLu().solve(psik.transpose()).transpose();
    B[k - 1] = obs.at(k) - zk - Phi * (obs.at(k - 1) - zprev);
    zprev = zk;
    psiprev = psik;
  }
  return B;
}

std::vector<Mat> sk_covariances(const Model& m, const Vec& theta, const OdeSolution& sol,
                                double dt, int n, int intervals) {
  require(intervals >= 8 && intervals % 2 == 0, "sk_covariances: need an even count >= 8");
  const auto w = simpson_weights(intervals);
  const double h = dt / intervals;
  std::vector<Mat> S(n);
  for (int k = 1; k <= n; ++k) {
    const double tk = k * dt;
    const Mat psik = sol.psi(tk);
    Mat acc = Mat::Zero(sol.dim(), sol.dim());
    for (int j = 0; j <= intervals; ++j) {
      const double s = (k - 1) * dt + j * h;
      const Mat Phi = sol.psi(s).transpose().partialPivLu().solve(psik.transpose()).transpose();
      acc += w[j] * Phi * m.diffusion(theta, s, sol.z(s)) * Phi.transpose();
    }
    acc *= h / 3.0 / dt;
    S[k - 1] = 0.5 * (acc + acc.transpose());
  }
  return S;
}

double contrast_hf(const Model& m, const Vec& theta, const SampledSeries& obs, double eps,
                   const ContrastOptions& o) {
  check_obs(m, obs);
  require(eps > 0.0, "contrast_hf: eps must be positive");
  const OdeSolution sol = solve_on_grid(m, theta, obs.x0, obs.dt, obs.n(), o.ode_tol, false);
  const auto B = bk_residuals(obs, sol);
  double logdet = 0.0, quad = 0.0;
  for (int k = 1; k <= obs.n(); ++k) {
    const Mat S = regularize(m.diffusion(theta, obs.time(k - 1), obs.at(k - 1)), o.regularization);
    const Eigen::LDLT<Mat> ldlt(S);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw NumericalError("contrast_hf: Sigma not positive definite after regularization");
    logdet += ldlt.vectorD().array().log().sum();
    quad += B[k - 1].dot(ldlt.solve(B[k - 1]));
  }
  return logdet + quad / (eps * eps * obs.dt);
}

InfoMatrices info_matrices(const Model& m, const Vec& theta, const Vec& x0, double T,
                           int intervals, double regularization) {
  if (intervals % 2) ++intervals;
  OdeOptions oo;
  const OdeSolution sol = solve_ode(m, theta, x0, T, oo);
  const int a = m.n_drift();
  const bool shared = m.layout().beta_is_alpha;
  const int b0 = shared ? 0 : a;
  const int nb = shared ? a : m.n_params() - a;
  InfoMatrices out{Mat::Zero(a, a), Mat::Zero(nb, nb)};
  const auto w = simpson_weights(intervals);
  const double h = T / intervals;
  for (int k = 0; k <= intervals; ++k) {
    const double t = k * h;
    const Vec z = sol.z(t);
    Mat dth, dz;
    m.drift_jacobians(theta, t, z, dth, dz);
    const Mat S = regularize(m.diffusion(theta, t, z), regularization);
    const Eigen::LDLT<Mat> ldlt(S);
    const Mat g = dth.leftCols(a);
    out.Ib += w[k] * g.transpose() * ldlt.solve(g);
    const auto dS = m.diffusion_param_grad(theta, t, z);
    std::vector<Mat> SinvdS(nb);
    for (int i = 0; i < nb; ++i) SinvdS[i] = ldlt.solve(dS[b0 + i]);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) out.Isigma(i, j) += w[k] * (SinvdS[i] * SinvdS[j]).trace();
  }
  out.Ib *= h / 3.0;
  out.Isigma *= h / 3.0 / (2.0 * T);
  out.Ib = (0.5 * (out.Ib + out.Ib.transpose())).eval();
  out.Isigma = (0.5 * (out.Isigma + out.Isigma.transpose())).eval();
  return out;
}

namespace {

Vec to_opt(const Model& m, const Vec& th, bool transform) {
  return transform ? to_unconstrained(th, m.layout().domains) : th;
}
Vec from_opt(const Model& m, const Vec& u, bool transform) {
  return transform ? from_unconstrained(u, m.layout().domains) : u;
}

// Wraps an objective so that inadmissible parameters or solver failures
// become +inf for the optimizer.
Objective guarded(const Model& m, bool transform, std::function<double(const Vec&)> f) {
  return [&m, transform, f](const Vec& u) {
    const Vec th = from_opt(m, u, transform);
    try {
      m.check_theta(th);
      const double v = f(th);
      return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };
}

}  // namespace

EstimateResult estimate_hf(const Model& m, const SampledSeries& obs, double eps, const Vec& init,
                           const ContrastOptions& o) {
  check_obs(m, obs);
  m.check_theta(init);
  const int np = m.n_params(), a = m.n_drift();
  require(obs.n() >= np + 1, "estimate_hf: need n >= number of parameters + 1");
  const Objective f =
      guarded(m, o.transform, [&](const Vec& th) { return contrast_hf(m, th, obs, eps, o); });
  const OptimResult r = minimize(f, to_opt(m, init, o.transform), o.nm, o.bfgs);
  if (!std::isfinite(r.f)) throw NumericalError("estimate_hf: contrast is not finite near init");
  EstimateResult e;
  e.names = m.layout().names;
  e.theta = from_opt(m, r.x, o.transform);
  e.converged = r.converged;
  const InfoMatrices info = info_matrices(m, e.theta, obs.x0, obs.horizon(), 2048, o.regularization);
  e.matrices["I_b"] = info.Ib;
  e.matrices["I_sigma"] = info.Isigma;
  Eigen::FullPivLU<Mat> lu(info.Ib);
  if (!lu.isInvertible()) throw NumericalError("estimate_hf: I_b is singular");
  const double n = obs.n();
  if (m.layout().beta_is_alpha) {
    e.cov = eps * eps * info.Ib.inverse();
    e.rate_tag = "eps^2";
    const Mat comb = info.Ib / (eps * eps) + n * info.Isigma;
    e.matrices["cov_combined"] = comb.inverse();
  } else {
    e.cov = Mat::Zero(np, np);
    e.cov.topLeftCorner(a, a) = eps * eps * info.Ib.inverse();
    e.cov.bottomRightCorner(np - a, np - a) = info.Isigma.inverse() / n;
    e.rate_tag = "eps^2 (drift), 1/n (diffusion)";
  }
  e.diagnostics = {{"contrast", r.f},
                   {"iterations", double(r.iterations)},
                   {"evaluations", double(r.evaluations)},
                   {"n", n},
                   {"eps", eps},
                   {"n_eps2", n * eps * eps}};
  return e;
}

double contrast_lf(const Model& m, const Vec& alpha, const SampledSeries& obs, double eps,
                   const ContrastOptions& o) {
  check_obs(m, obs);
  require(m.layout().beta_is_alpha, "contrast_lf: model must have beta identical to alpha");
  require(eps > 0.0, "contrast_lf: eps must be positive");
  const OdeSolution sol = solve_on_grid(m, alpha, obs.x0, obs.dt, obs.n(), o.ode_tol, false);
  const auto B = bk_residuals(obs, sol);
  const auto S = sk_covariances(m, alpha, sol, obs.dt, obs.n(), o.simpson_intervals);
  double logdet = 0.0, quad = 0.0;
  for (int k = 0; k < obs.n(); ++k) {
    const Eigen::LDLT<Mat> ldlt(regularize(S[k], o.regularization));
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw NumericalError("contrast_lf: S_k not positive definite");
    logdet += ldlt.vectorD().array().log().sum();
    quad += B[k].dot(ldlt.solve(B[k]));
  }
  return logdet + quad / (eps * eps * obs.dt);
}

Mat lf_information(const Model& m, const Vec& alpha, const Vec& x0, double dt, int n,
                   int intervals) {
  const int a = m.n_drift();
  const OdeSolution sol = solve_on_grid(m, alpha, x0, dt, n, 1e-10, true);
  const auto S = sk_covariances(m, alpha, sol, dt, n, intervals);
  Mat M = Mat::Zero(a, a);
  for (int k = 1; k <= n; ++k) {
    const Mat Phi = sol.resolvent(k * dt, (k - 1) * dt);
    const Mat G = (-sol.dz(k * dt).leftCols(a) + Phi * sol.dz((k - 1) * dt).leftCols(a)) / dt;
    M += G.transpose() * S[k - 1].ldlt().solve(G);
  }
  M *= dt;
  return 0.5 * (M + M.transpose());
}

EstimateResult estimate_lf(const Model& m, const SampledSeries& obs, double eps, const Vec& init,
                           const ContrastOptions& o) {
  check_obs(m, obs);
  m.check_theta(init);
  require(m.layout().beta_is_alpha, "estimate_lf: model must have beta identical to alpha");
  const Objective f =
      guarded(m, o.transform, [&](const Vec& th) { return contrast_lf(m, th, obs, eps, o); });
  const OptimResult r = minimize(f, to_opt(m, init, o.transform), o.nm, o.bfgs);
  if (!std::isfinite(r.f)) throw NumericalError("estimate_lf: contrast is not finite near init");
  EstimateResult e;
  e.names = m.layout().names;
  e.theta = from_opt(m, r.x, o.transform);
  e.converged = r.converged;
  const Mat M = lf_information(m, e.theta, obs.x0, obs.dt, obs.n(), o.simpson_intervals);
  Eigen::FullPivLU<Mat> lu(M);
  if (!lu.isInvertible()) throw NumericalError("estimate_lf: M(alpha) is singular");
  e.matrices["M"] = M;
  e.cov = eps * eps * M.inverse();
  e.rate_tag = "eps^2";
  e.diagnostics = {{"contrast", r.f},
                   {"iterations", double(r.iterations)},
                   {"evaluations", double(r.evaluations)},
                   {"n", double(obs.n())},
                   {"eps", eps}};
  return e;
}

double Ellipsoid::mahalanobis2(const Vec& x) const {
  const Vec d = x - center;
  return d.dot(cov.ldlt().solve(d));
}

Mat Ellipsoid::boundary(int points) const {
  require(center.size() == 2, "Ellipsoid::boundary: only for two dimensions");
  Mat out(points + 1, 2);
  for (int i = 0; i <= points; ++i) {
    const double t = 2.0 * std::numbers::pi * i / points;
    Vec u(2);
    u << std::cos(t), std::sin(t);
    out.row(i) = (center + axes * radii.asDiagonal() * u).transpose();
  }
  return out;
}

Ellipsoid confidence_ellipsoid(const Vec& center, const Mat& cov, double level) {
  require(cov.rows() == center.size() && cov.cols() == center.size(),
          "confidence_ellipsoid: dimension mismatch");
  require(level > 0.0 && level < 1.0, "confidence_ellipsoid: level must lie in (0,1)");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (cov + cov.transpose()));
  if (es.eigenvalues().minCoeff() <= 1e-300 * std::max(1.0, es.eigenvalues().maxCoeff()) ||
      es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("confidence_ellipsoid: covariance is singular");
  Ellipsoid e;
  e.center = center;
  e.cov = cov;
  e.level = level;
  e.chi2 = chi2_quantile(level, static_cast<double>(center.size()));
  e.axes = es.eigenvectors();
  e.radii = (e.chi2 * es.eigenvalues().array()).sqrt();
  return e;
}

Ellipsoid confidence_ellipsoid(const EstimateResult& est, double level) {
  return confidence_ellipsoid(est.theta, est.cov, level);
}

}  // namespace epi

#include "epiinfer/partial.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

namespace epi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rule {
  std::vector<double> x, w;
};

// Composite 8-point Gauss-Legendre on [lo, hi].
Rule gauss_rule(double lo, double hi, int panels) {
  using G = boost::math::quadrature::gauss<double, 8>;
  const auto& ab = G::abscissa();
  const auto& wt = G::weights();
  Rule r;
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * h;
    for (std::size_t j = 0; j < ab.size(); ++j) {
      r.x.push_back(mid - 0.5 * h * ab[j]);
      r.w.push_back(0.5 * h * wt[j]);
      r.x.push_back(mid + 0.5 * h * ab[j]);
      r.w.push_back(0.5 * h * wt[j]);
    }
  }
  return r;
}

void check_config(const Model& m, const PartialConfig& c) {
  require(m.kind() != ModelKind::Chain, "partial: chain models are not supported");
  require(c.theta.size() == m.n_params(), "partial: theta has the wrong size");
  require(c.x0.size() == m.dim(), "partial: x0 has the wrong size");
  require(c.observed >= 0 && c.observed < m.dim(), "partial: observed index out of range");
  require(c.hidden >= 0 && c.hidden < m.dim() && c.hidden != c.observed,
          "partial: hidden index must differ from the observed one");
  for (int i : c.free)
    require(i >= 0 && i < m.n_drift(), "partial: free indices must be drift parameters");
  require(c.xi_lo < c.xi_hi, "partial: empty interval for xi");
}

// Optimizer coordinates for eta.
Vec eta_to_u(const Model& m, const PartialConfig& c, const std::vector<int>& fr, const Vec& eta) {
  Vec u(eta.size());
  for (std::size_t i = 0; i < fr.size(); ++i)
    u[i] = to_unconstrained(eta.segment(i, 1), {m.layout().domains[fr[i]]})[0];
  const double xi = eta[eta.size() - 1];
  const bool lo = std::isfinite(c.xi_lo), hi = std::isfinite(c.xi_hi);
  double& ux = u[eta.size() - 1];
  if (lo && hi) {
    const double p = (xi - c.xi_lo) / (c.xi_hi - c.xi_lo);
    ux = std::log(p / (1.0 - p));
  } else if (lo) {
    ux = std::log(xi - c.xi_lo);
  } else if (hi) {
    ux = std::log(c.xi_hi - xi);
  } else {
    ux = xi;
  }
  return u;
}

Vec u_to_eta(const Model& m, const PartialConfig& c, const std::vector<int>& fr, const Vec& u) {
  Vec eta(u.size());
  for (std::size_t i = 0; i < fr.size(); ++i)
    eta[i] = from_unconstrained(u.segment(i, 1), {m.layout().domains[fr[i]]})[0];
  const double ux = u[u.size() - 1];
  const bool lo = std::isfinite(c.xi_lo), hi = std::isfinite(c.xi_hi);
  double& xi = eta[u.size() - 1];
  if (lo && hi)
    xi = c.xi_lo + (c.xi_hi - c.xi_lo) / (1.0 + std::exp(-ux));
  else if (lo)
    xi = c.xi_lo + std::exp(ux);
  else if (hi)
    xi = c.xi_hi - std::exp(ux);
  else
    xi = ux;
  return eta;
}

OdeSolution solve_eta(const Model& m, const PartialConfig& c, const Vec& eta, double T,
                      int n_stops, double dt, bool sens, bool cov) {
  OdeOptions o;
  o.tol = c.ode_tol;
  o.sensitivities = sens;
  o.covariance = cov;
  if (sens) o.hidden = {c.hidden};
  for (int k = 1; k < n_stops; ++k) o.stops.push_back(k * dt);
  return solve_ode(m, eta_to_theta(m, c, eta), eta_to_x0(c, eta), T, o);
}

// Quantities needed by the Lambda / V integrands at one time point.
struct Node {
  Vec D;      // q
  Vec gb;     // d b_o / d x_m for m != o, in coordinate order
  Mat psi;
  Mat sigma;
  Mat C;
};

class Integrand {
 public:
  Integrand(const Model& m, const PartialConfig& c, const std::vector<int>& fr, const Vec& theta,
            const OdeSolution& sol)
      : m_(m), c_(c), fr_(fr), th_(theta), sol_(sol) {
    for (int j = 0; j < m.dim(); ++j)
      if (j != c.observed) others_.push_back(j);
  }

  Node at(double t) const {
    const int o = c_.observed;
    const int q = static_cast<int>(fr_.size()) + 1;
    const Vec z = sol_.z(t);
    const Mat dz = sol_.dz(t);
    Mat dth, dzb;
    m_.drift_jacobians(th_, t, z, dth, dzb);
    Node nd;
    nd.D.resize(q);
    nd.gb.resize(others_.size());
    for (std::size_t k = 0; k < others_.size(); ++k) nd.gb[k] = dzb(o, others_[k]);
    auto hidden_term = [&](int col) {
      double s = 0.0;
      for (std::size_t k = 0; k < others_.size(); ++k) s += nd.gb[k] * dz(others_[k], col);
      return s;
    };
    for (std::size_t i = 0; i < fr_.size(); ++i)
      nd.D[i] = -dth(o, fr_[i]) - hidden_term(fr_[i]);
    nd.D[q - 1] = -hidden_term(m_.n_drift());
    nd.psi = sol_.psi(t);
    nd.sigma = m_.diffusion(th_, t, z);
    nd.C = sol_.covariance(t);
    return nd;
  }

  // v2(t,s) = gb(t)^T [Phi(t,s) Sigma(s)]_{H,o};
  // k(t,s)  = gb(t)^T [Phi(t,s) C(s)]_{H,H} gb(s), for s <= t.
  void cross(const Node& nt, const Node& ns, double& v2, double& k) const {
    const Mat phi = ns.psi.transpose().partialPivLu().solve(nt.psi.transpose()).transpose();
    const Mat PS = phi * ns.sigma;
    const Mat PC = phi * ns.C;
    v2 = 0.0;
    k = 0.0;
    for (std::size_t a = 0; a < others_.size(); ++a) {
      v2 += nt.gb[a] * PS(others_[a], c_.observed);
      for (std::size_t b = 0; b < others_.size(); ++b)
        k += nt.gb[a] * PC(others_[a], others_[b]) * ns.gb[b];
    }
  }

  double sigma_oo(const Node& n) const { return n.sigma(c_.observed, c_.observed); }

 private:
  const Model& m_;
  const PartialConfig& c_;
  const std::vector<int>& fr_;
  Vec th_;
  const OdeSolution& sol_;
  std::vector<int> others_;
};

PartialInformation integrate(const Integrand& f, int q, double T, int panels) {
  PartialInformation r;
  r.Lambda = Mat::Zero(q, q);
  r.V1 = Mat::Zero(q, q);
  r.V2 = Mat::Zero(q, q);
  r.V3 = Mat::Zero(q, q);
  const Rule outer = gauss_rule(0.0, T, panels);
  const Rule unit = gauss_rule(0.0, 1.0, panels);
  for (std::size_t a = 0; a < outer.x.size(); ++a) {
    const double t = outer.x[a];
    const Node nt = f.at(t);
    const Mat DD = nt.D * nt.D.transpose();
    r.Lambda += outer.w[a] * DD;
    r.V1 += outer.w[a] * f.sigma_oo(nt) * DD;
    for (std::size_t b = 0; b < unit.x.size(); ++b) {
      const double s = t * unit.x[b];
      const double w = outer.w[a] * t * unit.w[b];
      const Node ns = f.at(s);
      double v2, k;
      f.cross(nt, ns, v2, k);
      const Mat st = ns.D * nt.D.transpose();
      r.V2 += w * v2 * st;
      r.V3 += w * k * (st + st.transpose());
    }
  }
  r.V = r.V1 + r.V2 + r.V2.transpose() + r.V3;
  r.Lambda = (0.5 * (r.Lambda + r.Lambda.transpose())).eval();
  r.V = (0.5 * (r.V + r.V.transpose())).eval();
  return r;
}

double condition_number(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : kInf;
}

}  // namespace

std::vector<int> free_indices(const Model& m, const PartialConfig& c) {
  if (!c.free.empty()) return c.free;
  std::vector<int> fr(m.n_drift());
  for (int i = 0; i < m.n_drift(); ++i) fr[i] = i;
  return fr;
}

Vec eta_to_theta(const Model& m, const PartialConfig& c, const Vec& eta) {
  const auto fr = free_indices(m, c);
  require(eta.size() == static_cast<int>(fr.size()) + 1, "partial: eta has the wrong size");
  Vec th = c.theta;
  for (std::size_t i = 0; i < fr.size(); ++i) th[fr[i]] = eta[i];
  return th;
}

Vec eta_to_x0(const PartialConfig& c, const Vec& eta) {
  Vec x0 = c.x0;
  x0[c.hidden] = eta[eta.size() - 1];
  return x0;
}

Vec theta_to_eta(const Model& m, const PartialConfig& c, const Vec& theta, double xi) {
  const auto fr = free_indices(m, c);
  Vec eta(fr.size() + 1);
  for (std::size_t i = 0; i < fr.size(); ++i) eta[i] = theta[fr[i]];
  eta[fr.size()] = xi;
  return eta;
}

std::vector<double> ak_residuals(const Model& m, const Vec& theta, int observed,
                                 const std::vector<double>& obs1, const OdeSolution& sol,
                                 double dt) {
  require(obs1.size() >= 2, "ak_residuals: need at least one observation after t0");
  require(dt > 0.0, "ak_residuals: dt must be positive");
  const int n = static_cast<int>(obs1.size()) - 1;
  if (std::abs(sol.horizon() - n * dt) > 1e-9 * std::max(1.0, n * dt))
    throw InvalidArgument("ak_residuals: ODE horizon does not match the observation grid");
  std::vector<double> A(n);
  Vec zprev = sol.z(0.0);
  for (int k = 1; k <= n; ++k) {
    const double tprev = (k - 1) * dt;
    Mat dth, dz;
    m.drift_jacobians(theta, tprev, zprev, dth, dz);
    const Vec zk = sol.z(k * dt);
    A[k - 1] = obs1[k] - zk[observed] -
               (1.0 + dt * dz(observed, observed)) * (obs1[k - 1] - zprev[observed]);
    zprev = zk;
  }
  return A;
}

double contrast_partial(const Model& m, const PartialConfig& c, const Vec& eta,
                        const std::vector<double>& obs1, double eps, double dt) {
  check_config(m, c);
  require(eps > 0.0, "contrast_partial: eps must be positive");
  const int n = static_cast<int>(obs1.size()) - 1;
  const OdeSolution sol = solve_eta(m, c, eta, n * dt, n, dt, false, false);
  const Vec th = eta_to_theta(m, c, eta);
  const auto A = ak_residuals(m, th, c.observed, obs1, sol, dt);
  double v = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double a2 = A[k - 1] * A[k - 1];
    if (c.weighted) {
      const double s = m.diffusion(th, k * dt, sol.z(k * dt))(c.observed, c.observed);
      if (!(s > 0.0)) throw NumericalError("contrast_partial: Sigma_oo is not positive");
      v += std::log(s) + a2 / (s * eps * eps * dt);
    } else {
      v += a2;
    }
  }
  return c.weighted ? v : v / (eps * eps * dt);
}

PartialInformation partial_information(const Model& m, const PartialConfig& c, const Vec& eta,
                                       double T) {
  check_config(m, c);
  require(c.quad_panels >= 1, "partial_information: need at least one panel");
  const auto fr = free_indices(m, c);
  const OdeSolution sol = solve_eta(m, c, eta, T, 0, 0.0, true, true);
  const Integrand f(m, c, fr, eta_to_theta(m, c, eta), sol);
  const int q = static_cast<int>(fr.size()) + 1;
  PartialInformation r = integrate(f, q, T, c.quad_panels);
  if (c.richardson) {
    PartialInformation fine = integrate(f, q, T, 2 * c.quad_panels);
    const double scale = std::max(fine.V.norm(), fine.Lambda.norm());
    fine.quad_rel_change =
        std::max((fine.V - r.V).norm(), (fine.Lambda - r.Lambda).norm()) / std::max(scale, 1e-300);
    r = fine;
  }
  r.cond = condition_number(r.Lambda);
  return r;
}

EstimateResult estimate_partial(const Model& m, const SampledSeries& obs, double eps,
                                const Vec& eta_init, const PartialConfig& c) {
  check_config(m, c);
  require(obs.dim() == m.dim(), "estimate_partial: dimension mismatch");
  require(obs.n() >= 2, "estimate_partial: need at least two observations");
  const auto fr = free_indices(m, c);
  require(eta_init.size() == static_cast<int>(fr.size()) + 1,
          "estimate_partial: eta_init has the wrong size");
  PartialConfig cc = c;
  cc.x0[c.observed] = obs.x0[c.observed];
  std::vector<double> y(obs.n() + 1);
  for (int k = 0; k <= obs.n(); ++k) y[k] = obs.at(k)[c.observed];

  auto to_u = [&](const Vec& eta) { return cc.transform ? eta_to_u(m, cc, fr, eta) : eta; };
  auto to_eta = [&](const Vec& u) { return cc.transform ? u_to_eta(m, cc, fr, u) : u; };
  const Objective f = [&](const Vec& u) {
    const Vec eta = to_eta(u);
    const double xi = eta[eta.size() - 1];
    if (!(xi > cc.xi_lo && xi < cc.xi_hi)) return kInf;
    try {
      m.check_theta(eta_to_theta(m, cc, eta));
      const double v = contrast_partial(m, cc, eta, y, eps, obs.dt);
      return std::isfinite(v) ? v : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };
  const OptimResult r = minimize(f, to_u(eta_init), cc.nm, cc.bfgs);
  if (!std::isfinite(r.f)) throw NumericalError("estimate_partial: contrast is not finite near init");

  EstimateResult e;
  for (int i : fr) e.names.push_back(m.layout().names[i]);
  e.names.push_back("xi");
  e.theta = to_eta(r.x);
  e.converged = r.converged;
  const PartialInformation info = partial_information(m, cc, e.theta, obs.horizon());
  e.matrices["Lambda"] = info.Lambda;
  e.matrices["V"] = info.V;
  if (!(info.cond < 1e12)) {
    std::ostringstream msg;
    msg << "estimate_partial: Lambda is numerically singular (condition number " << info.cond
        << "); eta is not numerically identifiable";
    throw NumericalError(msg.str());
  }
  const Mat Li = info.Lambda.inverse();
  e.cov = eps * eps * Li * info.V * Li;
  e.cov = (0.5 * (e.cov + e.cov.transpose())).eval();
  e.rate_tag = "eps^2";
  const double n = obs.n();
  e.diagnostics = {{"contrast", r.f},
                   {"iterations", double(r.iterations)},
                   {"evaluations", double(r.evaluations)},
                   {"n", n},
                   {"eps", eps},
                   {"n_eps2", n * eps * eps},
                   {"cond_lambda", info.cond},
                   {"quad_rel_change", info.quad_rel_change}};
  return e;
}

Vec ou2d_d(double a, double bp, double h, double x1_0, double t) {
  require(h != 0.0, "ou2d_d: h must be nonzero");
  const double eat = std::exp(a * t), ect = std::exp((a + h) * t);
  Vec D(3);
  D << -(x1_0 - bp / h) * eat - (bp / h + bp * t) * ect, -ect, -bp * t * ect;
  return D;
}

Ou2dClosedForm ou2d_closed_form(double a, double bp, double h, double sigma, double T,
                                double x1_0, double b) {
  require(h != 0.0, "ou2d_closed_form: h must be nonzero");
  require(sigma > 0.0, "ou2d_closed_form: sigma must be positive");
  require(T > 0.0, "ou2d_closed_form: T must be positive");
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr double tol = 1e-10;
  constexpr unsigned depth = 12;
  const double c = a + h;
  auto Di = [&](int i, double t) { return ou2d_d(a, bp, h, x1_0, t)[i]; };
  // Cov(x2(s), x2(t)) / sigma^2 = e^{c|t-s|} (e^{2c min(s,t)} - 1) / (2c).
  auto K = [&](double s, double t) {
    const double lo = std::min(s, t);
    const double g = c != 0.0 ? std::expm1(2.0 * c * lo) / (2.0 * c) : lo;
    return std::exp(c * std::abs(t - s)) * g;
  };
  Ou2dClosedForm out{Mat::Zero(3, 3), Mat::Zero(3, 3)};
  Mat V3 = Mat::Zero(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const double lij =
          GK::integrate([&](double t) { return Di(i, t) * Di(j, t); }, 0.0, T, depth, tol);
      out.Lambda(i, j) = out.Lambda(j, i) = lij;
      auto inner = [&](double t) {
        auto g = [&](double s) { return Di(i, s) * K(s, t); };
        double v = 0.0;
        if (t > 0.0) v += GK::integrate(g, 0.0, t, depth, tol);
        if (t < T) v += GK::integrate(g, t, T, depth, tol);
        return v;
      };
      const double vij =
          GK::integrate([&](double t) { return Di(j, t) * inner(t); }, 0.0, T, depth, tol);
      V3(i, j) = V3(j, i) = sigma * sigma * b * b * vij;
    }
  }
  out.V = sigma * sigma * out.Lambda + V3;
  return out;
}

std::vector<double> gamma1(const Model& m, const PartialConfig& c, const Vec& eta0,
                           const Vec& eta, const std::vector<double>& times) {
  check_config(m, c);
  double T = 0.0;
  for (double t : times) {
    require(t >= 0.0, "gamma1: times must be nonnegative");
    T = std::max(T, t);
  }
  require(T > 0.0, "gamma1: need a positive time");
  const OdeSolution s0 = solve_eta(m, c, eta0, T, 0, 0.0, false, false);
  const OdeSolution s1 = solve_eta(m, c, eta, T, 0, 0.0, false, false);
  const Vec th0 = eta_to_theta(m, c, eta0), th = eta_to_theta(m, c, eta);
  const int o = c.observed;
  std::vector<double> g(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const Vec z0 = s0.z(t), z = s1.z(t);
    Mat dth, dz;
    m.drift_jacobians(th, t, z, dth, dz);
    g[k] = m.drift(th0, t, z0)[o] - m.drift(th, t, z)[o] - dz(o, o) * (z0[o] - z[o]);
  }
  return g;
}

Mat sir_lambda_r0d(const Mat& L, const Vec& eta) {
  require(L.rows() == 3 && L.cols() == 3 && eta.size() == 3, "sir_lambda_r0d: expects 3x3");
  const double lam = eta[0], gam = eta[1];
  const double r0 = lam / gam, d = 1.0 / gam;
  // J = d(lambda, gamma, s0) / d(R0, d, s0)
  Mat J = Mat::Zero(3, 3);
  J(0, 0) = 1.0 / d;
  J(0, 1) = -r0 / (d * d);
  J(1, 1) = -1.0 / (d * d);
  J(2, 2) = 1.0;
  return J.transpose() * L * J;
}

IdentifiabilityReport sir_partial_identifiability_check(const Vec& eta0, double i0, double T,
                                                        const std::vector<Vec>& grid,
                                                        double tolerance) {
  require(eta0.size() == 3, "sir_partial_identifiability_check: eta = (lambda, gamma, s0)");
  const ModelPtr m = build_model("sir");
  PartialConfig c;
  c.observed = 1;
  c.hidden = 0;
  c.free = {0, 1};
  c.theta = eta0.head(2);
  c.x0 = Vec(2);
  c.x0 << eta0[2], i0;
  std::vector<double> times(401);
  for (int k = 0; k <= 400; ++k) times[k] = T * k / 400.0;
  IdentifiabilityReport r;
  r.tolerance = tolerance;
  for (const Vec& eta : grid) {
    const auto g = gamma1(*m, c, eta0, eta, times);
    double mx = 0.0;
    for (double v : g) mx = std::max(mx, std::abs(v));
    r.etas.push_back(eta);
    r.max_abs_gamma1.push_back(mx);
    if ((eta - eta0).norm() > 1e-12 && !(mx > tolerance)) r.identifiable = false;
  }
  const PartialInformation info = partial_information(*m, c, eta0, T);
  r.Lambda = sir_lambda_r0d(info.Lambda, eta0);
  Eigen::SelfAdjointEigenSolver<Mat> es(r.Lambda);
  r.eigenvalues = es.eigenvalues();
  r.cond = condition_number(r.Lambda);
  return r;
}

}  // namespace epi

#include "epiinfer/ode.hpp"

#include <algorithm>
#include <cmath>

namespace epi {

namespace {

struct Layout {
  int p, a, q;
  bool sens, dpsi, cov;
  int off_psi, off_s, off_dpsi, off_c, size;
};

Layout make_layout(int p, int a, int nh, const OdeOptions& o) {
  Layout L{};
  L.p = p;
  L.a = a;
  L.q = a + nh;
  L.sens = o.sensitivities || o.resolvent_sensitivities;
  L.dpsi = o.resolvent_sensitivities;
  L.cov = o.covariance;
  int off = p;
  L.off_psi = off;
  off += p * p;
  L.off_s = off;
  if (L.sens) off += p * L.q;
  L.off_dpsi = off;
  if (L.dpsi) off += L.q * p * p;
  L.off_c = off;
  if (L.cov) off += p * p;
  L.size = off;
  return L;
}

class Rhs {
 public:
  Rhs(const Model& m, const Vec& th, const Layout& L) : m_(m), th_(th), L_(L) {}

  void operator()(double t, const Vec& y, Vec& dy) const {
    const int p = L_.p;
    const Vec z = y.head(p);
    Mat dth, J;
    m_.drift_jacobians(th_, t, z, dth, J);
    dy.resize(L_.size);
    dy.head(p) = m_.drift(th_, t, z);
    Eigen::Map<const Mat> psi(y.data() + L_.off_psi, p, p);
    Eigen::Map<Mat>(dy.data() + L_.off_psi, p, p) = J * psi;
    if (L_.sens) {
      Eigen::Map<const Mat> S(y.data() + L_.off_s, p, L_.q);
      Mat dS = J * S;
      dS.leftCols(L_.a) += dth.leftCols(L_.a);
      Eigen::Map<Mat>(dy.data() + L_.off_s, p, L_.q) = dS;
      if (L_.dpsi) {
        for (int i = 0; i < L_.q; ++i) {
          const Mat dJ = directional_jacobian(t, z, S.col(i), i);
          Eigen::Map<const Mat> dP(y.data() + L_.off_dpsi + i * p * p, p, p);
          Eigen::Map<Mat>(dy.data() + L_.off_dpsi + i * p * p, p, p) = J * dP + dJ * psi;
        }
      }
    }
    if (L_.cov) {
      Eigen::Map<const Mat> C(y.data() + L_.off_c, p, p);
      Mat dC = J * C + C * J.transpose() + m_.diffusion(th_, t, z);
      Eigen::Map<Mat>(dy.data() + L_.off_c, p, p) = 0.5 * (dC + dC.transpose());
    }
  }

 private:
  // Total derivative of the state Jacobian along parameter i, i.e.
  // d/deta_i J(alpha, z(eta, t)), by central differences of the analytic
  // Jacobian.
  Mat directional_jacobian(double t, const Vec& z, const Vec& dzi, int i) const {
    double h = 1e-6;
    Vec thp = th_, thm = th_;
    if (i < L_.a) {
      h = 1e-6 * std::max(std::abs(th_[i]), 1e-2);
      thp[i] += h;
      thm[i] -= h;
    }
    Mat d1, Jp, Jm;
    m_.drift_jacobians(thp, t, z + h * dzi, d1, Jp);
    m_.drift_jacobians(thm, t, z - h * dzi, d1, Jm);
    return (Jp - Jm) / (2.0 * h);
  }

  const Model& m_;
  const Vec& th_;
  const Layout& L_;
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeSolution solve_ode(const Model& m, const Vec& theta, const Vec& x0, double T,
                      const OdeOptions& opts) {
  require(T > 0.0 && std::isfinite(T), "solve_ode: T must be positive");
  require(x0.size() == m.dim(), "solve_ode: x0 has wrong dimension");
  require(opts.tol > 0.0, "solve_ode: tol must be positive");
  m.check_theta(theta);
  for (int h : opts.hidden) require(h >= 0 && h < m.dim(), "solve_ode: hidden index out of range");
  if (!m.admissible(x0)) throw InvalidArgument("solve_ode: x0 outside admissible set");

  const int p = m.dim();
  const int nh = static_cast<int>(opts.hidden.size());
  const Layout L = make_layout(p, m.n_drift(), nh, opts);
  const Rhs f(m, theta, L);

  OdeSolution sol;
  sol.p_ = p;
  sol.q_ = L.sens ? L.q : 0;
  sol.T_ = T;
  sol.x0_ = x0;
  sol.theta_ = theta;
  sol.sens_ = L.sens;
  sol.dpsi_ = L.dpsi;
  sol.cov_ = L.cov;
  sol.off_psi_ = L.off_psi;
  sol.off_s_ = L.off_s;
  sol.off_dpsi_ = L.off_dpsi;
  sol.off_c_ = L.off_c;

  Vec y = Vec::Zero(L.size);
  y.head(p) = x0;
  Eigen::Map<Mat>(y.data() + L.off_psi, p, p).setIdentity();
  if (L.sens)
    for (int k = 0; k < nh; ++k) y[L.off_s + (L.a + k) * p + opts.hidden[k]] = 1.0;

  std::vector<double> stops;
  for (double s : opts.stops)
    if (s > 0.0 && s < T) stops.push_back(s);
  stops.push_back(T);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end(),
                          [T](double u, double v) { return std::abs(u - v) <= 1e-13 * T; }),
              stops.end());

  const double hmax = opts.h_max > 0.0 ? opts.h_max : T / 256.0;
  const double tol = opts.tol;
  double t = 0.0;
  Vec k1, k2, k3, k4, k5, k6, k7, ytmp, ynew(L.size);
  f(t, y, k1);
  sol.t_.push_back(t);
  sol.y_.push_back(y);
  sol.f_.push_back(k1);

  double h = std::min(hmax, 1e-3 * T);
  std::size_t next_stop = 0;
  int steps = 0;
  while (t < T) {
    if (++steps > opts.max_steps) throw NumericalError("solve_ode: step limit exceeded");
    bool hit = false;
    double target = stops[next_stop];
    if (t + h >= target - 1e-14 * T) {
      h = target - t;
      hit = true;
    }
    ytmp = y + h * a21 * k1;
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, ynew, k7);
    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (int i = 0; i < L.size; ++i) {
      const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      en = std::max(en, std::abs(err[i]) / sc);
    }
    if (!std::isfinite(en)) {
      h *= 0.25;
      if (h < 1e-14 * T) throw NumericalError("solve_ode: non-finite solution (blow-up)");
      continue;
    }
    if (en <= 1.0) {
      t = hit ? target : t + h;
      y = ynew;
      k1 = k7;
      if (!m.admissible(y.head(p), 1e-6))
        throw NumericalError("solve_ode: trajectory left the admissible set");
      sol.t_.push_back(t);
      sol.y_.push_back(y);
      sol.f_.push_back(k1);
      if (hit) ++next_stop;
    }
    const double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    h = std::min(hmax, h * std::clamp(fac, 0.2, 5.0));
    if (h < 1e-14 * T) throw NumericalError("solve_ode: step size underflow");
  }
  return sol;
}

OdeSolution sensitivities(const Model& m, const Vec& theta, const Vec& x0, double T,
                          OdeOptions opts) {
  opts.sensitivities = true;
  opts.resolvent_sensitivities = true;
  return solve_ode(m, theta, x0, T, opts);
}

void OdeSolution::check_time(double t) const {
  if (!(t >= -1e-12 * T_ && t <= T_ * (1.0 + 1e-12)))
    throw InvalidArgument("OdeSolution: time outside [0, T]");
}

Vec OdeSolution::state(double t) const {
  check_time(t);
  t = std::clamp(t, 0.0, T_);
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = (it == t_.begin()) ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
  if (i + 1 >= t_.size()) return y_.back();
  const double t0 = t_[i], t1 = t_[i + 1], h = t1 - t0;
  const double u = (t - t0) / h;
  if (u <= 0.0) return y_[i];
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2,
               h11 = u3 - u2;
  return h00 * y_[i] + h10 * h * f_[i] + h01 * y_[i + 1] + h11 * h * f_[i + 1];
}

Vec OdeSolution::z(double t) const { return state(t).head(p_); }

Mat OdeSolution::psi(double t) const {
  const Vec y = state(t);
  return Eigen::Map<const Mat>(y.data() + off_psi_, p_, p_);
}

Mat OdeSolution::resolvent(double t, double s) const {
  require(s <= t + 1e-12 * T_, "resolvent: requires s <= t");
  if (t == s) return Mat::Identity(p_, p_);
  const Mat Pt = psi(t), Ps = psi(s);
  return Ps.transpose().partialPivLu().solve(Pt.transpose()).transpose();
}

Mat OdeSolution::dz(double t) const {
  require(sens_, "OdeSolution: sensitivities were not computed");
  const Vec y = state(t);
  return Eigen::Map<const Mat>(y.data() + off_s_, p_, q_);
}

std::vector<Mat> OdeSolution::dpsi(double t) const {
  require(dpsi_, "OdeSolution: resolvent sensitivities were not computed");
  const Vec y = state(t);
  std::vector<Mat> out;
  for (int i = 0; i < q_; ++i)
    out.emplace_back(Eigen::Map<const Mat>(y.data() + off_dpsi_ + i * p_ * p_, p_, p_));
  return out;
}

std::vector<Mat> OdeSolution::dresolvent(double t, double s) const {
  require(s <= t + 1e-12 * T_, "dresolvent: requires s <= t");
  const Mat Pt = psi(t);
  const Mat Psinv = psi(s).inverse();
  const auto dt = dpsi(t), ds = dpsi(s);
  std::vector<Mat> out;
  for (int i = 0; i < q_; ++i) out.push_back(dt[i] * Psinv - Pt * Psinv * ds[i] * Psinv);
  return out;
}

Mat OdeSolution::covariance(double t) const {
  require(cov_, "OdeSolution: covariance was not computed");
  const Vec y = state(t);
  return Eigen::Map<const Mat>(y.data() + off_c_, p_, p_);
}

}  // namespace epi

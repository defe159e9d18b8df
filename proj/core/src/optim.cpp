#include "epiinfer/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epi {

namespace {
double safe_eval(const Objective& f, const Vec& x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}
}  // namespace

OptimResult nelder_mead(const Objective& f, const Vec& x0, const NelderMeadOptions& o) {
  const int n = static_cast<int>(x0.size());
  OptimResult r;
  std::vector<Vec> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += (x0[i] != 0.0 ? o.step * std::abs(x0[i]) : o.step);
  for (int i = 0; i <= n; ++i) fv[i] = safe_eval(f, pts[i], r.evaluations);
  std::vector<int> idx(n + 1);
  for (r.iterations = 0; r.iterations < o.max_iter; ++r.iterations) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], worst = idx[n], second = idx[n - 1];
    double xs = 0.0;
    for (int i = 1; i <= n; ++i) xs = std::max(xs, (pts[idx[i]] - pts[best]).cwiseAbs().maxCoeff());
    const double fs = std::abs(fv[worst] - fv[best]);
    if (fs <= o.ftol * (std::abs(fv[best]) + 1e-30) + 1e-300 && xs <= o.xtol * (1.0 + pts[best].norm())) {
      r.converged = true;
      break;
    }
    Vec c = Vec::Zero(n);
    for (int i = 0; i < n; ++i) c += pts[idx[i]];
    c /= n;
    const Vec xr = c + (c - pts[worst]);
    const double fr = safe_eval(f, xr, r.evaluations);
    if (fr < fv[best]) {
      const Vec xe = c + 2.0 * (c - pts[worst]);
      const double fe = safe_eval(f, xe, r.evaluations);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Vec xc = outside ? Vec(c + 0.5 * (xr - c)) : Vec(c + 0.5 * (pts[worst] - c));
    const double fc = safe_eval(f, xc, r.evaluations);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (int i = 1; i <= n; ++i) {
      pts[idx[i]] = pts[best] + 0.5 * (pts[idx[i]] - pts[best]);
      fv[idx[i]] = safe_eval(f, pts[idx[i]], r.evaluations);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  r.x = pts[it - fv.begin()];
  r.f = *it;
  r.message = r.converged ? "nelder-mead converged" : "nelder-mead hit iteration limit";
  return r;
}

Vec numeric_gradient(const Objective& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + hi;
    xm[i] = x[i] - hi;
    g[i] = (f(xp) - f(xm)) / (2.0 * hi);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

Mat numeric_hessian(const Objective& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Mat H(n, n);
  const double f0 = f(x);
  Vec hs(n);
  for (int i = 0; i < n; ++i) hs[i] = h * std::max(1.0, std::abs(x[i]));
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += hs[i];
    xm[i] -= hs[i];
    H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (hs[i] * hs[i]);
    for (int j = 0; j < i; ++j) {
      Vec a = x, b = x, c = x, d = x;
      a[i] += hs[i]; a[j] += hs[j];
      b[i] += hs[i]; b[j] -= hs[j];
      c[i] -= hs[i]; c[j] += hs[j];
      d[i] -= hs[i]; d[j] -= hs[j];
      H(i, j) = H(j, i) = (f(a) - f(b) - f(c) + f(d)) / (4.0 * hs[i] * hs[j]);
    }
  }
  return H;
}

OptimResult bfgs(const Objective& f, const Vec& x0, const BfgsOptions& o, const Gradient& grad) {
  const int n = static_cast<int>(x0.size());
  OptimResult r;
  auto g_of = [&](const Vec& x) {
    if (grad) return grad(x);
    r.evaluations += 2 * n;
    return numeric_gradient(f, x, o.fd_step);
  };
  Vec x = x0;
  double fx = safe_eval(f, x, r.evaluations);
  if (!std::isfinite(fx)) {
    r.x = x;
    r.f = fx;
    r.message = "bfgs: objective not finite at start";
    return r;
  }
  Vec g = g_of(x);
  Mat H = Mat::Identity(n, n);
  for (r.iterations = 0; r.iterations < o.max_iter; ++r.iterations) {
    if (g.cwiseAbs().maxCoeff() <= o.gtol * std::max(1.0, std::abs(fx))) {
      r.converged = true;
      break;
    }
    Vec d = -H * g;
    if (d.dot(g) >= 0.0) {
      H.setIdentity();
      d = -g;
    }
    // Backtracking line search with Armijo condition.
    double step = 1.0, fn = 0.0;
    Vec xn;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * d;
      fn = safe_eval(f, xn, r.evaluations);
      if (fn <= fx + 1e-4 * step * g.dot(d)) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) {
      r.converged = (g.cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, std::abs(fx)));
      r.message = "bfgs: line search failed";
      break;
    }
    const Vec gn = g_of(xn);
    const Vec s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (r.iterations == 0) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const double df = fx - fn;
    x = xn;
    fx = fn;
    g = gn;
    if (df >= 0.0 && df <= 1e-15 * std::max(1.0, std::abs(fx)) && s.norm() <= 1e-12 * (1.0 + x.norm())) {
      r.converged = true;
      break;
    }
  }
  r.x = x;
  r.f = fx;
  if (r.message.empty()) r.message = r.converged ? "bfgs converged" : "bfgs hit iteration limit";
  return r;
}

OptimResult minimize(const Objective& f, const Vec& x0, const NelderMeadOptions& nm,
                     const BfgsOptions& bf) {
  OptimResult a = nelder_mead(f, x0, nm);
  OptimResult b = bfgs(f, a.x, bf);
  b.evaluations += a.evaluations;
  b.iterations += a.iterations;
  if (a.f < b.f) {
    a.evaluations = b.evaluations;
    a.message = "nelder-mead (bfgs did not improve)";
    return a;
  }
  b.converged = b.converged || a.converged;
  return b;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                 int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw NumericalError("find_root: no sign change on bracket");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    if (hi - lo <= tol * std::max(1.0, std::abs(x))) return 0.5 * (lo + hi);
    const double h = 1e-7 * std::max(1e-3, std::abs(x));
    const double d = (f(x + h) - f(x - h)) / (2.0 * h);
    double xn = (d != 0.0 && std::isfinite(d)) ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= tol * std::max(1.0, std::abs(x))) return xn;
    x = xn;
  }
  return x;
}

}  // namespace epi

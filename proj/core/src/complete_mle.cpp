#include "epiinfer/complete_mle.hpp"

#include "epiinfer/ode.hpp"
#include "epiinfer/optim.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace epi {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

SirSufficient sir_sufficient(const JumpPath& path) {
  require(path.model && path.model->name() == "sir", "sir_sufficient: path must come from sir");
  require(path.exact(), "sir_sufficient: needs an exact (event-by-event) path");
  SirSufficient s;
  double S = path.x0[0], I = path.x0[1], t = 0.0;
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    const double tk = path.times[k];
    s.int_si += S * I * (tk - t);
    s.int_i += I * (tk - t);
    t = tk;
    if (path.jumps[k] == 0) {
      S -= 1;
      I += 1;
      s.infections += 1;
    } else {
      I -= 1;
      s.recoveries += 1;
    }
  }
  s.int_si += S * I * (path.T - t);
  s.int_i += I * (path.T - t);
  return s;
}

Mat jump_fisher_information(const Model& m, const Vec& theta, const Vec& z0, double T,
                            int intervals) {
  require(m.kind() == ModelKind::Jump, "jump_fisher_information: jump model required");
  if (intervals % 2) ++intervals;
  const OdeSolution sol = solve_ode(m, theta, z0, T);
  const int np = m.n_params();
  Mat I = Mat::Zero(np, np);
  const double h = T / intervals;
  for (int k = 0; k <= intervals; ++k) {
    const double t = k * h;
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const Vec z = sol.z(t);
    const Vec r = m.rates(theta, t, z);
    Mat dth, dz;
    m.rate_jacobians(theta, t, z, dth, dz);
    for (int j = 0; j < m.n_jumps(); ++j) {
      if (r[j] <= 1e-300) continue;
      const Vec g = dth.row(j).transpose();
      I += w * (g * g.transpose()) / r[j];
    }
  }
  return I * (h / 3.0);
}

EstimateResult sir_mle_complete(const JumpPath& path, bool with_cov) {
  const SirSufficient s = sir_sufficient(path);
  EstimateResult e;
  e.names = {"lambda", "gamma"};
  e.theta = Vec(2);
  e.rate_tag = "1/N";
  e.theta[0] = (s.infections > 0 && s.int_si > 0) ? path.N * s.infections / s.int_si : kNaN;
  e.theta[1] = (s.recoveries > 0 && s.int_i > 0) ? s.recoveries / s.int_i : kNaN;
  if (std::isnan(e.theta[0])) e.flags.push_back("lambda_undefined");
  if (std::isnan(e.theta[1])) e.flags.push_back("gamma_undefined");
  e.diagnostics = {{"infections", s.infections},
                   {"recoveries", s.recoveries},
                   {"int_SI", s.int_si},
                   {"int_I", s.int_i},
                   {"N", path.N}};
  e.cov = Mat::Constant(2, 2, kNaN);
  if (with_cov && e.theta.allFinite()) {
    const Mat I = jump_fisher_information(*path.model, e.theta, path.x0 / path.N, path.T);
    e.matrices["fisher"] = I;
    e.cov = I.inverse() / path.N;
  }
  return e;
}

R0Estimate r0_estimate(const EstimateResult& est) {
  require(est.theta.size() == 2, "r0_estimate: expects (lambda, gamma)");
  const double lam = est.theta[0], gam = est.theta[1];
  if (!(gam > 0.0) || !std::isfinite(lam)) throw InvalidArgument("r0_estimate: gamma_hat must be > 0");
  Vec g(2);
  g << 1.0 / gam, -lam / (gam * gam);
  R0Estimate r;
  r.r0 = lam / gam;
  r.variance = est.cov.allFinite() ? g.dot(est.cov * g) : kNaN;
  return r;
}

int CtmcPath::state_at(double t) const {
  int s = x0;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) s = states[k];
  return s;
}

CtmcPath simulate_ctmc(const Mat& Q, int x0, double T, SeedSpec seed) {
  const int S = static_cast<int>(Q.rows());
  require(Q.cols() == S && x0 >= 0 && x0 < S, "simulate_ctmc: bad Q or x0");
  Rng rng(seed, 6);
  CtmcPath p{S, x0, T, {}, {}};
  int x = x0;
  double t = 0.0;
  for (;;) {
    const double out = -Q(x, x);
    if (out <= 0.0) break;
    t += rng.exponential(out);
    if (t > T) break;
    double u = rng.uniform() * out;
    int y = -1;
    for (int j = 0; j < S; ++j) {
      if (j == x) continue;
      u -= Q(x, j);
      y = j;
      if (u < 0.0) break;
    }
    x = y;
    p.times.push_back(t);
    p.states.push_back(x);
  }
  return p;
}

std::vector<int> simulate_markov_chain(const Mat& P, int x0, int n, SeedSpec seed) {
  const int S = static_cast<int>(P.rows());
  require(P.cols() == S && x0 >= 0 && x0 < S, "simulate_markov_chain: bad P or x0");
  Rng rng(seed, 7);
  std::vector<int> x{x0};
  for (int k = 0; k < n; ++k) {
    double u = rng.uniform();
    int y = S - 1;
    for (int j = 0; j < S; ++j) {
      u -= P(x.back(), j);
      if (u < 0.0) {
        y = j;
        break;
      }
    }
    x.push_back(y);
  }
  return x;
}

TransitionCounts ctmc_counts(const CtmcPath& path) {
  TransitionCounts c{Mat::Zero(path.n_states, path.n_states), Vec::Zero(path.n_states)};
  int x = path.x0;
  double t = 0.0;
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    c.R[x] += path.times[k] - t;
    c.N(x, path.states[k]) += 1;
    x = path.states[k];
    t = path.times[k];
  }
  c.R[x] += path.T - t;
  return c;
}

TransitionCounts chain_counts(const std::vector<int>& seq, int n_states) {
  require(!seq.empty(), "chain_counts: empty sequence");
  TransitionCounts c{Mat::Zero(n_states, n_states), Vec::Zero(n_states)};
  for (int s : seq) require(s >= 0 && s < n_states, "chain_counts: state label out of range");
  for (std::size_t k = 1; k < seq.size(); ++k) c.N(seq[k - 1], seq[k]) += 1;
  c.R = c.N.rowwise().sum();
  return c;
}

QmatrixEstimate qmatrix_mle(const TransitionCounts& c) {
  const int S = static_cast<int>(c.N.rows());
  QmatrixEstimate q{Mat::Zero(S, S), std::vector<bool>(S, false)};
  for (int k = 0; k < S; ++k) {
    if (c.R[k] <= 0.0) {
      q.missing[k] = true;
      continue;
    }
    for (int l = 0; l < S; ++l)
      if (l != k) q.Q(k, l) = c.N(k, l) / c.R[k];
    q.Q(k, k) = -(q.Q.row(k).sum());
  }
  return q;
}

QmatrixEstimate qmatrix_mle(const CtmcPath& path) { return qmatrix_mle(ctmc_counts(path)); }

ChainEstimate chain_transition_mle(const std::vector<int>& seq, int n_states) {
  require(seq.size() >= 2, "chain_transition_mle: sequence too short");
  const TransitionCounts c = chain_counts(seq, n_states);
  const int S = n_states;
  ChainEstimate e{Mat::Zero(S, S), Mat::Zero(S * S, S * S), std::vector<bool>(S, false)};
  for (int i = 0; i < S; ++i) {
    const double ni = c.R[i];
    if (ni <= 0.0) {
      e.missing[i] = true;
      continue;
    }
    e.P.row(i) = c.N.row(i) / ni;
    for (int j = 0; j < S; ++j)
      for (int k = 0; k < S; ++k)
        e.cov(i * S + j, i * S + k) = ((j == k ? e.P(i, j) : 0.0) - e.P(i, j) * e.P(i, k)) / ni;
  }
  return e;
}

double chain_loglik(const TransitionCounts& c, const Mat& P) {
  double l = 0.0;
  for (int i = 0; i < c.N.rows(); ++i)
    for (int j = 0; j < c.N.cols(); ++j) {
      if (c.N(i, j) <= 0.0) continue;
      if (!(P(i, j) > 0.0)) return -std::numeric_limits<double>::infinity();
      l += c.N(i, j) * std::log(P(i, j));
    }
  return l;
}

EstimateResult chain_parametric_mle(const TransitionCounts& c, const TransitionFamily& q_param,
                                    const Vec& theta0, const std::vector<ParamDomain>& domains,
                                    std::vector<std::string> names) {
  require(static_cast<int>(domains.size()) == theta0.size(), "chain_parametric_mle: domain size");
  auto negll_theta = [&](const Vec& th) {
    const double l = chain_loglik(c, q_param(th));
    return std::isfinite(l) ? -l : std::numeric_limits<double>::infinity();
  };
  auto negll_u = [&](const Vec& u) { return negll_theta(from_unconstrained(u, domains)); };
  NelderMeadOptions nm;
  nm.step = 0.3;
  const OptimResult r = minimize(negll_u, to_unconstrained(theta0, domains), nm);
  EstimateResult e;
  e.theta = from_unconstrained(r.x, domains);
  e.names = names.empty() ? std::vector<std::string>(theta0.size(), "") : std::move(names);
  e.rate_tag = "1/n";
  e.converged = r.converged;
  e.diagnostics = {{"loglik", -r.f}, {"iterations", double(r.iterations)},
                   {"evaluations", double(r.evaluations)}};
  if (!r.converged) throw NumericalError("chain_parametric_mle: optimizer did not converge");
  // Observed information in the original coordinates; the step shrinks near
  // the unit-interval boundary.
  const int d = static_cast<int>(theta0.size());
  Mat H(d, d);
  {
    Vec hs(d);
    for (int i = 0; i < d; ++i) {
      double h = 1e-4 * std::max(std::abs(e.theta[i]), 1e-3);
      if (domains[i] == ParamDomain::Unit)
        h = std::min(h, 0.25 * std::min(e.theta[i], 1.0 - e.theta[i]));
      hs[i] = h;
    }
    const double f0 = negll_theta(e.theta);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        Vec a = e.theta, b = e.theta, cc = e.theta, dd = e.theta;
        if (i == j) {
          a[i] += hs[i];
          b[i] -= hs[i];
          H(i, i) = (negll_theta(a) - 2 * f0 + negll_theta(b)) / (hs[i] * hs[i]);
          continue;
        }
        a[i] += hs[i]; a[j] += hs[j];
        b[i] += hs[i]; b[j] -= hs[j];
        cc[i] -= hs[i]; cc[j] += hs[j];
        dd[i] -= hs[i]; dd[j] -= hs[j];
        H(i, j) = H(j, i) = (negll_theta(a) - negll_theta(b) - negll_theta(cc) + negll_theta(dd)) /
                            (4 * hs[i] * hs[j]);
      }
  }
  e.matrices["observed_information"] = H;
  e.cov = H.inverse();
  e.diagnostics["n"] = c.N.sum();
  return e;
}

GreenwoodEstimate greenwood_estimators(const std::vector<double>& s) {
  require(s.size() >= 2, "greenwood_estimators: need at least two generations");
  for (std::size_t k = 0; k < s.size(); ++k) {
    require(s[k] >= 0.0, "greenwood_estimators: counts must be nonnegative");
    if (k > 0 && s[k] > s[k - 1])
      throw InvalidArgument("greenwood_estimators: susceptible counts must be non-increasing");
  }
  const std::size_t n = s.size() - 1;
  double den = 0.0, cross = 0.0, sq = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    den += s[k - 1];
    cross += s[k - 1] * s[k];
    sq += s[k - 1] * s[k - 1];
  }
  GreenwoodEstimate g;
  g.p_mle = den > 0.0 ? (s[0] - s[n]) / den : 0.0;
  g.p_cls = sq > 0.0 ? 1.0 - cross / sq : 0.0;
  return g;
}

ReedFrostEstimate reed_frost_mle(const std::vector<double>& s, const std::vector<double>& i) {
  require(s.size() == i.size() && s.size() >= 2, "reed_frost_mle: need paired series, length >= 2");
  for (std::size_t k = 0; k + 1 < s.size(); ++k)
    require(std::abs(s[k + 1] + i[k + 1] - s[k]) < 1e-9,
            "reed_frost_mle: series violate s_{k+1} + i_{k+1} = s_k");
  auto score = [&](double q) {
    double g = 0.0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      if (i[k] <= 0.0) continue;
      const double qi = std::exp(i[k] * std::log(q));
      const double one_minus = -std::expm1(i[k] * std::log(q));
      g += i[k] / one_minus * (s[k + 1] - s[k] * qi);
    }
    return g;
  };
  ReedFrostEstimate r;
  const double lo = 1e-12, hi = 1.0 - 1e-12;
  const double glo = score(lo), ghi = score(hi);
  if (ghi >= 0.0) {
    r.q = 1.0;
    r.boundary = true;
    return r;
  }
  if (glo <= 0.0) {
    r.q = 0.0;
    r.boundary = true;
    return r;
  }
  r.q = find_root(score, lo, hi, 1e-12);
  return r;
}

BirthDeathEstimate bd_chain_mle(const std::vector<int>& I) {
  require(I.size() >= 2, "bd_chain_mle: need at least one transition");
  BirthDeathEstimate e;
  for (std::size_t k = 0; k + 1 < I.size(); ++k) {
    require(I[k] >= 0 && I[k + 1] >= 0, "bd_chain_mle: counts must be nonnegative");
    const int d = I[k + 1] - I[k];
    require(std::abs(d) <= 1, "bd_chain_mle: transitions must lie in {-1, 0, +1}");
    if (d == 1)
      e.B += 1;
    else if (d == -1)
      e.D += 1;
    else if (I[k] == 0)
      e.N00 += 1;
    else
      e.R += 1;
  }
  e.n = static_cast<double>(I.size() - 1);
  if (e.D + e.R <= 0.0) throw InvalidArgument("bd_chain_mle: D + R = 0, q is not estimable");
  e.p = e.B / e.n;
  e.q = e.D * (1.0 - e.p) / (e.D + e.R);
  e.q_asymptotic = e.B / (e.D + e.R) * (1.0 - e.p);
  e.boundary = (e.p <= 0.0 || e.q <= 0.0 || e.p + e.q >= 1.0);
  const double p = e.p, q = e.q, r = 1.0 - p - q;
  e.cov = Mat(2, 2);
  if (!e.boundary) {
    e.cov << p * (1 - p), -p * q, -p * q, q * q * (p * p + r) / (p * (1 - p));
    e.cov /= e.n;
  } else {
    e.cov.setConstant(kNaN);
  }
  return e;
}

double offspring_pgf(OffspringFamily family, const Vec& th, double s) {
  switch (family) {
    case OffspringFamily::Poisson:
      return std::exp(th[0] * (s - 1.0));
    case OffspringFamily::Geometric:
      return th[0] * s / (1.0 - (1.0 - th[0]) * s);
    case OffspringFamily::FractionalLinear:
      return th[0] + (1.0 - th[0]) * th[1] * s / (1.0 - (1.0 - th[1]) * s);
    case OffspringFamily::None:
      break;
  }
  throw InvalidArgument("offspring_pgf: no family given");
}

double extinction_probability(OffspringFamily family, const Vec& th) {
  // Iterating g from 0 increases monotonically to the smallest fixed point.
  double s = 0.0;
  for (int it = 0; it < 1000000; ++it) {
    const double n = offspring_pgf(family, th, s);
    if (std::abs(n - s) < 1e-15) return n;
    s = n;
  }
  return s;
}

BranchingEstimate branching_estimators(const std::vector<double>& Zin, OffspringFamily family) {
  require(Zin.size() >= 2, "branching_estimators: need at least two generations");
  require(Zin[0] >= 1.0, "branching_estimators: Z_0 must be >= 1");
  std::vector<double> Z;
  BranchingEstimate b;
  for (double z : Zin) {
    require(z >= 0.0, "branching_estimators: sizes must be nonnegative");
    Z.push_back(z);
    if (z == 0.0) {
      b.extinct = true;
      break;
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < Z.size(); ++i) {
    num += Z[i];
    den += Z[i - 1];
  }
  if (den <= 0.0) throw InvalidArgument("branching_estimators: sum of Z_{i-1} is zero");
  b.m = num / den;
  double rss = 0.0;
  int terms = 0;
  for (std::size_t i = 1; i < Z.size(); ++i) {
    if (Z[i - 1] <= 0.0) continue;
    rss += (Z[i] - b.m * Z[i - 1]) * (Z[i] - b.m * Z[i - 1]) / Z[i - 1];
    ++terms;
  }
  b.sigma2 = rss / terms;
  switch (family) {
    case OffspringFamily::Poisson:
      b.param = Vec::Constant(1, b.m);
      break;
    case OffspringFamily::Geometric:
      b.param = Vec::Constant(1, den / num);
      break;
    case OffspringFamily::FractionalLinear: {
      const double p = 2.0 * b.m / (b.sigma2 + b.m + b.m * b.m);
      b.param = Vec(2);
      b.param << 1.0 - b.m * p, p;
      break;
    }
    case OffspringFamily::None:
      break;
  }
  if (family != OffspringFamily::None) {
    bool valid = true;
    for (int k = 0; k < b.param.size(); ++k) valid = valid && b.param[k] >= 0.0;
    if (family != OffspringFamily::Poisson) valid = valid && (b.param.array() <= 1.0).all();
    if (valid) b.extinction = extinction_probability(family, b.param);
  }
  return b;
}

Ar1Estimate ar1_mle(const std::vector<double>& x) {
  require(x.size() >= 2, "ar1_mle: need at least two values");
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    sxy += x[i - 1] * x[i];
    sxx += x[i - 1] * x[i - 1];
  }
  if (sxx <= 0.0) throw InvalidArgument("ar1_mle: series is identically zero");
  Ar1Estimate e;
  e.a = sxy / sxx;
  double r = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) r += (x[i] - e.a * x[i - 1]) * (x[i] - e.a * x[i - 1]);
  e.gamma2 = r / static_cast<double>(x.size() - 1);
  return e;
}

}  // namespace epi

#include "epiinfer/bayes.hpp"

#include "epiinfer/optim.hpp"
#include "epiinfer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Walks the merged event list from sigma1 and calls on_event(kind, S, I)
// with the counts just before each event (kind 0 = infection, 1 = removal).
template <class F>
EventIntegrals walk(const AugmentedState& s, double T, F&& on_event) {
  EventIntegrals out;
  if (!(s.sigma1 < 0.0) || s.tau.empty()) return out;
  double S = s.S0, I = 1.0, t = s.sigma1;
  std::size_t a = 0, b = 0;
  while (a < s.sigma_rest.size() || b < s.tau.size()) {
    const bool inf = b == s.tau.size() ||
                     (a < s.sigma_rest.size() && s.sigma_rest[a] < s.tau[b]);
    const double te = inf ? s.sigma_rest[a] : s.tau[b];
    if (te < t || te > T) return out;
    out.SI += S * I * (te - t);
    out.I += I * (te - t);
    t = te;
    if (inf) {
      if (S <= 0.0 || I <= 0.0) return out;
      if (!on_event(0, S, I)) return out;
      S -= 1.0;
      I += 1.0;
      ++a;
    } else {
      if (I <= 0.0) return out;
      if (!on_event(1, S, I)) return out;
      I -= 1.0;
      ++b;
    }
  }
  out.SI += S * I * (T - t);
  out.I += I * (T - t);
  out.valid = true;
  return out;
}

double gamma_draw(Rng& rng, double shape, double rate) { return rng.gamma(shape, rate); }

}  // namespace

EventIntegrals augmented_integrals(const AugmentedState& s, double T) {
  return walk(s, T, [](int, double, double) { return true; });
}

double augmented_loglik(const AugmentedState& s, double T) {
  double logprod = 0.0;
  const EventIntegrals in = walk(s, T, [&](int kind, double S, double I) {
    logprod += kind == 0 ? std::log(s.lambda * S * I) : std::log(s.gamma * I);
    return true;
  });
  if (!in.valid) return kNegInf;
  return logprod - s.lambda * in.SI - s.gamma * in.I;
}

McmcChains mcmc_oneill_roberts(const std::vector<double>& tau_in, int S0, const McmcOptions& o,
                               SeedSpec seed) {
  require(!tau_in.empty(), "mcmc: need at least one removal time");
  require(S0 >= 0, "mcmc: S0 must be nonnegative");
  require(o.lambda_prior.shape > 0 && o.lambda_prior.rate > 0 && o.gamma_prior.shape > 0 &&
              o.gamma_prior.rate > 0 && o.rho > 0,
          "mcmc: prior hyperparameters must be positive");
  require(o.iterations > o.burn_in && o.burn_in >= 0, "mcmc: need iterations > burn_in >= 0");
  const double psum = o.move_probs[0] + o.move_probs[1] + o.move_probs[2];
  require(psum > 0 && *std::min_element(o.move_probs.begin(), o.move_probs.end()) >= 0,
          "mcmc: move probabilities must be nonnegative and not all zero");

  AugmentedState s;
  s.tau = tau_in;
  std::sort(s.tau.begin(), s.tau.end());
  const double shift = s.tau.front();
  for (double& t : s.tau) t -= shift;
  s.S0 = S0;
  const int n = s.n();
  require(n - 1 <= S0, "mcmc: more removals than individuals");
  const double T = std::isnan(o.T) ? s.tau.back() : o.T - shift;
  require(T >= s.tau.back(), "mcmc: T precedes the last removal");

  // Valid start: every infective present before the first removal.
  s.sigma1 = -1.0;
  for (int j = 1; j < n; ++j) s.sigma_rest.push_back(-1.0 + 0.5 * j / n);
  s.lambda = o.lambda_prior.shape / o.lambda_prior.rate;
  s.gamma = o.gamma_prior.shape / o.gamma_prior.rate;

  auto loglik = [&](const AugmentedState& st) {
    if (o.prior_only) return augmented_integrals(st, T).valid ? 0.0 : kNegInf;
    return augmented_loglik(st, T);
  };

  Rng rng(seed, 8);
  McmcChains ch;
  ch.T = T;
  double ll = loglik(s);
  for (long it = 0; it < o.iterations; ++it) {
    // Gibbs updates.
    const EventIntegrals in = augmented_integrals(s, T);
    const int m = s.m();
    if (o.prior_only) {
      s.lambda = gamma_draw(rng, o.lambda_prior.shape, o.lambda_prior.rate);
      s.gamma = gamma_draw(rng, o.gamma_prior.shape, o.gamma_prior.rate);
      const double up = s.sigma_rest.empty() ? 0.0 : std::min(s.sigma_rest.front(), 0.0);
      s.sigma1 = up - rng.exponential(o.rho);
    } else {
      s.lambda = gamma_draw(rng, o.lambda_prior.shape + m - 1, o.lambda_prior.rate + in.SI);
      s.gamma = gamma_draw(rng, o.gamma_prior.shape + n, o.gamma_prior.rate + in.I);
      const double up = s.sigma_rest.empty() ? 0.0 : std::min(s.sigma_rest.front(), 0.0);
      s.sigma1 = up - rng.exponential(o.rho + s.lambda * S0 + s.gamma);
    }
    ll = loglik(s);

    // One Metropolis-Hastings step on the other infection times. Add and
    // remove are each other's reverse, so their selection probabilities
    // enter the ratio; log(0) -> -inf rejects a move whose reverse is off.
    const double u = rng.uniform() * psum;
    const int type = u < o.move_probs[0] ? 0 : (u < o.move_probs[0] + o.move_probs[1] ? 1 : 2);
    ++ch.proposals[type];
    const double span = T - s.sigma1;
    AugmentedState prop = s;
    double log_ratio = kNegInf;
    const int k = static_cast<int>(s.sigma_rest.size());
    if (type == 0 && k > 0) {
      prop.sigma_rest.erase(prop.sigma_rest.begin() + rng.index(k));
      const double t = s.sigma1 + span * rng.uniform();
      prop.sigma_rest.insert(std::upper_bound(prop.sigma_rest.begin(), prop.sigma_rest.end(), t), t);
      log_ratio = loglik(prop) - ll;
    } else if (type == 1 && k > 0) {
      prop.sigma_rest.erase(prop.sigma_rest.begin() + rng.index(k));
      log_ratio = loglik(prop) - ll + std::log(double(k)) - std::log(span) +
                  std::log(o.move_probs[2] / o.move_probs[1]);
    } else if (type == 2) {
      const double t = s.sigma1 + span * rng.uniform();
      prop.sigma_rest.insert(std::upper_bound(prop.sigma_rest.begin(), prop.sigma_rest.end(), t), t);
      log_ratio = loglik(prop) - ll + std::log(span) - std::log(double(k + 1)) +
                  std::log(o.move_probs[1] / o.move_probs[2]);
    }
    if (log_ratio > kNegInf && std::log(rng.uniform()) < log_ratio) {
      s = std::move(prop);
      ll = loglik(s);
      ch.acceptance[type] += 1.0;
    }

    if (it >= o.burn_in) {
      ch.lambda.push_back(s.lambda);
      ch.gamma.push_back(s.gamma);
      ch.sigma1.push_back(s.sigma1);
      ch.m.push_back(s.m());
      if (o.record_infections) ch.sigma_rest.push_back(s.sigma_rest);
    }
  }
  for (int t = 0; t < 3; ++t)
    ch.acceptance[t] = ch.proposals[t] ? ch.acceptance[t] / ch.proposals[t] : 0.0;
  return ch;
}

SirEvents simulate_sir_events(double lambda, double gamma, int S0, int I0, double t_max, Rng& rng) {
  require(lambda >= 0.0 && gamma >= 0.0, "simulate_sir_events: rates must be nonnegative");
  require(S0 >= 0 && I0 >= 0, "simulate_sir_events: counts must be nonnegative");
  SirEvents e;
  std::vector<int> active;  // indices of infectives
  for (int i = 0; i < I0; ++i) {
    e.infection.push_back(0.0);
    e.removal.push_back(kInf);
    active.push_back(i);
  }
  double t = 0.0;
  int S = S0;
  while (!active.empty()) {
    const double I = static_cast<double>(active.size());
    const double a_inf = lambda * S * I, a_rem = gamma * I;
    const double total = a_inf + a_rem;
    if (!(total > 0.0)) break;
    t += rng.exponential(total);
    if (t > t_max) break;
    if (rng.uniform() * total < a_inf) {
      --S;
      e.infection.push_back(t);
      e.removal.push_back(kInf);
      active.push_back(static_cast<int>(e.infection.size()) - 1);
    } else {
      const std::size_t j = rng.index(active.size());
      e.removal[active[j]] = t;
      active[j] = active.back();
      active.pop_back();
    }
  }
  return e;
}

std::vector<double> removal_times(const SirEvents& e) {
  std::vector<double> r;
  for (double t : e.removal)
    if (std::isfinite(t)) r.push_back(t);
  std::sort(r.begin(), r.end());
  return r;
}

double summary_path_l1(const std::vector<double>& r_obs, const std::vector<double>& r_sim, double T) {
  require(T >= 0.0, "summary_path_l1: T must be nonnegative");
  // Merge jump times; between consecutive breakpoints both curves are constant.
  std::vector<double> a = r_obs, b = r_sim;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0, t = 0.0;
  long ca = 0, cb = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && a[i] <= 0.0) ++ca, ++i;
  while (j < b.size() && b[j] <= 0.0) ++cb, ++j;
  while (t < T) {
    double next = T;
    if (i < a.size()) next = std::min(next, a[i]);
    if (j < b.size()) next = std::min(next, b[j]);
    total += std::abs(double(ca - cb)) * (next - t);
    t = next;
    while (i < a.size() && a[i] <= t) ++ca, ++i;
    while (j < b.size() && b[j] <= t) ++cb, ++j;
  }
  return total;
}

Vec summary_vector(const SirEvents& e, const SummaryConfig& c) {
  require(c.period > 0.0 && c.n_periods >= 1 && c.J0 >= 0 && c.J0 <= c.n_periods,
          "summary_vector: invalid configuration");
  const double T = c.period * c.n_periods;
  Vec s = Vec::Zero(1 + c.n_periods + (c.J0 + 1) + 1);
  int pos = 0;
  for (double r : e.removal)
    if (r <= T) s[0] += 1.0;
  pos = 1;
  for (double r : e.removal) {
    if (!(r <= T)) continue;
    const int j = std::min(c.n_periods - 1, static_cast<int>(r / c.period));
    s[pos + j] += 1.0;
  }
  pos += c.n_periods;
  for (double t : e.infection) {
    if (t <= 0.0) continue;  // initial infectives are not incidence
    const int j = static_cast<int>(t / c.period);
    if (j <= c.J0 && t <= T) s[pos + j] += 1.0;
  }
  pos += c.J0 + 1;
  double sum = 0.0;
  int cnt = 0;
  for (std::size_t k = 0; k < e.infection.size(); ++k) {
    if (e.infection[k] < c.J0 * c.period) {
      sum += std::min(e.removal[k], T) - e.infection[k];
      ++cnt;
    }
  }
  s[pos] = cnt ? sum / cnt : 0.0;
  return s;
}

double WeightedSample::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

std::vector<double> WeightedSample::column(int j) const {
  std::vector<double> c(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) c[i] = draws[i][j];
  return c;
}

std::vector<double> abc_weights(const std::vector<double>& d, double p_delta, AbcKernel k,
                                double& delta) {
  require(p_delta > 0.0 && p_delta <= 1.0, "abc: P_delta must lie in (0,1]");
  require(!d.empty(), "abc: no simulations");
  const std::size_t n = d.size();
  const std::size_t keep = std::min<std::size_t>(
      n, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p_delta * n - 1e-9))));
  std::vector<double> s = d;
  std::nth_element(s.begin(), s.begin() + (keep - 1), s.end());
  const double dk = s[keep - 1];
  if (keep < n) {
    const double dn = *std::min_element(s.begin() + keep, s.end());
    delta = dn > dk ? 0.5 * (dk + dn) : dk * (1.0 + 1e-12);
  } else {
    delta = dk > 0.0 ? dk * (1.0 + 1e-9) : 1.0;
  }
  std::vector<double> w(n, 0.0);
  double tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = delta > 0.0 ? d[i] / delta : (d[i] == 0.0 ? 0.0 : kInf);
    if (u < 1.0) w[i] = k == AbcKernel::Epanechnikov ? 1.0 - u * u : 1.0;
    tot += w[i];
  }
  if (!(tot > 0.0)) throw NumericalError("abc: all weights are zero");
  return w;
}

namespace {

WeightedSample keep_positive(std::vector<Vec>&& draws, std::vector<Vec>&& stats,
                             const std::vector<double>& w) {
  WeightedSample out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    out.draws.push_back(std::move(draws[i]));
    if (!stats.empty()) out.summaries.push_back(std::move(stats[i]));
    out.weights.push_back(w[i]);
  }
  return out;
}

const char* kernel_name(AbcKernel k) {
  return k == AbcKernel::Epanechnikov ? "epanechnikov" : "uniform";
}

}  // namespace

WeightedSample abc_rejection(const Vec& s_obs, const PriorSampler& prior,
                             const SummarySimulator& sim, long n_sims, double p_delta, AbcKernel k,
                             SeedSpec seed) {
  require(n_sims >= 1, "abc: need at least one simulation");
  std::vector<Vec> th(n_sims), st(n_sims);
  for (long i = 0; i < n_sims; ++i) {
    Rng rng(seed.root, seed.replicate * 1000003ULL + static_cast<std::uint64_t>(i), 9);
    th[i] = prior(rng);
    st[i] = sim(th[i], rng);
    require(st[i].size() == s_obs.size(), "abc: summary dimension mismatch");
  }
  const int d = static_cast<int>(s_obs.size());
  Vec scale(d);
  for (int j = 0; j < d; ++j) {
    double m = 0.0, v = 0.0;
    for (long i = 0; i < n_sims; ++i) m += st[i][j];
    m /= n_sims;
    for (long i = 0; i < n_sims; ++i) v += (st[i][j] - m) * (st[i][j] - m);
    const double sd = n_sims > 1 ? std::sqrt(v / (n_sims - 1)) : 0.0;
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  std::vector<double> dist(n_sims);
  for (long i = 0; i < n_sims; ++i)
    dist[i] = ((st[i] - s_obs).array() / scale.array()).matrix().norm();
  double delta = 0.0;
  const auto w = abc_weights(dist, p_delta, k, delta);
  WeightedSample out = keep_positive(std::move(th), std::move(st), w);
  out.s_obs = s_obs;
  out.scale = scale;
  out.delta = delta;
  out.kernel = kernel_name(k);
  out.summary = "vector";
  out.simulations = n_sims;
  return out;
}

WeightedSample abc_rejection_distance(const PriorSampler& prior, const DistanceSimulator& dist_fn,
                                      long n_sims, double p_delta, AbcKernel k, SeedSpec seed) {
  require(n_sims >= 1, "abc: need at least one simulation");
  std::vector<Vec> th(n_sims);
  std::vector<double> dist(n_sims);
  for (long i = 0; i < n_sims; ++i) {
    Rng rng(seed.root, seed.replicate * 1000003ULL + static_cast<std::uint64_t>(i), 9);
    th[i] = prior(rng);
    dist[i] = dist_fn(th[i], rng);
  }
  double delta = 0.0;
  const auto w = abc_weights(dist, p_delta, k, delta);
  WeightedSample out = keep_positive(std::move(th), {}, w);
  out.delta = delta;
  out.kernel = kernel_name(k);
  out.summary = "distance";
  out.simulations = n_sims;
  return out;
}

namespace {

double fwd(double x, const Support& s) {
  const bool lo = std::isfinite(s.lo), hi = std::isfinite(s.hi);
  if (lo && hi) {
    const double p = (x - s.lo) / (s.hi - s.lo);
    return std::log(p / (1.0 - p));
  }
  if (lo) return std::log(x - s.lo);
  if (hi) return std::log(s.hi - x);
  return x;
}

double inv(double y, const Support& s) {
  const bool lo = std::isfinite(s.lo), hi = std::isfinite(s.hi);
  if (lo && hi) return s.lo + (s.hi - s.lo) / (1.0 + std::exp(-y));
  if (lo) return s.lo + std::exp(y);
  if (hi) return s.hi - std::exp(y);
  return y;
}

void check_adjustable(const WeightedSample& s, const std::vector<Support>& sup) {
  require(!s.draws.empty() && s.summaries.size() == s.draws.size(),
          "adjust: sample needs summaries for every draw");
  require(static_cast<int>(sup.size()) == s.draws[0].size(), "adjust: one support per parameter");
  require(static_cast<int>(s.draws.size()) >= s.s_obs.size() + 2,
          "adjust: need at least d + 2 positive-weight draws");
}

// Scaled regressors u_i = (s_i - s_obs) / H.
Mat regressors(const WeightedSample& s) {
  const int n = static_cast<int>(s.draws.size()), d = static_cast<int>(s.s_obs.size());
  Mat U(n, d);
  const Vec sc = s.scale.size() == d ? s.scale : Vec::Ones(d);
  for (int i = 0; i < n; ++i)
    U.row(i) = ((s.summaries[i] - s.s_obs).array() / sc.array()).matrix().transpose();
  return U;
}

// Single-hidden-layer tanh perceptron with parameters packed as
// [W1 (h x d) row-major, b1 (h), w2 (h), b2].
struct Mlp {
  int d, h;
  int size() const { return h * d + 2 * h + 1; }
  double eval(const Vec& p, const Eigen::Ref<const Vec>& u) const {
    double out = p[size() - 1];
    for (int k = 0; k < h; ++k) {
      double a = p[h * d + k];
      for (int j = 0; j < d; ++j) a += p[k * d + j] * u[j];
      out += p[h * d + h + k] * std::tanh(a);
    }
    return out;
  }
};

Vec fit_ensemble(const Mat& U, const Vec& y, const Vec& w, const NchConfig& c, const Mat& Upred,
                 std::uint64_t salt) {
  const int n = static_cast<int>(U.rows()), d = static_cast<int>(U.cols());
  const double wsum = w.sum();
  const double ym = w.dot(y) / wsum;
  const double ysd = std::sqrt(std::max(w.dot((y.array() - ym).square().matrix()) / wsum, 1e-300));
  const Vec ys = (y.array() - ym) / ysd;
  const Mlp net{d, c.hidden};
  const int P = net.size();
  auto loss_grad = [&](const Vec& p, Vec* g) {
    double L = 0.0;
    if (g) g->setZero(P);
    Vec act(c.hidden), th(c.hidden);
    for (int i = 0; i < n; ++i) {
      double out = p[P - 1];
      for (int k = 0; k < c.hidden; ++k) {
        double a = p[c.hidden * d + k];
        for (int j = 0; j < d; ++j) a += p[k * d + j] * U(i, j);
        th[k] = std::tanh(a);
        out += p[c.hidden * d + c.hidden + k] * th[k];
      }
      const double r = out - ys[i];
      L += w[i] * r * r;
      if (g) {
        const double gr = 2.0 * w[i] * r;
        (*g)[P - 1] += gr;
        for (int k = 0; k < c.hidden; ++k) {
          const double w2 = p[c.hidden * d + c.hidden + k];
          (*g)[c.hidden * d + c.hidden + k] += gr * th[k];
          const double ga = gr * w2 * (1.0 - th[k] * th[k]);
          (*g)[c.hidden * d + k] += ga;
          for (int j = 0; j < d; ++j) (*g)[k * d + j] += ga * U(i, j);
        }
      }
    }
    L /= wsum;
    if (g) *g /= wsum;
    // Decay on weights, not biases.
    for (int q = 0; q < c.hidden * d; ++q) {
      L += c.weight_decay * p[q] * p[q];
      if (g) (*g)[q] += 2.0 * c.weight_decay * p[q];
    }
    for (int k = 0; k < c.hidden; ++k) {
      const double v = p[c.hidden * d + c.hidden + k];
      L += c.weight_decay * v * v;
      if (g) (*g)[c.hidden * d + c.hidden + k] += 2.0 * c.weight_decay * v;
    }
    return L;
  };
  const Objective f = [&](const Vec& p) { return loss_grad(p, nullptr); };
  const Gradient gf = [&](const Vec& p) {
    Vec g;
    loss_grad(p, &g);
    return g;
  };
  Vec pred = Vec::Zero(Upred.rows());
  BfgsOptions bo;
  bo.max_iter = c.max_iter;
  bo.gtol = 1e-6;
  for (int l = 0; l < c.networks; ++l) {
    Rng rng(c.seed, salt * 131 + l, 10);
    Vec p0(P);
    for (int q = 0; q < P; ++q) p0[q] = rng.normal() / std::sqrt(double(d + 1));
    const OptimResult r = bfgs(f, p0, bo, gf);
    for (int i = 0; i < Upred.rows(); ++i) pred[i] += net.eval(r.x, Upred.row(i).transpose());
  }
  pred /= c.networks;
  return (ym + ysd * pred.array()).matrix();
}

}  // namespace

WeightedSample adjust_locl(const WeightedSample& s, const std::vector<Support>& sup) {
  check_adjustable(s, sup);
  const int n = static_cast<int>(s.draws.size()), d = static_cast<int>(s.s_obs.size());
  const int p = static_cast<int>(sup.size());
  const Mat U = regressors(s);
  if (U.cwiseAbs().maxCoeff() == 0.0) return s;  // every s_i = s_obs: zero correction
  Mat X(n, d + 1);
  X.col(0).setOnes();
  X.rightCols(d) = U;
  Vec sw(n);
  for (int i = 0; i < n; ++i) sw[i] = std::sqrt(s.weights[i]);
  const Mat Xw = sw.asDiagonal() * X;
  // Redundant statistics (a total next to its per-period counts, or a column
  // that never varies) leave the fitted values unique; the minimum-norm
  // solution picks one set of slopes.
  const Eigen::CompleteOrthogonalDecomposition<Mat> qr(Xw);
  WeightedSample out = s;
  for (int j = 0; j < p; ++j) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = fwd(s.draws[i][j], sup[j]);
    const Vec beta = qr.solve((sw.array() * y.array()).matrix());
    const Vec corr = U * beta.tail(d);
    for (int i = 0; i < n; ++i) out.draws[i][j] = inv(y[i] - corr[i], sup[j]);
  }
  return out;
}

WeightedSample adjust_nch(const WeightedSample& s, const std::vector<Support>& sup,
                          const NchConfig& c) {
  check_adjustable(s, sup);
  require(c.networks >= 1 && c.hidden >= 1, "adjust_nch: need at least one network and unit");
  const int n = static_cast<int>(s.draws.size()), d = static_cast<int>(s.s_obs.size());
  const int p = static_cast<int>(sup.size());
  const Mat U = regressors(s);
  Mat Upred(n + 1, d);
  Upred.topRows(n) = U;
  Upred.row(n).setZero();  // s_obs
  Vec w(n);
  for (int i = 0; i < n; ++i) w[i] = s.weights[i];
  WeightedSample out = s;
  for (int j = 0; j < p; ++j) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = fwd(s.draws[i][j], sup[j]);
    const double spread = std::sqrt(std::max(weighted_variance(std::vector<double>(y.data(), y.data() + n),
                                                               s.weights),
                                             0.0));
    if (!(spread > 0.0)) continue;  // constant parameter: nothing to adjust
    const Vec m = fit_ensemble(U, y, w, c, Upred, 2 * j);
    Vec lr(n);
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - m[i];
      lr[i] = std::log(std::max(r * r, 1e-12 * spread * spread));
    }
    const Vec lv = fit_ensemble(U, lr, w, c, Upred, 2 * j + 1);
    const double sd_obs = std::exp(0.5 * lv[n]);
    for (int i = 0; i < n; ++i) {
      const double adj = m[n] + (y[i] - m[i]) * sd_obs / std::exp(0.5 * lv[i]);
      out.draws[i][j] = inv(adj, sup[j]);
    }
  }
  return out;
}

PosteriorSummary posterior_summaries(const WeightedSample& s) {
  require(!s.draws.empty() && s.total_weight() > 0.0, "posterior_summaries: no positive weight");
  const int p = static_cast<int>(s.draws[0].size());
  PosteriorSummary r{Vec(p), Vec(p), Vec(p), Vec(p), Vec(p)};
  for (int j = 0; j < p; ++j) {
    const auto x = s.column(j);
    r.mean[j] = weighted_mean(x, s.weights);
    r.median[j] = weighted_quantile(x, s.weights, 0.5);
    r.lo95[j] = weighted_quantile(x, s.weights, 0.025);
    r.hi95[j] = weighted_quantile(x, s.weights, 0.975);
    r.mode[j] = weighted_kde_mode(x, s.weights);
  }
  return r;
}

}  // namespace epi

#include "epiinfer/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epi {

Vec JumpPath::increment(std::size_t k) const {
  if (exact()) return model->jumps()[jumps[k]].cast<double>();
  Vec d = Vec::Zero(model->dim());
  for (int j = 0; j < model->n_jumps(); ++j) d += leaps[k][j] * model->jumps()[j].cast<double>();
  return d;
}

Vec JumpPath::state_at(double t) const {
  Vec x = x0;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) x += increment(k);
  return x;
}

Vec JumpPath::final_state() const {
  Vec x = x0;
  for (std::size_t k = 0; k < times.size(); ++k) x += increment(k);
  return x;
}

JumpPath JumpPath::truncated(double t_end) const {
  JumpPath out = *this;
  out.T = std::min(T, t_end);
  const auto cut = static_cast<std::size_t>(
      std::upper_bound(times.begin(), times.end(), out.T) - times.begin());
  out.times.resize(cut);
  if (exact())
    out.jumps.resize(cut);
  else
    out.leaps.resize(cut);
  return out;
}

SampledSeries SampledSeries::subsample(int every) const {
  require(every >= 1, "subsample: factor must be >= 1");
  require(n() % every == 0, "subsample: factor must divide n");
  SampledSeries s = *this;
  s.dt = dt * every;
  s.values.resize(n() / every, dim());
  for (int k = 0; k < s.n(); ++k) s.values.row(k) = values.row((k + 1) * every - 1);
  return s;
}

namespace {

void check_counts(const Model& m, const Vec& x0, double N) {
  require(N >= 1.0, "population size N must be >= 1");
  require(x0.size() == m.dim(), "x0 has wrong dimension");
  require(x0.allFinite() && (x0.array() >= 0.0).all(), "x0 must hold nonnegative counts");
  require(((x0.array() - x0.array().round()).abs() < 1e-9).all(), "x0 must hold integer counts");
  require(m.admissible(x0 / N), "x0 counts are inconsistent with the population size");
}

std::size_t pick(const Vec& r, double total, Rng& rng) {
  double u = rng.uniform() * total;
  for (int j = 0; j < r.size(); ++j) {
    u -= r[j];
    if (u < 0.0) return static_cast<std::size_t>(j);
  }
  for (int j = static_cast<int>(r.size()) - 1; j >= 0; --j)
    if (r[j] > 0.0) return static_cast<std::size_t>(j);
  return 0;
}

}  // namespace

JumpPath gillespie(ModelPtr model, const Vec& theta, double N, const Vec& x0, double T,
                   SeedSpec seed, std::size_t max_events) {
  const Model& m = *model;
  require(m.kind() == ModelKind::Jump, "gillespie: model has no jump structure");
  require(T > 0.0, "gillespie: T must be positive");
  m.check_theta(theta);
  check_counts(m, x0, N);
  JumpPath path{model, theta, N, x0, T, {}, {}, {}};
  Rng rng(seed, 1);
  Vec x = x0;
  double t = 0.0;
  const auto& J = m.jumps();
  while (path.times.size() < max_events) {
    if (!m.time_dependent()) {
      const Vec r = m.count_rates(theta, t, x, N);
      const double total = r.sum();
      if (total <= 0.0) break;
      t += rng.exponential(total);
      if (t > T) break;
      const std::size_t j = pick(r, total, rng);
      x += J[j].cast<double>();
      path.times.push_back(t);
      path.jumps.push_back(static_cast<int>(j));
      continue;
    }
    // Thinning against a majorant valid for all future times at the frozen state.
    const double bound = N * m.rate_bound(theta, t, x / N).sum();
    if (bound <= 0.0) break;
    t += rng.exponential(bound);
    if (t > T) break;
    const Vec r = m.count_rates(theta, t, x, N);
    const double total = r.sum();
    if (rng.uniform() * bound >= total) continue;
    const std::size_t j = pick(r, total, rng);
    x += J[j].cast<double>();
    path.times.push_back(t);
    path.jumps.push_back(static_cast<int>(j));
  }
  return path;
}

JumpPath tau_leap(ModelPtr model, const Vec& theta, double N, const Vec& x0, double T, double tau,
                  SeedSpec seed) {
  const Model& m = *model;
  require(m.kind() == ModelKind::Jump, "tau_leap: model has no jump structure");
  require(tau > 0.0, "tau_leap: tau must be positive");
  require(tau < T, "tau_leap: tau must be smaller than T");
  m.check_theta(theta);
  check_counts(m, x0, N);
  JumpPath path{model, theta, N, x0, T, {}, {}, {}};
  Rng rng(seed, 2);
  Vec x = x0;
  double t = 0.0;
  const int nj = m.n_jumps();
  Mat V(m.dim(), nj);
  for (int j = 0; j < nj; ++j) V.col(j) = m.jumps()[j].cast<double>();
  while (t < T - 1e-12 * T) {
    const double step = std::min(tau, T - t);
    double h = step;
    IVec k(nj);
    Vec xn;
    for (int attempt = 0;; ++attempt) {
      const Vec r = m.count_rates(theta, t, x, N);
      for (int j = 0; j < nj; ++j) k[j] = static_cast<int>(rng.poisson(r[j] * h));
      xn = x + V * k.cast<double>();
      if ((xn.array() >= 0.0).all()) break;
      h *= 0.5;
      if (attempt > 60) throw NumericalError("tau_leap: cannot keep counts nonnegative");
    }
    t += h;
    x = xn;
    if (k.any()) {
      path.times.push_back(t);
      path.leaps.push_back(k);
    }
  }
  // A path without events stays exact-style (both vectors empty).
  return path;
}

SampledSeries sample_path(const JumpPath& path, double dt) {
  require(dt > 0.0, "sample_path: dt must be positive");
  const double nd = path.T / dt;
  const int n = static_cast<int>(std::llround(nd));
  require(n >= 1 && std::abs(n * dt - path.T) <= 1e-9 * std::max(1.0, path.T),
          "sample_path: dt must divide T");
  const int p = path.model->dim();
  SampledSeries s;
  s.dt = dt;
  s.N = path.N;
  s.eps = 1.0 / std::sqrt(path.N);
  s.x0 = path.x0 / path.N;
  s.values.resize(n, p);
  s.observed.assign(p, true);
  Vec x = path.x0;
  std::size_t e = 0;
  for (int k = 1; k <= n; ++k) {
    const double tk = k * dt;
    while (e < path.times.size() && path.times[e] <= tk * (1.0 + 1e-14)) x += path.increment(e++);
    s.values.row(k - 1) = (x / path.N).transpose();
  }
  return s;
}

SampledSeries euler_maruyama(const Model& model, const Vec& theta, double eps, const Vec& x0,
                             double T, double dt, SeedSpec seed, int record_every) {
  require(dt > 0.0, "euler_maruyama: dt must be positive");
  require(eps >= 0.0, "euler_maruyama: eps must be >= 0");
  require(record_every >= 1, "euler_maruyama: record_every must be >= 1");
  model.check_theta(theta);
  require(model.admissible(x0), "euler_maruyama: x0 outside admissible set");
  const long steps = std::lround(T / dt);
  require(steps >= 1 && std::abs(steps * dt - T) <= 1e-9 * std::max(1.0, T),
          "euler_maruyama: dt must divide T");
  require(steps % record_every == 0, "euler_maruyama: record_every must divide the step count");
  const int p = model.dim();
  SampledSeries s;
  s.dt = dt * record_every;
  s.x0 = x0;
  s.eps = eps;
  s.N = eps > 0.0 ? 1.0 / (eps * eps) : 0.0;
  s.observed.assign(p, true);
  s.values.resize(steps / record_every, p);
  Rng rng(seed, 3);
  Vec z = x0, xi(p);
  const double sq = std::sqrt(dt);
  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    Vec dz = model.drift(theta, t, z) * dt;
    if (eps > 0.0) {
      const Mat sig = diffusion_factor(model.diffusion(theta, t, z));
      for (int i = 0; i < p; ++i) xi[i] = rng.normal();
      dz += eps * sq * (sig * xi);
    }
    z = model.project(z + dz);
    if ((k + 1) % record_every == 0) s.values.row((k + 1) / record_every - 1) = z.transpose();
  }
  return s;
}

std::vector<double> simulate_ar1(double a, double gamma, double x0, int n, SeedSpec seed) {
  require(gamma >= 0.0, "simulate_ar1: gamma must be >= 0");
  require(n >= 0, "simulate_ar1: n must be >= 0");
  Rng rng(seed, 4);
  std::vector<double> x(n + 1);
  x[0] = x0;
  for (int i = 1; i <= n; ++i) {
    const double e = gamma > 0.0 ? gamma * rng.normal() : 0.0;
    x[i] = a * x[i - 1] + e;
  }
  return x;
}

std::vector<Vec> simulate_chain(const Model& model, const Vec& theta, const Vec& x0, int n,
                                SeedSpec seed) {
  require(model.kind() == ModelKind::Chain, "simulate_chain: not a chain model");
  model.check_theta(theta);
  Rng rng(seed, 5);
  std::vector<Vec> xs{x0};
  for (int i = 0; i < n; ++i) xs.push_back(model.chain_step(theta, xs.back(), rng));
  return xs;
}

double final_size(const JumpPath& path) { return path.x0[0] - path.final_state()[0]; }

FilterResult non_extinct_filter(const std::vector<double>& sizes, double k,
                                bool use_standard_error) {
  require(sizes.size() >= 2, "non_extinct_filter: need at least 2 paths");
  const double n = static_cast<double>(sizes.size());
  const double mean = std::accumulate(sizes.begin(), sizes.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sizes) ss += (v - mean) * (v - mean);
  double spread = std::sqrt(ss / (n - 1.0));
  if (use_standard_error) spread /= std::sqrt(n);
  FilterResult r;
  r.threshold = mean - k * spread;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    (sizes[i] >= r.threshold - 1e-9 * std::max(1.0, std::abs(mean)) ? r.kept : r.dropped)
        .push_back(i);
  return r;
}

FilterResult non_extinct_filter(const std::vector<JumpPath>& paths, double k,
                                bool use_standard_error) {
  std::vector<double> sizes;
  sizes.reserve(paths.size());
  for (const auto& p : paths) sizes.push_back(final_size(p));
  return non_extinct_filter(sizes, k, use_standard_error);
}

}  // namespace epi

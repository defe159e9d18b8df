#include "epiinfer/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epi {

double chi2_cdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

double chi2_quantile(double level, double k) {
  require(level > 0.0 && level < 1.0, "chi2_quantile: level must lie in (0,1)");
  require(k > 0.0, "chi2_quantile: degrees of freedom must be positive");
  double lo = 0.0, hi = std::max(1.0, k);
  while (chi2_cdf(hi, k) < level) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, k) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_pvalue(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  if (lam < 1e-3) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lam * lam);
    s += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  require(!x.empty(), "ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return {d, kolmogorov_pvalue(d, n)};
}

KsResult ks_test(std::vector<double> x, std::vector<double> y) {
  require(!x.empty() && !y.empty(), "ks_test: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  return {d, kolmogorov_pvalue(d, n * m / (n + m))};
}

double mean(const std::vector<double>& x) {
  require(!x.empty(), "mean: empty input");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  require(x.size() >= 2, "variance: need at least 2 values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile(std::vector<double> x, double q) {
  require(!x.empty(), "quantile: empty input");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= x.size()) return x.back();
  return x[i] + (pos - i) * (x[i + 1] - x[i]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double weighted_mean(const std::vector<double>& x, const std::vector<double>& w) {
  require(x.size() == w.size() && !x.empty(), "weighted_mean: size mismatch");
  double sw = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    s += w[i] * x[i];
  }
  require(sw > 0.0, "weighted_mean: total weight must be positive");
  return s / sw;
}

double weighted_variance(const std::vector<double>& x, const std::vector<double>& w) {
  const double m = weighted_mean(x, w);
  double sw = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    s += w[i] * (x[i] - m) * (x[i] - m);
  }
  return s / sw;
}

double weighted_quantile(const std::vector<double>& x, const std::vector<double>& w, double q) {
  require(x.size() == w.size() && !x.empty(), "weighted_quantile: size mismatch");
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  require(total > 0.0, "weighted_quantile: total weight must be positive");
  double c = 0.0;
  for (std::size_t i : idx) {
    if (w[i] <= 0.0) continue;
    c += w[i] / total;
    if (c >= q - 1e-12) return x[i];
  }
  return x[idx.back()];
}

double weighted_kde_mode(const std::vector<double>& x, const std::vector<double>& w) {
  require(x.size() == w.size() && !x.empty(), "weighted_kde_mode: size mismatch");
  std::vector<double> xs, ws;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (w[i] > 0.0) {
      xs.push_back(x[i]);
      ws.push_back(w[i]);
    }
  require(!xs.empty(), "weighted_kde_mode: no positive weight");
  if (xs.size() == 1) return xs[0];
  double sw = 0.0, sw2 = 0.0;
  for (double v : ws) {
    sw += v;
    sw2 += v * v;
  }
  const double n_eff = sw * sw / sw2;
  const double sd = std::sqrt(weighted_variance(xs, ws));
  const double iqr = weighted_quantile(xs, ws, 0.75) - weighted_quantile(xs, ws, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) return xs[0];
  const double h = 0.9 * spread * std::pow(n_eff, -0.2);
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  auto dens = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double u = (t - xs[i]) / h;
      s += ws[i] * std::exp(-0.5 * u * u);
    }
    return s;
  };
  const int grid = 512;
  double best = *mn, bestv = -1.0;
  const double lo = *mn - h, hi = *mx + h;
  for (int g = 0; g <= grid; ++g) {
    const double t = lo + (hi - lo) * g / grid;
    const double v = dens(t);
    if (v > bestv) {
      bestv = v;
      best = t;
    }
  }
  // Golden-section refinement around the best grid cell.
  double a = best - (hi - lo) / grid, b = best + (hi - lo) / grid;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double c = b - gr * (b - a), d = a + gr * (b - a);
    (dens(c) > dens(d) ? b : a) = (dens(c) > dens(d) ? d : c);
  }
  return 0.5 * (a + b);
}

}  // namespace epi

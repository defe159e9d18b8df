#include "epiinfer/sobol.hpp"

#include "epiinfer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace epi {

namespace {

constexpr std::uint64_t kRowStride = 1000003ULL;

std::uint64_t call_id(const SeedSpec& s, long row) {
  return s.replicate * kRowStride + static_cast<std::uint64_t>(row);
}

double eval(const SobolDesign& d, const Vec& x, long row, std::uint64_t column) {
  Rng noise(d.seed.root, call_id(d.seed, row), 20 + column);
  try {
    return d.f(x, noise);
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "sobol: simulator failed at replicate " << row << ": " << e.what();
    throw NumericalError(msg.str());
  }
}

void check_design(const SobolDesign& d) {
  require(!d.inputs.empty(), "sobol: need at least one input");
  require(d.n >= 32, "sobol: need n >= 32");
  require(static_cast<bool>(d.f), "sobol: missing response");
}

Mat draw_inputs(const SobolDesign& d, std::uint64_t stream) {
  const int p = static_cast<int>(d.inputs.size());
  Mat X(d.n, p);
  Rng rng(d.seed, stream);
  for (long i = 0; i < d.n; ++i)
    for (int l = 0; l < p; ++l) X(i, l) = d.inputs[l].quantile(rng.uniform());
  return X;
}

double var_of(const Vec& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

struct JansenPoint {
  Vec first, total;
};

JansenPoint jansen_point(const PickFreeze& pf, const std::vector<long>& rows) {
  const int p = static_cast<int>(pf.fAB.size());
  const long n = static_cast<long>(rows.size());
  const bool tot = pf.fA.size() > 0;
  Vec yB(n), yA(tot ? n : 0);
  for (long i = 0; i < n; ++i) {
    yB[i] = pf.fB[rows[i]];
    if (tot) yA[i] = pf.fA[rows[i]];
  }
  double V = var_of(yB);
  if (tot) V = 0.5 * (V + var_of(yA));
  JansenPoint r{Vec::Zero(p), tot ? Vec::Zero(p) : Vec()};
  if (!(V > 0.0)) return r;
  for (int l = 0; l < p; ++l) {
    double s1 = 0.0, st = 0.0;
    for (long i = 0; i < n; ++i) {
      const double ab = pf.fAB[l][rows[i]];
      s1 += (yB[i] - ab) * (yB[i] - ab);
      if (tot) st += (yA[i] - ab) * (yA[i] - ab);
    }
    r.first[l] = (V - s1 / (2.0 * n)) / V;
    if (tot) r.total[l] = st / (2.0 * n) / V;
  }
  return r;
}

void clip_flags(SobolResult& r) {
  auto check = [&](const Vec& v, const char* what) {
    for (int i = 0; i < v.size(); ++i)
      if (v[i] < 0.0 || v[i] > 1.0) {
        std::ostringstream f;
        f << what << "[" << i << "] outside [0,1]";
        r.flags.push_back(f.str());
      }
  };
  check(r.first, "first");
  check(r.total, "total");
}

std::vector<long> bootstrap_rows(long n, Rng& rng) {
  std::vector<long> rows(n);
  for (long i = 0; i < n; ++i) rows[i] = static_cast<long>(rng.index(static_cast<std::size_t>(n)));
  return rows;
}

// Rank-based CDF transform into (0,1).
std::vector<double> ranks01(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> u(n);
  for (std::size_t r = 0; r < n; ++r) u[idx[r]] = (static_cast<double>(r) + 0.5) / n;
  return u;
}

}  // namespace

InputDist uniform_input(const std::string& name, double lo, double hi) {
  require(lo < hi, "uniform_input: need lo < hi");
  return {name, [lo, hi](double u) { return lo + (hi - lo) * u; },
          [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); }};
}

PickFreeze pick_freeze(const SobolDesign& d) {
  check_design(d);
  const int p = static_cast<int>(d.inputs.size());
  PickFreeze pf;
  pf.A = draw_inputs(d, 30);
  pf.B = draw_inputs(d, 31);
  pf.fB.resize(d.n);
  for (long i = 0; i < d.n; ++i) pf.fB[i] = eval(d, pf.B.row(i).transpose(), i, 1);
  pf.calls = d.n;
  if (d.totals) {
    pf.fA.resize(d.n);
    for (long i = 0; i < d.n; ++i) pf.fA[i] = eval(d, pf.A.row(i).transpose(), i, 0);
    pf.calls += d.n;
  }
  pf.fAB.assign(p, Vec(d.n));
  for (int l = 0; l < p; ++l) {
    for (long i = 0; i < d.n; ++i) {
      Vec x = pf.A.row(i).transpose();
      x[l] = pf.B(i, l);
      pf.fAB[l][i] = eval(d, x, i, 2 + l);
    }
    pf.calls += d.n;
  }
  return pf;
}

SobolResult jansen_from(const PickFreeze& pf, int bootstrap, std::uint64_t seed) {
  const long n = pf.fB.size();
  std::vector<long> all(n);
  std::iota(all.begin(), all.end(), 0L);
  const JansenPoint pt = jansen_point(pf, all);
  SobolResult r;
  r.method = "jansen";
  r.first = pt.first;
  r.total = pt.total;
  r.calls = pf.calls;
  if (bootstrap > 0) {
    Rng rng(seed, 0, 32);
    const int p = static_cast<int>(pt.first.size());
    Mat bf(bootstrap, p), bt(bootstrap, pt.total.size());
    for (int b = 0; b < bootstrap; ++b) {
      const JansenPoint q = jansen_point(pf, bootstrap_rows(n, rng));
      bf.row(b) = q.first.transpose();
      if (q.total.size()) bt.row(b) = q.total.transpose();
    }
    auto col_sd = [](const Mat& M) {
      Vec s(M.cols());
      for (int j = 0; j < M.cols(); ++j) s[j] = std::sqrt(var_of(M.col(j)));
      return s;
    };
    r.sd_first = col_sd(bf);
    if (pt.total.size()) r.sd_total = col_sd(bt);
  }
  clip_flags(r);
  return r;
}

SobolResult jansen_estimate(const SobolDesign& d) {
  return jansen_from(pick_freeze(d), d.bootstrap, d.seed.root);
}

double second_order_index(const SobolDesign& d, int l, int lp) {
  check_design(d);
  const int p = static_cast<int>(d.inputs.size());
  require(l >= 0 && l < p && lp >= 0 && lp < p && l != lp, "second_order_index: bad pair");
  if (l > lp) std::swap(l, lp);
  const Mat A = draw_inputs(d, 30), B = draw_inputs(d, 31);
  Vec fB(d.n), f1(d.n), f2(d.n), f12(d.n);
  for (long i = 0; i < d.n; ++i) {
    const Vec b = B.row(i).transpose();
    Vec x1 = A.row(i).transpose(), x2 = x1, x12 = x1;
    x1[l] = b[l];
    x2[lp] = b[lp];
    x12[l] = b[l];
    x12[lp] = b[lp];
    fB[i] = eval(d, b, i, 1);
    f1[i] = eval(d, x1, i, 2 + l);
    f2[i] = eval(d, x2, i, 2 + lp);
    f12[i] = eval(d, x12, i, 1000 + l * p + lp);
  }
  const double V = var_of(fB);
  if (!(V > 0.0)) return 0.0;
  auto closed = [&](const Vec& f) { return V - (fB - f).squaredNorm() / (2.0 * d.n); };
  return (closed(f12) - closed(f1) - closed(f2)) / V;
}

double sobol_nw(const std::vector<double>& x, const std::vector<double>& y, double h) {
  require(x.size() == y.size(), "sobol_nw: size mismatch");
  const std::size_t n = x.size();
  require(n >= 32, "sobol_nw: need n >= 32");
  const double vy = variance(y);
  if (!(vy > 0.0)) return 0.0;
  if (h <= 0.0) h = std::sqrt(variance(x)) * std::pow(static_cast<double>(n), -1.0 / 3.0);
  require(h > 0.0, "sobol_nw: bandwidth must be positive");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }
  const double ym = mean(y);
  double acc = 0.0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (xs[lo] <= xs[i] - h) ++lo;
    while (hi < n && xs[hi] < xs[i] + h) ++hi;
    double num = 0.0, den = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double u = (xs[j] - xs[i]) / h;
      const double k = 1.0 - u * u;
      num += k * ys[j];
      den += k;
    }
    if (!(den > 0.0)) throw NumericalError("sobol_nw: empty kernel neighbourhood; increase h");
    const double m = num / den;
    acc += m * m;
  }
  return (acc / n - ym * ym) / vy;
}

double haar_psi(int j, int k, double u) {
  const double s = std::ldexp(1.0, j);
  const double v = s * u - k;
  if (v < 0.0 || v >= 1.0) return 0.0;
  return std::sqrt(s) * (v < 0.5 ? 1.0 : -1.0);
}

WaveletIndex sobol_wavelet(const std::vector<double>& x, const std::vector<double>& y, double K) {
  require(x.size() == y.size(), "sobol_wavelet: size mismatch");
  const std::size_t n = x.size();
  require(n >= 64, "sobol_wavelet: need n >= 64");
  WaveletIndex r;
  const double ym = mean(y), sd = std::sqrt(variance(y));
  if (!(sd > 0.0)) {
    r.degenerate = true;
    return r;
  }
  const auto u = ranks01(x);
  const int J = static_cast<int>(std::floor(std::log2(std::sqrt(static_cast<double>(n)))));
  double V = 0.0;
  for (int j = 0; j <= J; ++j) {
    const int nk = 1 << j;
    std::vector<double> beta(nk, 0.0);
    const double s = std::sqrt(static_cast<double>(nk));
    for (std::size_t i = 0; i < n; ++i) {
      const double v = nk * u[i];
      const int k = std::min(nk - 1, static_cast<int>(v));
      const double sign = (v - k) < 0.5 ? 1.0 : -1.0;
      beta[k] += (y[i] - ym) / sd * s * sign;
    }
    double energy = 0.0;
    for (double b : beta) energy += (b / n) * (b / n);
    const double w = K * (nk + std::log(2.0)) / n;
    r.block_energy.push_back(energy);
    r.kept.push_back(energy >= w);
    if (energy >= w) V += energy - w;
  }
  r.S = V;
  return r;
}

double wavelet_slope_heuristic(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<double>& grid) {
  require(grid.size() >= 3, "wavelet_slope_heuristic: need at least three grid points");
  std::vector<double> g = grid;
  std::sort(g.begin(), g.end());
  std::vector<double> S(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) S[i] = sobol_wavelet(x, y, g[i]).S;
  // Flattest central difference in log K.
  std::size_t best = 1;
  double best_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    const double slope = std::abs(S[i + 1] - S[i - 1]) / std::log(g[i + 1] / g[i - 1]);
    if (slope < best_slope) {
      best_slope = slope;
      best = i;
    }
  }
  return g[best];
}

SobolComparison sobol_all(const SobolDesign& d, double K) {
  const PickFreeze pf = pick_freeze(d);
  SobolComparison c;
  c.jansen = jansen_from(pf, d.bootstrap, d.seed.root);
  const int p = static_cast<int>(d.inputs.size());
  Mat X = pf.B;
  Vec fy = pf.fB;
  if (d.n_regression > 0) {
    SobolDesign dr = d;
    dr.n = d.n_regression;
    X = draw_inputs(dr, 34);
    fy.resize(dr.n);
    for (long i = 0; i < dr.n; ++i) fy[i] = eval(dr, X.row(i).transpose(), i, 5000);
  }
  const long nr = X.rows();
  const std::vector<double> y(fy.data(), fy.data() + nr);
  c.nw.method = "nadaraya-watson";
  c.wavelet.method = "wavelet";
  c.nw.first.resize(p);
  c.wavelet.first.resize(p);
  c.nw.calls = c.wavelet.calls = nr;
  Rng rng(d.seed.root, 0, 33);
  Mat bn(std::max(d.bootstrap, 0), p), bw(std::max(d.bootstrap, 0), p);
  for (int l = 0; l < p; ++l) {
    const std::vector<double> x(X.col(l).data(), X.col(l).data() + nr);
    c.nw.first[l] = sobol_nw(x, y);
    const WaveletIndex wi = sobol_wavelet(x, y, K);
    c.wavelet.first[l] = wi.S;
    if (wi.degenerate) c.wavelet.flags.push_back("constant response");
  }
  for (int b = 0; b < d.bootstrap; ++b) {
    const auto rows = bootstrap_rows(nr, rng);
    std::vector<double> yb(nr);
    for (long i = 0; i < nr; ++i) yb[i] = y[rows[i]];
    for (int l = 0; l < p; ++l) {
      std::vector<double> xb(nr);
      for (long i = 0; i < nr; ++i) xb[i] = X(rows[i], l);
      bn(b, l) = sobol_nw(xb, yb);
      bw(b, l) = sobol_wavelet(xb, yb, K).S;
    }
  }
  if (d.bootstrap > 1) {
    c.nw.sd_first.resize(p);
    c.wavelet.sd_first.resize(p);
    for (int l = 0; l < p; ++l) {
      c.nw.sd_first[l] = std::sqrt(var_of(bn.col(l)));
      c.wavelet.sd_first[l] = std::sqrt(var_of(bw.col(l)));
    }
  }
  clip_flags(c.nw);
  clip_flags(c.wavelet);
  return c;
}

}  // namespace epi

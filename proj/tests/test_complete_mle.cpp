#include "epiinfer/complete_mle.hpp"
#include "epiinfer/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace epi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const Vec kTheta = v2(0.5, 1.0 / 3.0);

// N = 10: infection at 0.5, recoveries at 1.5 and 2.0, horizon 3.
JumpPath three_event_path() {
  JumpPath p;
  p.model = build_model("sir");
  p.theta = kTheta;
  p.N = 10;
  p.x0 = v2(9, 1);
  p.T = 3.0;
  p.times = {0.5, 1.5, 2.0};
  p.jumps = {0, 1, 1};
  return p;
}

// Major outbreaks only, cut at a final size of N/10. The mean - SD protocol
// filter also trims the slow tail of major outbreaks, which shrinks the
// Monte Carlo variance, so it is not used for calibration checks.
std::vector<JumpPath> major_outbreaks(double N, int want, std::uint64_t root) {
  std::vector<JumpPath> out;
  for (std::uint64_t r = 0; static_cast<int>(out.size()) < want; ++r) {
    JumpPath p = gillespie(build_model("sir"), kTheta, N, v2(0.99 * N, 0.01 * N), 40.0, {root, r});
    if (final_size(p) >= 0.1 * N) out.push_back(std::move(p));
  }
  return out;
}

// Reed-Frost chain binomial: s_{k+1} ~ Bin(s_k, q^{i_k}).
void reed_frost(double s0, double i0, double q, int gens, Rng& rng, std::vector<double>& s,
                std::vector<double>& i) {
  s = {s0};
  i = {i0};
  for (int k = 0; k < gens; ++k) {
    const double next = static_cast<double>(rng.binomial(static_cast<long>(s.back()),
                                                         std::pow(q, i.back())));
    i.push_back(s.back() - next);
    s.push_back(next);
  }
}

// Golden-section maximizer used by the brute-force likelihood oracles.
template <class F>
double argmax_1d(F f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) > f(d))
      b = d;
    else
      a = c;
  }
  return (a + b) / 2;
}

}  // namespace

TEST(SirComplete, HandFixture) {
  const JumpPath p = three_event_path();
  const SirSufficient s = sir_sufficient(p);
  EXPECT_EQ(s.infections, 1);
  EXPECT_EQ(s.recoveries, 2);
  EXPECT_EQ(s.infections + s.recoveries, static_cast<double>(p.n_events()));
  // int S I = 9*1*0.5 + 8*2*1.0 + 8*1*0.5; int I = 0.5 + 2 + 0.5.
  EXPECT_DOUBLE_EQ(s.int_si, 24.5);
  EXPECT_DOUBLE_EQ(s.int_i, 3.0);
  const EstimateResult e = sir_mle_complete(p, false);
  EXPECT_DOUBLE_EQ(e.theta[0], 10.0 / 24.5);
  EXPECT_DOUBLE_EQ(e.theta[1], 2.0 / 3.0);
}

TEST(SirComplete, EventCountsMatchPath) {
  const JumpPath p = gillespie(build_model("sir"), kTheta, 1000, v2(990, 10), 40.0, {1, 3});
  const SirSufficient s = sir_sufficient(p);
  EXPECT_EQ(s.infections + s.recoveries, static_cast<double>(p.n_events()));
  const Vec xf = p.final_state();
  EXPECT_EQ(s.infections, 990 - xf[0]);
}

TEST(SirComplete, NoRecoveryFlagged) {
  JumpPath p = three_event_path();
  p.times = {0.5};
  p.jumps = {0};
  const EstimateResult e = sir_mle_complete(p, false);
  EXPECT_TRUE(std::isnan(e.theta[1]));
  EXPECT_TRUE(e.has_flag("gamma_undefined"));
  EXPECT_FALSE(e.has_flag("lambda_undefined"));
}

TEST(SirComplete, CovarianceIsPsdAndScaled) {
  const JumpPath p = major_outbreaks(10000, 1, 21).front();
  const EstimateResult e = sir_mle_complete(p);
  ASSERT_EQ(e.cov.rows(), 2);
  EXPECT_LE((e.cov - e.cov.transpose()).norm(), 1e-15 * e.cov.norm());
  EXPECT_GT(e.cov.determinant(), 0.0);
  EXPECT_GT(e.cov(0, 0), 0.0);
  const Mat I = jump_fisher_information(*build_model("sir"), e.theta, v2(0.99, 0.01), 40.0);
  EXPECT_LE((e.cov - I.inverse() / 10000).norm() / e.cov.norm(), 1e-6);
}

TEST(R0, RatioAndErrors) {
  EstimateResult e;
  e.theta = kTheta;
  e.cov = Mat::Identity(2, 2) * 1e-4;
  const R0Estimate r = r0_estimate(e);
  EXPECT_DOUBLE_EQ(r.r0, 1.5);
  // grad = (1/g, -l/g^2) = (3, -4.5).
  EXPECT_NEAR(r.variance, 1e-4 * (9 + 20.25), 1e-15);
  e.theta[1] = 0.0;
  EXPECT_THROW(r0_estimate(e), InvalidArgument);
}

TEST(R0, DeltaVarianceMatchesMonteCarlo) {
  std::vector<double> r0, var;
  for (const JumpPath& p : major_outbreaks(10000, 500, 22)) {
    const R0Estimate r = r0_estimate(sir_mle_complete(p));
    r0.push_back(r.r0);
    var.push_back(r.variance);
  }
  const double ratio = mean(var) / variance(r0);
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.25);
}

TEST(SirComplete, StandardizedMeanNearZero) {
  std::vector<double> zl, zg;
  for (const JumpPath& p : major_outbreaks(10000, 200, 23)) {
    const EstimateResult e = sir_mle_complete(p);
    zl.push_back((e.theta[0] - kTheta[0]) / e.sd()[0]);
    zg.push_back((e.theta[1] - kTheta[1]) / e.sd()[1]);
  }
  EXPECT_LE(std::abs(mean(zl)), 0.25);
  EXPECT_LE(std::abs(mean(zg)), 0.25);
}

TEST(Qmatrix, HandFixture) {
  CtmcPath p;
  p.n_states = 2;
  p.x0 = 0;
  p.T = 4.0;
  p.times = {0.5, 1.0, 1.5, 2.0, 3.0};
  p.states = {1, 0, 1, 0, 1};
  const TransitionCounts c = ctmc_counts(p);
  EXPECT_DOUBLE_EQ(c.R[0], 2.0);
  EXPECT_DOUBLE_EQ(c.R[1], 2.0);
  EXPECT_EQ(c.R.sum(), p.T);
  const QmatrixEstimate q = qmatrix_mle(p);
  EXPECT_DOUBLE_EQ(q.Q(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(q.Q(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(q.Q.row(0).sum(), 0.0);
}

TEST(Qmatrix, NeverVisitedRowFlagged) {
  CtmcPath p;
  p.n_states = 3;
  p.x0 = 0;
  p.T = 2.0;
  p.times = {1.0};
  p.states = {1};
  const QmatrixEstimate q = qmatrix_mle(p);
  EXPECT_FALSE(q.missing[0]);
  EXPECT_TRUE(q.missing[2]);
  EXPECT_EQ(q.Q.row(2).cwiseAbs().sum(), 0.0);
}

TEST(Qmatrix, ConsistentAsHorizonGrows) {
  Mat Q(3, 3);
  Q << -1.0, 0.6, 0.4, 0.5, -0.8, 0.3, 0.2, 0.9, -1.1;
  double err[2];
  int k = 0;
  for (double T : {500.0, 5000.0}) {
    double acc = 0.0;
    for (std::uint64_t r = 0; r < 20; ++r) acc += (qmatrix_mle(simulate_ctmc(Q, 0, T, {31, r})).Q - Q).cwiseAbs().maxCoeff();
    err[k++] = acc / 20;
  }
  EXPECT_LT(err[1], err[0]);
  // Error scales like T^{-1/2}.
  EXPECT_NEAR(err[0] / err[1], std::sqrt(10.0), 1.5);
}

TEST(Qmatrix, EqualsBruteForceLikelihoodMaximizer) {
  Mat Q(3, 3);
  Q << -1.0, 0.6, 0.4, 0.5, -0.8, 0.3, 0.2, 0.9, -1.1;
  const CtmcPath p = simulate_ctmc(Q, 0, 50.0, {32, 0});
  const TransitionCounts c = ctmc_counts(p);
  const QmatrixEstimate q = qmatrix_mle(c);
  // The jump-process log-likelihood separates into N_kl log q - R_k q.
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      if (k == l) continue;
      const double best = argmax_1d([&](double x) { return c.N(k, l) * std::log(x) - c.R[k] * x; }, 1e-9, 10.0);
      EXPECT_NEAR(q.Q(k, l), best, 1e-6);
    }
}

TEST(Chain, AlternatingPath) {
  const ChainEstimate e = chain_transition_mle({0, 1, 0, 1}, 2);
  EXPECT_EQ(e.P(0, 1), 1.0);
  EXPECT_EQ(e.P(1, 0), 1.0);
  EXPECT_EQ(e.P(0, 0), 0.0);
}

TEST(Chain, RowsSumToOneAndNeverLeftFlagged) {
  const ChainEstimate e = chain_transition_mle({0, 1, 2, 1, 1, 0, 2, 2, 0, 1}, 4);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(e.P.row(i).sum(), 1.0);
  EXPECT_TRUE(e.missing[3]);
  EXPECT_THROW(chain_transition_mle({}, 2), InvalidArgument);
}

TEST(Chain, CltScaleError) {
  Mat P(3, 3);
  P << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2;
  const ChainEstimate e = chain_transition_mle(simulate_markov_chain(P, 0, 100000, {33, 0}), 3);
  const double max_se = e.cov.diagonal().cwiseSqrt().maxCoeff();
  EXPECT_LE((e.P - P).cwiseAbs().maxCoeff(), 4 * max_se);
}

TEST(Chain, EqualsBruteForceLikelihoodMaximizer) {
  Mat P(3, 3);
  P << 0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.4, 0.4, 0.2;
  const auto seq = simulate_markov_chain(P, 0, 300, {34, 0});
  const TransitionCounts c = chain_counts(seq, 3);
  const ChainEstimate e = chain_transition_mle(seq, 3);
  // Row by row: maximize over (p0, p1) with p2 = 1 - p0 - p1 by nested search.
  for (int i = 0; i < 3; ++i) {
    auto ll = [&](double a, double b) {
      const double r = 1 - a - b;
      if (r <= 0) return -1e300;
      return c.N(i, 0) * std::log(a) + c.N(i, 1) * std::log(b) + c.N(i, 2) * std::log(r);
    };
    auto inner = [&](double a) { return argmax_1d([&](double b) { return ll(a, b); }, 1e-12, 1 - a); };
    const double a = argmax_1d([&](double a) { return ll(a, inner(a)); }, 1e-12, 1.0);
    EXPECT_NEAR(e.P(i, 0), a, 1e-6);
    EXPECT_NEAR(e.P(i, 1), inner(a), 1e-6);
  }
}

TEST(ChainParametric, SaturatedRecoversEmpirical) {
  Mat P(2, 2);
  P << 0.7, 0.3, 0.45, 0.55;
  const auto seq = simulate_markov_chain(P, 0, 2000, {35, 0});
  const TransitionCounts c = chain_counts(seq, 2);
  auto fam = [](const Vec& th) {
    Mat M(2, 2);
    M << 1 - th[0], th[0], th[1], 1 - th[1];
    return M;
  };
  const EstimateResult e = chain_parametric_mle(c, fam, v2(0.5, 0.5), {ParamDomain::Unit, ParamDomain::Unit});
  const ChainEstimate ref = chain_transition_mle(seq, 2);
  EXPECT_NEAR(e.theta[0], ref.P(0, 1), 1e-6);
  EXPECT_NEAR(e.theta[1], ref.P(1, 0), 1e-6);
  EXPECT_NEAR(e.cov(0, 0), ref.cov(1, 1), 1e-3 * ref.cov(1, 1));
}

TEST(ChainParametric, IcuWithinFourSe) {
  const Vec truth = (Vec(3) << 0.8, 0.9, 0.3).finished();
  const auto seq = simulate_markov_chain(icu_transition(0.8, 0.9, 0.3), 0, 10000, {36, 0});
  const TransitionCounts c = chain_counts(seq, 3);
  auto fam = [](const Vec& th) { return icu_transition(th[0], th[1], th[2]); };
  const EstimateResult e = chain_parametric_mle(
      c, fam, Vec::Constant(3, 0.5), {ParamDomain::Unit, ParamDomain::Unit, ParamDomain::Unit});
  for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(e.theta[i] - truth[i]), 4 * e.sd()[i]) << i;
}

TEST(ChainParametric, BirthDeathMatchesClosedForm) {
  const std::vector<int> I = {1, 2, 1, 1, 0, 0, 1, 2, 3, 3, 2, 2, 1, 0, 1, 1, 2, 1};
  const BirthDeathEstimate bd = bd_chain_mle(I);
  const int K = *std::max_element(I.begin(), I.end()) + 1;
  auto fam = [K](const Vec& th) {
    const double p = th[0], q = th[1];
    Mat M = Mat::Zero(K + 1, K + 1);
    M(0, 0) = 1 - p;
    M(0, 1) = p;
    for (int k = 1; k < K; ++k) {
      M(k, k - 1) = q;
      M(k, k) = 1 - p - q;
      M(k, k + 1) = p;
    }
    M(K, K - 1) = q;
    M(K, K) = 1 - q;
    return M;
  };
  std::vector<int> seq(I.begin(), I.end());
  const TransitionCounts c = chain_counts(seq, K + 1);
  const EstimateResult e = chain_parametric_mle(c, fam, v2(0.3, 0.3), {ParamDomain::Unit, ParamDomain::Unit});
  EXPECT_NEAR(e.theta[0], bd.p, 1e-8);
  EXPECT_NEAR(e.theta[1], bd.q, 1e-8);
}

TEST(Greenwood, HandValues) {
  const GreenwoodEstimate g = greenwood_estimators({10, 5, 3, 3});
  EXPECT_DOUBLE_EQ(g.p_mle, 7.0 / 18.0);
  // 1 - (50 + 15 + 9) / (100 + 25 + 9)
  EXPECT_DOUBLE_EQ(g.p_cls, 1.0 - 74.0 / 134.0);
  const GreenwoodEstimate c = greenwood_estimators({7, 7, 7});
  EXPECT_EQ(c.p_mle, 0.0);
  EXPECT_EQ(c.p_cls, 0.0);
  EXPECT_EQ(greenwood_estimators({12, 0}).p_mle, 1.0);
  EXPECT_THROW(greenwood_estimators({3, 5}), InvalidArgument);
}

TEST(ReedFrost, SingleInfectiveReducesToGreenwood) {
  const std::vector<double> s = {10, 9, 8, 7}, i = {1, 1, 1, 1};
  const ReedFrostEstimate r = reed_frost_mle(s, i);
  EXPECT_FALSE(r.boundary);
  EXPECT_NEAR(r.q, 1.0 - greenwood_estimators(s).p_mle, 1e-10);
}

TEST(ReedFrost, NoNewInfectionsIsBoundary) {
  const ReedFrostEstimate r = reed_frost_mle({10, 10, 10}, {2, 0, 0});
  EXPECT_TRUE(r.boundary);
  EXPECT_EQ(r.q, 1.0);
}

TEST(ReedFrost, SimulatedWithinFourSe) {
  const double q = 0.995;
  Rng rng(37);
  std::vector<double> est;
  std::vector<double> s, i;
  while (est.size() < 200) {
    reed_frost(1000, 5, q, 30, rng, s, i);
    const ReedFrostEstimate r = reed_frost_mle(s, i);
    if (!r.boundary) est.push_back(r.q);
  }
  const double se = std::sqrt(variance(est) / est.size());
  EXPECT_LE(std::abs(mean(est) - q), 4 * se);
}

TEST(BirthDeath, HandFixture) {
  const BirthDeathEstimate e = bd_chain_mle({1, 2, 1, 1, 0, 0, 1});
  EXPECT_EQ(e.B, 2);
  EXPECT_EQ(e.D, 2);
  EXPECT_EQ(e.R, 1);
  EXPECT_EQ(e.N00, 1);
  EXPECT_DOUBLE_EQ(e.p, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.q, 4.0 / 9.0);
  EXPECT_DOUBLE_EQ(e.q_asymptotic, 4.0 / 9.0);
}

TEST(BirthDeath, MonotoneIsBoundary) {
  const BirthDeathEstimate e = bd_chain_mle({1, 2, 2, 3, 4});
  EXPECT_EQ(e.q, 0.0);
  EXPECT_TRUE(e.boundary);
  EXPECT_THROW(bd_chain_mle({0, 1, 2}), InvalidArgument);
  EXPECT_THROW(bd_chain_mle({1, 3}), InvalidArgument);
}

TEST(BirthDeath, SimulatedWithinFourSe) {
  const double p = 0.2, q = 0.4;
  std::vector<double> zp, zq;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    Rng rng(SeedSpec{38, rep});
    std::vector<int> I = {1};
    for (int k = 0; k < (rep == 0 ? 100000 : 2000); ++k) {
      const double u = rng.uniform();
      const int x = I.back();
      if (u < p)
        I.push_back(x + 1);
      else if (x > 0 && u < p + q)
        I.push_back(x - 1);
      else
        I.push_back(x);
    }
    const BirthDeathEstimate e = bd_chain_mle(I);
    if (rep == 0) {
      EXPECT_LE(std::abs(e.p - p), 4 * std::sqrt(e.cov(0, 0)));
      EXPECT_LE(std::abs(e.q - q), 4 * std::sqrt(e.cov(1, 1)));
      continue;
    }
    zp.push_back((e.p - p) / std::sqrt(e.cov(0, 0)));
    zq.push_back((e.q - q) / std::sqrt(e.cov(1, 1)));
  }
  EXPECT_LE(std::abs(mean(zp)), 0.25);
  EXPECT_LE(std::abs(mean(zq)), 0.25);
}

TEST(Branching, DeterministicDoubling) {
  const BranchingEstimate b = branching_estimators({1, 2, 4, 8});
  EXPECT_DOUBLE_EQ(b.m, 2.0);
  EXPECT_DOUBLE_EQ(b.sigma2, 0.0);
  EXPECT_FALSE(b.extinct);
  EXPECT_THROW(branching_estimators({0, 0}), InvalidArgument);
}

TEST(Branching, GeometricPlugIn) {
  const std::vector<double> Z = {3, 5, 9, 14, 30};
  const BranchingEstimate b = branching_estimators(Z, OffspringFamily::Geometric);
  EXPECT_DOUBLE_EQ(b.param[0], (3.0 + 5 + 9 + 14) / (5.0 + 9 + 14 + 30));
  EXPECT_DOUBLE_EQ(1.0 / b.param[0], b.m);
}

TEST(Branching, FractionalLinearExtinction) {
  const double a = 0.2, p = 0.5;
  const Vec th = v2(a, p);
  EXPECT_NEAR(extinction_probability(OffspringFamily::FractionalLinear, th), a / (1 - p), 1e-12);
  EXPECT_NEAR(offspring_pgf(OffspringFamily::FractionalLinear, th, 1.0), 1.0, 1e-15);
  // Mean (1-a)/p and variance (1-a)(1-p+a)/p^2 invert back to (a, p).
  Rng rng(39);
  std::vector<double> Z = {50};
  for (int g = 0; g < 12; ++g) {
    double next = 0;
    for (long k = 0; k < static_cast<long>(Z.back()); ++k)
      if (rng.uniform() > a) next += 1 + std::floor(std::log(rng.uniform()) / std::log1p(-p));
    Z.push_back(next);
  }
  const BranchingEstimate b = branching_estimators(Z, OffspringFamily::FractionalLinear);
  EXPECT_NEAR(b.m, (1 - a) / p, 0.03);
  ASSERT_TRUE(b.extinction.has_value());
  EXPECT_NEAR(*b.extinction, a / (1 - p), 0.1);
}

TEST(Ar1, NoiselessRecovery) {
  std::vector<double> x;
  for (int i = 0; i <= 20; ++i) x.push_back(std::pow(0.8, i));
  const Ar1Estimate e = ar1_mle(x);
  EXPECT_NEAR(e.a, 0.8, 1e-14);
  EXPECT_NEAR(e.gamma2, 0.0, 1e-28);
  EXPECT_THROW(ar1_mle({0, 0, 0}), InvalidArgument);
}

TEST(Ar1, SimulatedAndOuReparametrization) {
  const double a = 0.5;
  const int n = 10000;
  const Ar1Estimate e = ar1_mle(simulate_ar1(a, 1.0, 0.0, n, {40, 0}));
  EXPECT_LE(std::abs(e.a - a), 4 * std::sqrt((1 - a * a) / n));
  EXPECT_NEAR(e.gamma2, 1.0, 4 * std::sqrt(2.0 / n));
  // OU dX = -theta X dt + s dW sampled at Delta is AR(1) with a = exp(-theta Delta).
  const double theta = 0.7, delta = 0.5, sig = 0.4;
  const double aa = std::exp(-theta * delta), g = sig * std::sqrt((1 - aa * aa) / (2 * theta));
  const Ar1Estimate o = ar1_mle(simulate_ar1(aa, g, 0.0, n, {40, 1}));
  const double theta_hat = -std::log(o.a) / delta;
  EXPECT_NEAR(theta_hat, theta, 4 * std::sqrt((1 - aa * aa) / n) / (aa * delta));
}

TEST(Ar1, StandardizedMeanNearZero) {
  std::vector<double> z;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Ar1Estimate e = ar1_mle(simulate_ar1(0.5, 1.0, 0.0, 2000, {41, r}));
    z.push_back((e.a - 0.5) / std::sqrt((1 - 0.25) / 2000));
  }
  EXPECT_LE(std::abs(mean(z)), 0.25);
}

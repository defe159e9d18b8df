#include "epiinfer/ode.hpp"
#include "epiinfer/simulate.hpp"
#include "epiinfer/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace epi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const Vec kTheta = v2(0.5, 1.0 / 3.0);

JumpPath sir_path(double N, SeedSpec seed, double T = 40.0) {
  return gillespie(build_model("sir"), kTheta, N, v2(std::round(0.99 * N), std::round(0.01 * N)), T,
                   seed);
}

// W1 distance between two empirical distributions of equal size.
double wasserstein1(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / a.size();
}

}  // namespace

TEST(Gillespie, ConservesPopulation) {
  const JumpPath p = sir_path(400, {1, 0});
  ASSERT_GT(p.n_events(), 0u);
  double r_prev = 0.0;
  for (std::size_t k = 0; k < p.n_events(); ++k) {
    const Vec x = p.state_at(p.times[k]);
    EXPECT_GE(x[0], 0.0);
    EXPECT_GE(x[1], 0.0);
    // R = N - S - I never decreases, so S + I + R = N with R a counting process.
    const double r = 400.0 - x[0] - x[1];
    EXPECT_GE(r, r_prev);
    r_prev = r;
  }
  EXPECT_TRUE(std::is_sorted(p.times.begin(), p.times.end()));
}

TEST(Gillespie, AbsorbingStartHasNoEvents) {
  const JumpPath p = gillespie(build_model("sir"), kTheta, 400, v2(400, 0), 40, {1, 0});
  EXPECT_EQ(p.n_events(), 0u);
}

TEST(Gillespie, Deterministic) {
  const JumpPath a = sir_path(400, {3, 7}), b = sir_path(400, {3, 7}), c = sir_path(400, {3, 8});
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.jumps, b.jumps);
  EXPECT_NE(a.times, c.times);
}

TEST(Gillespie, RejectsBadCounts) {
  EXPECT_THROW(gillespie(build_model("sir"), kTheta, 100, v2(90, 20), 10, {}), InvalidArgument);
  EXPECT_THROW(gillespie(build_model("sir"), kTheta, 100, v2(90, -1), 10, {}), InvalidArgument);
}

TEST(Gillespie, HoldingTimesAreExponential) {
  // Scaled by the total rate at the state left, holding times are Exp(1).
  const auto m = build_model("sir");
  std::vector<double> e;
  for (std::uint64_t r = 0; e.size() < 10000; ++r) {
    const JumpPath p = sir_path(1000, {5, r});
    double prev = 0.0;
    for (std::size_t k = 0; k < p.n_events() && e.size() < 10000; ++k) {
      const double total = m->count_rates(kTheta, prev, p.state_at(prev), p.N).sum();
      e.push_back((p.times[k] - prev) * total);
      prev = p.times[k];
    }
  }
  EXPECT_GT(ks_test(e, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); }).p_value, 0.01);
}

TEST(Gillespie, SeasonalThinningMatchesIntegratedRate) {
  // With S/N close to 1 and no removals, infectives form a time-inhomogeneous
  // Yule process: E I(T) = I0 exp(int_0^T lambda(t) dt).
  const auto m = build_model("sirs_seasonal", {{"T_per", 1.0}, {"mu", 0.0}, {"eta", 0.0}});
  Vec th(4);
  th << 1.0, 0.8, 1e-12, 1e-12;
  Vec x0(2);
  x0 << 1e7 - 100, 100;
  const double N = 1e7, T = 0.25;
  std::vector<double> counts;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const JumpPath p = gillespie(m, th, N, x0, T, {6, r});
    counts.push_back(x0[0] - p.final_state()[0]);
  }
  const double integ = T + 0.8 * (1.0 - std::cos(2 * M_PI * T)) / (2 * M_PI);
  const double expect = x0[1] * (std::exp(integ * x0[0] / N) - 1.0);
  EXPECT_NEAR(mean(counts) / expect, 1.0, 0.025);
}

TEST(TauLeap, CloseToGillespieForSmallTau) {
  const auto m = build_model("sir");
  std::vector<double> g, t;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    g.push_back(final_size(sir_path(400, {7, r}, 200)));
    t.push_back(final_size(tau_leap(m, kTheta, 400, v2(396, 4), 200, 0.01, {8, r})));
  }
  EXPECT_LE(wasserstein1(g, t), 3.0 * wasserstein1(std::vector<double>(g.begin(), g.begin() + 500),
                                                   std::vector<double>(g.begin() + 500, g.end())) +
                                    3.0);
}

TEST(TauLeap, ZeroRateStateUnchanged) {
  const JumpPath p = tau_leap(build_model("sir"), kTheta, 400, v2(400, 0), 10, 0.5, {1, 0});
  EXPECT_EQ(p.final_state(), v2(400, 0));
}

TEST(TauLeap, LargePopulationSeasonalRuns) {
  const auto m = build_model("sirs_seasonal", {{"T_per", 365.0}, {"mu", 1.0 / (50 * 365.0)}, {"eta", 1e-6}});
  Vec th(4);
  th << 0.5, 0.1, 1.0 / 3.0, 1.0 / (2 * 365.0);
  const double N = 1e7;
  Vec x0(2);
  x0 << std::round(0.3 * N), std::round(1e-4 * N);
  const JumpPath p = tau_leap(m, th, N, x0, 20 * 365.0, 1.0, {9, 0});
  EXPECT_EQ(p.leaps.size(), p.times.size());
  EXPECT_LE(p.times.size(), 7301u);
  const Vec xf = p.final_state();
  EXPECT_GE(xf.minCoeff(), 0.0);
  EXPECT_LE(xf.sum(), N);
}

TEST(SamplePath, ConstantWithoutEvents) {
  const JumpPath p = gillespie(build_model("sir"), kTheta, 400, v2(400, 0), 10, {1, 0});
  const SampledSeries s = sample_path(p, 1.0);
  ASSERT_EQ(s.n(), 10);
  for (int k = 1; k <= s.n(); ++k) EXPECT_EQ(s.at(k), s.x0);
}

TEST(SamplePath, CadlagSampling) {
  JumpPath p;
  p.model = build_model("sir");
  p.theta = kTheta;
  p.N = 10;
  p.x0 = v2(9, 1);
  p.T = 4;
  p.times = {1.5};
  p.jumps = {1};
  const SampledSeries s = sample_path(p, 1.0);
  EXPECT_EQ(s.at(1)[1], 0.1);
  EXPECT_EQ(s.at(2)[1], 0.0);
}

TEST(SamplePath, DailyRowsAndTruncationCommutes) {
  const JumpPath p = sir_path(1000, {2, 0});
  const SampledSeries s = sample_path(p, 1.0);
  EXPECT_EQ(s.n(), 40);
  const SampledSeries a = sample_path(p.truncated(25.0), 1.0);
  ASSERT_EQ(a.n(), 25);
  EXPECT_EQ(a.values, s.values.topRows(25));
}

TEST(EulerMaruyama, ZeroNoiseMatchesOde) {
  const auto m = build_model("sir");
  const Vec z0 = v2(0.99, 0.01);
  const SampledSeries s = euler_maruyama(*m, kTheta, 0.0, z0, 10.0, 1e-5, {1, 0}, 100000);
  const OdeSolution sol = solve_ode(*m, kTheta, z0, 10.0, {.tol = 1e-12});
  for (int k = 1; k <= s.n(); ++k) EXPECT_LE((s.at(k) - sol.z(s.time(k))).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EulerMaruyama, Deterministic) {
  const auto m = build_model("sir");
  const auto a = euler_maruyama(*m, kTheta, 0.01, v2(0.99, 0.01), 5.0, 0.01, {4, 1});
  const auto b = euler_maruyama(*m, kTheta, 0.01, v2(0.99, 0.01), 5.0, 0.01, {4, 1});
  EXPECT_EQ(a.values, b.values);
}

TEST(EulerMaruyama, SupDistanceShrinksWithN) {
  const auto m = build_model("sir");
  const Vec z0 = v2(0.99, 0.01);
  const OdeSolution sol = solve_ode(*m, kTheta, z0, 40.0);
  double prev = 1e9;
  for (double N : {400.0, 1000.0, 10000.0}) {
    double acc = 0.0;
    for (std::uint64_t r = 0; r < 50; ++r) {
      const auto s = euler_maruyama(*m, kTheta, 1.0 / std::sqrt(N), z0, 40.0, 0.01, {10, r}, 100);
      double sup = 0.0;
      for (int k = 1; k <= s.n(); ++k) sup = std::max(sup, (s.at(k) - sol.z(s.time(k))).norm());
      acc += sup / 50;
    }
    EXPECT_LT(acc, prev);
    prev = acc;
  }
}

TEST(Gillespie, LawOfLargeNumbersAcrossN) {
  const auto m = build_model("sir");
  const OdeSolution sol = solve_ode(*m, kTheta, v2(0.99, 0.01), 40.0);
  double prev = 1e9;
  for (double N : {400.0, 1000.0, 10000.0}) {
    double acc = 0.0;
    int used = 0;
    for (std::uint64_t r = 0; r < 200; ++r) {
      const SampledSeries s = sample_path(sir_path(N, {11, r}), 1.0);
      double sup = 0.0;
      for (int k = 1; k <= s.n(); ++k) sup = std::max(sup, (s.at(k) - sol.z(k)).norm());
      acc += sup;
      ++used;
    }
    acc /= used;
    EXPECT_LE(acc, prev);
    prev = acc;
  }
}

TEST(Ar1, NoiselessAndWhite) {
  const auto x = simulate_ar1(0.7, 0.0, 2.0, 10, {1, 0});
  for (int i = 0; i <= 10; ++i) EXPECT_NEAR(x[i], std::pow(0.7, i) * 2.0, 1e-14);
  auto w = simulate_ar1(0.0, 1.0, 0.0, 5000, {2, 0});
  w.erase(w.begin());
  EXPECT_GT(ks_test(w, normal_cdf).p_value, 0.01);
  EXPECT_EQ(simulate_ar1(0.3, 1.0, 0.0, 50, {3, 0}), simulate_ar1(0.3, 1.0, 0.0, 50, {3, 0}));
}

TEST(NonExtinctFilter, IdenticalSizesAllKept) {
  const FilterResult f = non_extinct_filter(std::vector<double>(10, 42.0));
  EXPECT_EQ(f.kept.size(), 10u);
  EXPECT_TRUE(f.dropped.empty());
}

TEST(NonExtinctFilter, HandBuiltFixtureDropsTinyOutbreaks) {
  std::vector<double> sizes(20, 300.0);
  for (int i = 0; i < 4; ++i) sizes.push_back(2.0 + i);
  const FilterResult f = non_extinct_filter(sizes);
  EXPECT_EQ(f.dropped.size(), 4u);
  for (std::size_t d : f.dropped) EXPECT_GE(d, 20u);
}

TEST(NonExtinctFilter, MinorOutbreaksAtSmallN) {
  std::vector<JumpPath> paths;
  for (std::uint64_t r = 0; r < 1000; ++r) paths.push_back(sir_path(400, {12, r}, 200.0));
  const FilterResult f = non_extinct_filter(paths);
  EXPECT_FALSE(f.dropped.empty());
  // Extinction probability of the branching approximation, (gamma/lambda)^I0.
  int minor = 0;
  for (const auto& p : paths) minor += final_size(p) < 40;
  EXPECT_NEAR(minor / 1000.0, std::pow(2.0 / 3.0, 4), 0.05);
}

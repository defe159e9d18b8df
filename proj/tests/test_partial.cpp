#include "epiinfer/partial.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace epi;

namespace {

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

// x1 observed, x2 hidden with x2(0) = b', eta = (a, h, b').
PartialConfig ou_config(double a, double h, double sigma, double x10) {
  PartialConfig c;
  c.observed = 0;
  c.hidden = 1;
  c.free = {0, 2};
  c.theta = (Vec(4) << a, 1.0, h, sigma).finished();
  c.x0 = (Vec(2) << x10, 0.0).finished();
  c.ode_tol = 1e-11;
  return c;
}

PartialConfig sir_config() {
  PartialConfig c;
  c.observed = 1;
  c.hidden = 0;
  c.free = {0, 1};
  c.theta = (Vec(2) << 0.5, 1.0 / 3.0).finished();
  c.x0 = (Vec(2) << 0.97, 0.01).finished();
  c.xi_lo = 0.0;
  c.xi_hi = 0.99;
  return c;
}

std::vector<double> ode_trace(const Model& m, const PartialConfig& c, const Vec& eta, double dt,
                              int n) {
  const OdeSolution sol = solve_ode(m, eta_to_theta(m, c, eta), eta_to_x0(c, eta), n * dt, {.tol = 1e-12});
  std::vector<double> x;
  for (int k = 0; k <= n; ++k) x.push_back(sol.z(k * dt)[c.observed]);
  return x;
}

std::vector<double> observed_coordinate(const SampledSeries& s, int i) {
  std::vector<double> x;
  for (int k = 0; k <= s.n(); ++k) x.push_back(s.at(k)[i]);
  return x;
}

}  // namespace

TEST(Ak, ZeroOnExactTrace) {
  const auto m = build_model("sir");
  const PartialConfig c = sir_config();
  const Vec eta = v3(0.5, 1.0 / 3.0, 0.97);
  const auto x = ode_trace(*m, c, eta, 1.0, 40);
  const OdeSolution sol = solve_ode(*m, eta_to_theta(*m, c, eta), eta_to_x0(c, eta), 40.0, {.tol = 1e-12});
  for (double a : ak_residuals(*m, eta_to_theta(*m, c, eta), 1, x, sol, 1.0)) EXPECT_LE(std::abs(a), 1e-9);
  EXPECT_LE(contrast_partial(*m, c, eta, x, 0.01, 1.0), 1e-8);
}

TEST(Ak, OuHandFormula) {
  const auto m = build_model("ou2d");
  const double a = -0.5, h = 0.3, dt = 0.2;
  const PartialConfig c = ou_config(a, h, 0.7, 1.2);
  const Vec eta = v3(a, h, 0.8);
  const std::vector<double> x = {1.2, 1.1, 1.25, 0.9, 1.0, 0.7};
  const OdeSolution sol = solve_ode(*m, eta_to_theta(*m, c, eta), eta_to_x0(c, eta), 1.0, {.tol = 1e-12});
  const auto A = ak_residuals(*m, eta_to_theta(*m, c, eta), 0, x, sol, dt);
  for (int k = 1; k <= 5; ++k) {
    const double zk = sol.z(k * dt)[0], zp = sol.z((k - 1) * dt)[0];
    EXPECT_NEAR(A[k - 1], x[k] - zk - (1 + a * dt) * (x[k - 1] - zp), 1e-13);
  }
  EXPECT_THROW(ak_residuals(*m, eta_to_theta(*m, c, eta), 0, x, sol, 0.3), InvalidArgument);
}

TEST(Ak, ResidualTracksGamma1OnFineGrid) {
  const auto m = build_model("sir");
  const PartialConfig c = sir_config();
  const Vec eta0 = v3(0.5, 1.0 / 3.0, 0.97), eta = v3(0.55, 0.35, 0.95);
  const double dt = 0.01;
  const int n = 2000;
  const auto x = ode_trace(*m, c, eta0, dt, n);
  const OdeSolution sol = solve_ode(*m, eta_to_theta(*m, c, eta), eta_to_x0(c, eta), n * dt, {.tol = 1e-12});
  const auto A = ak_residuals(*m, eta_to_theta(*m, c, eta), 1, x, sol, dt);
  std::vector<double> times;
  for (int k = 0; k < n; ++k) times.push_back(k * dt);
  const auto g = gamma1(*m, c, eta0, eta, times);
  double worst = 0.0, scale = 0.0;
  for (int k = 0; k < n; ++k) {
    worst = std::max(worst, std::abs(A[k] / dt - g[k]));
    scale = std::max(scale, std::abs(g[k]));
  }
  EXPECT_GT(scale, 1e-4);
  EXPECT_LE(worst, 0.05 * scale);
}

TEST(ContrastPartial, NonnegativeAndScaleInvariantArgmin) {
  const auto m = build_model("ou2d");
  const double a = -0.5, h = 0.3, sigma = 0.7;
  PartialConfig c = ou_config(a, h, sigma, 1.2);
  const Vec eta0 = v3(a, h, 0.8);
  Vec x0 = eta_to_x0(c, eta0);
  const SampledSeries s = euler_maruyama(*m, eta_to_theta(*m, c, eta0), 0.05, x0, 3.0, 0.001, {61, 0}, 30);
  const auto x = observed_coordinate(s, 0);
  Rng rng(62);
  for (int k = 0; k < 50; ++k) {
    const Vec eta = eta0 + 0.3 * Vec::NullaryExpr(3, [&] { return rng.normal(); });
    EXPECT_GE(contrast_partial(*m, c, eta, x, 0.05, s.dt), 0.0);
  }
  c.transform = false;
  const EstimateResult e1 = estimate_partial(*m, s, 0.05, eta0, c);
  const EstimateResult e2 = estimate_partial(*m, s, 0.5, eta0, c);
  EXPECT_LE((e1.theta - e2.theta).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(PartialInformation, SymmetryAndPsd) {
  const auto m = build_model("sir");
  const PartialConfig c = sir_config();
  const PartialInformation pi = partial_information(*m, c, v3(0.5, 1.0 / 3.0, 0.97), 40.0);
  EXPECT_EQ((pi.Lambda - pi.Lambda.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((pi.V - pi.V.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const double tr = pi.V.trace();
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(pi.V).eigenvalues().minCoeff(), -1e-8 * tr);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(pi.Lambda).eigenvalues().minCoeff(), -1e-8 * pi.Lambda.trace());
  EXPECT_LT(pi.quad_rel_change, 1e-6);
}

TEST(Ou2d, ClosedFormMatchesGenericQuadrature) {
  Rng rng(63);
  for (int k = 0; k < 5; ++k) {
    const double a = rng.uniform(-1.0, -0.1), h = rng.uniform(0.1, 0.6), sigma = rng.uniform(0.2, 1.0);
    const double bp = rng.uniform(0.3, 1.5), x10 = rng.uniform(0.5, 2.0), T = rng.uniform(1.0, 4.0);
    const PartialInformation gen =
        partial_information(*build_model("ou2d"), ou_config(a, h, sigma, x10), v3(a, h, bp), T);
    const Ou2dClosedForm cf = ou2d_closed_form(a, bp, h, sigma, T, x10);
    Eigen::PermutationMatrix<3> P;
    P.indices() << 0, 2, 1;
    const Mat L = P * cf.Lambda * P.transpose(), V = P * cf.V * P.transpose();
    EXPECT_LE((gen.Lambda - L).norm() / L.norm(), 1e-6);
    EXPECT_LE((gen.V - V).norm() / V.norm(), 1e-6);
    // v2 vanishes for the OU case, so the cross blocks do too.
    EXPECT_LE(gen.V2.norm(), 1e-10 * gen.V.norm());
    EXPECT_EQ((cf.Lambda - cf.Lambda.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(cf.Lambda).eigenvalues().minCoeff(), -1e-12 * cf.Lambda.norm());
  }
}

TEST(Ou2d, SecondDComponent) {
  const double a = -0.4, h = 0.25;
  for (double t : {0.0, 0.5, 2.0})
    EXPECT_NEAR(ou2d_d(a, 0.7, h, 1.0, t)[1], -std::exp((a + h) * t), 1e-14);
  EXPECT_THROW(ou2d_closed_form(a, 0.7, 0.0, 0.5, 2.0), InvalidArgument);
}

TEST(Ou2d, SeparateBAndXiAreNotIdentifiable) {
  // eta = (a, b, h, xi): only b * xi enters the observed mean.
  const auto m = build_model("ou2d");
  PartialConfig c = ou_config(-0.5, 0.3, 0.7, 1.2);
  c.free = {0, 1, 2};
  const PartialInformation pi = partial_information(*m, c, (Vec(4) << -0.5, 2.0, 0.3, 0.4).finished(), 3.0);
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(pi.Lambda).eigenvalues();
  EXPECT_LE(ev.minCoeff(), 1e-9 * ev.maxCoeff());
}

TEST(SirIdentifiability, Gamma1VanishesOnlyAtTruth) {
  const Vec eta0 = v3(0.5, 1.0 / 3.0, 0.97);
  std::vector<double> times;
  for (int k = 0; k <= 40; ++k) times.push_back(k);
  const auto m = build_model("sir");
  for (double g : gamma1(*m, sir_config(), eta0, eta0, times)) EXPECT_EQ(g, 0.0);
  // lambda scaled and s0 rescaled so that lambda * s0 is unchanged: the
  // direction that is degenerate for the linear model.
  std::vector<Vec> grid = {v3(0.55, 1.0 / 3.0, 0.97 / 1.1), v3(0.45, 0.3, 0.97), v3(0.5, 0.36, 0.9)};
  const IdentifiabilityReport r = sir_partial_identifiability_check(eta0, 0.01, 40.0, grid);
  EXPECT_TRUE(r.identifiable);
  for (double v : r.max_abs_gamma1) EXPECT_GT(v, r.tolerance);
  EXPECT_GE(r.cond, 50.0);
  EXPECT_EQ(r.eigenvalues.size(), 3);
}

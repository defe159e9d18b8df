#include "epiinfer/ode.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace epi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const Vec kSir = v2(0.5, 1.0 / 3.0);
const Vec kZ0 = v2(0.99, 0.01);

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

// Classical RK4 on the linearized flow along a computed trajectory.
Vec linearized_rk4(const Model& m, const Vec& th, const OdeSolution& sol, double s, double t,
                   const Vec& v, int steps) {
  auto f = [&](double u, const Vec& y) -> Vec { return drift_gradients(m, th, u, sol.z(u)).d_z * y; };
  const double h = (t - s) / steps;
  Vec y = v;
  for (int k = 0; k < steps; ++k) {
    const double u = s + k * h;
    const Vec k1 = f(u, y), k2 = f(u + h / 2, y + h / 2 * k1), k3 = f(u + h / 2, y + h / 2 * k2),
              k4 = f(u + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST(Ode, SirQualitative) {
  const auto m = build_model("sir");
  const OdeSolution sol = solve_ode(*m, kSir, kZ0, 40.0, {.tol = 1e-10});
  double prev_s = 1.0, peak_t = -1, prev_i = 0.0;
  bool falling = false;
  for (double t = 0.0; t <= 40.0; t += 0.1) {
    const Vec z = sol.z(t);
    EXPECT_LE(z[0], prev_s + 1e-14);
    EXPECT_LE(z.sum(), 1.0 + 1e-12);
    if (z[1] < prev_i && !falling) {
      falling = true;
      peak_t = t;
    }
    if (falling) EXPECT_LE(z[1], prev_i + 1e-14);
    prev_s = z[0];
    prev_i = z[1];
  }
  EXPECT_GT(peak_t, 0.0);
}

TEST(Ode, ZeroDriftIsConstant) {
  const auto m = build_model("sir");
  const OdeSolution sol = solve_ode(*m, kSir, v2(0.8, 0.0), 10.0);
  EXPECT_EQ(sol.z(7.3), v2(0.8, 0.0));
}

TEST(Ode, SeasonalStrobeMapPeriodDoubling) {
  // Annual strobe of i(t) after transients: a fixed point at lambda1 = 0.05,
  // a two-cycle at lambda1 = 0.1.
  const auto m =
      build_model("sirs_seasonal", {{"T_per", 365.0}, {"mu", 1.0 / (50 * 365.0)}, {"eta", 1e-6}});
  auto strobe = [&](double l1) {
    Vec th(4);
    th << 0.5, l1, 1.0 / 3.0, 1.0 / (2 * 365.0);
    const OdeSolution sol = solve_ode(*m, th, v2(0.7, 1e-4), 365.0 * 150, {.tol = 1e-10, .h_max = 1.0});
    std::vector<double> y;
    for (int k = 144; k <= 150; ++k) y.push_back(sol.z(365.0 * k)[1]);
    return y;
  };
  const auto a = strobe(0.05), b = strobe(0.1);
  for (std::size_t k = 1; k < a.size(); ++k) EXPECT_NEAR(a[k] / a[k - 1], 1.0, 1e-4);
  for (std::size_t k = 2; k < b.size(); ++k) EXPECT_NEAR(b[k] / b[k - 2], 1.0, 1e-4);
  EXPECT_GT(std::abs(b[1] / b[0] - 1.0), 0.5);
}

TEST(Ode, ResolventIdentityAndSemigroup) {
  const auto m = build_model("sir");
  const OdeSolution sol = solve_ode(*m, kSir, kZ0, 40.0, {.tol = 1e-10});
  EXPECT_LE(rel(sol.resolvent(12.0, 12.0), Mat::Identity(2, 2)), 1e-14);
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    double x[3] = {rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(0, 40)};
    std::sort(x, x + 3);
    const Mat lhs = sol.resolvent(x[2], x[1]) * sol.resolvent(x[1], x[0]);
    EXPECT_LE(rel(lhs, sol.resolvent(x[2], x[0])), 1e-10);
  }
}

TEST(Ode, ResolventMatchesLinearizedFlow) {
  const auto m = build_model("sir");
  const OdeSolution sol = solve_ode(*m, kSir, kZ0, 40.0, {.tol = 1e-11});
  Rng rng(2);
  for (int k = 0; k < 5; ++k) {
    const double s = rng.uniform(0, 20), t = s + rng.uniform(1, 20);
    const Vec v = v2(rng.normal(), rng.normal());
    const Vec brute = linearized_rk4(*m, kSir, sol, s, t, v, 4000);
    EXPECT_LE(rel(sol.resolvent(t, s) * v, brute), 1e-7);
  }
}

TEST(Ode, Ou2dResolventClosedForm) {
  const double a = -0.4, b = 1.3, h = 0.6;
  const auto m = build_model("ou2d");
  Vec th(4);
  th << a, b, h, 0.5;
  const OdeSolution sol = solve_ode(*m, th, v2(1.0, 0.5), 5.0, {.tol = 1e-12});
  const double t = 4.2, s = 1.1, tau = t - s;
  Mat E(2, 2);
  E << std::exp(a * tau), b / h * (std::exp((a + h) * tau) - std::exp(a * tau)), 0.0,
      std::exp((a + h) * tau);
  EXPECT_LE(rel(sol.resolvent(t, s), E), 1e-9);
}

TEST(Ode, ParameterFreeCaseHasZeroSensitivity) {
  const auto m = build_model("sir");
  const OdeSolution sol = sensitivities(*m, kSir, v2(0.7, 0.0), 10.0);
  EXPECT_EQ(sol.dz(6.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ode, SirSensitivityVsFiniteDifference) {
  const auto m = build_model("sir");
  const double T = 40.0, h = 1e-5;
  const OdeSolution sol = sensitivities(*m, kSir, kZ0, T, {.tol = 1e-11});
  OdeOptions o{.tol = 1e-12};
  const double up = solve_ode(*m, v2(0.5 + h, 1.0 / 3.0), kZ0, T, o).z(T)[0];
  const double dn = solve_ode(*m, v2(0.5 - h, 1.0 / 3.0), kZ0, T, o).z(T)[0];
  const double fd = (up - dn) / (2 * h);
  EXPECT_LE(std::abs(sol.dz(T)(0, 0) - fd) / std::abs(fd), 1e-5);
}

TEST(Ode, Ou2dSensitivityClosedForm) {
  const double a = -0.4, b = 1.3, h = 0.6, xi = 0.5, z10 = 1.0;
  const auto m = build_model("ou2d");
  Vec th(4);
  th << a, b, h, 0.5;
  OdeOptions o{.tol = 1e-12, .sensitivities = true};
  o.hidden = {1};
  const OdeSolution sol = solve_ode(*m, th, v2(z10, xi), 3.0, o);
  const double t = 2.5, c = a + h, K = xi * b / h, ea = std::exp(a * t), ec = std::exp(c * t);
  EXPECT_NEAR(sol.z(t)[0], (z10 - K) * ea + K * ec, 1e-9);
  const Mat D = sol.dz(t);
  ASSERT_EQ(D.cols(), 4);
  EXPECT_NEAR(D(0, 0), (z10 - K) * t * ea + K * t * ec, 1e-8);
  EXPECT_NEAR(D(0, 1), xi / h * (ec - ea), 1e-8);
  EXPECT_NEAR(D(0, 2), -K / h * (ec - ea) + K * t * ec, 1e-8);
  EXPECT_NEAR(D(0, 3), b / h * (ec - ea), 1e-8);
}

TEST(Ode, ResolventSensitivityVsFiniteDifference) {
  const auto m = build_model("sir");
  const double T = 30.0, h = 1e-6;
  const OdeSolution sol =
      solve_ode(*m, kSir, kZ0, T, {.tol = 1e-11, .sensitivities = true, .resolvent_sensitivities = true});
  OdeOptions o{.tol = 1e-12};
  const auto dR = sol.dresolvent(25.0, 10.0);
  for (int i = 0; i < 2; ++i) {
    Vec up = kSir, dn = kSir;
    up[i] += h;
    dn[i] -= h;
    const Mat fd = (solve_ode(*m, up, kZ0, T, o).resolvent(25.0, 10.0) -
                    solve_ode(*m, dn, kZ0, T, o).resolvent(25.0, 10.0)) /
                   (2 * h);
    EXPECT_LE(rel(dR[i], fd), 1e-5);
  }
}

TEST(Ode, CovarianceMatchesQuadrature) {
  const auto m = build_model("sir");
  const double t = 20.0;
  const OdeSolution sol = solve_ode(*m, kSir, kZ0, 40.0, {.tol = 1e-11, .covariance = true});
  // Composite Simpson of Phi(t,s) Sigma(z(s)) Phi(t,s)^T on [0, t].
  const int n = 2000;
  Mat acc = Mat::Zero(2, 2);
  for (int k = 0; k <= n; ++k) {
    const double s = t * k / n, w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    const Mat P = sol.resolvent(t, s);
    acc += w * P * m->diffusion(kSir, s, sol.z(s)) * P.transpose();
  }
  acc *= t / (3.0 * n);
  EXPECT_LE(rel(sol.covariance(t), acc), 1e-6);
}

TEST(Ode, ToleranceControlsError) {
  const auto m = build_model("sir");
  const double T = 40.0;
  const Vec ref = solve_ode(*m, kSir, kZ0, T, {.tol = 1e-13, .h_max = 0.01}).z(T);
  double prev = 1e9;
  for (double tol : {1e-4, 1e-6, 1e-8, 1e-10}) {
    const double err = (solve_ode(*m, kSir, kZ0, T, {.tol = tol, .h_max = T}).z(T) - ref).norm();
    EXPECT_LT(err, prev);
    EXPECT_LE(err, 100 * tol);
    prev = err;
  }
}

TEST(Ode, OutOfRangeTimeRejected) {
  const auto m = build_model("sir");
  const OdeSolution sol = solve_ode(*m, kSir, kZ0, 10.0);
  EXPECT_THROW(sol.z(10.5), InvalidArgument);
}

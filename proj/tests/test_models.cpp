#include "epiinfer/models.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace epi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const Config kSeasonal = {{"T_per", 365.0}, {"mu", 1.0 / (50 * 365.0)}, {"eta", 1e-6}};

Vec random_theta(const Model& m, Rng& rng) {
  Vec th(m.n_params());
  for (int i = 0; i < th.size(); ++i) {
    switch (m.layout().domains[i]) {
      case ParamDomain::Positive: th[i] = rng.uniform(0.05, 3.0); break;
      case ParamDomain::Unit: th[i] = rng.uniform(0.01, 0.99); break;
      case ParamDomain::Real: th[i] = rng.uniform(-0.9, 0.9); break;
    }
  }
  return th;
}

Vec random_simplex_point(int p, Rng& rng) {
  Vec z(p);
  double left = 1.0;
  for (int i = 0; i < p; ++i) {
    z[i] = left * rng.uniform() * 0.999;
    left -= z[i];
  }
  return z;
}

}  // namespace

TEST(Models, SirStructure) {
  const auto m = build_model("sir");
  EXPECT_EQ(m->dim(), 2);
  EXPECT_EQ(m->n_jumps(), 2);
  const Vec th = v2(0.5, 1.0 / 3.0), z = v2(0.3, 0.2);
  const Vec r = m->rates(th, 0.0, z);
  EXPECT_DOUBLE_EQ(r[0], 0.5 * 0.3 * 0.2);
  EXPECT_DOUBLE_EQ(r[1], 0.2 / 3.0);
}

TEST(Models, SirsSeasonalHasResusceptibility) {
  const auto m = build_model("sirs_seasonal", kSeasonal);
  EXPECT_EQ(m->n_jumps(), 4);
  EXPECT_TRUE(m->time_dependent());
  Vec th(4);
  th << 0.5, 0.1, 1.0 / 3.0, 0.7;
  const Vec z = v2(0.4, 0.1);
  const Vec r = m->rates(th, 0.0, z);
  EXPECT_NEAR(r[3], 1.0 / (50 * 365.0) + 0.7 * 0.5, 1e-15);
}

TEST(Models, UnknownNameRejected) { EXPECT_THROW(build_model("sri"), InvalidArgument); }

TEST(Models, SirDriftHandValue) {
  const auto m = build_model("sir");
  const Vec b = drift(*m, v2(0.5, 1.0 / 3.0), 0.0, v2(0.5, 0.5));
  EXPECT_NEAR(b[0], -0.125, 1e-15);
  EXPECT_NEAR(b[1], 0.125 - 1.0 / 6.0, 1e-15);
}

TEST(Models, SirNoInfectivesNoDrift) {
  const auto m = build_model("sir");
  const Vec b = drift(*m, v2(2.0, 0.7), 0.0, v2(0.6, 0.0));
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b[1], 0.0);
  EXPECT_EQ(diffusion_matrix(*m, v2(2.0, 0.7), 0.0, v2(0.6, 0.0)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Models, SirsDriftAtZeroSine) {
  const auto m = build_model("sirs_seasonal", kSeasonal);
  Vec th(4);
  th << 1.5 / 3.0, 0.1, 1.0 / 3.0, 1.0 / 730.0;
  const double mu = 1.0 / (50 * 365.0), eta = 1e-6, s = 0.4, i = 0.01;
  const Vec b = drift(*m, th, 0.0, v2(s, i));
  EXPECT_NEAR(b[0], -th[0] * s * (i + eta) - mu * s + mu + th[3] * (1 - s - i), 1e-15);
  EXPECT_NEAR(b[1], th[0] * s * (i + eta) - (th[2] + mu) * i, 1e-15);
}

TEST(Models, SirDiffusionHandValue) {
  const auto m = build_model("sir");
  const Mat S = diffusion_matrix(*m, v2(0.5, 1.0 / 3.0), 0.0, v2(0.5, 0.5));
  EXPECT_NEAR(S(0, 0), 0.125, 1e-15);
  EXPECT_NEAR(S(0, 1), -0.125, 1e-15);
  EXPECT_NEAR(S(1, 0), -0.125, 1e-15);
  EXPECT_NEAR(S(1, 1), 0.125 + 1.0 / 6.0, 1e-15);
}

TEST(Models, DiffusionFactor) {
  EXPECT_TRUE(diffusion_factor(Mat::Identity(3, 3)).isApprox(Mat::Identity(3, 3)));
  EXPECT_EQ(diffusion_factor(Mat::Zero(2, 2)).cwiseAbs().maxCoeff(), 0.0);
  // SIR: sigma = [[sqrt(lsi), 0], [-sqrt(lsi), sqrt(gi)]].
  const auto m = build_model("sir");
  const double l = 0.5, g = 1.0 / 3.0, s = 0.5, i = 0.5;
  const Mat L = diffusion_factor(diffusion_matrix(*m, v2(l, g), 0.0, v2(s, i)));
  EXPECT_NEAR(std::abs(L(0, 0)), std::sqrt(l * s * i), 1e-14);
  EXPECT_NEAR(L(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(L(1, 0) * (L(0, 0) > 0 ? 1 : -1), -std::sqrt(l * s * i), 1e-14);
  EXPECT_NEAR(std::abs(L(1, 1)), std::sqrt(g * i), 1e-14);
  EXPECT_THROW(diffusion_factor((Mat(2, 2) << 1, 0, 0, -1).finished()), InvalidArgument);
}

TEST(Models, SirDriftGradients) {
  const auto m = build_model("sir");
  const double s = 0.7, i = 0.2;
  const DriftGradients g = drift_gradients(*m, v2(0.5, 1.0 / 3.0), 0.0, v2(s, i));
  EXPECT_NEAR(g.d_alpha(0, 0), -s * i, 1e-15);
  EXPECT_NEAR(g.d_alpha(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(g.d_alpha(1, 0), s * i, 1e-15);
  EXPECT_NEAR(g.d_alpha(1, 1), -i, 1e-15);
}

TEST(Models, LinearModelStateGradient) {
  const auto m = build_model("ou1d");
  const Vec th = v2(-0.7, 0.3);
  const DriftGradients g = drift_gradients(*m, th, 0.0, Vec::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(g.d_z(0, 0), -0.7);
}

TEST(Models, TransformsRoundTrip) {
  const std::vector<ParamDomain> dom = {ParamDomain::Positive, ParamDomain::Unit, ParamDomain::Real};
  const Vec th = (Vec(3) << 0.3, 0.8, -2.0).finished();
  EXPECT_TRUE(from_unconstrained(to_unconstrained(th, dom), dom).isApprox(th, 1e-14));
}

TEST(Models, CheckThetaRejectsDomainViolations) {
  const auto m = build_model("sir");
  EXPECT_THROW(m->check_theta(v2(-0.1, 0.3)), InvalidArgument);
  EXPECT_THROW(m->check_theta(Vec::Ones(3)), InvalidArgument);
}

// Random-draw properties for every jump model.
class JumpModelProperties : public ::testing::TestWithParam<std::string> {};

TEST_P(JumpModelProperties, RatesSigmaAndGradients) {
  const auto m = build_model(GetParam(), GetParam() == "sirs_seasonal" ? kSeasonal : Config{});
  Rng rng(11, 0, 0);
  for (int k = 0; k < 100; ++k) {
    const Vec th = random_theta(*m, rng);
    const Vec z = random_simplex_point(m->dim(), rng);
    const double t = rng.uniform(0, 400);
    const Vec r = m->rates(th, t, z);
    ASSERT_TRUE((r.array() >= 0.0).all());

    // b and Sigma assembled from the jump list.
    Vec b = Vec::Zero(m->dim());
    Mat S = Mat::Zero(m->dim(), m->dim());
    for (int j = 0; j < m->n_jumps(); ++j) {
      const Vec e = m->jumps()[j].cast<double>();
      b += r[j] * e;
      S += r[j] * e * e.transpose();
    }
    EXPECT_LE((m->drift(th, t, z) - b).cwiseAbs().maxCoeff(), 1e-15);
    const Mat Sm = m->diffusion(th, t, z);
    EXPECT_LE((Sm - S).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ((Sm - Sm.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(Sm);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);

    // Drift gradients against central differences.
    Mat dth, dz;
    m->drift_jacobians(th, t, z, dth, dz);
    for (int i = 0; i < m->n_params(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(th[i]));
      Vec hi = th, lo = th;
      hi[i] += h;
      lo[i] -= h;
      const Vec fd = (m->drift(hi, t, z) - m->drift(lo, t, z)) / (2 * h);
      EXPECT_LE((fd - dth.col(i)).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.norm()));
    }
    for (int i = 0; i < m->dim(); ++i) {
      const double h = 1e-7;
      Vec hi = z, lo = z;
      hi[i] += h;
      lo[i] -= h;
      if (lo[i] < 0) continue;
      const Vec fd = (m->drift(th, t, hi) - m->drift(th, t, lo)) / (2 * h);
      EXPECT_LE((fd - dz.col(i)).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.norm()));
    }
    // dSigma/dtheta against central differences.
    const auto dS = m->diffusion_param_grad(th, t, z);
    ASSERT_EQ(static_cast<int>(dS.size()), m->n_params());
    for (int i = 0; i < m->n_params(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(th[i]));
      Vec hi = th, lo = th;
      hi[i] += h;
      lo[i] -= h;
      const Mat fd = (m->diffusion(hi, t, z) - m->diffusion(lo, t, z)) / (2 * h);
      EXPECT_LE((fd - dS[i]).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(All, JumpModelProperties,
                         ::testing::Values("sir", "sirs_seasonal", "seir_ebola",
                                           "seirs_demography"));

TEST(Models, SirCountRatesConserveTotal) {
  const auto m = build_model("sir");
  // S + I + R: R gains exactly what S + I loses.
  for (const auto& j : m->jumps()) {
    const int dS = j[0], dI = j[1], dR = -(dS + dI);
    EXPECT_EQ(dS + dI + dR, 0);
    EXPECT_GE(dR, 0);
  }
}

TEST(Models, IcuTransitionIsStochastic) {
  const Mat P = icu_transition(0.8, 0.9, 0.3);
  EXPECT_EQ(P.rows(), 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(P.row(i).sum(), 1.0, 1e-14);
    EXPECT_TRUE((P.row(i).array() >= 0.0).all());
  }
}

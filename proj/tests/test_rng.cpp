#include "epiinfer/rng.hpp"
#include "epiinfer/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace epi;

// Known-answer vectors of Philox4x32-10 (Random123 reference outputs).
TEST(Philox, KnownAnswerZero) {
  Philox p(0, 0);
  const std::uint64_t a = p(), b = p();
  EXPECT_EQ(a, (std::uint64_t{0xe169c58du} << 32) | 0x6627e8d5u);
  EXPECT_EQ(b, (std::uint64_t{0x9b00dbd8u} << 32) | 0xbc57ac4cu);
}

TEST(Philox, KnownAnswerOnes) {
  Philox p(~0ULL, ~0ULL);
  p.seek(~0ULL);
  const std::uint64_t a = p(), b = p();
  EXPECT_EQ(a, (std::uint64_t{0x41c83b0eu} << 32) | 0x408f276du);
  EXPECT_EQ(b, (std::uint64_t{0x6d5451fdu} << 32) | 0xa20bc7c6u);
}

TEST(Philox, KnownAnswerPi) {
  const std::uint64_t key = (std::uint64_t{0x299f31d0u} << 32) | 0xa4093822u;
  const std::uint64_t stream = (std::uint64_t{0x03707344u} << 32) | 0x13198a2eu;
  Philox p(key, stream);
  p.seek((std::uint64_t{0x85a308d3u} << 32) | 0x243f6a88u);
  const std::uint64_t a = p(), b = p();
  EXPECT_EQ(a, (std::uint64_t{0x94fdccebu} << 32) | 0xd16cfe09u);
  EXPECT_EQ(b, (std::uint64_t{0x24126ea1u} << 32) | 0x5001e420u);
}

TEST(Rng, DeterministicAndStreamsDiffer) {
  Rng a(5, 1, 2), b(5, 1, 2), c(5, 1, 3), d(5, 2, 2);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_NE(x, c.uniform());
    EXPECT_NE(x, d.uniform());
  }
}

TEST(Rng, UniformOpenInterval) {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, ExponentialAndNormalPassKs) {
  Rng r(2);
  std::vector<double> e, z;
  for (int i = 0; i < 10000; ++i) {
    e.push_back(r.exponential(2.0));
    z.push_back(r.normal());
  }
  EXPECT_GT(ks_test(e, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-2.0 * x); }).p_value, 0.01);
  EXPECT_GT(ks_test(z, normal_cdf).p_value, 0.01);
}

TEST(Rng, DiscreteMoments) {
  Rng r(3);
  std::vector<double> po, bi, ga;
  for (int i = 0; i < 20000; ++i) {
    po.push_back(static_cast<double>(r.poisson(3.5)));
    bi.push_back(static_cast<double>(r.binomial(20, 0.3)));
    ga.push_back(r.gamma(2.0, 4.0));
  }
  EXPECT_NEAR(mean(po), 3.5, 0.06);
  EXPECT_NEAR(variance(po), 3.5, 0.15);
  EXPECT_NEAR(mean(bi), 6.0, 0.05);
  EXPECT_NEAR(variance(bi), 4.2, 0.2);
  EXPECT_NEAR(mean(ga), 0.5, 0.01);
  EXPECT_NEAR(variance(ga), 0.125, 0.008);
}

TEST(Rng, IndexUniform) {
  Rng r(4);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) ++hits[r.index(7)];
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);
}

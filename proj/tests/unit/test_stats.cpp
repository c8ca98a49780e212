#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "reqlens/random.hpp"
#include "reqlens/stats.hpp"

using namespace reqlens;
using namespace reqlens::stats;

namespace {
std::vector<double> normal_sample(Rng& rng, std::size_t n, double mu, double sd) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    out.push_back(mu + sd * std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2));
  }
  return out;
}
}  // namespace

TEST(Moments, MeanAndVariance) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_DOUBLE_EQ(variance(x), 5.0 / 3.0);
}

TEST(IncompleteBeta, KnownValues) {
  EXPECT_EQ(incomplete_beta(2, 3, 0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1), 1.0);
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
  // I_x(a, 1) = x^a
  EXPECT_NEAR(incomplete_beta(3.5, 1, 0.6), std::pow(0.6, 3.5), 1e-14);
  // symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
  EXPECT_NEAR(incomplete_beta(2.5, 7, 0.2), 1 - incomplete_beta(7, 2.5, 0.8), 1e-14);
}

TEST(TCdf, MatchesScipyFrozen) {
  for (const auto& c : fixtures::frozen()["t_cdf"]) {
    EXPECT_NEAR(t_cdf(c["t"].get<double>(), c["df"].get<double>()), c["cdf"].get<double>(), 1e-12)
        << c.dump();
  }
}

TEST(TCdf, MatchesQuadrature) {
  for (double df : {1.0, 1.5, 2.0, 4.7, 10.0, 29.0, 58.0, 200.0}) {
    for (double t : {-6.0, -2.1, -0.7, 0.0, 0.05, 0.9, 1.7, 3.3, 8.0}) {
      EXPECT_NEAR(t_cdf(t, df), oracle::t_cdf(t, df), 1e-9) << t << " " << df;
    }
  }
}

TEST(Welch, MatchesScipyFrozen) {
  for (const auto& c : fixtures::frozen()["t_tests"]) {
    const auto a = c["a"].get<std::vector<double>>();
    const auto b = c["b"].get<std::vector<double>>();
    const auto w = welch_t_test(a, b);
    EXPECT_NEAR(w.t_statistic, c["welch"]["t"].get<double>(), 1e-10);
    EXPECT_NEAR(w.degrees_of_freedom, c["welch"]["df"].get<double>(), 1e-8);
    EXPECT_NEAR(w.p_value, c["welch"]["p"].get<double>(), 1e-10);
    const auto p = t_test(a, b, 0.05, TTestVariant::Pooled);
    EXPECT_NEAR(p.t_statistic, c["pooled"]["t"].get<double>(), 1e-10);
    EXPECT_EQ(p.degrees_of_freedom, c["pooled"]["df"].get<double>());
    EXPECT_NEAR(p.p_value, c["pooled"]["p"].get<double>(), 1e-10);
  }
}

TEST(Welch, MatchesQuadratureOracle) {
  Rng rng(77);
  for (int i = 0; i < 30; ++i) {
    const auto a = normal_sample(rng, 2 + rng.below(40), 0.0, 0.2 + rng.uniform());
    const auto b = normal_sample(rng, 2 + rng.below(40), rng.uniform() - 0.5, 0.2 + rng.uniform());
    const auto got = welch_t_test(a, b);
    const auto want = oracle::welch(a, b);
    EXPECT_NEAR(got.t_statistic, want.t, 1e-9);
    EXPECT_NEAR(got.degrees_of_freedom, want.df, 1e-8);
    EXPECT_NEAR(got.p_value, want.p, 1e-6);
  }
}

TEST(Welch, AntisymmetryAndInvariance) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = normal_sample(rng, 2 + rng.below(30), 0.0, 1.0);
    const auto b = normal_sample(rng, 2 + rng.below(30), rng.uniform(), 0.1 + rng.uniform());
    const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
    EXPECT_NEAR(ab.t_statistic, -ba.t_statistic, 1e-12 * (1 + std::abs(ab.t_statistic)));
    EXPECT_NEAR(ab.p_value, ba.p_value, 1e-12);
    EXPECT_EQ(ab.significant, ba.significant);

    const double shift = 100 * rng.uniform() - 50, scale = 0.01 + 10 * rng.uniform();
    auto a2 = a, b2 = b;
    for (auto& x : a2) x = x * scale + shift;
    for (auto& x : b2) x = x * scale + shift;
    const auto moved = welch_t_test(a2, b2);
    EXPECT_NEAR(moved.t_statistic, ab.t_statistic, 1e-8 * (1 + std::abs(ab.t_statistic)));
    EXPECT_NEAR(moved.p_value, ab.p_value, 1e-8);
    EXPECT_GE(ab.p_value, 0.0);
    EXPECT_LE(ab.p_value, 1.0);
  }
}

TEST(Welch, IdenticalSamplesNotSignificant) {
  const std::vector<double> a = {0.81, 0.84, 0.86, 0.83};
  const auto r = welch_t_test(a, a);
  EXPECT_EQ(r.t_statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(Welch, DegenerateConstantSamples) {
  std::vector<double> a(30, 0.9), b(30, 0.9), c(30, 0.8);
  auto r = welch_t_test(a, b);
  EXPECT_EQ(r.t_statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.significant);
  r = welch_t_test(a, c);
  EXPECT_TRUE(std::isinf(r.t_statistic));
  EXPECT_GT(r.t_statistic, 0.0);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_TRUE(r.significant);
  EXPECT_LT(welch_t_test(c, a).t_statistic, 0.0);
  const nlohmann::json j = r;
  EXPECT_EQ(j["t"], "inf");
}

TEST(Welch, InsufficientSample) {
  const std::vector<double> one = {1.0}, two = {1.0, 2.0}, bad = {1.0, NAN};
  for (const auto& [x, y] : {std::pair{one, two}, std::pair{two, one}, std::pair{two, bad}}) {
    try {
      welch_t_test(x, y);
      FAIL();
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::insufficient_sample);
    }
  }
}

TEST(Welch, AlphaDecides) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2.5, 3.5, 4.5, 5.5, 6.5};
  const auto r = welch_t_test(a, b, 0.5);
  EXPECT_EQ(r.significant, r.p_value < 0.5);
  EXPECT_EQ(welch_t_test(a, b, 1e-9).significant, false);
}

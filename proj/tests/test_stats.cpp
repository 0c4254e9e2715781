#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heatlaw/errors.hpp"
#include "heatlaw/stats.hpp"
#include "heatlaw/vanhove.hpp"

using namespace heatlaw;

namespace {

std::vector<double> pareto(double alpha, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(1.0 - u(rng), -1.0 / alpha);
  return x;
}

std::vector<double> normal(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

}  // namespace

TEST(EmpiricalMoments, ConstantSamples) {
  std::vector<double> x(200, 1.5);
  auto m = empirical_moments(x, {0, 1, 2, 3});
  ASSERT_EQ(m.size(), 4u);
  for (const auto& r : m) {
    EXPECT_DOUBLE_EQ(r.estimate, std::pow(1.5, r.order));
    EXPECT_EQ(r.std_error, 0.0);
  }
  EXPECT_TRUE(empirical_moments(x, {}).empty());
  EXPECT_THROW(empirical_moments(std::vector<double>(99, 1.0), {1}), PreconditionViolation);
}

TEST(EmpiricalMoments, NormalFourthMoment) {
  auto m = empirical_moments(normal(100000, 3), {2, 4});
  EXPECT_NEAR(m[0].estimate, 1.0, 3 * m[0].std_error);
  EXPECT_NEAR(m[1].estimate, 3.0, 3 * m[1].std_error);
  // Var(X^4) = 105 - 9
  EXPECT_NEAR(m[1].std_error, std::sqrt(96.0 / 1e5), 0.2 * std::sqrt(96.0 / 1e5));
}

TEST(Hill, ParetoTwo) {
  auto x = pareto(2.0, 100000, 11);
  auto h = hill_estimate(x, 1000);
  EXPECT_NEAR(h.index, 2.0, 3 * h.std_error);
  EXPECT_NEAR(h.std_error, h.index / std::sqrt(1000.0), 1e-12);
  EXPECT_FALSE(h.light_tailed);
  EXPECT_DOUBLE_EQ(hill_tail_index(x, 1000), h.index);
}

TEST(Hill, ConsistentAcrossSeeds) {
  std::vector<double> a;
  for (std::uint64_t s = 0; s < 20; ++s) a.push_back(hill_tail_index(pareto(2.0, 100000, 100 + s), 1000));
  double mean = 0.0, var = 0.0;
  for (double v : a) mean += v;
  mean /= a.size();
  for (double v : a) var += (v - mean) * (v - mean);
  var /= a.size() - 1;
  EXPECT_LT(std::sqrt(var) / mean, 0.1);
  EXPECT_NEAR(mean, 2.0, 0.1);
}

TEST(Hill, ExponentialFlaggedLight) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(100000);
  for (auto& v : x) v = e(rng);
  auto h = hill_estimate(x, 1000);
  EXPECT_TRUE(h.light_tailed);
  EXPECT_GT(h.drift_z, 3.0);
  // deeper in the tail the index keeps growing
  EXPECT_GT(hill_tail_index(x, 50), hill_tail_index(x, 1000));
}

TEST(Hill, Errors) {
  EXPECT_THROW(hill_tail_index(std::vector<double>(1000, 2.0), 100), InsufficientTail);
  EXPECT_THROW(hill_tail_index(std::vector<double>(1000, 0.0), 100), InsufficientTail);
  EXPECT_THROW(hill_tail_index(pareto(2.0, 50, 1), 100), InsufficientTail);
  EXPECT_THROW(hill_tail_index(pareto(2.0, 500, 1), 5), PreconditionViolation);
}

TEST(Hill, PerSide) {
  // positive side Pareto(1.5), negative side Pareto(3)
  auto up = pareto(1.5, 50000, 1), down = pareto(3.0, 50000, 2);
  std::vector<double> x = up;
  for (double v : down) x.push_back(-v);
  auto r = tail_report(x, {1, 2}, 500, MarkovMode{MarkovMode::Power, 0}, {2.0, 5.0});
  EXPECT_NEAR(r.hill_upper.index, 1.5, 3 * r.hill_upper.std_error);
  EXPECT_NEAR(r.hill_lower.index, 3.0, 3 * r.hill_lower.std_error);
  // |x| tail is dominated by the heavier side
  EXPECT_LT(r.hill.index, 2.0);
  EXPECT_EQ(r.moment_table.size(), 2u);
}

TEST(Markov, PowerAndChebyshev) {
  auto x = normal(100000, 9);
  std::vector<double> E = {0.5, 1.0, 2.0, 3.0, 4.0};
  for (int n : {0, 1, 2}) {
    auto c = markov_curve(x, MarkovMode{MarkovMode::Power, n}, E);
    EXPECT_TRUE(c.dominated) << n;
    ASSERT_EQ(c.points.size(), E.size());
    for (const auto& p : c.points) EXPECT_NEAR(p.bound, c.C * std::pow(p.E, -(2 * n + 2)), 1e-12 * p.bound);
  }
  auto c0 = markov_curve(x, MarkovMode{MarkovMode::Power, 0}, {1.0});
  EXPECT_NEAR(c0.C, 1.0, 0.02);
  EXPECT_NEAR(c0.points[0].empirical, std::erfc(1.0 / std::sqrt(2.0)), 0.005);
}

TEST(Markov, VanHoveExponentialBound) {
  auto law = PoissonLKLaw(FormFactor::sharp_cutoff(3.0, 1.0), 1.0, 2.0);
  auto s = sample(law, 100000, 42);
  const double gamma = 1.0;
  // E exp(gamma |dQ|) <= exp(int (exp(gamma |e|) - 1) dnu)
  auto v = exp_moment_bound(law, gamma);
  ASSERT_TRUE(v.convergent());
  MarkovMode m{MarkovMode::Exponential, 0, gamma, std::exp(v.real())};
  auto c = markov_curve(s, m, {0.5, 1.0, 2.0, 4.0, 6.0, 8.0});
  EXPECT_TRUE(c.dominated);
  EXPECT_DOUBLE_EQ(c.C, *m.C);
}

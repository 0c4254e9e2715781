#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "heatlaw/numerics.hpp"

using namespace heatlaw;

namespace {

// composite Simpson on [a,b] with n (even) panels
template <class F>
double simpson(F f, double a, double b, long n) {
  const double h = (b - a) / double(n);
  double s = f(a) + f(b);
  for (long i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double one_minus_cos_over_e2(double e) {
  if (e < 1e-4) return 0.5 - e * e / 24.0;
  const double s = std::sin(0.5 * e);
  return 2.0 * s * s / (e * e);
}

}  // namespace

TEST(Integrate, PolynomialUnitInterval) {
  auto v = integrate([](double e) { return e; }, Domain{0.0, 1.0});
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 0.5, 1e-14);
}

TEST(Integrate, ExponentialHalfLine) {
  auto v = integrate([](double e) { return std::exp(-e); }, Domain{});
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 1.0, 1e-10);
}

TEST(Integrate, DirichletTypeAgainstCompositeOracle) {
  const double L = 2.0 * std::numbers::pi * 2000.0;
  // head by fine Simpson, tail of 1/e^2 exact; the cos/e^2 tail at a period multiple is O(L^-3)
  const double oracle = simpson(one_minus_cos_over_e2, 0.0, L, 4000000) + 1.0 / L;
  ASSERT_NEAR(oracle, std::numbers::pi / 2.0, 1e-10);

  Domain d;
  d.period = 2.0 * std::numbers::pi;
  QuadratureRule rule;
  auto v = integrate(one_minus_cos_over_e2, d, rule);
  ASSERT_TRUE(v.convergent()) << v.note;
  EXPECT_NEAR(v.real(), oracle, rule.tolerance(oracle));
}

TEST(Integrate, Linearity) {
  auto g1 = [](double e) { return std::exp(-e) * std::cos(3.0 * e); };
  auto g2 = [](double e) { return 1.0 / (1.0 + e * e); };
  const double a = 2.5, b = -0.75;
  QuadratureRule rule;
  auto v1 = integrate(g1, Domain{}, rule);
  auto v2 = integrate(g2, Domain{}, rule);
  auto v12 = integrate([&](double e) { return a * g1(e) + b * g2(e); }, Domain{}, rule);
  ASSERT_TRUE(v1.convergent() && v2.convergent() && v12.convergent());
  const double tol = std::abs(a) * v1.err_estimate + std::abs(b) * v2.err_estimate + v12.err_estimate +
                     rule.tolerance(std::abs(v12.real()));
  EXPECT_NEAR(v12.real(), a * v1.real() + b * v2.real(), tol);
  EXPECT_NEAR(v2.real(), std::numbers::pi / 2.0, 1e-8);
}

TEST(Integrate, ComplexDensity) {
  // int_0^inf e^{-e} e^{i a e} de = 1/(1 - i a)
  const double a = 1.7;
  auto v = integrate([&](double e) { return std::exp(cplx(-1.0, a) * e); }, Domain{0.0, INFINITY, {}, 1.0});
  ASSERT_TRUE(v.convergent());
  const cplx want = 1.0 / cplx(1.0, -a);
  EXPECT_NEAR(std::abs(v.value - want), 0.0, 1e-9);
}

TEST(Integrate, NonEvaluableInterior) {
  auto bad = [](double e) { return e > 0.3 && e < 0.5 ? std::nan("") : 1.0; };
  EXPECT_THROW(integrate(bad, Domain{0.0, 1.0}), NonEvaluable);
}

TEST(Integrate, DivergentHalfLine) {
  auto v = integrate([](double e) { return std::sqrt(e); }, Domain{1.0});
  EXPECT_TRUE(v.divergent());
}

TEST(Integrate, EndpointSingularity) {
  auto v = integrate([](double e) { return 1.0 / std::sqrt(e); }, Domain{0.0, 1.0});
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 2.0, 1e-8);
}

TEST(DetectDivergence, InverseSquareConverges) {
  auto v = detect_divergence([](double e) { return 1.0 / (e * e); }, Domain{1.0});
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 1.0, 1e-8);
}

TEST(DetectDivergence, HarmonicIsLogarithmic) {
  auto v = detect_divergence([](double e) { return 1.0 / e; }, Domain{1.0});
  ASSERT_TRUE(v.divergent());
  EXPECT_EQ(v.growth_exponent, 0.0);
}

TEST(DetectDivergence, SqrtGrowthExponent) {
  // partial integrals (2/3)(L^1.5 - 1); slope between the last two decades
  const double oracle = std::log((std::pow(1e4, 1.5) - 1.0) / (std::pow(1e3, 1.5) - 1.0)) / std::log(10.0);
  auto v = detect_divergence([](double e) { return std::sqrt(e); }, Domain{1.0});
  ASSERT_TRUE(v.divergent());
  EXPECT_NEAR(v.growth_exponent, oracle, 0.02);
  EXPECT_NEAR(v.growth_exponent, 1.5, 0.02);
}

TEST(DetectDivergence, SlowPowerDecayIsConvergent) {
  // e^{-1.2}: increments shrink by 10^{-0.2} per decade
  auto v = detect_divergence([](double e) { return std::pow(e, -1.2); }, Domain{1.0});
  EXPECT_TRUE(v.convergent());
  auto w = detect_divergence([](double e) { return std::pow(e, -0.8); }, Domain{1.0});
  ASSERT_TRUE(w.divergent());
  EXPECT_NEAR(w.growth_exponent, 0.2, 0.02);
}

TEST(DetectDivergence, CompactSupportIsCauchy) {
  auto v = detect_divergence([](double e) { return e < 2.0 ? e * e : 0.0; }, Domain{0.0, INFINITY, {2.0}});
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 8.0 / 3.0, 1e-10);
}

TEST(DetectDivergence, ExponentialOverflowIsDivergent) {
  auto v = detect_divergence([](double e) { return std::exp(0.1 * e); }, Domain{0.0});
  EXPECT_TRUE(v.divergent());
}

TEST(DetectDivergence, NegativeIncrementsAreInconclusive) {
  auto v = detect_divergence([](double e) { return e > 200.0 && e < 900.0 ? -1.0 : std::exp(-e); }, Domain{0.0});
  EXPECT_TRUE(v.inconclusive());
}

TEST(DetectDivergence, RuleValidation) {
  QuadratureRule r;
  r.tail_cutoffs = {10.0, 100.0, 1000.0};
  EXPECT_THROW(detect_divergence([](double) { return 0.0; }, Domain{0.0}, r), std::invalid_argument);
  r.tail_cutoffs = {10.0, 100.0, 50.0, 1000.0};
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r = QuadratureRule{};
  r.abs_tol = 0.0;
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(Cumulants, Deterministic) {
  const double mu = 1.3;
  auto m = cumulants_to_moments({mu, 0.0, 0.0, 0.0});
  ASSERT_EQ(m.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(m[k], std::pow(mu, k + 1), 1e-14);
}

TEST(Cumulants, CenteredGaussian) {
  auto m = cumulants_to_moments({0.0, 2.25});
  EXPECT_DOUBLE_EQ(m[1], 2.25);
  EXPECT_DOUBLE_EQ(m[0], 0.0);
}

TEST(Cumulants, PoissonFourthMomentBruteForce) {
  double oracle = 0.0, p = std::exp(-1.0);
  for (int k = 0; k < 60; ++k) {
    if (k > 0) p /= k;
    oracle += std::pow(double(k), 4) * p;
  }
  auto m = cumulants_to_moments({1.0, 1.0, 1.0, 1.0});
  EXPECT_NEAR(m[3], oracle, 1e-12);
  EXPECT_NEAR(m[3], 15.0, 1e-12);
}

TEST(Cumulants, RoundTripToOrderEight) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> k(8);
    for (auto& x : k) x = u(rng);
    auto back = moments_to_cumulants(cumulants_to_moments(k));
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(back[i], k[i], 1e-12 * std::max(1.0, std::abs(k[i])));
  }
}

TEST(GaussLegendre, ExactForPolynomials) {
  auto g = gauss_legendre(12, -1.0, 3.0);
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * std::pow(g.nodes[i], 23);
  const double exact = (std::pow(3.0, 24) - 1.0) / 24.0;
  EXPECT_NEAR(s / exact, 1.0, 1e-13);
}

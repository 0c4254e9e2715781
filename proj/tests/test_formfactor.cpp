#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "heatlaw/formfactor.hpp"

using namespace heatlaw;

// ---------------------------------------------------------------- UV power integrals

TEST(UvPower, SharpCutoffUnitCube) {
  auto v = uv_power_integral(FormFactor::sharp_cutoff(1.0), 1);
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 1.0 / 3.0, 1e-12);
}

TEST(UvPower, SharpCutoffAllOrders) {
  const double L = 2.0;
  for (int n = 0; n <= 6; ++n) {
    auto v = uv_power_integral(FormFactor::sharp_cutoff(L), n);
    ASSERT_TRUE(v.convergent()) << n;
    const double exact = std::pow(L, 2 * n + 1) / (2 * n + 1);
    EXPECT_NEAR(v.real() / exact, 1.0, 1e-10) << n;
  }
}

TEST(UvPower, PowerTailUnitIntegrandDiverges) {
  auto v = uv_power_integral(FormFactor::power_tail(1.0), 1);
  ASSERT_TRUE(v.divergent());
  EXPECT_NEAR(v.growth_exponent, 1.0, 0.02);
}

TEST(UvPower, PowerTailNormValue) {
  // int_0^1 e^2 + int_1^inf e^{-2p}
  const double p = 1.3;
  auto v = uv_power_integral(FormFactor::power_tail(p), 0);
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 1.0 / 3.0 + 1.0 / (2 * p - 1), 1e-6);
}

// ---------------------------------------------------------------- UV exponential integrals

TEST(UvExp, SharpCutoffAnyGamma) {
  auto v = uv_exp_integral(FormFactor::sharp_cutoff(1.5), 5.0);
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), (std::exp(7.5) - 1.0) / 5.0, 1e-8 * std::exp(7.5));
}

TEST(UvExp, ExpTailThreshold) {
  auto f = FormFactor::exp_tail(1.0);
  auto v1 = uv_exp_integral(f, 1.0);
  ASSERT_TRUE(v1.convergent());
  EXPECT_NEAR(v1.real(), 1.0, 1e-9);
  EXPECT_TRUE(uv_exp_integral(f, 2.0).divergent());
  EXPECT_TRUE(uv_exp_integral(f, 2.1).divergent());
}

// ---------------------------------------------------------------- IR integral

TEST(Ir, LinearOnUnitInterval) {
  auto v = ir_integral(FormFactor::sharp_cutoff(1.0, 2.0));
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 0.5, 1e-10);
}

TEST(Ir, ConstantNearZeroIsLogDivergent) {
  auto v = ir_integral(FormFactor::sharp_cutoff(1.0));
  ASSERT_TRUE(v.divergent());
  EXPECT_EQ(v.growth_exponent, 0.0);
}

TEST(Ir, ExpTailWithLinearOnset) {
  // |f|^2/e = e^{-2e}
  auto v = ir_integral(FormFactor::exp_tail(1.0, 1.0));
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 0.5, 1e-9);
}

TEST(Ir, RequireIrThrows) {
  EXPECT_THROW(require_ir(FormFactor::sharp_cutoff(3.0)), PreconditionViolation);
  EXPECT_NO_THROW(require_ir(FormFactor::power_tail(1.0)));
}

// ---------------------------------------------------------------- classify

TEST(Classify, SharpCutoffIsInfinite) {
  auto r = classify(FormFactor::sharp_cutoff(2.0), {0, 1, 2, 3}, {0.5, 5.0});
  EXPECT_TRUE(r.n_max_power.infinite);
  EXPECT_TRUE(r.gamma_max.infinite);
  EXPECT_TRUE(r.consistent);
}

TEST(Classify, CounterexampleOne) {
  auto f = FormFactor::counterexample(1);
  auto r = classify(f, {0, 1}, {0.1});
  EXPECT_TRUE(r.ir_ok);
  EXPECT_TRUE(r.power_verdicts.at(0).convergent());
  EXPECT_TRUE(r.power_verdicts.at(1).divergent());
  EXPECT_EQ(r.n_max_power.value, 0.0);
  EXPECT_FALSE(r.n_max_power.infinite);
  EXPECT_TRUE(r.exp_verdicts.at(0.1).divergent());
}

TEST(Classify, CounterexampleFamilyEdge) {
  for (int n = 2; n <= 3; ++n) {
    auto f = FormFactor::counterexample(n);
    EXPECT_TRUE(ir_integral(f).convergent()) << n;
    EXPECT_TRUE(uv_power_integral(f, n - 1).convergent()) << n;
    EXPECT_TRUE(uv_power_integral(f, n).divergent()) << n;
  }
}

TEST(Classify, CounterexamplePointValues) {
  // f_n(N) = i N^{-n} at integers, f_n(e) = i e below 1
  auto f = FormFactor::counterexample(2);
  EXPECT_NEAR(std::abs(f.value(3.0) - cplx(0.0, 1.0 / 9.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f.value(0.5) - cplx(0.0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(f.abs2(2.5), std::norm(f.value(2.5)), 1e-15);
}

TEST(Classify, PowerTailTwoPointSix) {
  const double p = 2.6;
  // tail-exponent arithmetic: I_n finite iff p > n + 1/2
  int expected = -1;
  for (int n = 0; n <= 4; ++n)
    if (p > n + 0.5) expected = n;
  auto r = classify(FormFactor::power_tail(p), {0, 1, 2, 3, 4}, {0.1});
  EXPECT_EQ(r.n_max_power.value, double(expected));
  EXPECT_EQ(expected, 2);
  EXPECT_FALSE(r.n_max_power.infinite);
  EXPECT_TRUE(r.consistent);
}

TEST(Classify, ExpClassImpliesPowerClass) {
  auto r = classify(FormFactor::exp_tail(0.7, 1.0), {0, 1, 2, 3, 4, 5}, {0.5, 1.0, 1.3, 1.5});
  EXPECT_TRUE(r.consistent) << r.note;
  EXPECT_TRUE(r.n_max_power.infinite);
  EXPECT_EQ(r.gamma_max.value, 1.3);
  EXPECT_TRUE(r.exp_verdicts.at(1.5).divergent());
}

TEST(Classify, MonotoneAcrossFamilies) {
  std::vector<FormFactor> fams{FormFactor::power_tail(1.2), FormFactor::power_tail(3.3, 0.5),
                               FormFactor::exp_tail(1.0), FormFactor::counterexample(2),
                               FormFactor::sharp_cutoff(4.0, 1.0)};
  for (const auto& f : fams) {
    auto r = classify(f, {0, 1, 2, 3}, {0.5, 1.0, 2.5});
    EXPECT_TRUE(r.consistent) << f.family_name() << ": " << r.note;
    bool seen_div = false;
    for (auto& [n, v] : r.power_verdicts) {
      if (seen_div) EXPECT_FALSE(v.convergent()) << f.family_name() << " n=" << n;
      seen_div = seen_div || v.divergent();
    }
  }
}

TEST(Classify, IntegrateAgreesWithDetectDivergence) {
  std::vector<FormFactor> fams{FormFactor::power_tail(1.0), FormFactor::power_tail(2.0),
                               FormFactor::exp_tail(1.0, 1.0), FormFactor::power_tail(1.7, 2.0)};
  for (const auto& f : fams)
    for (int n = 0; n <= 2; ++n) {
      auto dens = [&f, n](double e) { return std::pow(e, 2 * n) * f.abs2(e); };
      Domain d{0.0, INFINITY, f.breakpoints(1e4)};
      auto a = integrate(dens, d);
      auto b = detect_divergence(dens, d);
      EXPECT_EQ(a.status, b.status) << f.family_name() << " n=" << n;
    }
}

// ---------------------------------------------------------------- tabulated

TEST(Tabulated, InterpolatesAbs2AndVanishesPastEnd) {
  auto f = FormFactor::tabulated({0.0, 1.0, 2.0}, {cplx(1, 0), cplx(0, 2), cplx(1, 1)});
  EXPECT_NEAR(f.abs2(0.5), 2.5, 1e-15);
  EXPECT_NEAR(f.abs2(1.5), 3.0, 1e-15);
  EXPECT_EQ(f.abs2(2.01), 0.0);
  EXPECT_TRUE(f.compact());
  auto v = uv_power_integral(f, 0);
  ASSERT_TRUE(v.convergent());
  EXPECT_NEAR(v.real(), 2.5 + 3.0, 1e-10);
}

TEST(Tabulated, RejectsUnsortedNodes) {
  EXPECT_THROW(FormFactor::tabulated({0.0, 2.0, 1.0}, {1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(Tabulated, ReadsCsv) {
  const std::string path = ::testing::TempDir() + "ff_nodes.csv";
  {
    std::ofstream out(path);
    out << "energy,re_f,im_f\n# comment\n0.5,1.0,0.0\n1.5,0.0,-1.0\n3.0,0.5,0.5\n";
  }
  auto f = FormFactor::from_csv(path);
  EXPECT_EQ(f.family_name(), "tabulated");
  EXPECT_NEAR(std::abs(f.value(1.5) - cplx(0.0, -1.0)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(f.support_end(), 3.0);
  std::remove(path.c_str());
}

TEST(FormFactorFamilies, RejectOutOfClassParameters) {
  EXPECT_THROW(FormFactor::power_tail(0.5), std::invalid_argument);
  EXPECT_THROW(FormFactor::counterexample(0), std::invalid_argument);
  EXPECT_THROW(FormFactor::exp_tail(-1.0), std::invalid_argument);
}

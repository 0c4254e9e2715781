#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "heatlaw/oneparticle.hpp"

using namespace heatlaw;

namespace {

FormFactor constant_form(cplx c) {
  return FormFactor::custom("constant", [c](double) { return c; });
}

// exp(i t a) by Pade scaling and squaring, independent of the eigensolver path
MatrixC expm_i(const MatrixC& a, double t) { return (cplx(0.0, t) * a).exp(); }

OneParticleTriple random_triple(std::mt19937_64& rng, int D) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  const double rate = u(rng), lam = 2.0 + 3.0 * u(rng), eps = u(rng);
  const double s = u(rng);
  auto f = FormFactor::custom("random", [rate, s](double e) {
    return cplx(std::exp(-rate * e) * e, s * e * e * std::exp(-e));
  });
  return build_one_particle(DiscretizedImpurity::gauss(f, D, lam, eps));
}

VectorC random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  VectorC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

std::vector<double> grid(double a, double b, double step) {
  std::vector<double> t;
  for (double x = a; x <= b + 1e-12; x += step) t.push_back(x);
  return t;
}

}  // namespace

TEST(Build, TwoLevelExample) {
  DiscretizedImpurity imp{1.0, {2.0}, {1.0}, constant_form({0.3, 0.4})};
  auto tr = build_one_particle(imp);
  EXPECT_EQ(tr.h(0, 0), cplx(1.0));
  EXPECT_EQ(tr.h(1, 1), cplx(2.0));
  EXPECT_EQ(tr.h(0, 1), cplx(0.3, -0.4));
  EXPECT_EQ(tr.h(1, 0), cplx(0.3, 0.4));
  EXPECT_EQ(tr.v(0, 0), cplx(0.0));
  EXPECT_EQ(tr.v(1, 1), cplx(0.0));
}

TEST(Build, ZeroCouplingAndRank) {
  auto tr0 = build_one_particle(DiscretizedImpurity::gauss(constant_form(0.0), 5, 3.0));
  EXPECT_EQ(tr0.v.norm(), 0.0);
  EXPECT_EQ((tr0.h - tr0.h0).norm(), 0.0);

  std::mt19937_64 rng(3);
  for (int D : {1, 4, 12, 40}) {
    auto tr = random_triple(rng, D);
    Eigen::JacobiSVD<MatrixC> svd(tr.v);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-12;
    EXPECT_LE(rank, 2);
    EXPECT_EQ((tr.h - tr.h0 - tr.v).norm(), 0.0);
    EXPECT_LT((tr.h - tr.h.adjoint()).norm(), 1e-15);
  }
}

TEST(Build, RejectsBadInput) {
  EXPECT_THROW(build_one_particle(DiscretizedImpurity{1.0, {2.0, 1.0}, {1.0, 1.0}, constant_form(1.0)}),
               PreconditionViolation);
  EXPECT_THROW(build_one_particle(DiscretizedImpurity{1.0, {1.0}, {1.0, 1.0}, constant_form(1.0)}),
               PreconditionViolation);
  EXPECT_THROW(build_one_particle(DiscretizedImpurity{1.0, {1.0}, {-1.0}, constant_form(1.0)}),
               PreconditionViolation);
  EXPECT_THROW(build_one_particle(DiscretizedImpurity{1.0, {1.0}, {1.0}, constant_form({NAN, 0.0})}),
               PreconditionViolation);
}

TEST(Spectral, UnitaryPropagatorMatchesPade) {
  std::mt19937_64 rng(5);
  auto tr = random_triple(rng, 10);
  HermitianFunctions fh(tr.h);
  for (double t : {0.0, 0.7, 13.0, 90.0}) {
    const MatrixC u = fh.exp_i(t);
    EXPECT_LT((u.adjoint() * u - MatrixC::Identity(u.rows(), u.cols())).norm(), 1e-12);
    EXPECT_LT((u - expm_i(tr.h, t)).norm(), 1e-10);
  }
}

TEST(Lemma51, TrivialCases) {
  std::mt19937_64 rng(7);
  auto tr = random_triple(rng, 6);
  auto r = lemma51_defect(tr, 2, {0.0});
  EXPECT_NEAR(r.lhs[0], 0.0, 1e-12);
  EXPECT_LE(r.defect, -r.k0 + 1e-12);

  auto free = build_one_particle(DiscretizedImpurity::gauss(constant_form(0.0), 6, 3.0));
  for (double x : lemma51_defect(free, 2, grid(0, 50, 5)).lhs) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(Lemma51, BoundHoldsOnRandomInstances) {
  std::mt19937_64 rng(11);
  const auto tg = grid(0.0, 100.0, 0.5);
  for (int i = 0; i < 5; ++i) {
    auto tr = random_triple(rng, 6);
    auto r = lemma51_defect(tr, 2, tg);
    EXPECT_LE(r.defect, 0.0);
    // left side against an independent matrix exponential
    const MatrixC h02 = tr.h0 * tr.h0;
    const double t = tg[37];
    const double lhs = op_norm(h02 * (expm_i(tr.h0, t) - expm_i(tr.h, t)));
    EXPECT_NEAR(r.lhs[37], lhs, 1e-9 * std::max(1.0, lhs));
  }
}

TEST(Lemma52, TrivialCases) {
  std::mt19937_64 rng(13);
  auto tr = random_triple(rng, 6);
  const VectorC phi = random_vector(rng, tr.h.rows());
  for (double x : lemma52_scan(tr, phi, 0.0, grid(0, 30, 1)).norms) EXPECT_NEAR(x, 1.0, 1e-12);

  auto free = build_one_particle(DiscretizedImpurity::gauss(constant_form(0.0), 6, 3.0));
  auto r = lemma52_scan(free, phi, 1.5, grid(0, 30, 1));
  for (double x : r.norms) EXPECT_NEAR(x, r.norms[0], 1e-12);
}

TEST(Lemma52, RegularFormBounded) {
  std::mt19937_64 rng(17);
  auto tr = random_triple(rng, 8);
  const VectorC phi = random_vector(rng, tr.h.rows());
  auto r = lemma52_scan(tr, phi, 2.0, grid(0, 200, 0.5), 2);
  EXPECT_FALSE(r.growth_flag);
  EXPECT_LE(r.max_norm, r.proof_bound * (1 + 1e-12));
  auto half = lemma52_scan(tr, phi, 1.3, grid(0, 200, 0.5), 2);
  EXPECT_LE(half.max_norm, half.proof_bound * (1 + 1e-12));
}

TEST(Lemma52, RejectsIrregularForm) {
  auto tr = build_one_particle(DiscretizedImpurity::gauss(FormFactor::power_tail(0.8), 6, 3.0));
  VectorC phi = VectorC::Ones(7);
  EXPECT_THROW(lemma52_scan(tr, phi, 2.0, {0.0, 1.0}, 2), PreconditionViolation);
}

TEST(Lemma54, RejectsEigenvector) {
  std::mt19937_64 rng(19);
  auto tr = random_triple(rng, 4);
  HermitianFunctions fh(tr.h);
  const VectorC psi = fh.vectors().col(2);
  EXPECT_THROW(lemma54_infimum(tr, {}, psi, {0.0, 1.0}, {0.0, 1.0}), EigenvectorInput);
}

TEST(Lemma54, TimeQuadratureOracle) {
  std::mt19937_64 rng(23);
  auto tr = random_triple(rng, 4);
  const VectorC psi = random_vector(rng, tr.h.rows());
  const double t1 = 0.0, t2 = 2.0 * std::numbers::pi, beta = 1.0;
  const std::vector<double> es{0.0, 0.8, 2.5, 40.0};
  auto r = lemma54_infimum(tr, {Occupation::FermiDirac, beta}, psi, {t1, t2}, es);

  Eigen::VectorXd a(tr.h0.rows());
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = std::sqrt(1.0 / (1.0 + std::exp(beta * tr.h0(i, i).real())));
  const auto gl = gauss_legendre(200, t1, t2);
  for (std::size_t k = 0; k < es.size(); ++k) {
    double integral = 0.0;
    VectorC mean = VectorC::Zero(psi.size());
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double t = gl.nodes[q];
      const VectorC x =
          a.asDiagonal() * (psi - std::exp(cplx(0.0, t * es[k])) * (expm_i(tr.hbar, -t) * psi));
      integral += gl.weights[q] * x.squaredNorm();
      mean += gl.weights[q] * x;
    }
    EXPECT_NEAR(r.integral[k], integral, 1e-9) << es[k];
    EXPECT_NEAR(r.jensen[k], mean.squaredNorm() / (t2 - t1), 1e-9) << es[k];
    EXPECT_LE(r.jensen[k], r.integral[k] + 1e-12);
  }
}

TEST(Lemma54, PositiveInfimumAndPlateau) {
  std::mt19937_64 rng(29);
  std::vector<double> es;
  for (double e = 0.0; e <= 20.0; e += 0.01) es.push_back(e);
  for (double e = 25.0; e <= 5000.0; e *= 1.25) es.push_back(e);
  for (auto kind : {Occupation::FermiDirac, Occupation::BoseEinstein}) {
    auto tr = random_triple(rng, 4);
    const VectorC psi = random_vector(rng, tr.h.rows());
    auto r = lemma54_infimum(tr, {kind, 1.0}, psi, {0.0, 2.0 * std::numbers::pi}, es);
    EXPECT_GT(r.infimum, 0.0);
    EXPECT_NEAR(r.jensen.back(), r.plateau_target, 0.01 * r.plateau_target);
    EXPECT_NEAR(r.integral.back(), r.integral_limit, 0.01 * r.integral_limit);
  }
}

TEST(Lemma55, ZeroCoupling) {
  auto tr = build_one_particle(DiscretizedImpurity::gauss(constant_form(0.0), 5, 3.0));
  auto r = lemma55_check(tr);
  EXPECT_LT((r.spectrum - Eigen::VectorXd::Ones(6)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lemma55, ClosedFormSpectrum) {
  std::vector<double> e{0.5, 1.0, 2.0}, w{0.3, 0.3, 0.4};
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += w[k] / e[k];
  auto tr = build_one_particle(DiscretizedImpurity{1.0, e, w, constant_form(std::sqrt(0.25 / s))});
  auto r = lemma55_check(tr);
  Eigen::VectorXd want(4);
  want << 0.5, 1.0, 1.0, 1.5;
  EXPECT_LT((r.spectrum - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r.coupling_norm, 0.5, 1e-15);

  auto degen = build_one_particle(DiscretizedImpurity{1.0, e, w, constant_form(std::sqrt(1.0 / s))});
  EXPECT_THROW(lemma55_check(degen), DegenerateCoupling);
}

TEST(Lemma55, RandomInstances) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    auto tr = random_triple(rng, 3 + i % 10);
    auto r = lemma55_check(tr);
    EXPECT_LT(r.max_deviation, 1e-10);
    EXPECT_LE(r.sup_norm, r.proof_bound * (1 + 1e-12));
  }
}

// One pass/fail line per acceptance criterion, with the measured numbers and
// runtime. Exit status is the number of failed criteria.
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "heatlaw/classical.hpp"
#include "heatlaw/fockttm.hpp"
#include "heatlaw/oneparticle.hpp"
#include "heatlaw/vanhove.hpp"

using namespace heatlaw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_budget = budget_s <= 0.0 || secs < budget_s;
  const bool ok = o.pass && in_budget;
  if (!ok) ++failures;
  std::printf("criterion %2d %s  %s  (%s)  [%.1f s%s]\n", id, ok ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
              secs, budget_s > 0 ? (in_budget ? ", within budget" : ", OVER BUDGET") : "");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

std::vector<double> grid(double a, double b, double step) {
  std::vector<double> t;
  for (int i = 0; a + i * step <= b + 1e-9; ++i) t.push_back(a + i * step);
  return t;
}

// ---- finite-model battery (criteria 1-3)

MatrixC random_hermitian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g;
  MatrixC a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return scale * (a + a.adjoint()) / (2.0 * std::sqrt(double(n)));
}

MatrixC random_unitary(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  MatrixC a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return Eigen::HouseholderQR<MatrixC>(a).householderQ();
}

struct Instance {
  FiniteModel model;
  double beta;
  Eigen::VectorXd levels;  // of H0, from an independent solver
};

// Gibbs state of H0; about half the instances have degenerate H0 in a random basis
Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(2, 64), coin(0, 1), lev(0, 4);
  std::uniform_real_distribution<double> b(0.2, 3.0);
  const int n = dim(rng);
  Instance in;
  in.beta = b(rng);
  Eigen::VectorXd d(n);
  MatrixC u = MatrixC::Identity(n, n);
  if (coin(rng)) {
    for (int i = 0; i < n; ++i) d(i) = 0.5 * lev(rng);
    u = random_unitary(rng, n);
  } else {
    std::normal_distribution<double> g;
    for (int i = 0; i < n; ++i) d(i) = g(rng);
    if (coin(rng)) u = random_unitary(rng, n);
  }
  in.model.H0 = u * d.cast<cplx>().asDiagonal() * u.adjoint();
  in.model.H0 = 0.5 * (in.model.H0 + in.model.H0.adjoint()).eval();
  in.model.V = random_hermitian(rng, n, 0.7);
  const double lo = d.minCoeff();
  Eigen::VectorXd w = (-in.beta * (d.array() - lo)).exp();
  w /= w.sum();
  in.model.omega = u * w.cast<cplx>().asDiagonal() * u.adjoint();
  in.model.omega = 0.5 * (in.model.omega + in.model.omega.adjoint()).eval();
  in.levels = Eigen::SelfAdjointEigenSolver<MatrixC>(in.model.H0).eigenvalues();
  return in;
}

struct Battery {
  double norm_err = 0.0, support_err = 0.0, jarzynski_err = 0.0, first_law_err = 0.0;
  int models = 0, laws = 0;
};

const Battery& battery() {
  static const Battery b = [] {
    Battery r;
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> tt(0.05, 10.0);
    for (int m = 0; m < 50; ++m) {
      const Instance in = random_instance(rng);
      const TTMEngine eng(in.model);
      std::vector<double> diffs;
      for (double a : in.levels)
        for (double c : in.levels) diffs.push_back(a - c);
      std::sort(diffs.begin(), diffs.end());
      const MatrixC H = in.model.H0 + in.model.V;
      for (int k = 0; k < 20; ++k) {
        const double t = tt(rng);
        const auto law = eng.law(t);
        r.norm_err = std::max(r.norm_err, std::abs(law.total() - 1.0));
        double mean = 0.0, jz = 0.0;
        for (const auto& at : law.atoms) {
          auto it = std::lower_bound(diffs.begin(), diffs.end(), at.dq);
          double dist = std::numeric_limits<double>::infinity();
          if (it != diffs.end()) dist = *it - at.dq;
          if (it != diffs.begin()) dist = std::min(dist, at.dq - *std::prev(it));
          r.support_err = std::max(r.support_err, dist);
          mean += at.dq * at.p;
          jz += std::exp(-in.beta * at.dq) * at.p;
        }
        r.jarzynski_err = std::max(r.jarzynski_err, std::abs(jz - 1.0));
        // Pade exponential, independent of the engine's eigensolves
        const MatrixC u = (cplx(0.0, t) * H).exp();
        const double trace = (in.model.omega * (in.model.V - u * in.model.V * u.adjoint())).trace().real();
        r.first_law_err = std::max(r.first_law_err, std::abs(mean - trace));
        ++r.laws;
      }
      ++r.models;
    }
    return r;
  }();
  return b;
}

// ---- van Hove

cplx empirical_cf(const std::vector<double>& x, double a) {
  cplx s = 0.0;
  for (double v : x) s += std::polar(1.0, a * v);
  return s / double(x.size());
}

const char* st(const IntegralVerdict& v) { return to_string(v.status); }

// ---- classical oracles

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

template <class Vec, class F>
Vec rk4(F&& rhs, Vec x, double t, int steps) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = rhs(x), k2 = rhs(Vec(x + 0.5 * h * k1)), k3 = rhs(Vec(x + 0.5 * h * k2)), k4 = rhs(Vec(x + h * k3));
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

HarmonicClassicalModel random_harmonic(std::mt19937_64& rng, int modes) {
  const int n = 2 * modes;
  std::uniform_real_distribution<double> ev(-0.9, 2.0), sv(0.3, 1.5), fr(0.3, 2.0);
  Eigen::VectorXd a(n), b(n);
  for (int i = 0; i < n; ++i) a(i) = ev(rng), b(i) = sv(rng);
  const Eigen::MatrixXd q = random_orthogonal(rng, n), p = random_orthogonal(rng, n);
  Eigen::MatrixXd v = q * a.asDiagonal() * q.transpose(), s = p * b.asDiagonal() * p.transpose();
  std::vector<double> freqs;
  for (int k = 0; k < modes; ++k) freqs.push_back(fr(rng));
  return HarmonicClassicalModel::from_modes(freqs, 0.5 * (v + v.transpose()), 0.5 * (s + s.transpose()));
}

// ---- one-particle instances

OneParticleTriple random_triple(std::mt19937_64& rng, int D) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  const double rate = u(rng), lam = 2.0 + 3.0 * u(rng), eps = u(rng), s = u(rng);
  auto f = FormFactor::custom("random", [rate, s](double e) {
    return cplx(std::exp(-rate * e) * e, s * e * e * std::exp(-e));
  });
  return build_one_particle(DiscretizedImpurity::gauss(f, D, lam, eps));
}

VectorC random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  VectorC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

// ---- determinism

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HEATLAW_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

int main() {
  std::printf("heatlaw acceptance\n");

  criterion(1, "TTM normalization and support", 10.0, [] {
    const auto& b = battery();
    return Outcome{b.norm_err <= 1e-12 && b.support_err <= 1e-8,
                   fmt("%d models x 20 times: max |sum p - 1| = %.2e, max distance to sp H0 - sp H0 = %.2e", b.models,
                       b.norm_err, b.support_err)};
  });

  criterion(2, "Jarzynski identity for Gibbs states", 10.0, [] {
    const auto& b = battery();
    return Outcome{b.jarzynski_err <= 1e-10, fmt("max |E exp(-beta dQ) - 1| = %.2e over %d laws", b.jarzynski_err, b.laws)};
  });

  criterion(3, "first law in mean", 10.0, [] {
    const auto& b = battery();
    return Outcome{b.first_law_err <= 1e-10,
                   fmt("max |E dQ - tr(omega (V - tau^t V))| = %.2e, Pade exponential oracle", b.first_law_err)};
  });

  criterion(4, "van Hove exact law vs Poisson samples, detailed balance", 60.0, [] {
    struct Case {
      FormFactor f;
      double beta, t;
    };
    const std::vector<Case> cases{
        {FormFactor::sharp_cutoff(2.0, 1.0), 1.0, 1.0},  {FormFactor::sharp_cutoff(3.0, 1.0), 0.5, 2.0},
        {FormFactor::exp_tail(1.0, 1.0), 1.0, 2.0},      {FormFactor::exp_tail(0.7, 1.0), 2.0, 0.5},
        {FormFactor::power_tail(1.6), 0.5, 4.0},         {FormFactor::power_tail(2.0), 1.0, 1.0},
        {FormFactor::sharp_cutoff(1.0, 2.0), 3.0, 5.0},  {FormFactor::exp_tail(1.5, 1.0), 0.3, 3.0},
        {FormFactor::power_tail(1.8, 2.0), 1.0, 2.0},    {FormFactor::sharp_cutoff(4.0, 1.0), 1.0, 10.0}};
    const double tol = 4.0 / std::sqrt(1e5);
    double worst_cf = 0.0, worst_db = 0.0;
    int i = 0;
    for (const auto& c : cases) {
      const PoissonLKLaw law(c.f, c.beta, c.t);
      const auto x = sample(law, 100000, 1000 + i++);
      for (double a : grid(-3.0, 3.0, 0.05)) worst_cf = std::max(worst_cf, std::abs(empirical_cf(x, a) - char_fn(law, a)));
      worst_db = std::max(worst_db, std::abs(detailed_balance_defect(law)));
    }
    return Outcome{worst_cf <= tol && worst_db <= 1e-8,
                   fmt("10 (f, beta, t): sup_alpha |E_t - ecf| = %.4f (tol %.4f), max |defect| = %.2e", worst_cf, tol,
                       worst_db)};
  });

  const auto t_scan = grid(0.5, 10.0, 0.5);
  criterion(5, "moment equivalence scan, PowerTail n = 1", 120.0, [&] {
    bool ok = true;
    std::string d;
    for (double p : {1.0, 1.4, 1.6, 2.0}) {
      const auto r = equivalence_scan_moments(FormFactor::power_tail(p), 1.0, 1, t_scan, {5.0, 8.0});
      const bool want_div = p < 1.5;
      for (const auto* v : {&r.sup_over_grid, &r.window, &r.uv}) ok &= want_div ? v->divergent() : v->convergent();
      ok &= r.consistent;
      d += fmt("%sp=%.1f:%s/%s/%s", d.empty() ? "" : ", ", p, st(r.sup_over_grid), st(r.window), st(r.uv));
    }
    return Outcome{ok, "sup/window/I_n " + d};
  });

  criterion(6, "exponential equivalence scan, |f|^2 = e exp(-2e)", 60.0, [&] {
    bool ok = true;
    std::string d;
    for (double g : {1.0, 1.9, 2.1}) {
      const auto r = equivalence_scan_exp(FormFactor::exp_tail(1.0, 1.0), 1.0, g, t_scan, {5.0, 8.0});
      const bool want_div = g > 2.0;
      for (const auto* v : {&r.sup_over_grid, &r.window, &r.uv}) ok &= want_div ? v->divergent() : v->convergent();
      ok &= r.consistent;
      d += fmt("%sgamma=%.1f:%s/%s/%s", d.empty() ? "" : ", ", g, st(r.sup_over_grid), st(r.window), st(r.uv));
    }
    return Outcome{ok, "sup/window/I_gamma " + d};
  });

  criterion(7, "counterexample form factor n = 1", 60.0, [] {
    const auto r = equivalence_scan_moments(FormFactor::counterexample(1), 1.0, 1, {2.0 * std::numbers::pi}, {5.0, 8.0});
    const bool ok = r.per_time.size() == 1 && r.per_time[0].verdict.convergent() && r.uv.divergent() &&
                    r.window.divergent();
    return Outcome{ok, fmt("E_2pi[dQ^4] %s (%.4g), I_1 %s, window (5, 8) %s", st(r.per_time[0].verdict),
                           r.per_time[0].verdict.real(), st(r.uv), st(r.window))};
  });

  criterion(8, "truncated van Hove against the exact law", 600.0, [] {
    const VanHoveFamily fam{FormFactor::exp_tail(1.0, 1.0), 6.0, 1e-3};
    const auto alphas = grid(-2.0, 2.0, 0.1);
    std::vector<TLRow> by_d{{2, 8, 1e-3}, {4, 8, 1e-3}, {6, 8, 1e-3}};
    std::vector<TLRow> by_n{{6, 4, 1e-3}, {6, 6, 1e-3}};
    const auto sd = tl_convergence_vanhove(fam, by_d, 2.0, 1.0, alphas);
    auto sn = tl_convergence_vanhove(fam, by_n, 2.0, 1.0, alphas);
    std::vector<double> en{sn.rows[0].error, sn.rows[1].error, sd.rows[2].error};
    std::vector<double> ed{sd.rows[0].error, sd.rows[1].error, sd.rows[2].error};
    const bool mono = non_increasing_with_slack(ed) && non_increasing_with_slack(en);
    const double fin = sd.rows[2].error;
    return Outcome{mono && fin <= 0.05,
                   fmt("beta=2 t=1: error D=2,4,6 (N=8): %.4f %.4f %.4f; N=4,6,8 (D=6): %.4f %.4f %.4f", ed[0], ed[1],
                       ed[2], en[0], en[1], en[2])};
  });

  criterion(9, "fermion impurity fourth-moment growth", 600.0, [] {
    const auto tg = grid(0.0, 50.0, 0.5);
    const ImpurityFamily sharp{FormFactor::sharp_cutoff(1.0, 0.0), 1.0, 0.5, Statistics::Fermion, 0, 0.0};
    const auto a = moment_growth_scan(sharp, 1, {4, 6, 8, 10}, 1.0, tg);
    ImpurityFamily tail = sharp;
    tail.f = FormFactor::power_tail(1.0);
    const auto b = moment_growth_scan(tail, 1, {4, 6, 8, 10}, 1.0, tg);
    // raw slope of the running maximum for the largest bath
    const double raw = a.trend_slope * a.rows.back().max_moment;
    std::string ma, mb;
    for (const auto& r : a.rows) ma += fmt(" %.4g", r.max_moment);
    for (const auto& r : b.rows) mb += fmt(" %.4g", r.max_moment);
    const bool ok = a.stabilizes && a.trend_slope < 1e-3 && b.increasing && !b.stabilizes;
    return Outcome{ok, fmt("SharpCutoff max E[dQ^4] over D=4..10:%s, change %.1f%%, slope %.2e/unit t (raw %.2e); "
                           "PowerTail(1):%s, change %.0f%%",
                           ma.c_str(), 100 * a.last_change, a.trend_slope, raw, mb.c_str(), 100 * b.last_change)};
  });

  criterion(10, "classical laws", 60.0, [] {
    std::mt19937_64 rng(77);
    // linear model: Hamilton's equations for H0 + <f, x> by RK4, dQ = H0(x_t) - H0(x)
    std::uniform_real_distribution<double> u(0.2, 2.0), c(-1.0, 1.0);
    LinearClassicalModel lm;
    for (int k = 0; k < 4; ++k) lm.modes.push_back({u(rng), c(rng), c(rng), u(rng)});
    const double t = 2.3;
    const auto g = linear_gaussian_law(lm, t);
    std::vector<Eigen::Matrix3d> prop;
    for (const auto& m : lm.modes) {
      const double e2 = m.freq * m.freq;
      Eigen::Matrix3d P;
      for (int j = 0; j < 3; ++j) {
        auto rhs = [&](const Eigen::Vector3d& y) {
          return Eigen::Vector3d(-e2 * (y(1) + m.f_phi * y(2)), y(0) + m.f_pi * y(2), 0.0);
        };
        P.col(j) = rk4(rhs, Eigen::Vector3d(Eigen::Vector3d::Unit(j)), t, 4000);
      }
      prop.push_back(P);
    }
    std::mt19937_64 draw(4321);
    std::normal_distribution<double> z;
    std::vector<double> q(100000);
    for (auto& y : q) {
      y = 0.0;
      for (std::size_t k = 0; k < lm.modes.size(); ++k) {
        const auto& m = lm.modes[k];
        const double sd = std::sqrt(m.cov);
        const Eigen::Vector3d x0(sd * z(draw), sd * z(draw) / m.freq, 1.0), xt = prop[k] * x0;
        const double e2 = m.freq * m.freq;
        y += 0.5 * (xt(0) * xt(0) + e2 * xt(1) * xt(1)) - 0.5 * (x0(0) * x0(0) + e2 * x0(1) * x0(1));
      }
    }
    const double n = double(q.size()), mq = mean_of(q), vq = var_of(q);
    const double zm = std::abs(mq - g.mean) / std::sqrt(vq / n);
    const double zv = std::abs(vq - g.variance) / (g.variance * std::sqrt(2.0 / n));

    // harmonic model: determinant MGF at half the critical gamma against direct sampling
    auto hm = random_harmonic(rng, 2);
    const double th = 1.3;
    const auto law = harmonic_law(hm, th);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(hm.Sigma).matrixL();
    Eigen::MatrixXd U(hm.dim, hm.dim);
    const Eigen::MatrixXd L = hm.generator();
    for (int j = 0; j < hm.dim; ++j)
      U.col(j) = rk4([&](const Eigen::VectorXd& y) { return Eigen::VectorXd(L * y); },
                     Eigen::VectorXd(Eigen::VectorXd::Unit(hm.dim, j)), th, 4000);
    std::vector<double> w(100000);
    const double gamma = 0.5 * law.critical_gamma_plus();
    for (auto& y : w) {
      Eigen::VectorXd zz(hm.dim);
      for (int i = 0; i < hm.dim; ++i) zz(i) = z(draw);
      const Eigen::VectorXd x = chol * zz, xt = U * x;
      y = std::exp(gamma * 0.5 * (x.dot(hm.v * x) - xt.dot(hm.v * xt)));
    }
    const double zh = std::abs(mean_of(w) - law.mgf(gamma)) / std::sqrt(var_of(w) / double(w.size()));

    // uniform bound on 20 random instances with -1 outside sp v
    int certified = 0;
    const auto tg = grid(0.0, 60.0, 0.5);
    for (int i = 0; i < 20; ++i) {
      auto m = random_harmonic(rng, 1 + i % 3);
      const auto probe = harmonic_uniform_check(m, 0.0, tg);
      certified += harmonic_uniform_check(m, 0.5 * probe.gamma_uniform, tg).certified_bound;
    }
    const bool ok = zm <= 3 && zv <= 3 && zh <= 3 && certified == 20;
    return Outcome{ok, fmt("linear mean %.2f SE, variance %.2f SE; harmonic MGF at gamma_c/2 %.2f SE; uniform bound "
                           "certified %d/20",
                           zm, zv, zh, certified)};
  });

  criterion(11, "one-particle lemma suite", 60.0, [] {
    std::mt19937_64 rng(2025);
    const auto tg = grid(0.0, 100.0, 0.5);
    std::vector<double> es;
    for (int i = 0; i <= 2000; ++i) es.push_back(0.01 * i);
    for (double e = 25.0; e <= 5000.0; e *= 1.25) es.push_back(e);
    double d51 = -1e300, d55 = 0.0, inf54 = 1e300, plateau = 0.0;
    for (int i = 0; i < 20; ++i) {
      const auto tr = random_triple(rng, 6);
      const VectorC psi = random_unit(rng, tr.h.rows());
      d51 = std::max(d51, lemma51_defect(tr, 2, tg).defect);
      d55 = std::max(d55, lemma55_check(tr).max_deviation);
      const auto occ = i % 2 ? Occupation{Occupation::BoseEinstein, 1.0} : Occupation{Occupation::FermiDirac, 1.0};
      const auto r = lemma54_infimum(tr, occ, psi, {0.0, 2.0 * std::numbers::pi}, es);
      inf54 = std::min(inf54, r.infimum);
      plateau = std::max(plateau, std::abs(r.jensen.back() - r.plateau_target) / r.plateau_target);
    }
    const bool ok = d51 <= 0.0 && d55 <= 1e-10 && inf54 > 0.0 && plateau <= 0.01;
    return Outcome{ok, fmt("20 instances: max lemma51 defect %.3g, lemma55 deviation %.1e, min infimum %.3g, "
                           "plateau error %.2e",
                           d51, d55, inf54, plateau)};
  });

  criterion(12, "byte-identical reruns", 0.0, [] {
    const fs::path dir = fs::temp_directory_path() / ("heatlaw_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
      std::ofstream(dir / name) << text;
      return (dir / name).string();
    };
    const std::string ff = "[formfactor]\nfamily = \"sharp_cutoff\"\nlambda = 3.0\nir_exponent = 1.0\n";
    struct Run {
      std::string cmd, config;
    };
    const std::vector<Run> runs{
        {"vanhove", write("vh.toml", "beta = 1.0\nt_grid = [0.5, 1.0, 2.0]\nseed = 5\n[scan]\nmoment_orders = [1]\n"
                                     "exp_gammas = [1.0]\n[sampling]\nn = 50000\n" + ff)},
        {"classical", write("cl.toml", "model = \"harmonic\"\nfreqs = [1.0]\nv = [[0.2, 0.1], [0.1, -0.3]]\n"
                                       "t_grid = [0.0, 1.0, 2.0]\nexp_gammas = [0.3]\n[sampling]\nn = 20000\n")},
        {"ttm", write("ttm.toml", "H0 = [[0.0, 0.0], [0.0, 1.0]]\nV = [[0.0, 0.3], [0.3, 0.0]]\nbeta = 1.0\n"
                                  "t_grid = [1.0, 2.0]\nalpha_grid = [-1.0, 1.0]\n[sampling]\nn = 20000\n")},
        {"fermion-impurity", write("fi.toml", "beta = 1.0\nD_list = [2, 3]\nt_grid = [0.0, 1.0, 2.0]\n"
                                              "[sampling]\nn = 20000\n" + ff)},
        {"lemmas", write("lm.toml", "instances = 3\nD = 4\nt_grid = [0.0, 5.0, 10.0]\nseed = 9\n")},
    };
    int compared = 0;
    std::string bad;
    for (const auto& r : runs) {
      const fs::path a = dir / (r.cmd + "_a"), b = dir / (r.cmd + "_b");
      const int ra = run_cli(r.cmd + " --config " + r.config + " --out " + a.string() + " --threads 1");
      const int rb = run_cli(r.cmd + " --config " + r.config + " --out " + b.string() + " --threads 3");
      if (ra != 0 || rb != 0) {
        bad += fmt(" %s exited %d/%d;", r.cmd.c_str(), ra, rb);
        continue;
      }
      for (const auto& e : fs::directory_iterator(a)) {
        const fs::path other = b / e.path().filename();
        if (!fs::exists(other) || slurp(e.path()) != slurp(other)) bad += " " + r.cmd + "/" + e.path().filename().string();
        ++compared;
      }
    }
    // tail report on the van Hove samples
    write("tails.toml", "input = \"vanhove_a/samples.csv\"\nk = 500\n[markov]\nE_grid = [1.0, 2.0, 4.0]\n");
    for (const char* s : {"tails_a", "tails_b"})
      if (run_cli("tails --config " + (dir / "tails.toml").string() + " --out " + (dir / s).string()) != 0)
        bad += " tails failed;";
    if (slurp(dir / "tails_a/tail_report.json") != slurp(dir / "tails_b/tail_report.json")) bad += " tails";
    ++compared;
    fs::remove_all(dir);
    return Outcome{bad.empty() && compared > 10,
                   fmt("%d output files from 6 subcommands, thread caps 1 and 3%s%s", compared,
                       bad.empty() ? "" : "; differing:", bad.c_str())};
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}

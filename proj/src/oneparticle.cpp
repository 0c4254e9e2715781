#include "heatlaw/oneparticle.hpp"

#include <algorithm>
#include <cmath>

#include "heatlaw/errors.hpp"
#include "heatlaw/numerics.hpp"

namespace heatlaw {

void DiscretizedImpurity::validate() const {
  if (!(eps_o > 0.0) || !std::isfinite(eps_o)) throw PreconditionViolation("eps_o must be positive");
  if (bath_energies.size() != bath_weights.size())
    throw PreconditionViolation("bath energies and weights differ in length");
  for (std::size_t k = 0; k < bath_energies.size(); ++k) {
    if (!(bath_energies[k] > 0.0) || !std::isfinite(bath_energies[k]))
      throw PreconditionViolation("bath energies must be positive");
    if (k > 0 && !(bath_energies[k] > bath_energies[k - 1]))
      throw PreconditionViolation("bath energies must be strictly increasing");
    if (!(bath_weights[k] > 0.0) || !std::isfinite(bath_weights[k]))
      throw PreconditionViolation("bath weights must be positive");
  }
}

VectorC DiscretizedImpurity::coupling() const {
  VectorC c(bath_energies.size());
  for (std::size_t k = 0; k < bath_energies.size(); ++k) {
    const cplx v = f.value(bath_energies[k]) * std::sqrt(bath_weights[k]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw PreconditionViolation("form factor not finite at bath energy " + std::to_string(bath_energies[k]));
    c(Eigen::Index(k)) = v;
  }
  return c;
}

DiscretizedImpurity DiscretizedImpurity::gauss(FormFactor f, int D, double lambda_bath, double eps_o) {
  if (D < 0) throw PreconditionViolation("bath size must be >= 0");
  if (!(lambda_bath > 0.0)) throw PreconditionViolation("bath cutoff must be positive");
  DiscretizedImpurity imp;
  imp.eps_o = eps_o;
  imp.f = std::move(f);
  if (D > 0) {
    auto g = gauss_legendre(D, 0.0, lambda_bath);
    imp.bath_energies = g.nodes;
    imp.bath_weights = g.weights;
  }
  imp.validate();
  return imp;
}

OneParticleTriple build_one_particle(const DiscretizedImpurity& imp) {
  imp.validate();
  const Eigen::Index n = Eigen::Index(imp.dim());
  const VectorC c = imp.coupling();
  OneParticleTriple tr;
  tr.imp = imp;
  tr.h0 = MatrixC::Zero(n, n);
  tr.h0(0, 0) = imp.eps_o;
  for (Eigen::Index k = 1; k < n; ++k) tr.h0(k, k) = imp.bath_energies[std::size_t(k - 1)];
  tr.v = MatrixC::Zero(n, n);
  MatrixC vbar = MatrixC::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    // psi_o <psi_f, .> + psi_f <psi_o, .>
    tr.v(0, k) = std::conj(c(k - 1));
    tr.v(k, 0) = c(k - 1);
    vbar(0, k) = c(k - 1);
    vbar(k, 0) = std::conj(c(k - 1));
  }
  tr.h = tr.h0 + tr.v;
  tr.hbar = tr.h0 + vbar;
  return tr;
}

HermitianFunctions::HermitianFunctions(const MatrixC& a) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(a);
  if (es.info() != Eigen::Success) throw Error("Hermitian eigensolver failed");
  vals_ = es.eigenvalues();
  vecs_ = es.eigenvectors();
}

MatrixC HermitianFunctions::exp_i(double t) const {
  return apply([t](double x) { return std::exp(cplx(0.0, t * x)); });
}

double op_norm(const MatrixC& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixC> svd(a);
  return svd.singularValues()(0);
}

namespace {

MatrixC diag_power(const MatrixC& h0, double p) {
  MatrixC d = MatrixC::Zero(h0.rows(), h0.cols());
  for (Eigen::Index i = 0; i < h0.rows(); ++i) d(i, i) = std::pow(h0(i, i).real(), p);
  return d;
}

}  // namespace

Lemma51Result lemma51_defect(const OneParticleTriple& tr, int n, const std::vector<double>& t_grid) {
  if (n < 1) throw PreconditionViolation("lemma51_defect needs n >= 1");
  const MatrixC h0n = diag_power(tr.h0, n);
  const MatrixC h0m = diag_power(tr.h0, n - 1);
  Lemma51Result r;
  r.k0 = 2.0 * op_norm(h0m * tr.v);
  r.k1 = op_norm(h0m * tr.v * tr.h);
  const HermitianFunctions fh(tr.h);
  r.defect = -std::numeric_limits<double>::infinity();
  for (double t : t_grid) {
    MatrixC e0 = MatrixC::Zero(tr.h0.rows(), tr.h0.cols());
    for (Eigen::Index i = 0; i < e0.rows(); ++i) e0(i, i) = std::exp(cplx(0.0, t * tr.h0(i, i).real()));
    const double lhs = op_norm(h0n * (e0 - fh.exp_i(t)));
    r.lhs.push_back(lhs);
    const double d = lhs - (r.k0 + r.k1 * std::abs(t));
    if (d > r.defect) {
      r.defect = d;
      r.worst_t = t;
    }
  }
  return r;
}

Lemma52Result lemma52_scan(const OneParticleTriple& tr, const VectorC& phi, double alpha,
                           const std::vector<double>& t_grid, int n) {
  if (n <= 0) n = std::max(1, int(std::ceil(alpha)));
  if (!(alpha >= 0.0) || alpha > n) throw PreconditionViolation("alpha must lie in [0, n]");
  if (phi.size() != tr.h.rows()) throw PreconditionViolation("phi has the wrong dimension");
  if (t_grid.empty()) throw PreconditionViolation("t_grid is empty");
  if (!uv_power_integral(tr.imp.f, n - 1).convergent())
    throw PreconditionViolation("lemma52_scan needs f in the domain of e^(n-1)");

  const MatrixC h0a = diag_power(tr.h0, alpha);
  const HermitianFunctions fh(tr.h);
  Lemma52Result r;
  for (double t : t_grid) r.norms.push_back((h0a * (fh.exp_i(t) * phi)).norm());
  const std::size_t cut = std::max<std::size_t>(1, t_grid.size() * 9 / 10);
  for (std::size_t i = 0; i < r.norms.size(); ++i) {
    (i < cut ? r.early_max : r.late_max) = std::max(i < cut ? r.early_max : r.late_max, r.norms[i]);
    r.max_norm = std::max(r.max_norm, r.norms[i]);
  }
  r.growth_flag = r.late_max > 1.01 * r.early_max;

  // ||h0^n e^{ith} phi|| <= ||h0^n - h^n|| ||phi|| + ||h^n phi||, then Holder down to alpha
  MatrixC hn = MatrixC::Identity(tr.h.rows(), tr.h.cols());
  for (int k = 0; k < n; ++k) hn = hn * tr.h;
  const double bn = op_norm(diag_power(tr.h0, n) - hn) * phi.norm() + (hn * phi).norm();
  r.proof_bound = std::pow(bn, alpha / n) * std::pow(phi.norm(), 1.0 - alpha / n);
  return r;
}

namespace {

// int_{t1}^{t2} exp(-i t x) dt
cplx window_phase(double x, double t1, double t2) {
  const double tm = std::max(std::abs(t1), std::abs(t2));
  if (std::abs(x) * tm < 1e-4)
    return cplx(t2 - t1, 0.0) - cplx(0.0, x * (t2 * t2 - t1 * t1) / 2.0) -
           x * x * (t2 * t2 * t2 - t1 * t1 * t1) / 6.0;
  return (std::exp(cplx(0.0, -x * t2)) - std::exp(cplx(0.0, -x * t1))) / cplx(0.0, -x);
}

}  // namespace

Lemma54Result lemma54_infimum(const OneParticleTriple& tr, Occupation occ, const VectorC& psi,
                              std::pair<double, double> window, const std::vector<double>& e_grid) {
  const auto [t1, t2] = window;
  if (!(t1 < t2)) throw PreconditionViolation("window needs t1 < t2");
  if (psi.size() != tr.h.rows()) throw PreconditionViolation("psi has the wrong dimension");
  if (e_grid.empty()) throw PreconditionViolation("e_grid is empty");
  if (!(occ.beta > 0.0)) throw PreconditionViolation("beta must be positive");
  const double pn = psi.norm();
  if (pn == 0.0) throw EigenvectorInput("psi is zero");
  const VectorC hp = tr.h * psi;
  const cplx ray = psi.dot(hp) / (pn * pn);
  if ((hp - ray * psi).norm() <= 1e-8 * op_norm(tr.h) * pn)
    throw EigenvectorInput("psi is numerically an eigenvector of h");

  // A is diagonal in the h0 basis
  Eigen::VectorXd a(tr.h0.rows());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = occ.beta * tr.h0(i, i).real();
    a(i) = std::sqrt(occ.kind == Occupation::FermiDirac ? 1.0 / (1.0 + std::exp(x)) : 1.0 / std::expm1(x));
  }
  const HermitianFunctions fb(tr.hbar);
  const auto& lam = fb.values();
  const MatrixC& phi = fb.vectors();
  const VectorC c = phi.adjoint() * psi;
  const MatrixC aphi = a.asDiagonal() * phi;
  const VectorC apsi = a.asDiagonal() * psi;
  const VectorC g = aphi.adjoint() * apsi;  // <A phi_j, A psi>
  const MatrixC gram = aphi.adjoint() * aphi;
  const double dt = t2 - t1;

  Lemma54Result r;
  r.plateau_target = dt * apsi.squaredNorm();
  double m = 0.0;  // int ||A exp(-it hbar) psi||^2 dt
  for (Eigen::Index j = 0; j < lam.size(); ++j)
    for (Eigen::Index k = 0; k < lam.size(); ++k)
      m += (std::conj(c(j)) * c(k) * gram(j, k) * std::conj(window_phase(lam(j) - lam(k), t1, t2))).real();
  r.integral_limit = r.plateau_target + m;

  r.infimum = std::numeric_limits<double>::infinity();
  for (double e : e_grid) {
    cplx cross = 0.0;
    VectorC yc(lam.size());
    for (Eigen::Index j = 0; j < lam.size(); ++j) {
      const cplx z = window_phase(lam(j) - e, t1, t2);
      cross += std::conj(g(j)) * c(j) * z;
      yc(j) = (dt - z) * c(j);
    }
    const double val = r.integral_limit - 2.0 * cross.real();
    r.integral.push_back(val);
    r.jensen.push_back((aphi * yc).squaredNorm() / dt);
    if (val < r.infimum) {
      r.infimum = val;
      r.argmin_e = e;
    }
  }
  return r;
}

Lemma55Result lemma55_check(const OneParticleTriple& tr, const VectorC& phi_in, const std::vector<double>& t_grid_in) {
  const VectorC c = tr.imp.coupling();
  double cn2 = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) cn2 += std::norm(c(k)) / tr.imp.bath_energies[std::size_t(k)];
  Lemma55Result r;
  r.coupling_norm = std::sqrt(cn2);
  const double se = std::sqrt(tr.imp.eps_o);
  if (std::abs(r.coupling_norm - se) < 1e-12)
    throw DegenerateCoupling("||e^-1/2 f|| equals sqrt(eps_o)");

  const Eigen::Index n = tr.h.rows();
  const MatrixC s = diag_power(tr.h0, -0.5);
  const MatrixC m = s * tr.h * s;
  r.spectrum = HermitianFunctions(m).values();
  r.predicted = Eigen::VectorXd::Ones(n);
  if (n >= 2) {
    r.predicted(0) = 1.0 - r.coupling_norm / se;
    r.predicted(1) = 1.0 + r.coupling_norm / se;
  }
  std::sort(r.predicted.begin(), r.predicted.end());
  r.max_deviation = (r.spectrum - r.predicted).cwiseAbs().maxCoeff();

  VectorC phi = phi_in.size() ? phi_in : VectorC(VectorC::Ones(n) / std::sqrt(double(n)));
  if (phi.size() != n) throw PreconditionViolation("phi has the wrong dimension");
  std::vector<double> t_grid = t_grid_in;
  if (t_grid.empty())
    for (int i = 0; i <= 200; ++i) t_grid.push_back(0.5 * i);
  const HermitianFunctions fh(tr.h);
  for (double t : t_grid) r.sup_norm = std::max(r.sup_norm, (s * (fh.exp_i(t) * phi)).norm());
  const MatrixC habs_half = fh.apply([](double x) { return cplx(std::sqrt(std::abs(x)), 0.0); });
  const MatrixC habs_mhalf = fh.apply([](double x) { return cplx(1.0 / std::sqrt(std::abs(x)), 0.0); });
  r.proof_bound = op_norm(s * habs_half) * (habs_mhalf * phi).norm();
  return r;
}

}  // namespace heatlaw

#include "heatlaw/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "heatlaw/errors.hpp"
#include "heatlaw/parallel.hpp"

namespace heatlaw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Block {
  double pi, phi;
};

// e^{tL0} on one mode: [[cos et, -e sin et],[sin et / e, cos et]]
Block rotate(const ClassicalMode& m, double t, Block x) {
  const double c = std::cos(m.freq * t), s = std::sin(m.freq * t);
  return {c * x.pi - m.freq * s * x.phi, s * x.pi / m.freq + c * x.phi};
}

double inner(const ClassicalMode& m, Block a, Block b) { return a.pi * b.pi + m.freq * m.freq * a.phi * b.phi; }

// (1 - e^{tL0}) f on one mode
Block one_minus_flow(const ClassicalMode& m, double t, Block x) {
  const Block r = rotate(m, t, x);
  return {x.pi - r.pi, x.phi - r.phi};
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}

}  // namespace

void LinearClassicalModel::validate() const {
  for (const auto& m : modes) {
    if (!(m.freq > 0.0) || !std::isfinite(m.freq)) throw PreconditionViolation("mode frequencies must be positive");
    if (!std::isfinite(m.f_pi) || !std::isfinite(m.f_phi)) throw PreconditionViolation("couplings must be finite");
    if (!(m.cov > 0.0) || !std::isfinite(m.cov)) throw PreconditionViolation("covariance entries must be positive");
  }
}

double LinearClassicalModel::f_norm2() const {
  double s = 0.0;
  for (const auto& m : modes) s += inner(m, {m.f_pi, m.f_phi}, {m.f_pi, m.f_phi});
  return s;
}

double LinearClassicalModel::max_cov() const {
  double d = 0.0;
  for (const auto& m : modes) d = std::max(d, m.cov);
  return d;
}

cplx GaussianLaw::char_fn(double alpha) const {
  return std::exp(cplx(-0.5 * variance * alpha * alpha, mean * alpha));
}

double GaussianLaw::moment(int k) const {
  if (k < 0) throw PreconditionViolation("moment order must be >= 0");
  if (k == 0) return 1.0;
  std::vector<double> kappa(std::size_t(k), 0.0);
  kappa[0] = mean;
  if (k > 1) kappa[1] = variance;
  return cumulants_to_moments(kappa).back();
}

GaussianLaw linear_gaussian_law(const LinearClassicalModel& model, double t) {
  model.validate();
  GaussianLaw g;
  for (const auto& m : model.modes) {
    const Block f{m.f_pi, m.f_phi};
    g.mean += inner(m, f, one_minus_flow(m, t, f));
    // adjoint of e^{tL0} is e^{-tL0}
    const Block y = one_minus_flow(m, -t, f);
    g.variance += m.cov * inner(m, y, y);
  }
  g.variance = std::max(g.variance, 0.0);
  return g;
}

double linear_exp_moment(const LinearClassicalModel& model, double gamma, double t) {
  if (!(gamma >= 0.0)) throw PreconditionViolation("gamma must be >= 0");
  const GaussianLaw g = linear_gaussian_law(model, t);
  const double m = g.mean, v = g.variance;
  if (v == 0.0) return std::exp(gamma * std::abs(m));
  const double s = std::sqrt(v);
  // E[e^{gX}; X>0] + E[e^{-gX}; X<0]
  const double up = gamma * m + 0.5 * gamma * gamma * v + std::log(std_normal_cdf((m + gamma * v) / s));
  const double down = -gamma * m + 0.5 * gamma * gamma * v + std::log(std_normal_cdf((-m + gamma * v) / s));
  return std::exp(up) + std::exp(down);
}

std::vector<double> linear_sample(const LinearClassicalModel& model, double t, std::size_t n, std::uint64_t seed) {
  model.validate();
  return chunked_draw(n, seed, [&](std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    double q = 0.0;
    for (const auto& m : model.modes) {
      // covariance D = cov * 1 in the weighted inner product
      const double sd = std::sqrt(m.cov);
      const double xpi = sd * z(rng), xphi = sd * z(rng) / m.freq;
      const Block f{m.f_pi, m.f_phi};
      q += inner(m, f, one_minus_flow(m, t, {m.f_pi + xpi, m.f_phi + xphi}));
    }
    return q;
  });
}

HarmonicClassicalModel HarmonicClassicalModel::from_modes(const std::vector<double>& freqs, Eigen::MatrixXd v,
                                                          Eigen::MatrixXd Sigma) {
  HarmonicClassicalModel m;
  m.dim = int(2 * freqs.size());
  m.L0 = Eigen::MatrixXd::Zero(m.dim, m.dim);
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (!(freqs[k] > 0.0) || !std::isfinite(freqs[k])) throw PreconditionViolation("mode frequencies must be positive");
    const Eigen::Index i = Eigen::Index(2 * k);
    m.L0(i, i + 1) = -freqs[k];
    m.L0(i + 1, i) = freqs[k];
  }
  m.v = std::move(v);
  m.Sigma = std::move(Sigma);
  m.validate();
  return m;
}

void HarmonicClassicalModel::validate() const {
  if (dim <= 0) throw PreconditionViolation("dim must be positive");
  for (const auto* a : {&v, &L0, &Sigma})
    if (a->rows() != dim || a->cols() != dim) throw PreconditionViolation("matrix shape does not match dim");
  if (!v.allFinite() || !Sigma.allFinite()) throw PreconditionViolation("model matrices must be finite");
  const double sc = std::max(1.0, v.cwiseAbs().maxCoeff());
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12 * sc) throw PreconditionViolation("v must be symmetric");
  if ((L0 + L0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, L0.cwiseAbs().maxCoeff()))
    throw PreconditionViolation("L0 must be skew");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Sigma.cwiseAbs().maxCoeff()))
    throw PreconditionViolation("Sigma must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw PreconditionViolation("Sigma must be positive definite");
}

Eigen::MatrixXd HarmonicClassicalModel::flow(double t) const { return (t * generator()).exp(); }

Eigen::MatrixXd HarmonicClassicalModel::v_t(double t) const {
  const Eigen::MatrixXd u = flow(t);
  return u.transpose() * v * u;
}

QuadraticFormLaw::QuadraticFormLaw(Eigen::MatrixXd M) : M_(0.5 * (M + M.transpose())) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M_);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  lam_ = es.eigenvalues();
  vecs_ = es.eigenvectors();
}

double QuadraticFormLaw::critical_gamma_plus() const {
  const double top = lam_.size() ? lam_.maxCoeff() : 0.0;
  return top > 0.0 ? 0.5 / top : kInf;
}

double QuadraticFormLaw::critical_gamma_minus() const {
  const double bot = lam_.size() ? lam_.minCoeff() : 0.0;
  return bot < 0.0 ? -0.5 / bot : kInf;
}

double QuadraticFormLaw::log_mgf(double s) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lam_.size(); ++i) {
    const double d = 1.0 - 2.0 * s * lam_(i);
    if (!(d > 0.0)) {
      const double gc = s > 0.0 ? critical_gamma_plus() : critical_gamma_minus();
      throw MGFDiverges(gc, "det(I - 2 gamma M) <= 0 at gamma = " + std::to_string(s) +
                                "; critical |gamma| = " + std::to_string(gc));
    }
    acc += std::log(d);
  }
  return -0.5 * acc;
}

double QuadraticFormLaw::cumulant(int k) const {
  if (k < 1) throw PreconditionViolation("cumulant order must be >= 1");
  // 2^{k-1} (k-1)! tr M^k
  double c = std::ldexp(std::tgamma(double(k)), k - 1);
  return c * lam_.array().pow(double(k)).sum();
}

std::vector<double> QuadraticFormLaw::moments(int up_to) const {
  std::vector<double> kappa;
  for (int k = 1; k <= up_to; ++k) kappa.push_back(cumulant(k));
  return cumulants_to_moments(kappa);
}

std::vector<double> QuadraticFormLaw::sample(std::size_t n, std::uint64_t seed) const {
  const Eigen::Index d = M_.rows();
  return chunked_draw(n, seed, [&](std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    double q = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double z = g(rng);
      q += lam_(i) * z * z;
    }
    return q;
  });
}

QuadraticFormLaw harmonic_law(const HarmonicClassicalModel& m, double t) {
  m.validate();
  const Eigen::MatrixXd s = sym_sqrt(m.Sigma);
  return QuadraticFormLaw(0.5 * s * (m.v - m.v_t(t)) * s);
}

UniformCheck harmonic_uniform_check(const HarmonicClassicalModel& m, double gamma, const std::vector<double>& t_grid) {
  m.validate();
  if (!(gamma >= 0.0)) throw PreconditionViolation("gamma must be >= 0");
  UniformCheck r;
  for (double t : t_grid) {
    const double fn = spectral_norm(m.flow(t));
    r.flow_norm2_max = std::max(r.flow_norm2_max, fn * fn);
    const auto law = harmonic_law(m, t);
    try {
      r.grid_max = std::max(r.grid_max, law.mgf(gamma) + law.mgf(-gamma));
    } catch (const MGFDiverges&) {
      r.grid_max = kInf;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd::Identity(m.dim, m.dim) + m.v);
  const Eigen::VectorXd mu = es.eigenvalues();
  const double amax = mu.cwiseAbs().maxCoeff(), amin = mu.cwiseAbs().minCoeff();
  if (amin <= 1e-12 * std::max(1.0, amax)) {
    r.note = "-1 is in the spectrum of v";
    return r;
  }
  r.flow_norm2_bound = amax / amin;
  // energy-norm argument needs 1 + v definite
  if (mu.minCoeff() < 0.0 && mu.maxCoeff() > 0.0) {
    r.note = "1 + v is indefinite; the flow need not be bounded";
    return r;
  }
  const double lam_u = 0.5 * spectral_norm(m.Sigma) * spectral_norm(m.v) * (1.0 + r.flow_norm2_bound);
  r.gamma_uniform = lam_u > 0.0 ? 0.5 / lam_u : kInf;
  if (!(gamma < r.gamma_uniform)) {
    r.uniform_bound = kInf;
    r.note = "gamma is not below the uniform critical value";
    return r;
  }
  r.uniform_bound = 2.0 * std::pow(1.0 - 2.0 * gamma * lam_u, -0.5 * m.dim);
  const bool flow_ok = r.flow_norm2_max <= r.flow_norm2_bound * (1.0 + 1e-10);
  const bool mgf_ok = r.grid_max <= r.uniform_bound * (1.0 + 1e-12);
  r.certified_bound = flow_ok && mgf_ok;
  if (!flow_ok) r.note = "flow norm exceeds the energy bound on the grid";
  else if (!mgf_ok) r.note = "grid maximum exceeds the uniform bound";
  return r;
}

}  // namespace heatlaw

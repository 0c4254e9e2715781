#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "heatlaw/numerics.hpp"

namespace heatlaw {

// One oscillator of frequency freq with phase-space block (pi, phi) and inner
// product pi pi' + freq^2 phi phi'. f = (f_pi, f_phi); D = cov on the block.
struct ClassicalMode {
  double freq = 1.0;
  double f_pi = 0.0;
  double f_phi = 0.0;
  double cov = 1.0;
};

struct LinearClassicalModel {
  std::vector<ClassicalMode> modes;

  void validate() const;
  double f_norm2() const;  // ||f||^2 in the model inner product
  double max_cov() const;  // ||D||
};

struct GaussianLaw {
  double mean = 0.0;
  double variance = 0.0;

  cplx char_fn(double alpha) const;
  double moment(int k) const;  // raw moment
};

GaussianLaw linear_gaussian_law(const LinearClassicalModel& m, double t);
// E exp(gamma |dQ|), closed form
double linear_exp_moment(const LinearClassicalModel& m, double gamma, double t);
// draws x ~ mu_D and evaluates <f, (1 - e^{tL0})(f + x)> along the flow
std::vector<double> linear_sample(const LinearClassicalModel& m, double t, std::size_t n, std::uint64_t seed);

// Harmonic model in orthonormal phase-space coordinates (p_k, freq_k q_k).
struct HarmonicClassicalModel {
  int dim = 0;
  Eigen::MatrixXd v;      // symmetric
  Eigen::MatrixXd L0;     // skew, 2x2 blocks [[0, -e],[e, 0]]
  Eigen::MatrixXd Sigma;  // covariance of the Gaussian state

  static HarmonicClassicalModel from_modes(const std::vector<double>& freqs, Eigen::MatrixXd v,
                                           Eigen::MatrixXd Sigma);
  void validate() const;
  Eigen::MatrixXd generator() const { return L0 * (Eigen::MatrixXd::Identity(dim, dim) + v); }
  Eigen::MatrixXd flow(double t) const;  // e^{tL}
  // e^{tL}^T v e^{tL}
  Eigen::MatrixXd v_t(double t) const;
};

// law of z^T M z for standard normal z
class QuadraticFormLaw {
 public:
  explicit QuadraticFormLaw(Eigen::MatrixXd M);

  const Eigen::MatrixXd& matrix() const { return M_; }
  const Eigen::VectorXd& eigenvalues() const { return lam_; }
  // largest gamma > 0 with finite E exp(+gamma Q), resp. E exp(-gamma Q)
  double critical_gamma_plus() const;
  double critical_gamma_minus() const;
  // log det(I - 2 s M)^(-1/2); throws MGFDiverges past the critical value
  double log_mgf(double s) const;
  double mgf(double s) const { return std::exp(log_mgf(s)); }
  double cumulant(int k) const;
  std::vector<double> moments(int up_to) const;
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

 private:
  Eigen::MatrixXd M_, vecs_;
  Eigen::VectorXd lam_;
};

// M_t = 1/2 Sigma^1/2 (v - v_t) Sigma^1/2
QuadraticFormLaw harmonic_law(const HarmonicClassicalModel& m, double t);

struct UniformCheck {
  double grid_max = 0.0;        // max over t of E e^{gamma Q} + E e^{-gamma Q} (>= E e^{gamma |Q|})
  bool certified_bound = false;
  double flow_norm2_max = 0.0;  // max over t of ||e^{tL}||^2
  double flow_norm2_bound = 0.0;  // ||1+v|| ||(1+v)^-1||
  double gamma_uniform = 0.0;   // critical gamma of the uniform bound
  double uniform_bound = 0.0;   // 2 (1 - 2 gamma Lambda_u)^(-dim/2)
  std::string note;
};

UniformCheck harmonic_uniform_check(const HarmonicClassicalModel& m, double gamma, const std::vector<double>& t_grid);

}  // namespace heatlaw

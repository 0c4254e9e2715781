#pragma once

#include <Eigen/Dense>
#include <vector>

#include "heatlaw/formfactor.hpp"

namespace heatlaw {

using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

// Impurity level coupled to a discretized continuum bath.
struct DiscretizedImpurity {
  double eps_o = 1.0;
  std::vector<double> bath_energies;
  std::vector<double> bath_weights;
  FormFactor f;

  void validate() const;
  std::size_t dim() const { return bath_energies.size() + 1; }
  // psi_f components sqrt(w_k) f(e_k)
  VectorC coupling() const;

  // D Gauss-Legendre nodes on [0, lambda_bath]
  static DiscretizedImpurity gauss(FormFactor f, int D, double lambda_bath, double eps_o = 1.0);
};

struct OneParticleTriple {
  DiscretizedImpurity imp;
  MatrixC h0, v, h;
  // h0 + vbar, vbar built from the complex-conjugated coupling
  MatrixC hbar;
};

OneParticleTriple build_one_particle(const DiscretizedImpurity& imp);

// spectral calculus on a Hermitian matrix
class HermitianFunctions {
 public:
  explicit HermitianFunctions(const MatrixC& a);
  MatrixC exp_i(double t) const;  // exp(i t a)
  template <class F>
  MatrixC apply(F&& fn) const {
    VectorC d(vals_.size());
    for (Eigen::Index i = 0; i < vals_.size(); ++i) d(i) = fn(vals_(i));
    return vecs_ * d.asDiagonal() * vecs_.adjoint();
  }
  const Eigen::VectorXd& values() const { return vals_; }
  const MatrixC& vectors() const { return vecs_; }

 private:
  Eigen::VectorXd vals_;
  MatrixC vecs_;
};

double op_norm(const MatrixC& a);

struct Lemma51Result {
  double defect = 0.0;  // max over grid of lhs - K_n(t)
  double worst_t = 0.0;
  double k0 = 0.0, k1 = 0.0;  // K_n(t) = k0 + k1 t
  std::vector<double> lhs;
};

Lemma51Result lemma51_defect(const OneParticleTriple& tr, int n, const std::vector<double>& t_grid);

struct Lemma52Result {
  double max_norm = 0.0;
  double early_max = 0.0;  // over t <= t_end / 10
  double late_max = 0.0;   // over the last decade
  bool growth_flag = false;
  // t-independent bound from the proof, interpolated to alpha
  double proof_bound = 0.0;
  std::vector<double> norms;
};

Lemma52Result lemma52_scan(const OneParticleTriple& tr, const VectorC& phi, double alpha,
                           const std::vector<double>& t_grid, int n = 0);

struct Occupation {
  enum Kind { FermiDirac, BoseEinstein } kind = FermiDirac;
  double beta = 1.0;
};

struct Lemma54Result {
  double infimum = 0.0;
  double argmin_e = 0.0;
  std::vector<double> integral;  // int_{t1}^{t2} ||A (1 - exp(-it(hbar - e))) psi||^2 dt per e
  std::vector<double> jensen;    // ||int A (1 - exp(-it(hbar - e))) psi dt||^2 / (t2 - t1) per e
  double plateau_target = 0.0;   // (t2 - t1) ||A psi||^2
  double integral_limit = 0.0;   // e -> inf limit of the integral
};

// throws EigenvectorInput if psi is an eigenvector of h (relative residual 1e-8)
Lemma54Result lemma54_infimum(const OneParticleTriple& tr, Occupation occ, const VectorC& psi,
                              std::pair<double, double> window, const std::vector<double>& e_grid);

struct Lemma55Result {
  Eigen::VectorXd spectrum;  // of h0^-1/2 h h0^-1/2, ascending
  Eigen::VectorXd predicted;
  double max_deviation = 0.0;
  double coupling_norm = 0.0;  // ||e^-1/2 f|| (discretized)
  double sup_norm = 0.0;       // sup over t of ||h0^-1/2 exp(ith) phi||
  double proof_bound = 0.0;    // ||h0^-1/2 |h|^1/2|| ||h|^-1/2 phi||
};

// throws DegenerateCoupling when ||e^-1/2 f|| = sqrt(eps_o)
Lemma55Result lemma55_check(const OneParticleTriple& tr, const VectorC& phi = {},
                            const std::vector<double>& t_grid = {});

}  // namespace heatlaw

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "heatlaw/oneparticle.hpp"

namespace heatlaw {

// Exact two-time measurement data for a finite system.
struct FiniteModel {
  MatrixC H0, V, omega;
  double cluster_tol = 0.0;  // 0 selects 1e-9 ||H0||

  // throws StateNotCommuting or PreconditionViolation
  void validate() const;
  double effective_tol() const;
};

struct Atom {
  double dq = 0.0;
  double p = 0.0;
};

struct DiscreteAtomicLaw {
  std::vector<Atom> atoms;  // ascending in dq
  double total() const;
};

std::vector<double> law_moments(const DiscreteAtomicLaw& law, const std::vector<int>& orders);
cplx law_char_fn(const DiscreteAtomicLaw& law, double alpha);

// Spectral data of a FiniteModel, reusable across times. Invariant sectors
// (connected components of the joint sparsity pattern of H0, V, omega) are
// diagonalized separately.
class TTMEngine {
 public:
  explicit TTMEngine(const FiniteModel& model);

  DiscreteAtomicLaw law(double t) const;
  std::vector<double> moments(double t, const std::vector<int>& orders) const;
  std::vector<cplx> char_fn(double t, const std::vector<double>& alphas) const;

  std::size_t dimension() const { return dim_; }
  std::size_t sectors() const { return blocks_.size(); }
  const std::vector<double>& cluster_energies() const { return cluster_energy_; }

 private:
  struct Block {
    std::vector<Eigen::Index> idx;
    std::vector<int> cluster;   // per H0 eigenvector
    Eigen::VectorXd eps, w, lam;  // cluster energy, state weight, eigenvalues of H0 + V
    bool real = true;
    Eigen::MatrixXd xr;  // <H0 eigvec | H eigvec>
    Eigen::MatrixXcd xc;
  };
  // T(b, a) = w_a |<b| e^{-itH} |a>|^2 in the H0 eigenbasis
  Eigen::MatrixXd transitions(const Block& b, double t) const;

  std::vector<Block> blocks_;
  std::vector<double> cluster_energy_;
  std::size_t dim_ = 0;
  double tol_ = 0.0;
};

DiscreteAtomicLaw ttm_distribution(const FiniteModel& model, double t);

// ---- second quantization ----

enum class Statistics { Fermion, Boson };

struct FockSpec {
  Statistics statistics = Statistics::Fermion;
  int modes = 1;
  int boson_total_cap = 4;  // N_max, bosons only
  double ir_floor = 0.0;    // delta in the Gibbs state

  static constexpr int kFermionModeCap = 14;
  static constexpr std::size_t kBosonDimCap = 20000;

  // throws CapExceeded
  void validate() const;
  std::size_t dimension() const;
};

// Occupation-number basis: fermions by bitmask, bosons graded by total number.
class FockBasis {
 public:
  explicit FockBasis(const FockSpec& spec);
  std::size_t size() const { return states_.size(); }
  const std::vector<std::uint8_t>& state(std::size_t i) const { return states_[i]; }
  std::optional<std::size_t> find(const std::vector<std::uint8_t>& n) const;
  const FockSpec& spec() const { return spec_; }

 private:
  FockSpec spec_;
  std::vector<std::vector<std::uint8_t>> states_;
  std::map<std::vector<std::uint8_t>, std::size_t> index_;
};

// dGamma(b) = sum_ij b_ij a_i^* a_j, Jordan-Wigner signs in mode order
MatrixC second_quantize(const MatrixC& b, const FockSpec& spec);
// dGamma(v) of the triple, i.e. a^*(psi_f) a(psi_o) + a^*(psi_o) a(psi_f)
MatrixC build_quadratic_V(const OneParticleTriple& triple, const FockSpec& spec);
// (a^*(g) + a(g)) / sqrt 2 on the truncated boson space
MatrixC build_linear_V(const VectorC& g, const FockSpec& spec);
// exp(-beta dGamma(max(delta, h))) / Z
MatrixC gibbs_state(const MatrixC& h_one, double beta, const FockSpec& spec);

// ---- impurity and van Hove families ----

// Bath of D Gauss-Legendre modes on [0, lambda_per_mode * D], clipped to the
// support of f when it is compact, coupled to an
// impurity level (quadratic V) or to nothing (van Hove, linear V).
struct ImpurityFamily {
  FormFactor f;
  double lambda_per_mode = 1.0;
  double eps_o = 1.0;
  Statistics statistics = Statistics::Fermion;
  int boson_total_cap = 4;
  double ir_floor = 0.0;

  DiscretizedImpurity discretize(int D) const;
  FiniteModel model(int D, double beta) const;
};

struct VanHoveFamily {
  FormFactor f;
  double lambda_bath = 8.0;  // fixed bath interval [0, lambda_bath]
  double ir_floor = 1e-3;

  DiscretizedImpurity discretize(int D) const;
  FiniteModel model(int D, int n_max, double beta) const;
};

struct GrowthRow {
  int D = 0;
  double max_moment = 0.0;
  double argmax_t = 0.0;
  std::vector<double> moments;  // per t
};

struct GrowthScan {
  int order = 0;  // 2n + 2
  std::vector<GrowthRow> rows;
  double last_change = 0.0;  // relative change of the max between the two largest D
  bool stabilizes = false;   // last_change <= 0.2
  bool increasing = false;   // strictly increasing column
  double trend_slope = 0.0;  // for the largest D, see running_max_slope
};

// least-squares slope over t in [t_lo, t_hi] of the running maximum of y,
// divided by max |y|
double running_max_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi);

GrowthScan moment_growth_scan(const ImpurityFamily& fam, int n, const std::vector<int>& D_list, double beta,
                              const std::vector<double>& t_grid);

struct TLRow {
  int D = 0;
  int n_max = 0;
  double delta = 0.0;
  double error = 0.0;  // sup over alpha
};

struct TLStudy {
  std::vector<TLRow> rows;
  bool non_increasing = false;  // along the sweep, 10% slack
  double final_error = 0.0;
};

bool non_increasing_with_slack(const std::vector<double>& e, double slack = 0.1);

// van Hove: reference is the exact Poisson law at (f, beta, t); each row
// varies one of D, N_max, delta.
TLStudy tl_convergence_vanhove(const VanHoveFamily& fam, const std::vector<TLRow>& sweep, double beta, double t,
                               const std::vector<double>& alphas);
// impurity models: reference is the last row of the sweep
TLStudy tl_convergence_impurity(const ImpurityFamily& fam, const std::vector<TLRow>& sweep, double beta, double t,
                                const std::vector<double>& alphas);

// ||[H0, V - tau^t(V)]|| on the grid against 2 ||[H0, V]|| + 2 ||V||^2
struct CommutatorScan {
  std::vector<double> norms;
  double bound = 0.0;
};
CommutatorScan commutator_scan(const FiniteModel& model, const std::vector<double>& t_grid);

}  // namespace heatlaw

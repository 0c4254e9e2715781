#include "heatlaw/linalg.hpp"

#include <complex>
#include <string>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "heatlaw/errors.hpp"

namespace heatlaw {

namespace {

constexpr Eigen::Index kLapackFrom = 200;

template <class Matrix>
Eigh<Matrix> eigen_path(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw Error("Hermitian eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

Eigh<Eigen::MatrixXd> eigh(const Eigen::MatrixXd& a) {
  const lapack_int n = lapack_int(a.rows());
  if (a.rows() < kLapackFrom) return eigen_path(a);
  Eigen::MatrixXd work = a;
  Eigh<Eigen::MatrixXd> r{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  std::vector<lapack_int> support(2 * std::size_t(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, work.data(), n, 0.0, 0.0, 0, 0, 0.0,
                                         &found, r.values.data(), r.vectors.data(), n, support.data());
  if (info != 0 || found != n) throw Error("dsyevr failed, info = " + std::to_string(info));
  return r;
}

Eigh<Eigen::MatrixXcd> eigh(const Eigen::MatrixXcd& a) {
  const lapack_int n = lapack_int(a.rows());
  if (a.rows() < kLapackFrom) return eigen_path(a);
  Eigen::MatrixXcd work = a;
  Eigh<Eigen::MatrixXcd> r{Eigen::VectorXd(n), Eigen::MatrixXcd(n, n)};
  std::vector<lapack_int> support(2 * std::size_t(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, work.data(), n, 0.0, 0.0, 0, 0, 0.0,
                                         &found, r.values.data(), r.vectors.data(), n, support.data());
  if (info != 0 || found != n) throw Error("zheevr failed, info = " + std::to_string(info));
  return r;
}

}  // namespace heatlaw

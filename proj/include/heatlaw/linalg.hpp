#pragma once

#include <Eigen/Dense>

namespace heatlaw {

template <class Matrix>
struct Eigh {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;
};

// Hermitian eigensolvers; LAPACK MRRR above a size threshold, Eigen below.
Eigh<Eigen::MatrixXd> eigh(const Eigen::MatrixXd& a);
Eigh<Eigen::MatrixXcd> eigh(const Eigen::MatrixXcd& a);

}  // namespace heatlaw

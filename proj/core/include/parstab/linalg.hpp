#pragma once

#include <Eigen/Dense>

namespace parstab {

// Diagonal similarity scaling (powers of two) of a nonsymmetric matrix.
Eigen::MatrixXd balance(const Eigen::MatrixXd& m);

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& m);

// max Re(lambda); computed on the balanced matrix.
double spectral_abscissa(const Eigen::MatrixXd& m);

// Largest eigenvalue of the symmetric part.
double max_symmetric_eigenvalue(const Eigen::MatrixXd& m);
double min_symmetric_eigenvalue(const Eigen::MatrixXd& m);

// 2-norm condition number via SVD; infinity for singular input.
double condition_number(const Eigen::MatrixXd& m);

// Numerical rank with relative singular value threshold.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

}  // namespace parstab

#pragma once

#include "parstab/spectral_basis.hpp"

#include <Eigen/Dense>

#include <vector>

namespace parstab {

// Lambda_gamma = diag(1/(gamma - lambda_k - eta [k == 2])), k <= N0.
// Throws AdmissibilityError naming the offending (one-based) index.
Eigen::VectorXd lambda_gamma(double gamma, double eta, const std::vector<double>& unstable_lambdas);

// p_n with <D_gamma v, psi_n> = p_n <v, trace_n>_{Gamma_1}.
struct LiftedProjectionTable {
    double gamma = 0.0;
    double eta = 0.0;
    int n0 = 0;
    std::vector<double> p;
    std::vector<bool> valid;
};

LiftedProjectionTable make_projection_table(double gamma, double eta, const std::vector<double>& lambdas, int n0);

// n is zero-based.
double lifted_projection(const LiftedProjectionTable& table, double boundary_inner, int n);

// B[k][l] = <trace_k, trace_l>_{Gamma_1}, k, l < N0, by boundary quadrature.
Eigen::MatrixXd gram_matrix(const EigenBasis& basis, int n0);

// Traces of the first N0 modes against all modes up to `cols`; backs the
// tail sums and the residual input maps.
class LiftingData {
public:
    LiftingData(const EigenBasis& basis, int n0, int cols);

    int n0() const { return n0_; }
    int cols() const { return static_cast<int>(lambdas_.size()); }
    const Eigen::MatrixXd& gram() const { return g_; }  // N0 x cols
    const std::vector<double>& lambdas() const { return lambdas_; }

    // sum_{n=N+1}^{N_tail} (<trace_l, trace_n> / (gamma + lambda_n))^2,
    // l zero-based, N and N_tail counts of modes.
    double residual_norm_sq(double gamma, int l, int n, int n_tail) const;

    // Contribution of modes in (from, to] to the same sum.
    double residual_block(double gamma, int l, int from, int to) const;

private:
    int n0_;
    Eigen::MatrixXd g_;
    std::vector<double> lambdas_;
};

}  // namespace parstab

#pragma once

#include "parstab/lifting.hpp"
#include "parstab/synthesis.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace parstab {

// Tail length starts at max(factor * N, min_tail) and doubles, capped at
// cap_factor * N, until the last quarter of (N, N_tail] contributes less than
// block_tol of each sum.
struct TailPolicy {
    int factor = 4;
    int min_tail = 400;
    int cap_factor = 16;
    double block_tol = 0.01;
};

// Solves F'P + PF + 2 delta P = -I (Bartels-Stewart on a complex Schur form).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, double delta);
double lyapunov_residual(const Eigen::MatrixXd& f, const Eigen::MatrixXd& p, double delta);

// Sums over k, l of gamma_k^2 gammatilde_{k,l}^2 |A_l|^2 |R_N D_{gamma_k} trace_l|^2
// (S2: without gamma_k^2), in coefficient space.
double compute_s1(const SynthesisArtifacts& art, const LiftingData& lift, int n, int n_tail);
double compute_s2(const SynthesisArtifacts& art, const LiftingData& lift, int n, int n_tail);

// sum_{n=N+1}^{N_tail} (phi_n(xi1)^2 + phi_n(xi2)^2) / (lambda_n + nu)^2.
double compute_sphi(const EigenBasis& basis, const Point& xi1, const Point& xi2, int n, int n_tail, double nu);

// Largest eigenvalue of the bordered matrix Theta_1.
double check_theta1(const Eigen::MatrixXd& p, const SynthesisArtifacts& art, double s1, double s2, double eps,
                    double eta_cert);

struct PsiCheck {
    double theta2 = 0.0;
    double slope = 0.0;
    bool slope_ok = false;        // slope <= -1/2
    bool eta_sphi_ok = false;     // eta_cert * S_phi <= 1/2
    bool lambda_positive = false;  // lambda_{N+1} > 0
    bool certifiable() const { return slope_ok && eta_sphi_ok && lambda_positive; }
};

PsiCheck check_psi(double lambda_next, double nu, double delta, double eps, double eta_cert, double s_phi);

struct CertRound {
    int n = 0;
    int n_tail = 0;
    bool tail_converged = false;
    double s1 = 0.0, s2 = 0.0, sphi = 0.0;
    double eta_cert = 0.0;
    double theta1_max = 0.0;
    double psi_bound = 0.0;
    double psi_slope = 0.0;
    double p_norm = 0.0;
    double p_min_eig = 0.0;
    double lyapunov_residual = 0.0;
    bool certified = false;
    std::string blocked;  // first failing check, empty when certified
};

struct Certificate {
    int n = 0;
    double nu = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;
    double eta_cert = 0.0;
    double c1 = 0.0;
    double s1 = 0.0, s2 = 0.0, sphi = 0.0;
    double theta1_max = 0.0;
    double psi_bound = 0.0;
    double p_norm = 0.0;
    double p_min_eig = 0.0;
    double lyapunov_residual = 0.0;
    Eigen::MatrixXd p;
    bool certified = false;
    std::string status;  // "certified" or "failed: <reason>"
    std::vector<CertRound> rounds;
    std::vector<std::string> warnings;
};

using ArtifactsBuilder = std::function<SynthesisArtifacts(int n)>;

// One round at fixed N; the P matrix is returned through `p_out` if given.
CertRound certify_round(const EigenBasis& basis, const SynthesisArtifacts& art, const LiftingData& lift,
                        const TailPolicy& policy, Eigen::MatrixXd* p_out = nullptr);

// N = N_start, 2 N_start, ... <= N_max; first certified N wins.
Certificate certify(const EigenBasis& basis, const ArtifactsBuilder& build, int n_start, int n_max,
                    const TailPolicy& policy = {});

}  // namespace parstab

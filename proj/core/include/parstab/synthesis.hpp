#pragma once

#include "parstab/lifting.hpp"
#include "parstab/spectral_basis.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace parstab {

enum class PlacementMethod {
    robust,     // eigenvector parametrization, minimal eigenvector condition number
    two_stage,  // split the double eigenvalue through one output, then place through one output
};

struct SynthesisOptions {
    double c_ratio = 2.0;
    double gamma_base = 10.0;
    std::optional<double> spread;  // default 0.5 * delta
    double cond_limit = 1e12;
    int max_doublings = 20;
    PlacementMethod placement = PlacementMethod::robust;
};

struct GammaLadder {
    std::vector<double> gammas;
    double gamma_base = 0.0;
    std::vector<Eigen::VectorXd> lambda_diag;  // Lambda_{gamma_k}
    std::vector<Eigen::MatrixXd> bk;
    Eigen::MatrixXd sum_bk;
    Eigen::MatrixXd a;
    Eigen::MatrixXd k;  // -sum gamma_k B_k A + Xi
    double abscissa = 0.0;
};

struct SynthesisArtifacts {
    int d = 1;
    int n0 = 0;
    int n = 0;
    double delta = 0.0;
    double eta = 0.0;
    double spread = 0.0;
    std::vector<int> pattern;
    std::vector<double> lambdas;  // first N

    std::vector<double> gammas;
    double gamma_base = 0.0;
    std::vector<Eigen::VectorXd> lambda_diag;
    Eigen::MatrixXd b;
    std::vector<Eigen::MatrixXd> bk;
    Eigen::MatrixXd a;
    Eigen::MatrixXd xi;
    Eigen::MatrixXd k;  // -sum gamma_k B_k A + Xi
    Eigen::MatrixXd a0, a1;
    Eigen::MatrixXd c0, c1, c1_tilde;
    Eigen::MatrixXd l;
    Eigen::MatrixXd f, g;
    Eigen::MatrixXd h;  // residual input map, (N - N0) x N0
    Point xi1{}, xi2{};

    double ladder_abscissa = 0.0;
    double observer_abscissa = 0.0;
    double f_abscissa = 0.0;

    // v = sum_k Lambda_k A U, so that u(s) = v . trace(s).
    Eigen::MatrixXd control_map() const;
};

// Half the smallest gap from lambda_2 to a non-partner unstable eigenvalue,
// clamped to [0.1, 1]; 1 when N0 = 1.
double select_eta(const std::vector<double>& unstable_lambdas);

GammaLadder select_gamma_ladder(const std::vector<double>& lambdas, int n0, const Eigen::MatrixXd& b, double eta,
                                double delta, double c_ratio, double gamma_base = 10.0, double cond_limit = 1e12,
                                int max_doublings = 20);

// Kalman rank of (A0, C0) for diagonal A0 (Hautus test per eigenvalue).
int kalman_rank(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& c0);

Eigen::MatrixXd validate_sensors(const Point& xi1, const Point& xi2, const EigenBasis& basis, int n0);

// L with spectrum of A0 - L C0 at -delta - spread*k, k = 1..N0.
Eigen::MatrixXd place_observer_gain(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& c0, double delta,
                                    double spread, PlacementMethod method = PlacementMethod::robust);

struct ClosedLoop {
    Eigen::MatrixXd f;
    Eigen::MatrixXd g;  // (L; -L; 0)
};

ClosedLoop assemble_f(const Eigen::MatrixXd& k, const Eigen::MatrixXd& a0, const Eigen::MatrixXd& a1,
                      const Eigen::MatrixXd& l, const Eigen::MatrixXd& c0, const Eigen::MatrixXd& c1_tilde);

SynthesisArtifacts synthesize(const EigenBasis& basis, const Point& xi1, const Point& xi2, int n,
                              const SynthesisOptions& opts = {});

// Same design, rebuilt for another number of retained modes.
SynthesisArtifacts with_modes(const SynthesisArtifacts& art, const EigenBasis& basis, int n);

// u(s) = sum_k <Lambda_k A U, trace(s)>.
double control_trace(const SynthesisArtifacts& art, const EigenBasis& basis, const Eigen::VectorXd& u,
                     const Point& s);

}  // namespace parstab

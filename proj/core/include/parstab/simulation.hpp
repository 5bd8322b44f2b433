#pragma once

#include "parstab/spectral_basis.hpp"
#include "parstab/synthesis.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

namespace parstab {

struct SimState {
    double t = 0.0;
    Eigen::VectorXd z;     // plant modes, N_sim
    Eigen::VectorXd zhat;  // observer, N
};

struct StepRecord {
    double t = 0.0;
    double l2_proxy = 0.0;
    double h1_proxy = 0.0;
    double y1 = 0.0, y2 = 0.0;
    double u_l2 = 0.0;          // |u(., t)| in L2(Gamma_1)
    double err_finite = 0.0;    // |Z^{N0} - Zhat^{N0}|
    double err_residual = 0.0;  // |Lambda (Z - Zhat)| over N0 < n <= N
    double zhat_abs = 0.0;      // sum_k |zhat_k|
    double objective = 0.0;     // h1_proxy + zhat_abs
};

struct SimulationRun {
    std::vector<StepRecord> records;
    double h = 0.0;
    int n_sim = 0;
    int n = 0;
    int halvings = 0;
    double projection_check_max = 0.0;  // largest relative mismatch of the lifted projection identity
    double decay_rate = 0.0;
    double t_skip = 0.0;
};

class Simulator {
public:
    // The basis must hold at least n_sim modes. With open_loop the observer
    // and the input are held at zero.
    Simulator(const EigenBasis& basis, const SynthesisArtifacts& art, int n_sim, bool open_loop = false);

    int n_sim() const { return n_sim_; }
    SimState init_state(const Eigen::VectorXd& z0) const;
    SimState step(const SimState& s, double h) const;
    StepRecord record(const SimState& s) const;
    SimulationRun run(const Eigen::VectorXd& z0, double t_end, double h, double t_skip = 2.0,
                      int projection_check_every = 100) const;

    // Default step: min(0.5 / lambda_{N_sim}, 1e-2).
    double default_step() const;

    // Stacked sum_k <D_{gamma_k} u_k, psi_n>, n <= N_sim.
    Eigen::VectorXd lifted_sum(const Eigen::VectorXd& u) const;
    // Modal forcing of dz_n/dt beyond -lambda_n z_n, from the lifted terms.
    Eigen::VectorXd modal_input(const Eigen::VectorXd& u) const;
    // Same forcing written directly as -<u, trace_n>_{Gamma_1}.
    Eigen::VectorXd modal_input_direct(const Eigen::VectorXd& u) const;
    Eigen::VectorXd w(const SimState& s) const;
    // (Zhat^{N0}, E^{N0}, E~) for comparison with exp(F t).
    Eigen::VectorXd finite_state(const SimState& s) const;
    // max_k |q_k(quadrature) + B_k A U| / max_k |B_k A U| over n <= N0.
    double projection_residual(const Eigen::VectorXd& u) const;
    Eigen::Vector2d output(const SimState& s) const;
    // Matrix of the whole truncated loop acting on (z, zhat).
    Eigen::MatrixXd generator() const;

private:
    void rhs(const SimState& s, Eigen::VectorXd& dz, Eigen::VectorXd& dzh) const;
    SimState lawson(const SimState& s, double h) const;

    const EigenBasis& basis_;
    const SynthesisArtifacts& art_;
    int n_sim_;
    bool open_loop_;
    Eigen::VectorXd lam_;
    Eigen::MatrixXd gram_;  // N0 x N_sim
    std::vector<Eigen::MatrixXd> qk_;
    Eigen::MatrixXd qsum_, gz_, cs_;
    Eigen::MatrixXd obs_u_;  // -A0 + K
    Eigen::MatrixXd vmap_;   // control map
    double h1_floor_ = 1.0;
    double nu_ = 0.0;
    BoundaryRule face_rule_;
    std::vector<std::vector<double>> face_traces_;
};

// Least-squares slope of log(series) against t on [t_skip, end].
double estimate_decay_rate(const std::vector<double>& t, const std::vector<double>& series, double t_skip);

// <f, psi_n> for n < count by tensor Gauss quadrature.
Eigen::VectorXd project_function(const SeparableBasis& basis, const std::function<double(const Point&)>& f,
                                 int count);

// Unit-mass vector from multi-indices; indices must be among the first `count` modes.
Eigen::VectorXd coefficients_from_modes(const EigenBasis& basis, const std::vector<std::array<int, 3>>& modes,
                                        const std::vector<double>& coeffs, int count);

}  // namespace parstab

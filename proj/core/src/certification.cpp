#include "parstab/certification.hpp"

#include "parstab/errors.hpp"
#include "parstab/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <sstream>

namespace parstab {

namespace {
constexpr double kSlack = 1e-9;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, double delta) {
    const Eigen::Index n = f.rows();
    if (f.cols() != n) throw CertificationError("solve_lyapunov: F must be square");
    const double absc = spectral_abscissa(f);
    if (!(absc < -delta))
        throw CertificationError("no certificate: F + delta I is not Hurwitz (abscissa " + std::to_string(absc) + ")");
    using C = std::complex<double>;
    const Eigen::MatrixXd a = f + delta * Eigen::MatrixXd::Identity(n, n);
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<C>());
    const Eigen::MatrixXcd& t = schur.matrixT();
    const Eigen::MatrixXcd& u = schur.matrixU();
    // With X = U^H P U: T^H X + X T = -I, solved column by column.
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n, n);
    const Eigen::MatrixXcd th = t.adjoint();
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
        rhs(j) = -1.0;
        for (Eigen::Index k = 0; k < j; ++k) rhs -= t(k, j) * x.col(k);
        Eigen::MatrixXcd m = th;
        m.diagonal().array() += t(j, j);
        x.col(j) = m.triangularView<Eigen::Lower>().solve(rhs);
    }
    Eigen::MatrixXd p = (u * x * u.adjoint()).real();
    return 0.5 * (p + p.transpose());
}

double lyapunov_residual(const Eigen::MatrixXd& f, const Eigen::MatrixXd& p, double delta) {
    const Eigen::MatrixXd r =
        f.transpose() * p + p * f + 2.0 * delta * p + Eigen::MatrixXd::Identity(f.rows(), f.rows());
    return r.cwiseAbs().maxCoeff();
}

namespace {

double weighted_tail(const SynthesisArtifacts& art, const LiftingData& lift, int from, int to, bool with_gamma) {
    double s = 0.0;
    for (int k = 0; k < art.n0; ++k) {
        const double gk = art.gammas[k];
        for (int l = 0; l < art.n0; ++l) {
            const double gt = art.lambda_diag[k](l);
            const double arow = art.a.row(l).squaredNorm();
            const double w = (with_gamma ? gk * gk : 1.0) * gt * gt * arow;
            s += w * lift.residual_block(gk, l, from, to);
        }
    }
    return s;
}

double sphi_block(const EigenBasis& basis, const Point& xi1, const Point& xi2, int from, int to, double nu) {
    double s = 0.0;
    for (int n = from; n < to; ++n) {
        const double a = basis.phi(n, xi1), b = basis.phi(n, xi2);
        const double den = basis.lambda(n) + nu;
        if (!(den > 0.0)) throw CertificationError("compute_sphi: lambda_n + nu must be positive");
        s += (a * a + b * b) / (den * den);
    }
    return s;
}

}  // namespace

double compute_s1(const SynthesisArtifacts& art, const LiftingData& lift, int n, int n_tail) {
    if (n_tail < n) throw CertificationError("compute_s1: N_tail below N");
    if (n_tail > lift.cols()) throw CertificationError("compute_s1: N_tail exceeds the trace table");
    return weighted_tail(art, lift, n, n_tail, true);
}

double compute_s2(const SynthesisArtifacts& art, const LiftingData& lift, int n, int n_tail) {
    if (n_tail < n) throw CertificationError("compute_s2: N_tail below N");
    if (n_tail > lift.cols()) throw CertificationError("compute_s2: N_tail exceeds the trace table");
    return weighted_tail(art, lift, n, n_tail, false);
}

double compute_sphi(const EigenBasis& basis, const Point& xi1, const Point& xi2, int n, int n_tail, double nu) {
    if (n_tail < n) throw CertificationError("compute_sphi: N_tail below N");
    if (n_tail > basis.size()) throw CertificationError("compute_sphi: N_tail exceeds the basis");
    return sphi_block(basis, xi1, xi2, n, n_tail, nu);
}

double check_theta1(const Eigen::MatrixXd& p, const SynthesisArtifacts& art, double s1, double s2, double eps,
                    double eta_cert) {
    const Eigen::Index n = art.f.rows();
    const Eigen::Index n0 = art.n0;
    if (p.rows() != n || p.cols() != n || art.g.rows() != n) throw CertificationError("check_theta1: dimension mismatch");
    const Eigen::Index m = n + art.g.cols();
    Eigen::MatrixXd th = Eigen::MatrixXd::Zero(m, m);
    th.topLeftCorner(n, n) = art.f.transpose() * p + p * art.f + 2.0 * art.delta * p;
    th.topLeftCorner(n0, n0) += eps * s1 * Eigen::MatrixXd::Identity(n0, n0);
    const Eigen::MatrixXd pg = p * art.g;
    th.topRightCorner(n, m - n) = pg;
    th.bottomLeftCorner(m - n, n) = pg.transpose();
    th.bottomRightCorner(m - n, m - n) = -eta_cert * Eigen::MatrixXd::Identity(m - n, m - n);
    // E2 = [K, L C0, L C1~, L]: the first block row of F bordered by L.
    Eigen::MatrixXd e2(n0, m);
    e2.leftCols(n) = art.f.topRows(n0);
    e2.rightCols(m - n) = art.l;
    th += eps * s2 * e2.transpose() * e2;
    return max_symmetric_eigenvalue(th);
}

PsiCheck check_psi(double lambda_next, double nu, double delta, double eps, double eta_cert, double s_phi) {
    PsiCheck c;
    c.theta2 = -0.5 * lambda_next + 1.5 * nu + 2.0 * delta;
    // eps is fixed to 2 N0^2, so N0^2 / eps = 1/2 whatever N0 is.
    if (!(eps > 0.0)) throw CertificationError("check_psi: epsilon must be positive");
    c.slope = -2.0 * (1.0 - 0.5) + eta_cert * s_phi;
    c.slope_ok = c.slope <= -0.5 + kSlack;
    c.eta_sphi_ok = eta_cert * s_phi <= 0.5 + kSlack;
    c.lambda_positive = lambda_next > 0.0;
    return c;
}

CertRound certify_round(const EigenBasis& basis, const SynthesisArtifacts& art, const LiftingData& lift,
                        const TailPolicy& policy, Eigen::MatrixXd* p_out) {
    CertRound r;
    r.n = art.n;
    const double nu = basis.plant().nu_value();
    const int cap = std::min({policy.cap_factor * art.n, lift.cols(), basis.size()});
    int tail = std::min(std::max(policy.factor * art.n, policy.min_tail), cap);
    if (tail <= art.n) throw CertificationError("tail table too short for N = " + std::to_string(art.n));

    while (true) {
        r.n_tail = tail;
        r.s1 = compute_s1(art, lift, art.n, tail);
        r.s2 = compute_s2(art, lift, art.n, tail);
        r.sphi = compute_sphi(basis, art.xi1, art.xi2, art.n, tail, nu);
        const int from = tail - std::max(1, (tail - art.n) / 4);
        const double b1 = weighted_tail(art, lift, from, tail, true);
        const double b2 = weighted_tail(art, lift, from, tail, false);
        const double bp = sphi_block(basis, art.xi1, art.xi2, from, tail, nu);
        auto small = [&](double block, double total) { return total == 0.0 || block < policy.block_tol * total; };
        r.tail_converged = small(b1, r.s1) && small(b2, r.s2) && small(bp, r.sphi);
        if (r.tail_converged || tail >= cap) break;
        tail = std::min(2 * tail, cap);
    }

    const Eigen::MatrixXd p = solve_lyapunov(art.f, art.delta);
    r.lyapunov_residual = lyapunov_residual(art.f, p, art.delta);
    r.p_min_eig = min_symmetric_eigenvalue(p);
    r.p_norm = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
    const double eps = 2.0 * art.n0 * art.n0;
    r.eta_cert = r.sphi > 0.0 ? 1.0 / std::sqrt(r.sphi) : static_cast<double>(art.n);
    r.theta1_max = check_theta1(p, art, r.s1, r.s2, eps, r.eta_cert);
    if (art.n >= basis.size()) throw CertificationError("basis has no mode N + 1");
    const PsiCheck psi = check_psi(basis.lambda(art.n), nu, art.delta, eps, r.eta_cert, r.sphi);
    r.psi_bound = psi.theta2;
    r.psi_slope = psi.slope;

    if (!(r.lyapunov_residual < 1e-8)) r.blocked = "lyapunov residual";
    else if (!(r.p_min_eig > 0.0)) r.blocked = "P not positive definite";
    else if (!psi.certifiable()) r.blocked = "psi precondition (eta*S_phi or slope)";
    else if (!(r.theta1_max <= kSlack)) r.blocked = "theta1_max > 0";
    else if (!(r.psi_bound < 0.0)) r.blocked = "theta2 >= 0";
    r.certified = r.blocked.empty();
    if (p_out) *p_out = p;
    return r;
}

Certificate certify(const EigenBasis& basis, const ArtifactsBuilder& build, int n_start, int n_max,
                    const TailPolicy& policy) {
    if (n_start < 1 || n_max < n_start) throw std::invalid_argument("certify: need 1 <= N_start <= N_max");
    Certificate cert;
    cert.nu = basis.plant().nu_value();
    cert.delta = basis.plant().delta;
    cert.c1 = riesz_constants(basis.plant()).first;

    std::unique_ptr<LiftingData> lift;
    double prev_pnorm = 0.0;
    for (int n = n_start; n <= n_max; n *= 2) {
        const SynthesisArtifacts art = build(n);
        const int cols = std::min(basis.size(), policy.cap_factor * n);
        if (!lift || lift->cols() < cols) lift = std::make_unique<LiftingData>(basis, art.n0, cols);
        Eigen::MatrixXd p;
        CertRound r = certify_round(basis, art, *lift, policy, &p);
        if (prev_pnorm > 0.0 && r.p_norm > 2.0 * prev_pnorm) {
            std::ostringstream os;
            os << "|P| grew from " << prev_pnorm << " to " << r.p_norm << " when N doubled to " << n;
            cert.warnings.push_back(os.str());
        }
        if (!r.tail_converged)
            cert.warnings.push_back("tail block test not met at N = " + std::to_string(n) + " (N_tail " +
                                    std::to_string(r.n_tail) + ")");
        prev_pnorm = r.p_norm;
        cert.rounds.push_back(r);

        cert.n = n;
        cert.epsilon = 2.0 * art.n0 * art.n0;
        cert.eta_cert = r.eta_cert;
        cert.s1 = r.s1;
        cert.s2 = r.s2;
        cert.sphi = r.sphi;
        cert.theta1_max = r.theta1_max;
        cert.psi_bound = r.psi_bound;
        cert.p_norm = r.p_norm;
        cert.p_min_eig = r.p_min_eig;
        cert.lyapunov_residual = r.lyapunov_residual;
        cert.p = p;
        if (r.certified) {
            cert.certified = true;
            cert.status = "certified";
            return cert;
        }
    }
    cert.certified = false;
    cert.status = "failed: " + cert.rounds.back().blocked + " at N = " + std::to_string(cert.n);
    return cert;
}

}  // namespace parstab

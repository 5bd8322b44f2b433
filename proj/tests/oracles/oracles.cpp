#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
    if (intervals % 2) ++intervals;
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

namespace {

// int_0^L exp(a t) cos(k t) dt
double exp_cos(double a, double k, double length) {
    const double den = a * a + k * k;
    if (den == 0.0) return length;
    const double e = std::exp(a * length);
    return (e * (a * std::cos(k * length) + k * std::sin(k * length)) - a) / den;
}

}  // namespace

double exp_sin_sin(double a, int p, int q, double length) {
    const double w = std::numbers::pi / length;
    return 0.5 * (exp_cos(a, (p - q) * w, length) - exp_cos(a, (p + q) * w, length));
}

std::vector<double> brute_force_lambdas(int d, const std::vector<double>& lengths, const std::vector<double>& b,
                                        double c, int count, int kmax) {
    double shift = -c;
    for (double bi : b) shift += 0.25 * bi * bi;
    std::vector<double> out;
    std::array<int, 3> k{1, 1, 1};
    const int k2max = d >= 2 ? kmax : 1;
    const int k3max = d >= 3 ? kmax : 1;
    for (k[0] = 1; k[0] <= kmax; ++k[0])
        for (k[1] = 1; k[1] <= k2max; ++k[1])
            for (k[2] = 1; k[2] <= k3max; ++k[2]) {
                double lam = shift;
                for (int i = 0; i < d; ++i) {
                    const double w = k[i] * std::numbers::pi / lengths[i];
                    lam += w * w;
                }
                out.push_back(lam);
            }
    std::sort(out.begin(), out.end());
    if (static_cast<int>(out.size()) > count) out.resize(count);
    return out;
}

std::vector<double> fd_eigenvalues_1d(double b, double c, double length, int points, int count) {
    const int n = points - 1;  // interior nodes
    const double h = length / points;
    const double lo = -1.0 / (h * h) + b / (2.0 * h);
    const double up = -1.0 / (h * h) - b / (2.0 * h);
    if (!(lo * up > 0.0)) throw std::invalid_argument("fd_eigenvalues_1d: grid too coarse for the drift");
    // A diagonal similarity turns the centred matrix into a symmetric one with off-diagonal -sqrt(lo up).
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = 2.0 / (h * h) - c;
        if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = -std::sqrt(lo * up);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + n);
    out.resize(std::min<std::size_t>(out.size(), count));
    return out;
}

namespace {

// Solves a tridiagonal system; lower, diag, upper have length n (lower[0], upper[n-1] unused).
std::vector<double> thomas(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                           std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
    return x;
}

}  // namespace

std::vector<double> fd_lifting_projections(const FdLiftingProblem& pr, int kmax) {
    const int m = pr.points;  // intervals
    const int n = m - 1;      // interior unknowns
    const double h = pr.length / m;
    const double norm = std::sqrt(2.0 / pr.length);
    auto x_at = [&](int i) { return i * h; };  // i = 0..m
    auto phi = [&](int k, double x) {
        return norm * std::exp(-0.5 * pr.b * x) * std::sin(k * std::numbers::pi * x / pr.length);
    };
    auto psi = [&](int k, double x) { return std::exp(pr.b * x) * phi(k, x); };

    // (-d2 - b d + (gamma - c)) D on interior nodes; D(0) = v moves to the rhs.
    std::vector<double> lo(n), di(n), up(n), rhs(n, 0.0);
    for (int i = 0; i < n; ++i) {
        lo[i] = -1.0 / (h * h) + pr.b / (2.0 * h);
        di[i] = 2.0 / (h * h) + pr.gamma - pr.c;
        up[i] = -1.0 / (h * h) - pr.b / (2.0 * h);
    }
    rhs[0] -= lo[0] * pr.boundary_value;

    // Nonlocal part: - sum_i s_i phi_i <D, psi_i>, s_i = 2 lambda_i (+ eta for i = 2).
    const int n0 = static_cast<int>(pr.unstable.size());
    Eigen::MatrixXd u(n, n0), w(n, n0);
    for (int k = 0; k < n0; ++k) {
        const double s = 2.0 * pr.unstable[k] + (k == 1 ? pr.eta : 0.0);
        for (int i = 0; i < n; ++i) {
            const double x = x_at(i + 1);
            u(i, k) = -s * phi(k + 1, x);
            w(i, k) = h * psi(k + 1, x);
        }
    }
    // (T + U W') D = rhs; psi vanishes at both ends so the trapezoid needs interior nodes only.
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rhs.data(), n);

    auto solve_t = [&](const Eigen::VectorXd& v) {
        std::vector<double> vv(v.data(), v.data() + v.size());
        const auto x = thomas(lo, di, up, vv);
        return Eigen::Map<const Eigen::VectorXd>(x.data(), n).eval();
    };
    const Eigen::VectorXd y = solve_t(r);
    Eigen::MatrixXd tu(n, n0);
    for (int k = 0; k < n0; ++k) tu.col(k) = solve_t(u.col(k));
    Eigen::VectorXd dsol = y;
    if (n0 > 0) {
        const Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(n0, n0) + w.transpose() * tu;
        dsol = y - tu * cap.partialPivLu().solve(w.transpose() * y);
    }

    std::vector<double> out(kmax);
    for (int k = 1; k <= kmax; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += h * dsol(i) * psi(k, x_at(i + 1));
        out[k - 1] = s;
    }
    return out;
}

Eigen::VectorXd expm_apply(const Eigen::MatrixXd& f, double t, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd a = f * t;
    const double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    const Eigen::MatrixXd s = a / std::ldexp(1.0, squarings);
    Eigen::MatrixXd e = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = e;
    for (int k = 1; k <= 30; ++k) {
        term = term * s / k;
        e += term;
        if (term.norm() < 1e-18 * e.norm()) break;
    }
    for (int i = 0; i < squarings; ++i) e = e * e;
    return e * x;
}

}  // namespace oracle

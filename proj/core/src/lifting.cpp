#include "parstab/lifting.hpp"

#include "parstab/errors.hpp"

#include <cmath>

namespace parstab {

namespace {

bool is_zero(double den, double scale) { return std::abs(den) <= 1e-12 * std::max(1.0, scale); }

}  // namespace

Eigen::VectorXd lambda_gamma(double gamma, double eta, const std::vector<double>& unstable_lambdas) {
    const int n0 = static_cast<int>(unstable_lambdas.size());
    Eigen::VectorXd out(n0);
    for (int k = 0; k < n0; ++k) {
        const double den = gamma - unstable_lambdas[k] - (k == 1 ? eta : 0.0);
        if (is_zero(den, std::abs(gamma)))
            throw AdmissibilityError("gamma = " + std::to_string(gamma) + " gives a zero denominator at index " +
                                         std::to_string(k + 1),
                                     k + 1);
        out(k) = 1.0 / den;
    }
    return out;
}

LiftedProjectionTable make_projection_table(double gamma, double eta, const std::vector<double>& lambdas, int n0) {
    LiftedProjectionTable t;
    t.gamma = gamma;
    t.eta = eta;
    t.n0 = n0;
    t.p.resize(lambdas.size());
    t.valid.resize(lambdas.size());
    for (std::size_t n = 0; n < lambdas.size(); ++n) {
        const double den = static_cast<int>(n) < n0 ? gamma - lambdas[n] - (n == 1 ? eta : 0.0) : gamma + lambdas[n];
        t.valid[n] = !is_zero(den, std::abs(gamma));
        t.p[n] = t.valid[n] ? -1.0 / den : 0.0;
    }
    return t;
}

double lifted_projection(const LiftedProjectionTable& table, double boundary_inner, int n) {
    if (n < 0 || n >= static_cast<int>(table.p.size())) throw Error("lifted_projection: mode index out of range");
    if (!table.valid[n])
        throw AdmissibilityError("lifted_projection: zero denominator at index " + std::to_string(n + 1), n + 1);
    return table.p[n] * boundary_inner;
}

Eigen::MatrixXd gram_matrix(const EigenBasis& basis, int n0) {
    if (n0 < 1) throw Error("gram_matrix: N0 must be at least 1");
    const BoundaryRule rule = make_boundary_rule(basis.plant(), basis.face_wavenumber(n0));
    std::vector<std::vector<double>> s(n0);
    for (int k = 0; k < n0; ++k) s[k] = basis.trace_samples(k, rule);
    Eigen::MatrixXd b(n0, n0);
    for (int k = 0; k < n0; ++k)
        for (int l = k; l < n0; ++l) b(k, l) = b(l, k) = boundary_inner(rule, s[k], s[l]);
    return b;
}

LiftingData::LiftingData(const EigenBasis& basis, int n0, int cols) : n0_(n0) {
    if (n0 < 1) throw Error("LiftingData: N0 must be at least 1");
    g_ = basis.trace_gram(n0, cols);
    lambdas_ = basis.lambdas(cols);
}

double LiftingData::residual_block(double gamma, int l, int from, int to) const {
    double s = 0.0;
    for (int n = from; n < to; ++n) {
        const double den = gamma + lambdas_[n];
        if (is_zero(den, std::abs(gamma)))
            throw AdmissibilityError("residual_norm_sq: gamma + lambda_n = 0 at index " + std::to_string(n + 1), n + 1);
        const double v = g_(l, n) / den;
        s += v * v;
    }
    return s;
}

double LiftingData::residual_norm_sq(double gamma, int l, int n, int n_tail) const {
    if (n_tail < n) throw Error("residual_norm_sq: N_tail must not be below N");
    if (n_tail > cols()) throw Error("residual_norm_sq: N_tail exceeds the prepared trace table");
    if (l < 0 || l >= n0_) throw Error("residual_norm_sq: l out of range");
    return residual_block(gamma, l, n, n_tail);
}

}  // namespace parstab

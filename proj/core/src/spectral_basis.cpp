#include "parstab/spectral_basis.hpp"

#include "parstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace parstab {

namespace {

constexpr double kPi = std::numbers::pi;

std::string format_index(const Eigenpair& e) {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < e.d; ++i) os << (i ? "," : "") << e.index[i];
    os << ')';
    return os.str();
}

// One axis factor f(t) = A exp(-beta t / 2) sin(w t) and its derivatives.
struct Factor {
    double f, df, ddf;
};

Factor axis_factor(double amp, double beta, double w, double t) {
    const double e = std::exp(-0.5 * beta * t);
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    return {amp * e * s, amp * e * (w * c - 0.5 * beta * s),
            amp * e * (-w * w * s - beta * w * c + 0.25 * beta * beta * s)};
}

}  // namespace

BoundaryRule make_boundary_rule(const PlantConfig& plant, int kmax) {
    BoundaryRule r;
    const int a = plant.control_face.axis;
    const double xa = plant.control_face.high ? plant.lengths[a] : 0.0;
    if (plant.d == 1) {
        Point p{};
        p[0] = xa;
        r.nodes.push_back(p);
        r.weights.push_back(1.0);
        return r;
    }
    std::vector<int> axes;
    for (int i = 0; i < plant.d; ++i)
        if (i != a) axes.push_back(i);
    std::vector<Rule1D> rules;
    for (int i : axes) rules.push_back(composite_gauss(0.0, plant.lengths[i], panels_for_wavenumber(kmax)));
    if (axes.size() == 1) {
        for (std::size_t k = 0; k < rules[0].size(); ++k) {
            Point p{};
            p[a] = xa;
            p[axes[0]] = rules[0].nodes[k];
            r.nodes.push_back(p);
            r.weights.push_back(rules[0].weights[k]);
        }
    } else {
        for (std::size_t k = 0; k < rules[0].size(); ++k)
            for (std::size_t m = 0; m < rules[1].size(); ++m) {
                Point p{};
                p[a] = xa;
                p[axes[0]] = rules[0].nodes[k];
                p[axes[1]] = rules[1].nodes[m];
                r.nodes.push_back(p);
                r.weights.push_back(rules[0].weights[k] * rules[1].weights[m]);
            }
    }
    return r;
}

double boundary_inner(const BoundaryRule& rule, const std::vector<double>& f, const std::vector<double>& g) {
    if (f.size() != rule.size() || g.size() != rule.size())
        throw DomainError("boundary_inner: samples are not on the rule's grid");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += rule.weights[i] * f[i] * g[i];
    if (!std::isfinite(s)) throw Error("boundary_inner: non-finite result");
    return s;
}

double EigenBasis::psi(int n, const Point& x) const { return plant().mu(x) * phi(n, x); }

std::vector<double> EigenBasis::lambdas(int count) const {
    if (count > size()) throw Error("basis holds fewer modes than requested");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = pair(i).lambda;
    return out;
}

std::vector<double> EigenBasis::trace_samples(int n, const BoundaryRule& rule) const {
    std::vector<double> out(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) out[i] = trace(n, rule.nodes[i]);
    return out;
}

Eigen::MatrixXd EigenBasis::trace_gram(int rows, int cols) const {
    const BoundaryRule rule = make_boundary_rule(plant(), face_wavenumber(std::max(rows, cols)));
    std::vector<std::vector<double>> samples(std::max(rows, cols));
    for (int n = 0; n < std::max(rows, cols); ++n) samples[n] = trace_samples(n, rule);
    Eigen::MatrixXd g(rows, cols);
    for (int k = 0; k < rows; ++k)
        for (int n = 0; n < cols; ++n)
            g(k, n) = (n < rows && n < k) ? g(n, k) : boundary_inner(rule, samples[k], samples[n]);
    return g;
}

double separable_lambda(const PlantConfig& plant, const std::array<int, 3>& index) {
    double s = plant.drift_shift() - plant.c;
    for (int i = 0; i < plant.d; ++i) {
        const double w = index[i] * kPi / plant.lengths[i];
        s += w * w;
    }
    return s;
}

namespace {

std::vector<Eigenpair> enumerate_in_ball(const PlantConfig& plant, int count, double r2) {
    const int d = plant.d;
    const int kmax = static_cast<int>(std::floor(std::sqrt(r2)));

    double norm = 1.0;
    for (int i = 0; i < d; ++i) norm *= std::sqrt(2.0 / plant.lengths[i]);

    std::vector<Eigenpair> all;
    std::array<int, 3> k{1, 1, 1};
    const int k2max = d >= 2 ? kmax : 1;
    const int k3max = d >= 3 ? kmax : 1;
    for (k[0] = 1; k[0] <= kmax; ++k[0])
        for (k[1] = 1; k[1] <= k2max; ++k[1])
            for (k[2] = 1; k[2] <= k3max; ++k[2]) {
                std::array<int, 3> idx{k[0], d >= 2 ? k[1] : 0, d >= 3 ? k[2] : 0};
                long s = 0;
                for (int i = 0; i < d; ++i) s += static_cast<long>(idx[i]) * idx[i];
                if (static_cast<double>(s) > r2) continue;
                Eigenpair e;
                e.index = idx;
                e.d = d;
                e.lambda = separable_lambda(plant, idx);
                e.norm = norm;
                all.push_back(e);
            }
    if (static_cast<int>(all.size()) < count)
        throw EnumerationError("search radius holds only " + std::to_string(all.size()) + " of " +
                               std::to_string(count) + " requested modes");

    std::sort(all.begin(), all.end(), [](const Eigenpair& a, const Eigenpair& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        return a.index < b.index;
    });
    // Group near-equal eigenvalues, then order each group lexicographically.
    int gid = 0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i + 1;
        const double tol = 1e-12 * std::max(1.0, std::abs(all[i].lambda));
        while (j < all.size() && all[j].lambda - all[i].lambda <= tol) ++j;
        std::sort(all.begin() + i, all.begin() + j,
                  [](const Eigenpair& a, const Eigenpair& b) { return a.index < b.index; });
        for (std::size_t m = i; m < j; ++m) {
            all[m].lambda = all[i].lambda;
            all[m].group = gid;
        }
        ++gid;
        i = j;
    }

    // Every index outside the ball has lambda >= this value.
    double lmax = 0.0;
    for (int i = 0; i < d; ++i) lmax = std::max(lmax, plant.lengths[i]);
    const double outside = (kPi / lmax) * (kPi / lmax) * (std::floor(r2) + 1.0) + plant.drift_shift() - plant.c;
    if (!(all[count - 1].lambda < outside))
        throw EnumerationError("search radius exhausted: lambda_" + std::to_string(count) + " = " +
                               std::to_string(all[count - 1].lambda) +
                               " is not below the smallest eigenvalue outside the search ball (" +
                               std::to_string(outside) + ")");
    all.resize(count);
    return all;
}

}  // namespace

std::vector<Eigenpair> enumerate_eigenpairs(const PlantConfig& plant, int count, std::optional<double> bound) {
    plant.validate();
    if (count < 1) throw EnumerationError("count must be at least 1");
    if (bound) return enumerate_in_ball(plant, count, *bound);
    // Default ball, widened for elongated boxes and doubled while the check fails.
    double lmin = plant.lengths[0], lmax = plant.lengths[0];
    for (int i = 1; i < plant.d; ++i) {
        lmin = std::min(lmin, plant.lengths[i]);
        lmax = std::max(lmax, plant.lengths[i]);
    }
    double r2 = (2.0 * std::pow(static_cast<double>(count), 2.0 / plant.d) + 64.0) * (lmax / lmin) * (lmax / lmin);
    for (int attempt = 0;; ++attempt) {
        try {
            return enumerate_in_ball(plant, count, r2);
        } catch (const EnumerationError&) {
            if (attempt == 4) throw;
            r2 *= 2.0;
        }
    }
}

SeparableBasis::SeparableBasis(PlantConfig plant, int count) : plant_(std::move(plant)) {
    pairs_ = enumerate_eigenpairs(plant_, count);
}

const Eigenpair& SeparableBasis::pair(int n) const {
    if (n < 0 || n >= size()) throw Error("mode index " + std::to_string(n) + " out of range");
    return pairs_[n];
}

PhiJet SeparableBasis::phi_jet(int n, const Point& x) const {
    if (!plant_.contains(x)) throw DomainError("point outside the box");
    const Eigenpair& e = pair(n);
    const int d = plant_.d;
    std::array<Factor, 3> fac{};
    for (int i = 0; i < d; ++i) {
        const double amp = std::sqrt(2.0 / plant_.lengths[i]);
        fac[i] = axis_factor(amp, plant_.b[i], e.index[i] * kPi / plant_.lengths[i], x[i]);
    }
    PhiJet j;
    j.value = 1.0;
    for (int i = 0; i < d; ++i) j.value *= fac[i].f;
    for (int i = 0; i < d; ++i) {
        double g = fac[i].df, h = fac[i].ddf;
        for (int m = 0; m < d; ++m)
            if (m != i) {
                g *= fac[m].f;
                h *= fac[m].f;
            }
        j.grad[i] = g;
        j.second[i] = h;
    }
    return j;
}

double SeparableBasis::phi(int n, const Point& x) const {
    if (!plant_.contains(x)) throw DomainError("point outside the box");
    const Eigenpair& e = pair(n);
    double v = e.norm;
    double expo = 0.0;
    for (int i = 0; i < plant_.d; ++i) {
        v *= std::sin(e.index[i] * kPi * x[i] / plant_.lengths[i]);
        expo -= 0.5 * plant_.b[i] * x[i];
    }
    return v * std::exp(expo);
}

double SeparableBasis::trace(int n, const Point& s) const {
    if (!plant_.on_control_face(s)) throw DomainError("point is not on the control face");
    const int a = plant_.control_face.axis;
    Point p = s;
    p[a] = plant_.control_face.high ? plant_.lengths[a] : 0.0;
    const PhiJet j = phi_jet(n, p);
    return plant_.control_face.outward_normal() * plant_.mu(p) * j.grad[a];
}

int SeparableBasis::face_wavenumber(int count) const {
    int k = 1;
    for (int n = 0; n < std::min(count, size()); ++n)
        for (int i = 0; i < plant_.d; ++i)
            if (i != plant_.control_face.axis) k = std::max(k, pairs_[n].index[i]);
    return k;
}

// Tensor boundary rule evaluated axis by axis: the trace factors into a
// constant times a product of one-dimensional functions, so the Gram entry is
// a product of 1-D weighted sine integrals on the same Gauss nodes.
Eigen::MatrixXd SeparableBasis::trace_gram(int rows, int cols) const {
    if (rows > size() || cols > size()) throw Error("trace_gram: not enough modes");
    const int d = plant_.d;
    const int a = plant_.control_face.axis;
    const double xa = plant_.control_face.high ? plant_.lengths[a] : 0.0;

    auto tau = [&](const Eigenpair& e) {
        const double amp = std::sqrt(2.0 / plant_.lengths[a]);
        const Factor f = axis_factor(amp, plant_.b[a], e.index[a] * kPi / plant_.lengths[a], xa);
        return plant_.control_face.outward_normal() * std::exp(plant_.b[a] * xa) * f.df;
    };

    // Per face axis: J[p][q] = int_0^L exp(b t) (2/L) sin(p pi t/L) sin(q pi t/L) dt.
    std::vector<std::vector<std::vector<double>>> tables(d);
    for (int i = 0; i < d; ++i) {
        if (i == a) continue;
        int pmax = 1, qmax = 1;
        for (int k = 0; k < rows; ++k) pmax = std::max(pmax, pairs_[k].index[i]);
        for (int n = 0; n < cols; ++n) qmax = std::max(qmax, pairs_[n].index[i]);
        const double L = plant_.lengths[i];
        const Rule1D rule = composite_gauss(0.0, L, panels_for_wavenumber(std::max(pmax, qmax)));
        std::vector<std::vector<double>> sines(qmax + 1, std::vector<double>(rule.size()));
        std::vector<double> wexp(rule.size());
        for (std::size_t m = 0; m < rule.size(); ++m) {
            wexp[m] = rule.weights[m] * std::exp(plant_.b[i] * rule.nodes[m]) * (2.0 / L);
            for (int q = 1; q <= qmax; ++q) sines[q][m] = std::sin(q * kPi * rule.nodes[m] / L);
        }
        auto& t = tables[i];
        t.assign(pmax + 1, std::vector<double>(qmax + 1, 0.0));
        for (int p = 1; p <= pmax; ++p)
            for (int q = 1; q <= qmax; ++q) {
                double s = 0.0;
                for (std::size_t m = 0; m < rule.size(); ++m) s += wexp[m] * sines[p][m] * sines[q][m];
                t[p][q] = s;
            }
    }

    Eigen::MatrixXd g(rows, cols);
    for (int k = 0; k < rows; ++k) {
        const double tk = tau(pairs_[k]);
        for (int n = 0; n < cols; ++n) {
            double v = tk * tau(pairs_[n]);
            for (int i = 0; i < d; ++i)
                if (i != a) v *= tables[i][pairs_[k].index[i]][pairs_[n].index[i]];
            g(k, n) = v;
        }
    }
    // Symmetric block copied from one triangle.
    for (int k = 0; k < std::min(rows, cols); ++k)
        for (int n = 0; n < k; ++n) g(k, n) = g(n, k);
    if (!g.allFinite()) throw Error("trace_gram: non-finite quadrature value");
    return g;
}

std::pair<double, double> riesz_constants(const PlantConfig& plant) {
    return {1.0 / plant.mu_max(), 1.0 / plant.mu_min()};
}

UnstableInfo count_unstable(const std::vector<Eigenpair>& eigs, double delta, bool allow_general_pattern) {
    UnstableInfo info;
    int n0 = 0;
    while (n0 < static_cast<int>(eigs.size()) && eigs[n0].lambda <= delta) ++n0;
    if (n0 == static_cast<int>(eigs.size()))
        throw SpectrumError("insufficient eigenvalues: no computed lambda exceeds delta");
    info.n0 = n0;
    for (int i = 0; i < n0;) {
        int j = i + 1;
        while (j < n0 && eigs[j].group == eigs[i].group) ++j;
        info.pattern.push_back(j - i);
        i = j;
    }
    if (n0 == 0) return info;
    for (int m : info.pattern)
        if (m > 2)
            throw SpectrumError("multiplicity " + std::to_string(m) + " exceeds the two available outputs");
    if (allow_general_pattern) return info;
    const auto& p = info.pattern;
    bool ok = (p.size() == 1 && p[0] == 1);
    if (!ok && p.size() >= 2 && p[0] == 1 && p[1] == 2) {
        ok = true;
        for (std::size_t i = 2; i < p.size(); ++i) ok = ok && p[i] == 1;
    }
    if (!ok) {
        std::ostringstream os;
        os << "unsupported multiplicity pattern (";
        for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
        os << "); expected lambda_1 simple, lambda_2 = lambda_3, the rest simple (first unstable mode "
           << format_index(eigs[0]) << ")";
        throw SpectrumError(os.str());
    }
    return info;
}

UnstableInfo count_unstable(const EigenBasis& basis, double delta, bool allow_general_pattern) {
    std::vector<Eigenpair> eigs;
    for (int i = 0; i < basis.size(); ++i) eigs.push_back(basis.pair(i));
    return count_unstable(eigs, delta, allow_general_pattern);
}

}  // namespace parstab

#include "parstab/synthesis.hpp"

#include "parstab/errors.hpp"
#include "parstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace parstab {

namespace {

std::vector<double> head(const std::vector<double>& v, int n) { return {v.begin(), v.begin() + n}; }

Eigen::MatrixXd diag_of(const std::vector<double>& v, int from, int to, double sign) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(to - from, to - from);
    for (int i = from; i < to; ++i) m(i - from, i - from) = sign * v[i];
    return m;
}

}  // namespace

Eigen::MatrixXd SynthesisArtifacts::control_map() const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n0);
    for (const auto& d : lambda_diag) s += d;
    return s.asDiagonal() * a;
}

double select_eta(const std::vector<double>& lam) {
    const int n0 = static_cast<int>(lam.size());
    if (n0 <= 1) return 1.0;
    double gap = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n0; ++j) {
        if (j == 1 || lam[j] == lam[1]) continue;
        gap = std::min(gap, std::abs(lam[j] - lam[1]));
    }
    if (!std::isfinite(gap)) return 1.0;
    if (gap == 0.0) throw SynthesisError("select_eta: degenerate spectrum");
    double eta = std::clamp(0.5 * gap, 0.1, 1.0);
    for (int j = 0; j < n0; ++j)
        if (j != 1 && std::abs(lam[1] + eta - lam[j]) <= 1e-9 * std::max(1.0, std::abs(lam[j]))) eta = 0.5 * gap;
    return eta;
}

GammaLadder select_gamma_ladder(const std::vector<double>& lambdas, int n0, const Eigen::MatrixXd& b, double eta,
                                double delta, double c_ratio, double gamma_base, double cond_limit,
                                int max_doublings) {
    if (!(c_ratio > 1.0)) throw SynthesisError("c_ratio must exceed 1");
    if (b.rows() != n0 || b.cols() != n0) throw SynthesisError("Gram matrix has the wrong size");
    const std::vector<double> unstable = head(lambdas, n0);
    const double rho = (c_ratio - 1.0) / n0;
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(n0, n0);
    if (n0 >= 2) xi(1, 1) = eta;

    std::string last_reason = "none";
    double base = gamma_base;
    for (int attempt = 0; attempt <= max_doublings; ++attempt, base *= 2.0) {
        GammaLadder lad;
        lad.gamma_base = base;
        for (int k = 0; k < n0; ++k) lad.gammas.push_back(base * (1.0 + k * rho));

        // gamma_k +- (lambda_i + eta [i == 2]) != 0 for every tabulated i.
        bool admissible = true;
        for (double g : lad.gammas)
            for (std::size_t i = 0; i < lambdas.size() && admissible; ++i) {
                const double s = lambdas[i] + (i == 1 && n0 >= 2 ? eta : 0.0);
                const double tol = 1e-12 * std::max(1.0, g);
                if (std::abs(g - s) <= tol || std::abs(g + s) <= tol) {
                    admissible = false;
                    last_reason = "admissibility fails at index " + std::to_string(i + 1);
                }
            }
        if (!admissible) continue;

        lad.sum_bk = Eigen::MatrixXd::Zero(n0, n0);
        for (double g : lad.gammas) {
            Eigen::VectorXd d = lambda_gamma(g, eta, unstable);
            Eigen::MatrixXd bk = d.asDiagonal() * b * d.asDiagonal();
            lad.lambda_diag.push_back(d);
            lad.bk.push_back(bk);
            lad.sum_bk += bk;
        }
        const double cond = condition_number(lad.sum_bk);
        if (!(cond < cond_limit)) {
            last_reason = "sum of B_k has condition number " + std::to_string(cond);
            continue;
        }
        lad.a = lad.sum_bk.inverse();
        lad.a = 0.5 * (lad.a + lad.a.transpose());
        lad.k = xi;
        for (int k = 0; k < n0; ++k) lad.k -= lad.gammas[k] * lad.bk[k] * lad.a;
        lad.abscissa = spectral_abscissa(lad.k);
        if (lad.abscissa < -delta) return lad;
        last_reason = "abscissa " + std::to_string(lad.abscissa) + " not below -delta";
    }
    throw SynthesisError("no admissible gamma ladder up to gamma_base = " + std::to_string(base / 2.0) +
                         " (last: " + last_reason + ")");
}

int kalman_rank(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& c0) {
    const int n = static_cast<int>(a0.rows());
    int deficiency = 0;
    std::vector<bool> done(n, false);
    for (int i = 0; i < n; ++i) {
        if (done[i]) continue;
        std::vector<int> cols;
        for (int j = i; j < n; ++j)
            if (a0(j, j) == a0(i, i)) {
                cols.push_back(j);
                done[j] = true;
            }
        Eigen::MatrixXd sub(c0.rows(), cols.size());
        for (std::size_t m = 0; m < cols.size(); ++m) sub.col(m) = c0.col(cols[m]);
        const double scale = c0.cwiseAbs().maxCoeff();
        int r = 0;
        if (scale > 0.0) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub / scale);
            for (Eigen::Index m = 0; m < svd.singularValues().size(); ++m)
                if (svd.singularValues()(m) > 1e-10) ++r;
        }
        deficiency += static_cast<int>(cols.size()) - r;
    }
    return n - deficiency;
}

Eigen::MatrixXd validate_sensors(const Point& xi1, const Point& xi2, const EigenBasis& basis, int n0) {
    const PlantConfig& plant = basis.plant();
    if (!plant.interior(xi1)) throw SensorPlacementError("xi1 is not an interior point", 1);
    if (!plant.interior(xi2)) throw SensorPlacementError("xi2 is not an interior point", 2);
    Eigen::MatrixXd c0(2, n0);
    for (int i = 0; i < n0; ++i) {
        c0(0, i) = basis.phi(i, xi1);
        c0(1, i) = basis.phi(i, xi2);
    }
    const double scale = std::max(c0.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double tol = 1e-10 * scale;
    for (int i = 0; i < n0;) {
        int j = i + 1;
        while (j < n0 && basis.pair(j).group == basis.pair(i).group) ++j;
        if (j - i == 1) {
            if (!(std::abs(c0(0, i)) + std::abs(c0(1, i)) > tol))
                throw SensorPlacementError("both sensors miss mode " + std::to_string(i + 1), i + 1);
        } else {
            const double det = c0(0, i) * c0(1, i + 1) - c0(0, i + 1) * c0(1, i);
            if (!(std::abs(det) > tol * scale))
                throw SensorPlacementError(
                    "sensors cannot separate the double eigenvalue at modes " + std::to_string(i + 1) + "," +
                        std::to_string(i + 2),
                    i + 1);
        }
        i = j;
    }
    Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(n0, n0);
    for (int i = 0; i < n0; ++i) a0(i, i) = -basis.lambda(i);
    if (kalman_rank(a0, c0) != n0) throw SensorPlacementError("(A0, C0) fails the Kalman rank condition", 0);
    return c0;
}

namespace {

// Rank-one split of the double eigenvalue, then exact single-output placement
// by residues in the eigenbasis; smallest-norm verified candidate wins.
Eigen::MatrixXd place_two_stage(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& c0, double delta,
                                const std::vector<double>& targets) {
    const int n = static_cast<int>(a0.rows());

    auto distinct = [](const Eigen::VectorXd& d) {
        double scale = 1.0;
        for (Eigen::Index i = 0; i < d.size(); ++i) scale = std::max(scale, std::abs(d(i)));
        for (Eigen::Index i = 0; i < d.size(); ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if (std::abs(d(i) - d(j)) <= 1e-8 * scale) return false;
        return true;
    };

    Eigen::MatrixXd best;
    double best_norm = std::numeric_limits<double>::infinity();

    // Places the spectrum of ap - l c0.row(o) in the eigenbasis v of ap.
    auto try_output = [&](const Eigen::MatrixXd& ap, const Eigen::MatrixXd& v, const Eigen::MatrixXd& l_stage) {
        const Eigen::VectorXd dv = ap.diagonal();
        for (int o = 0; o < 2; ++o) {
            const Eigen::RowVectorXd ct = c0.row(o) * v;
            const double cn = c0.row(o).norm();
            if (cn == 0.0 || ct.cwiseAbs().minCoeff() <= 1e-12 * cn) continue;
            Eigen::VectorXd lt(n);
            for (int i = 0; i < n; ++i) {
                double num = 1.0, den = ct(i);
                for (int j = 0; j < n; ++j) {
                    num *= dv(i) - targets[j];
                    if (j != i) den *= dv(i) - dv(j);
                }
                lt(i) = num / den;
            }
            Eigen::MatrixXd l = l_stage;
            l.col(o) += v * lt;
            if (!l.allFinite()) continue;
            const double absc = spectral_abscissa(a0 - l * c0);
            if (!(absc < -delta)) continue;
            const double nrm = l.norm();
            if (nrm < best_norm) {
                best_norm = nrm;
                best = l;
            }
        }
    };

    const Eigen::VectorXd d0 = a0.diagonal();
    if (distinct(d0)) try_output(a0, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, 2));
    else {
        // Stage one: a single gain entry moves row m's eigenvalue off the double value.
        for (int m = 0; m < n; ++m)
            for (int o1 = 0; o1 < 2; ++o1)
                for (int shift = 1; shift <= 3; ++shift) {
                    const double cm = c0(o1, m);
                    if (std::abs(cm) <= 1e-12 * c0.norm()) continue;
                    const double sigma = shift / cm;
                    Eigen::MatrixXd ap = a0;
                    ap.row(m) -= sigma * c0.row(o1);
                    if (!distinct(ap.diagonal())) continue;
                    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
                    for (int i = 0; i < n; ++i)
                        if (i != m) v(m, i) = -ap(m, i) / (ap(m, m) - ap(i, i));
                    Eigen::MatrixXd l_stage = Eigen::MatrixXd::Zero(n, 2);
                    l_stage(m, o1) = sigma;
                    try_output(ap, v, l_stage);
                }
    }
    return best;
}

// Dual form: eigenvectors v_k = (A0 - t_k)^{-1} C0' h_k of A0 - C0' K with
// K = H V^{-1}; the directions h_k are chosen to make V well conditioned,
// ties going to the smaller gain.
Eigen::MatrixXd place_robust(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& c0, double delta,
                             const std::vector<double>& targets) {
    const int n = static_cast<int>(a0.rows());
    const Eigen::VectorXd a = a0.diagonal();
    const Eigen::MatrixXd bt = c0.transpose();
    constexpr int kGrid = 180;
    constexpr double kPi = 3.14159265358979323846;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    struct Cost {
        double cond = kInf;
        double norm = kInf;
        bool better_than(const Cost& o) const {
            if (cond < o.cond * (1.0 - 1e-9)) return true;
            return cond <= o.cond * (1.0 + 1e-9) && norm < o.norm * (1.0 - 1e-12);
        }
    };

    auto build = [&](const std::vector<double>& th, Eigen::MatrixXd* l_out) {
        Eigen::MatrixXd v(n, n), h(2, n);
        for (int k = 0; k < n; ++k) {
            const Eigen::Vector2d dir(std::cos(th[k]), std::sin(th[k]));
            Eigen::VectorXd col = ((bt * dir).array() / (a.array() - targets[k])).matrix();
            const double nv = col.norm();
            if (!(nv > 0.0)) return Cost{};
            v.col(k) = col / nv;
            h.col(k) = dir / nv;
        }
        const double cond = condition_number(v);
        if (!std::isfinite(cond) || cond > 1e12) return Cost{};
        const Eigen::MatrixXd l = (h * v.inverse()).transpose();
        if (!l.allFinite()) return Cost{};
        if (l_out) *l_out = l;
        return Cost{cond, l.norm()};
    };

    Eigen::MatrixXd best;
    Cost best_cost;
    const double golden = 0.6180339887498949;
    for (int start = 0; start < 8; ++start) {
        std::vector<double> th(n);
        for (int k = 0; k < n; ++k) th[k] = std::fmod((start + 1) * golden * (k + 1), 1.0) * kPi;
        Cost cur = build(th, nullptr);
        for (int sweep = 0; sweep < 50; ++sweep) {
            const Cost before = cur;
            for (int k = 0; k < n; ++k) {
                double best_t = th[k];
                auto probe = [&](double t) {
                    th[k] = t;
                    const Cost c = build(th, nullptr);
                    if (c.better_than(cur)) {
                        cur = c;
                        best_t = t;
                    }
                };
                for (int g = 0; g < kGrid; ++g) probe(g * kPi / kGrid);
                // Local refinement around the coarse optimum.
                const double centre = best_t;
                for (int g = -20; g <= 20; ++g) probe(centre + g * kPi / (20.0 * kGrid));
                th[k] = best_t;
            }
            if (!cur.better_than(before)) break;
        }
        Eigen::MatrixXd l;
        const Cost c = build(th, &l);
        if (!std::isfinite(c.cond)) continue;
        if (!(spectral_abscissa(a0 - l * c0) < -delta)) continue;
        if (c.better_than(best_cost)) {
            best_cost = c;
            best = l;
        }
    }
    return best;
}

}  // namespace

Eigen::MatrixXd place_observer_gain(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& c0, double delta,
                                    double spread, PlacementMethod method) {
    const int n = static_cast<int>(a0.rows());
    if (a0.cols() != n || c0.cols() != n || c0.rows() != 2) throw SynthesisError("placement: dimension mismatch");
    if (!(a0 - Eigen::MatrixXd(a0.diagonal().asDiagonal())).isZero(0.0))
        throw SynthesisError("placement: A0 must be diagonal");
    if (!(spread > 0.0)) throw SynthesisError("placement: spread must be positive");
    if (kalman_rank(a0, c0) != n) throw SynthesisError("placement failure: (A0, C0) is not observable");

    std::vector<double> targets(n);
    for (int k = 0; k < n; ++k) targets[k] = -delta - spread * (k + 1);

    Eigen::MatrixXd l = method == PlacementMethod::robust ? place_robust(a0, c0, delta, targets)
                                                           : place_two_stage(a0, c0, delta, targets);
    if (l.size() == 0) throw SynthesisError("placement failure: no candidate met the abscissa requirement");
    return l;
}

ClosedLoop assemble_f(const Eigen::MatrixXd& k, const Eigen::MatrixXd& a0, const Eigen::MatrixXd& a1,
                      const Eigen::MatrixXd& l, const Eigen::MatrixXd& c0, const Eigen::MatrixXd& c1_tilde) {
    const Eigen::Index n0 = a0.rows(), r = a1.rows();
    if (k.rows() != n0 || l.rows() != n0 || l.cols() != 2 || c0.cols() != n0 || c1_tilde.cols() != r ||
        c1_tilde.rows() != 2)
        throw SynthesisError("assemble_f: dimension mismatch");
    const Eigen::Index n = 2 * n0 + r;
    ClosedLoop cl;
    cl.f = Eigen::MatrixXd::Zero(n, n);
    cl.f.block(0, 0, n0, n0) = k;
    cl.f.block(0, n0, n0, n0) = l * c0;
    cl.f.block(0, 2 * n0, n0, r) = l * c1_tilde;
    cl.f.block(n0, n0, n0, n0) = a0 - l * c0;
    cl.f.block(n0, 2 * n0, n0, r) = -l * c1_tilde;
    cl.f.block(2 * n0, 2 * n0, r, r) = a1;
    cl.g = Eigen::MatrixXd::Zero(n, 2);
    cl.g.block(0, 0, n0, 2) = l;
    cl.g.block(n0, 0, n0, 2) = -l;
    return cl;
}

SynthesisArtifacts with_modes(const SynthesisArtifacts& src, const EigenBasis& basis, int n) {
    if (n < src.n0 + 1) throw SynthesisError("N must be at least N0 + 1");
    if (n > basis.size()) throw SynthesisError("basis holds fewer than N modes");
    SynthesisArtifacts art = src;
    const int n0 = art.n0;
    art.n = n;
    art.lambdas = basis.lambdas(n);
    art.a1 = diag_of(art.lambdas, n0, n, -1.0);
    art.c1.resize(2, n - n0);
    art.c1_tilde.resize(2, n - n0);
    for (int i = n0; i < n; ++i) {
        art.c1(0, i - n0) = basis.phi(i, art.xi1);
        art.c1(1, i - n0) = basis.phi(i, art.xi2);
        art.c1_tilde.col(i - n0) = art.c1.col(i - n0) / art.lambdas[i];
    }
    const ClosedLoop cl = assemble_f(art.k, art.a0, art.a1, art.l, art.c0, art.c1_tilde);
    art.f = cl.f;
    art.g = cl.g;
    const Eigen::MatrixXd gx = basis.trace_gram(n0, n);
    art.h = -gx.rightCols(n - n0).transpose() * art.control_map();
    art.f_abscissa = spectral_abscissa(art.f);
    if (!(art.f_abscissa < -art.delta))
        throw SynthesisError("closed-loop matrix F has abscissa " + std::to_string(art.f_abscissa) +
                             ", not below -delta");
    return art;
}

SynthesisArtifacts synthesize(const EigenBasis& basis, const Point& xi1, const Point& xi2, int n,
                              const SynthesisOptions& opts) {
    const PlantConfig& plant = basis.plant();
    plant.validate();
    const UnstableInfo info = count_unstable(basis, plant.delta, plant.allow_general_pattern);
    if (info.n0 == 0) throw SynthesisError("no mode has lambda <= delta; the plant needs no feedback");
    if (n < info.n0 + 1) throw SynthesisError("N must be at least N0 + 1");
    if (n > basis.size()) throw SynthesisError("basis holds fewer than N modes");

    SynthesisArtifacts art;
    art.d = plant.d;
    art.n0 = info.n0;
    art.pattern = info.pattern;
    art.delta = plant.delta;
    art.spread = opts.spread.value_or(0.5 * plant.delta);
    art.xi1 = xi1;
    art.xi2 = xi2;
    const int n0 = art.n0;
    const std::vector<double> all = basis.lambdas(basis.size());
    const std::vector<double> unstable = head(all, n0);

    art.eta = select_eta(unstable);
    art.b = gram_matrix(basis, n0);
    const GammaLadder lad = select_gamma_ladder(all, n0, art.b, art.eta, plant.delta, opts.c_ratio, opts.gamma_base,
                                                opts.cond_limit, opts.max_doublings);
    art.gammas = lad.gammas;
    art.gamma_base = lad.gamma_base;
    art.lambda_diag = lad.lambda_diag;
    art.bk = lad.bk;
    art.a = lad.a;
    art.k = lad.k;
    art.ladder_abscissa = lad.abscissa;
    art.xi = Eigen::MatrixXd::Zero(n0, n0);
    if (n0 >= 2) art.xi(1, 1) = art.eta;

    art.a0 = diag_of(all, 0, n0, -1.0);
    art.c0 = validate_sensors(xi1, xi2, basis, n0);
    art.l = place_observer_gain(art.a0, art.c0, plant.delta, art.spread, opts.placement);
    art.observer_abscissa = spectral_abscissa(art.a0 - art.l * art.c0);
    return with_modes(art, basis, n);
}

double control_trace(const SynthesisArtifacts& art, const EigenBasis& basis, const Eigen::VectorXd& u,
                     const Point& s) {
    if (u.size() != art.n0) throw SynthesisError("control_trace: U has the wrong size");
    if (!basis.plant().on_control_face(s)) throw DomainError("control_trace: point is not on the control face");
    const Eigen::VectorXd v = art.control_map() * u;
    double out = 0.0;
    for (int l = 0; l < art.n0; ++l) out += v(l) * basis.trace(l, s);
    return out;
}

}  // namespace parstab

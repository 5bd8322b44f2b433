#include "parstab/simulation.hpp"

#include "parstab/errors.hpp"
#include "parstab/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace parstab {

Simulator::Simulator(const EigenBasis& basis, const SynthesisArtifacts& art, int n_sim, bool open_loop)
    : basis_(basis), art_(art), n_sim_(n_sim), open_loop_(open_loop) {
    const int n0 = art.n0, n = art.n;
    if (n_sim < n) throw SimulationError("N_sim must be at least N");
    if (n_sim > basis.size()) throw SimulationError("basis holds fewer than N_sim modes");

    lam_.resize(n_sim);
    for (int i = 0; i < n_sim; ++i) lam_(i) = basis.lambda(i);
    gram_ = basis.trace_gram(n0, n_sim);
    vmap_ = art.control_map();

    // Per-k lifted projections as linear maps of U.
    for (int k = 0; k < n0; ++k) {
        const double g = art.gammas[k];
        const LiftedProjectionTable tab = make_projection_table(g, art.eta, basis.lambdas(n_sim), n0);
        Eigen::MatrixXd q(n_sim, n0);
        q.topRows(n0) = -art.bk[k] * art.a;  // closed form of the lifted projections
        const Eigen::MatrixXd uk = art.lambda_diag[k].asDiagonal() * art.a;  // u_k = (uk U) . trace
        for (int i = n0; i < n_sim; ++i) {
            if (!tab.valid[i]) throw AdmissibilityError("gamma + lambda_n = 0 at index " + std::to_string(i + 1), i + 1);
            q.row(i) = tab.p[i] * (gram_.col(i).transpose() * uk);
        }
        qk_.push_back(q);
    }
    qsum_ = Eigen::MatrixXd::Zero(n_sim, n0);
    for (const auto& q : qk_) qsum_ += q;

    gz_ = Eigen::MatrixXd::Zero(n_sim, n0);
    for (int i = 0; i < n_sim; ++i) {
        for (int k = 0; k < n0; ++k) gz_.row(i) += (lam_(i) + art.gammas[k]) * qk_[k].row(i);
        if (i < n0) gz_.row(i) -= (2.0 * lam_(i) + (i == 1 ? art.eta : 0.0)) * qsum_.row(i);
    }

    cs_.resize(2, n_sim);
    for (int i = 0; i < n_sim; ++i) {
        cs_(0, i) = basis.phi(i, art.xi1);
        cs_(1, i) = basis.phi(i, art.xi2);
    }
    obs_u_ = -art.a0 + art.k;

    nu_ = basis.plant().nu_value();
    h1_floor_ = std::max(1.0, nu_ + lam_.minCoeff() + 1.0);

    face_rule_ = make_boundary_rule(basis.plant(), basis.face_wavenumber(std::max(n0, 1)));
    for (int l = 0; l < n0; ++l) face_traces_.push_back(basis.trace_samples(l, face_rule_));
    (void)n;
}

double Simulator::default_step() const { return std::min(0.5 / lam_(n_sim_ - 1), 1e-2); }

SimState Simulator::init_state(const Eigen::VectorXd& z0) const {
    if (!z0.allFinite()) throw SimulationError("initial coefficients must be finite");
    SimState s;
    s.z = Eigen::VectorXd::Zero(n_sim_);
    const Eigen::Index m = std::min<Eigen::Index>(z0.size(), n_sim_);
    s.z.head(m) = z0.head(m);
    s.zhat = Eigen::VectorXd::Zero(art_.n);
    return s;
}

Eigen::VectorXd Simulator::lifted_sum(const Eigen::VectorXd& u) const { return qsum_ * u; }
Eigen::VectorXd Simulator::modal_input(const Eigen::VectorXd& u) const { return gz_ * u; }
Eigen::VectorXd Simulator::modal_input_direct(const Eigen::VectorXd& u) const {
    return -(gram_.transpose() * (vmap_ * u));
}

Eigen::VectorXd Simulator::w(const SimState& s) const {
    if (open_loop_) return s.z;
    return s.z - qsum_ * s.zhat.head(art_.n0);
}

Eigen::Vector2d Simulator::output(const SimState& s) const { return cs_ * s.z; }

void Simulator::rhs(const SimState& s, Eigen::VectorXd& dz, Eigen::VectorXd& dzh) const {
    const int n0 = art_.n0, n = art_.n;
    if (open_loop_) {
        dz = Eigen::VectorXd::Zero(n_sim_);
        dzh = Eigen::VectorXd::Zero(n);
        return;
    }
    const Eigen::VectorXd u = s.zhat.head(n0);
    dz = gz_ * u;
    const Eigen::VectorXd q = qsum_ * u;
    const Eigen::VectorXd what = s.zhat - q.head(n);
    const Eigen::Vector2d innov = cs_.leftCols(n) * what + cs_ * q - cs_ * s.z;
    dzh.resize(n);
    dzh.head(n0) = obs_u_ * u - art_.l * innov;
    dzh.tail(n - n0) = art_.h * u;
}

Eigen::MatrixXd Simulator::generator() const {
    const int n = art_.n;
    const int m = n_sim_ + n;
    Eigen::MatrixXd g(m, m);
    Eigen::VectorXd dz, dzh;
    for (int j = 0; j < m; ++j) {
        SimState e;
        e.z = Eigen::VectorXd::Zero(n_sim_);
        e.zhat = Eigen::VectorXd::Zero(n);
        if (j < n_sim_) e.z(j) = 1.0;
        else e.zhat(j - n_sim_) = 1.0;
        rhs(e, dz, dzh);
        dz -= (lam_.array() * e.z.array()).matrix();
        dzh -= (lam_.head(n).array() * e.zhat.array()).matrix();
        g.col(j).head(n_sim_) = dz;
        g.col(j).tail(n) = dzh;
    }
    return g;
}

SimState Simulator::lawson(const SimState& s, double h) const {
    const int n = art_.n;
    const Eigen::ArrayXd e_half = (-0.5 * h * lam_.array()).exp();
    const Eigen::ArrayXd e_full = (-h * lam_.array()).exp();
    Eigen::VectorXd k1z, k1h, k2z, k2h;
    rhs(s, k1z, k1h);
    SimState mid;
    mid.t = s.t + 0.5 * h;
    mid.z = (e_half * (s.z + 0.5 * h * k1z).array()).matrix();
    mid.zhat = (e_half.head(n) * (s.zhat + 0.5 * h * k1h).array()).matrix();
    rhs(mid, k2z, k2h);
    SimState out;
    out.t = s.t + h;
    out.z = (e_full * s.z.array() + h * e_half * k2z.array()).matrix();
    out.zhat = (e_full.head(n) * s.zhat.array() + h * e_half.head(n) * k2h.array()).matrix();
    return out;
}

SimState Simulator::step(const SimState& s, double h) const {
    if (!(h > 0.0)) throw SimulationError("step size must be positive");
    for (int halvings = 0; halvings <= 20; ++halvings) {
        const int sub = 1 << halvings;
        const double hs = h / sub;
        SimState cur = s;
        bool ok = true;
        for (int i = 0; i < sub && ok; ++i) {
            cur = lawson(cur, hs);
            ok = cur.z.allFinite() && cur.zhat.allFinite();
        }
        if (ok) {
            cur.t = s.t + h;
            return cur;
        }
    }
    throw SimulationError("state became non-finite at t = " + std::to_string(s.t) + " after 20 step halvings");
}

StepRecord Simulator::record(const SimState& s) const {
    const int n0 = art_.n0, n = art_.n;
    StepRecord r;
    r.t = s.t;
    r.l2_proxy = s.z.norm();
    const Eigen::VectorXd wv = w(s);
    double h1 = 0.0;
    for (int i = 0; i < n_sim_; ++i) h1 += std::max(lam_(i) + nu_, h1_floor_) * wv(i) * wv(i);
    r.h1_proxy = std::sqrt(h1);
    const Eigen::Vector2d y = output(s);
    r.y1 = y(0);
    r.y2 = y(1);
    const Eigen::VectorXd u = open_loop_ ? Eigen::VectorXd::Zero(n0) : Eigen::VectorXd(s.zhat.head(n0));
    const Eigen::VectorXd v = vmap_ * u;
    r.u_l2 = std::sqrt(std::max(0.0, v.dot(art_.b * v)));
    r.err_finite = (s.z.head(n0) - s.zhat.head(n0)).norm();
    r.err_residual =
        (lam_.segment(n0, n - n0).array() * (s.z.segment(n0, n - n0) - s.zhat.tail(n - n0)).array()).matrix().norm();
    r.zhat_abs = s.zhat.cwiseAbs().sum();
    r.objective = r.h1_proxy + r.zhat_abs;
    return r;
}

Eigen::VectorXd Simulator::finite_state(const SimState& s) const {
    const int n0 = art_.n0, n = art_.n;
    Eigen::VectorXd x(n0 + n);
    x.head(n0) = s.zhat.head(n0);
    x.segment(n0, n0) = s.z.head(n0) - s.zhat.head(n0);
    x.tail(n - n0) =
        (lam_.segment(n0, n - n0).array() * (s.z.segment(n0, n - n0) - s.zhat.tail(n - n0)).array()).matrix();
    return x;
}

double Simulator::projection_residual(const Eigen::VectorXd& u) const {
    const int n0 = art_.n0;
    double diff = 0.0, scale = 0.0;
    for (int k = 0; k < n0; ++k) {
        const LiftedProjectionTable tab = make_projection_table(art_.gammas[k], art_.eta, basis_.lambdas(n0), n0);
        const Eigen::VectorXd coef = art_.lambda_diag[k].asDiagonal() * (art_.a * u);
        std::vector<double> uk(face_rule_.size(), 0.0);
        for (std::size_t m = 0; m < uk.size(); ++m)
            for (int l = 0; l < n0; ++l) uk[m] += coef(l) * face_traces_[l][m];
        const Eigen::VectorXd ref = -art_.bk[k] * art_.a * u;
        for (int i = 0; i < n0; ++i) {
            const double q = lifted_projection(tab, boundary_inner(face_rule_, uk, face_traces_[i]), i);
            diff = std::max(diff, std::abs(q - ref(i)));
            scale = std::max(scale, std::abs(ref(i)));
        }
    }
    return scale > 0.0 ? diff / scale : diff;
}

SimulationRun Simulator::run(const Eigen::VectorXd& z0, double t_end, double h, double t_skip,
                             int projection_check_every) const {
    if (!(t_end > 0.0)) throw SimulationError("T must be positive");
    if (!(h > 0.0)) throw SimulationError("h must be positive");
    SimulationRun run;
    run.h = h;
    run.n_sim = n_sim_;
    run.n = art_.n;
    run.t_skip = t_skip;
    const long steps = std::lround(std::ceil(t_end / h - 1e-9));
    SimState s = init_state(z0);
    run.records.reserve(steps + 1);
    run.records.push_back(record(s));
    for (long i = 1; i <= steps; ++i) {
        SimState next = step(s, h);
        next.t = i * h;
        s = std::move(next);
        run.records.push_back(record(s));
        if (!open_loop_ && projection_check_every > 0 && i % projection_check_every == 0) {
            const Eigen::VectorXd u = s.zhat.head(art_.n0);
            if (u.norm() > 0.0) run.projection_check_max = std::max(run.projection_check_max, projection_residual(u));
        }
    }
    std::vector<double> t, v;
    for (const auto& r : run.records) {
        t.push_back(r.t);
        v.push_back(r.objective);
    }
    run.decay_rate = estimate_decay_rate(t, v, t_skip);
    return run;
}

double estimate_decay_rate(const std::vector<double>& t, const std::vector<double>& series, double t_skip) {
    if (t.size() != series.size()) throw SimulationError("estimate_decay_rate: length mismatch");
    double st = 0, sy = 0, stt = 0, sty = 0;
    long m = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_skip) continue;
        const double y = std::log(std::max(series[i], 1e-300));
        st += t[i];
        sy += y;
        stt += t[i] * t[i];
        sty += t[i] * y;
        ++m;
    }
    if (m < 10) throw SimulationError("estimate_decay_rate: fewer than 10 samples after t_skip");
    const double den = m * stt - st * st;
    if (den == 0.0) throw SimulationError("estimate_decay_rate: degenerate time grid");
    return (m * sty - st * sy) / den;
}

Eigen::VectorXd project_function(const SeparableBasis& basis, const std::function<double(const Point&)>& f,
                                 int count) {
    const PlantConfig& plant = basis.plant();
    const int d = plant.d;
    if (count > basis.size()) throw SimulationError("project_function: not enough modes");
    std::array<int, 3> kmax{1, 1, 1};
    for (int n = 0; n < count; ++n)
        for (int i = 0; i < d; ++i) kmax[i] = std::max(kmax[i], basis.pair(n).index[i]);

    std::array<Rule1D, 3> rules;
    // sines[i](k, a) = sin(k pi x_a / L_i), row k = 0 unused.
    std::array<Eigen::MatrixXd, 3> sines;
    for (int i = 0; i < d; ++i) {
        rules[i] = composite_gauss(0.0, plant.lengths[i], panels_for_wavenumber(kmax[i]));
        sines[i].resize(kmax[i] + 1, rules[i].size());
        for (int k = 0; k <= kmax[i]; ++k)
            for (std::size_t a = 0; a < rules[i].size(); ++a)
                sines[i](k, a) = std::sin(k * std::numbers::pi * rules[i].nodes[a] / plant.lengths[i]);
    }
    // f mu phi = f exp(b.x/2) norm prod sin.
    auto weight = [&](const Point& x, double w) {
        double e = 0.0;
        for (int i = 0; i < d; ++i) e += 0.5 * plant.b[i] * x[i];
        return f(x) * std::exp(e) * w;
    };

    Eigen::VectorXd out(count);
    const double norm = basis.pair(0).norm;
    if (d == 1) {
        Eigen::VectorXd fw(rules[0].size());
        for (std::size_t a = 0; a < rules[0].size(); ++a) fw(a) = weight({rules[0].nodes[a], 0, 0}, rules[0].weights[a]);
        const Eigen::VectorXd c = sines[0] * fw;
        for (int n = 0; n < count; ++n) out(n) = norm * c(basis.pair(n).index[0]);
    } else if (d == 2) {
        Eigen::MatrixXd fw(rules[0].size(), rules[1].size());
        for (std::size_t a = 0; a < rules[0].size(); ++a)
            for (std::size_t b = 0; b < rules[1].size(); ++b)
                fw(a, b) = weight({rules[0].nodes[a], rules[1].nodes[b], 0},
                                  rules[0].weights[a] * rules[1].weights[b]);
        const Eigen::MatrixXd c = sines[0] * fw * sines[1].transpose();
        for (int n = 0; n < count; ++n) out(n) = norm * c(basis.pair(n).index[0], basis.pair(n).index[1]);
    } else {
        std::vector<Eigen::MatrixXd> slices(kmax[2] + 1, Eigen::MatrixXd::Zero(kmax[0] + 1, kmax[1] + 1));
        Eigen::MatrixXd fw(rules[0].size(), rules[1].size());
        for (std::size_t cz = 0; cz < rules[2].size(); ++cz) {
            for (std::size_t a = 0; a < rules[0].size(); ++a)
                for (std::size_t b = 0; b < rules[1].size(); ++b)
                    fw(a, b) = weight({rules[0].nodes[a], rules[1].nodes[b], rules[2].nodes[cz]},
                                      rules[0].weights[a] * rules[1].weights[b] * rules[2].weights[cz]);
            const Eigen::MatrixXd c = sines[0] * fw * sines[1].transpose();
            for (int k = 1; k <= kmax[2]; ++k) slices[k] += sines[2](k, cz) * c;
        }
        for (int n = 0; n < count; ++n) {
            const auto& ix = basis.pair(n).index;
            out(n) = norm * slices[ix[2]](ix[0], ix[1]);
        }
    }
    return out;
}

Eigen::VectorXd coefficients_from_modes(const EigenBasis& basis, const std::vector<std::array<int, 3>>& modes,
                                        const std::vector<double>& coeffs, int count) {
    if (modes.size() != coeffs.size()) throw SimulationError("z0: modes and coefficients differ in length");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(count);
    const int d = basis.plant().d;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        int found = -1;
        for (int n = 0; n < count && found < 0; ++n) {
            bool eq = true;
            for (int i = 0; i < d; ++i) eq = eq && basis.pair(n).index[i] == modes[m][i];
            if (eq) found = n;
        }
        if (found < 0) throw SimulationError("z0: mode index not among the simulated modes");
        z(found) += coeffs[m];
    }
    return z;
}

}  // namespace parstab

#include "parstab/report.hpp"

#include "parstab/errors.hpp"

#include <charconv>
#include <cmath>

namespace parstab {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) throw Error("matrix must be an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) throw Error("ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json synthesis_report(const SynthesisArtifacts& art) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["N0"] = art.n0;
    j["N"] = art.n;
    j["delta"] = art.delta;
    j["pattern"] = art.pattern;
    j["eigenvalues"] = art.lambdas;
    j["eta"] = art.eta;
    j["gamma"] = art.gammas;
    j["gamma_base"] = art.gamma_base;
    j["spread"] = art.spread;
    j["B"] = matrix_to_json(art.b);
    json bk = json::array();
    for (const auto& m : art.bk) bk.push_back(matrix_to_json(m));
    j["Bk"] = bk;
    j["A"] = matrix_to_json(art.a);
    j["K"] = matrix_to_json(art.k);
    j["L"] = matrix_to_json(art.l);
    j["C0"] = matrix_to_json(art.c0);
    json x1 = json::array(), x2 = json::array();
    for (int i = 0; i < art.d; ++i) {
        x1.push_back(art.xi1[i]);
        x2.push_back(art.xi2[i]);
    }
    j["sensors"] = {{"xi1", x1}, {"xi2", x2}};
    j["ladder_abscissa"] = art.ladder_abscissa;
    j["observer_abscissa"] = art.observer_abscissa;
    j["F_abscissa"] = art.f_abscissa;
    return j;
}

json certificate_report(const Certificate& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["N"] = c.n;
    j["nu"] = c.nu;
    j["delta"] = c.delta;
    j["epsilon"] = c.epsilon;
    j["eta_cert"] = c.eta_cert;
    j["c1"] = c.c1;
    j["S1"] = c.s1;
    j["S2"] = c.s2;
    j["Sphi"] = c.sphi;
    j["theta1_max"] = c.theta1_max;
    j["psi_bound"] = c.psi_bound;
    j["P_norm"] = c.p_norm;
    j["P_min_eig"] = c.p_min_eig;
    j["lyapunov_residual"] = c.lyapunov_residual;
    j["status"] = c.status;
    json rounds = json::array();
    for (const auto& r : c.rounds) {
        rounds.push_back({{"N", r.n},
                          {"N_tail", r.n_tail},
                          {"tail_converged", r.tail_converged},
                          {"S1", r.s1},
                          {"S2", r.s2},
                          {"Sphi", r.sphi},
                          {"eta_cert", r.eta_cert},
                          {"theta1_max", r.theta1_max},
                          {"psi_bound", r.psi_bound},
                          {"psi_slope", r.psi_slope},
                          {"P_norm", r.p_norm},
                          {"lyapunov_residual", r.lyapunov_residual},
                          {"blocked", r.blocked}});
    }
    j["rounds"] = rounds;
    j["warnings"] = c.warnings;
    return j;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_simulation_csv(std::ostream& os, const SimulationRun& run) {
    os << "t,l2_proxy,h1_proxy,y1,y2,u_l2_gamma1,err_finite,err_residual,zhat_abs,objective\n";
    for (const auto& r : run.records) {
        const double v[] = {r.t, r.l2_proxy, r.h1_proxy, r.y1, r.y2, r.u_l2, r.err_finite, r.err_residual,
                            r.zhat_abs, r.objective};
        for (std::size_t i = 0; i < std::size(v); ++i) os << (i ? "," : "") << format_double(v[i]);
        os << '\n';
    }
}

}  // namespace parstab

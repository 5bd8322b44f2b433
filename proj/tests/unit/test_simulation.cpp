#include "parstab/errors.hpp"
#include "parstab/report.hpp"
#include "parstab/simulation.hpp"
#include "parstab/spectral_basis.hpp"
#include "parstab/synthesis.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace parstab;

namespace {

constexpr double kPi = std::numbers::pi;

const Point kXi1{0.5, 1.0, 0};
const Point kXi2{1.0, 0.5, 0};

struct Example {
    SeparableBasis basis{PlantConfig::example(), 240};
    SynthesisArtifacts art;
    Example() {
        SynthesisOptions o;
        o.spread = 1.0;
        art = synthesize(basis, kXi1, kXi2, 30, o);
    }
};

const Example& example() {
    static const Example e;
    return e;
}

Eigen::VectorXd mixed_modes(const EigenBasis& basis, int count) {
    return coefficients_from_modes(basis, {{1, 1, 0}, {1, 2, 0}, {2, 1, 0}, {2, 2, 0}, {1, 3, 0}},
                                   {1, 1, 1, 1, 1}, count);
}

}  // namespace

TEST_CASE("initial state and outputs") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 120);
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(3);
    z0(0) = 1.0;
    const SimState s = sim.init_state(z0);
    CHECK(s.z.size() == 120);
    CHECK(s.zhat.size() == 30);
    CHECK(s.zhat.isZero());
    const Eigen::Vector2d y = sim.output(s);
    CHECK(y(0) == doctest::Approx(ex.basis.phi(0, kXi1)).epsilon(1e-14));
    CHECK(y(1) == doctest::Approx(ex.basis.phi(0, kXi2)).epsilon(1e-14));

    // longer vectors are truncated
    const SimState t = sim.init_state(Eigen::VectorXd::Ones(500));
    CHECK(t.z.size() == 120);
    Eigen::VectorXd bad = z0;
    bad(1) = NAN;
    CHECK_THROWS_AS(sim.init_state(bad), SimulationError);
    CHECK_THROWS_AS(Simulator(ex.basis, ex.art, 20), SimulationError);
    CHECK_THROWS_AS(Simulator(ex.basis, ex.art, 241), SimulationError);
}

TEST_CASE("zero initial state stays at rest") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 60);
    const SimulationRun run = sim.run(Eigen::VectorXd::Zero(60), 0.5, 0.01, 0.0);
    CHECK(run.records.size() == 51u);
    for (const auto& r : run.records) {
        CHECK(r.l2_proxy == 0.0);
        CHECK(r.h1_proxy == 0.0);
        CHECK(r.u_l2 == 0.0);
        CHECK(r.zhat_abs == 0.0);
    }
    CHECK(std::abs(run.decay_rate) < 1e-9);
}

TEST_CASE("open loop is the exact diagonal flow") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 240, true);
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    Eigen::VectorXd z0(240);
    for (auto& v : z0) v = g(rng);
    SimState s = sim.init_state(z0);
    const double h = 0.01;
    for (int i = 0; i < 10; ++i) s = sim.step(s, h);
    for (int n = 0; n < 240; ++n) {
        const double expected = z0(n) * std::exp(-ex.basis.lambda(n) * 10 * h);
        CHECK(std::abs(s.z(n) - expected) <= 1e-14 * std::max(1.0, std::abs(expected)));
    }
    CHECK(s.zhat.isZero());
}

TEST_CASE("open-loop growth matches the leading eigenvalue") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 240, true);
    const SimulationRun run = sim.run(mixed_modes(ex.basis, 240), 10.0, 0.01, 2.0);
    CHECK(run.decay_rate == doctest::Approx(3.5).epsilon(0.05));
}

TEST_CASE("one step is linear") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 120);
    SimState s = sim.init_state(mixed_modes(ex.basis, 120));
    for (int i = 0; i < 20; ++i) s = sim.step(s, 0.01);
    SimState a = s;
    a.z *= -3.25;
    a.zhat *= -3.25;
    const SimState one = sim.step(s, 0.01);
    const SimState scaled = sim.step(a, 0.01);
    CHECK((scaled.z + 3.25 * one.z).norm() <= 1e-10 * one.z.norm());
    CHECK((scaled.zhat + 3.25 * one.zhat).norm() <= 1e-10 * one.zhat.norm());
    CHECK_THROWS_AS(sim.step(s, 0.0), SimulationError);
}

TEST_CASE("lifted terms against boundary quadrature") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 240);
    std::mt19937 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd u(3);
        for (auto& v : u) v = g(rng);
        CHECK(sim.projection_residual(u) < 1e-8);
        const Eigen::VectorXd a = sim.modal_input(u);
        const Eigen::VectorXd b = sim.modal_input_direct(u);
        REQUIRE(a.size() == 240);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-8 * b.cwiseAbs().maxCoeff());
        CHECK(sim.lifted_sum(u).size() == 240);
    }
}

TEST_CASE("truncated model matches the matrix exponential") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 30);
    SimState s = sim.init_state(mixed_modes(ex.basis, 30));
    // run the loop for a while so the observer is not at rest
    for (int i = 0; i < 100; ++i) s = sim.step(s, 0.005);
    const Eigen::VectorXd x0 = sim.finite_state(s);
    const double h = 2.5e-4;
    double t = 0.0;
    for (double target : {0.5, 1.0}) {
        while (t < target - 1e-12) {
            s = sim.step(s, h);
            t += h;
        }
        const Eigen::VectorXd ref = oracle::expm_apply(ex.art.f, target, x0);
        CHECK((sim.finite_state(s) - ref).norm() <= 1e-5 * ref.norm());
    }
}

TEST_CASE("observer error tail is autonomous") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 120);
    SimState s = sim.init_state(mixed_modes(ex.basis, 120) + 0.1 * Eigen::VectorXd::Ones(120));
    const Eigen::VectorXd e0 = sim.finite_state(s).tail(27);
    const double h = 0.001;
    for (int i = 0; i < 200; ++i) s = sim.step(s, h);
    const Eigen::VectorXd e1 = sim.finite_state(s).tail(27);
    Eigen::VectorXd ref(27);
    for (int i = 0; i < 27; ++i) ref(i) = e0(i) * std::exp(-ex.basis.lambda(3 + i) * 0.2);
    CHECK((e1 - ref).norm() <= 1e-6 * ref.norm());
}

TEST_CASE("closed loop decays") {
    const auto& ex = example();
    const Simulator sim(ex.basis, ex.art, 240);
    const SimulationRun run = sim.run(mixed_modes(ex.basis, 240), 20.0, 0.005, 2.0, 100);
    REQUIRE(run.records.size() == 4001u);
    CHECK(run.decay_rate <= -0.5);
    CHECK(run.records.back().objective < 1e-3 * run.records.front().objective);
    CHECK(run.projection_check_max > 0.0);
    CHECK(run.projection_check_max < 1e-8);
    for (std::size_t i = 1; i < run.records.size(); ++i) CHECK(run.records[i].t > run.records[i - 1].t);

    std::ostringstream os;
    write_simulation_csv(os, run);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,l2_proxy,h1_proxy,y1,y2,u_l2_gamma1,err_finite,err_residual,zhat_abs,objective");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 4001);
}

TEST_CASE("decay rate fit") {
    std::vector<double> t, a, b, c;
    for (int i = 0; i <= 2000; ++i) {
        const double s = 0.01 * i;
        t.push_back(s);
        a.push_back(std::exp(-2.0 * s));
        b.push_back(std::exp(-2.0 * s) * (2.0 + std::cos(s)));
        c.push_back(4.0);
    }
    CHECK(estimate_decay_rate(t, a, 2.0) == doctest::Approx(-2.0).epsilon(1e-6));
    const double rb = estimate_decay_rate(t, b, 2.0);
    CHECK(rb >= -2.2);
    CHECK(rb <= -1.8);
    CHECK(estimate_decay_rate(t, c, 2.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(estimate_decay_rate(t, a, 19.95), SimulationError);
    CHECK_THROWS_AS(estimate_decay_rate({0, 1}, {1}, 0.0), SimulationError);
}

TEST_CASE("projection of a smooth bump") {
    const SeparableBasis basis(PlantConfig::example(), 10);
    const auto bump = [](const Point& x) {
        const double r2 = (x[0] - 1.2) * (x[0] - 1.2) + (x[1] - 1.9) * (x[1] - 1.9);
        return std::exp(-r2 / 0.18);
    };
    const Eigen::VectorXd p = project_function(basis, bump, 10);
    REQUIRE(p.size() == 10);
    for (int n = 0; n < 10; ++n) {
        const auto idx = basis.pair(n).index;
        // psi = exp(b.x/2) (2/pi) sin(i x1) sin(j x2) with b = (3, 3)
        const double ref = oracle::simpson(
            [&](double x1) {
                return oracle::simpson(
                    [&](double x2) {
                        return bump({x1, x2, 0}) * std::exp(1.5 * (x1 + x2)) * (2.0 / kPi) * std::sin(idx[0] * x1) *
                               std::sin(idx[1] * x2);
                    },
                    0.0, kPi, 600);
            },
            0.0, kPi, 600);
        CHECK(std::abs(p(n) - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("coefficients from mode indices") {
    const SeparableBasis basis(PlantConfig::example(), 20);
    const Eigen::VectorXd z = coefficients_from_modes(basis, {{2, 1, 0}, {1, 1, 0}}, {2.0, -1.0}, 20);
    REQUIRE(z.size() == 20);
    CHECK(z(0) == -1.0);
    CHECK(z.cwiseAbs().sum() == 3.0);
    CHECK_THROWS_AS(coefficients_from_modes(basis, {{9, 9, 0}}, {1.0}, 20), SimulationError);
    CHECK_THROWS_AS(coefficients_from_modes(basis, {{1, 1, 0}}, {1.0, 2.0}, 20), SimulationError);
}

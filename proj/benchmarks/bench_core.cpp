#include "parstab/certification.hpp"
#include "parstab/lifting.hpp"
#include "parstab/simulation.hpp"
#include "parstab/spectral_basis.hpp"
#include "parstab/synthesis.hpp"

#include <benchmark/benchmark.h>

using namespace parstab;

namespace {

const Point kXi1{0.5, 1.0, 0};
const Point kXi2{1.0, 0.5, 0};

SynthesisOptions options() {
    SynthesisOptions o;
    o.spread = 1.0;
    return o;
}

void BM_Enumerate(benchmark::State& state) {
    const PlantConfig plant = PlantConfig::example();
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_eigenpairs(plant, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Enumerate)->Arg(200)->Arg(1600)->Arg(12800);

void BM_TraceGram(benchmark::State& state) {
    const SeparableBasis basis(PlantConfig::example(), static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(LiftingData(basis, 3, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_TraceGram)->Arg(400)->Arg(3200);

void BM_Synthesize(benchmark::State& state) {
    const SeparableBasis basis(PlantConfig::example(), 240);
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(basis, kXi1, kXi2, static_cast<int>(state.range(0)), options()));
}
BENCHMARK(BM_Synthesize)->Arg(30)->Arg(120);

void BM_Lyapunov(benchmark::State& state) {
    const SeparableBasis basis(PlantConfig::example(), 240);
    const SynthesisArtifacts art = synthesize(basis, kXi1, kXi2, static_cast<int>(state.range(0)), options());
    for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov(art.f, art.delta));
}
BENCHMARK(BM_Lyapunov)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_SimulationStep(benchmark::State& state) {
    const int n_sim = static_cast<int>(state.range(0));
    const SeparableBasis basis(PlantConfig::example(), n_sim);
    const SynthesisArtifacts art = synthesize(basis, kXi1, kXi2, 60, options());
    const Simulator sim(basis, art, n_sim);
    SimState s = sim.init_state(Eigen::VectorXd::Ones(n_sim));
    const double h = sim.default_step();
    for (auto _ : state) {
        s = sim.step(s, h);
        benchmark::DoNotOptimize(s.z.data());
    }
}
BENCHMARK(BM_SimulationStep)->Arg(240)->Arg(960);

}  // namespace

BENCHMARK_MAIN();

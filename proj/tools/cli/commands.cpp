#include "commands.hpp"

#include "parstab/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace parstab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void log_line(const CommandOptions& opts, const std::string& line) {
    if (opts.log)
        opts.log(line);
    else
        std::cerr << line << '\n';
}

void progress(const CommandOptions& opts, const std::string& line) {
    if (opts.verbose) log_line(opts, line);
}

fs::path prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("/output", "cannot create output directory " + dir.string());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("/output", "cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("/output", "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// bump(x) = a exp(1 - 1/(1 - r^2)) for r = |x - c| / radius < 1.
double bump_value(const BumpSpec& b, int d, const Point& x) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += (x[i] - b.center[i]) * (x[i] - b.center[i]);
    r2 /= b.radius * b.radius;
    if (r2 >= 1.0) return 0.0;
    return b.amplitude * std::exp(1.0 - 1.0 / (1.0 - r2));
}

std::string exit_name(int code) {
    switch (code) {
    case kExitOk: return "ok";
    case kExitConfig: return "config error";
    case kExitSynthesis: return "synthesis failure";
    case kExitCertification: return "certification failure";
    case kExitSimulation: return "simulation divergence";
    }
    return "error";
}

// Runs `body`, turning stage and config errors into exit codes on the log.
int guarded(const CommandOptions& opts, const std::function<int()>& body) {
    try {
        return body();
    } catch (const StageError& e) {
        log_line(opts, std::string("error: ") + e.what());
        return e.code();
    } catch (const ConfigError& e) {
        log_line(opts, std::string("config error: ") + e.what());
        return kExitConfig;
    }
}

}  // namespace

int simulated_modes(const RunConfig& cfg) { return cfg.simulation.n_sim.value_or(std::max(4 * cfg.n, 200)); }

int basis_size(const RunConfig& cfg, bool with_certification) {
    int need = std::max(simulated_modes(cfg), cfg.n);
    if (with_certification) {
        int top = cfg.certification.n_start;
        while (2 * top <= cfg.certification.n_max) top *= 2;
        need = std::max(need, cfg.certification.tail.cap_factor * top);
        need = std::max(need, cfg.certification.tail.min_tail);
    }
    return need;
}

void prepare_basis(const RunConfig& cfg, RunResult& result, bool with_certification) {
    const int need = basis_size(cfg, with_certification);
    if (result.basis && result.basis->size() >= need) return;
    try {
        result.basis = std::make_unique<SeparableBasis>(cfg.plant, need);
    } catch (const Error& e) {
        throw StageError(kExitSynthesis, std::string("synthesis failure: ") + e.what());
    }
}

SynthesisArtifacts run_synthesis(const RunConfig& cfg, RunResult& result) {
    prepare_basis(cfg, result, false);
    try {
        result.artifacts = synthesize(*result.basis, cfg.xi1, cfg.xi2, cfg.n, cfg.synthesis);
    } catch (const Error& e) {
        throw StageError(kExitSynthesis, std::string("synthesis failure: ") + e.what());
    }
    return *result.artifacts;
}

Certificate run_certification(const RunConfig& cfg, RunResult& result) {
    prepare_basis(cfg, result, true);
    if (!result.artifacts) run_synthesis(cfg, result);
    const SynthesisArtifacts& art = *result.artifacts;
    const SeparableBasis& basis = *result.basis;
    try {
        result.certificate =
            certify(basis, [&](int n) { return with_modes(art, basis, n); }, cfg.certification.n_start,
                    cfg.certification.n_max, cfg.certification.tail);
    } catch (const std::invalid_argument& e) {
        throw StageError(kExitCertification, std::string("certification failure: ") + e.what());
    } catch (const Error& e) {
        throw StageError(kExitCertification, std::string("certification failure: ") + e.what());
    }
    return *result.certificate;
}

Eigen::VectorXd initial_coefficients(const RunConfig& cfg, const SeparableBasis& basis, int n_sim) {
    const InitialCondition& z0 = cfg.simulation.z0;
    if (z0.bump) {
        const BumpSpec b = *z0.bump;
        const int d = cfg.plant.d;
        return project_function(basis, [&](const Point& x) { return bump_value(b, d, x); }, n_sim);
    }
    if (!z0.modes.empty()) {
        try {
            return coefficients_from_modes(basis, z0.modes, z0.coefficients, n_sim);
        } catch (const Error& e) {
            throw ConfigError("/simulation/z0/modes", e.what());
        }
    }
    if (static_cast<int>(z0.coefficients.size()) > n_sim)
        throw ConfigError("/simulation/z0/coefficients", "more coefficients than simulated modes");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n_sim);
    for (std::size_t i = 0; i < z0.coefficients.size(); ++i) z(static_cast<Eigen::Index>(i)) = z0.coefficients[i];
    return z;
}

SimulationRun run_simulation(const RunConfig& cfg, RunResult& result) {
    prepare_basis(cfg, result, false);
    if (!result.artifacts) run_synthesis(cfg, result);
    const int n_sim = simulated_modes(cfg);
    const Eigen::VectorXd z0 = initial_coefficients(cfg, *result.basis, n_sim);
    try {
        Simulator sim(*result.basis, *result.artifacts, n_sim);
        const double h = cfg.simulation.h.value_or(sim.default_step());
        result.simulation =
            sim.run(z0, cfg.simulation.t_end, h, cfg.simulation.t_skip, cfg.simulation.projection_check_every);
    } catch (const Error& e) {
        throw StageError(kExitSimulation, std::string("simulation divergence: ") + e.what());
    }
    const auto& recs = result.simulation->records;
    if (recs.empty() || !std::isfinite(recs.back().objective) || !std::isfinite(result.simulation->decay_rate))
        throw StageError(kExitSimulation, "simulation divergence: non-finite diagnostics");
    return *result.simulation;
}

json summary_report(const RunConfig& cfg, const SimulationRun& run, const Certificate* cert) {
    const StepRecord& first = run.records.front();
    const StepRecord& last = run.records.back();
    json j;
    j["schema_version"] = kSchemaVersion;
    j["decay_rate"] = run.decay_rate;
    j["delta"] = cfg.plant.delta;
    j["target_rate"] = -cfg.plant.delta;
    j["meets_target"] = run.decay_rate <= -cfg.plant.delta;
    j["N"] = run.n;
    j["N_sim"] = run.n_sim;
    j["h"] = run.h;
    j["T"] = cfg.simulation.t_end;
    j["t_skip"] = run.t_skip;
    j["steps"] = run.records.size() - 1;
    j["halvings"] = run.halvings;
    j["initial_objective"] = first.objective;
    j["terminal_objective"] = last.objective;
    j["terminal_ratio"] = first.objective > 0.0 ? last.objective / first.objective : 0.0;
    j["terminal_h1_proxy"] = last.h1_proxy;
    j["projection_check_max"] = run.projection_check_max;
    j["certification"] = cert ? json(cert->status) : json("not run");
    return j;
}

int cmd_synthesize(const RunConfig& cfg, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const fs::path dir = prepare_dir(opts.out_dir);
        RunResult result;
        progress(opts, "synthesizing with N = " + std::to_string(cfg.n));
        const SynthesisArtifacts art = run_synthesis(cfg, result);
        write_json(dir / cfg.output.synthesis, synthesis_report(art));
        progress(opts, "F abscissa " + format_double(art.f_abscissa));
        return int{kExitOk};
    });
}

int cmd_certify(const RunConfig& cfg, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const fs::path dir = prepare_dir(opts.out_dir);
        RunResult result;
        progress(opts, "certifying N in [" + std::to_string(cfg.certification.n_start) + ", " +
                           std::to_string(cfg.certification.n_max) + "]");
        const Certificate cert = run_certification(cfg, result);
        write_json(dir / cfg.output.certificate, certificate_report(cert));
        for (const auto& w : cert.warnings) progress(opts, "warning: " + w);
        if (!cert.certified) {
            log_line(opts, "error: certification failure: " + cert.status);
            return int{kExitCertification};
        }
        return int{kExitOk};
    });
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const fs::path dir = prepare_dir(opts.out_dir);
        RunResult result;
        const SimulationRun run = run_simulation(cfg, result);
        std::ofstream csv(dir / cfg.output.simulation, std::ios::binary | std::ios::trunc);
        if (!csv) throw ConfigError("/output/simulation", "cannot write " + (dir / cfg.output.simulation).string());
        write_simulation_csv(csv, run);
        write_json(dir / cfg.output.summary, summary_report(cfg, run, nullptr));
        progress(opts, "decay rate " + format_double(run.decay_rate));
        return int{kExitOk};
    });
}

// A failed certificate is recorded in the reports but does not stop the pipeline.
int cmd_pipeline(const RunConfig& cfg, const CommandOptions& opts) {
    return guarded(opts, [&] {
        const fs::path dir = prepare_dir(opts.out_dir);
        RunResult result;
        prepare_basis(cfg, result, cfg.certification.enabled);
        progress(opts, "synthesizing with N = " + std::to_string(cfg.n));
        const SynthesisArtifacts art = run_synthesis(cfg, result);
        write_json(dir / cfg.output.synthesis, synthesis_report(art));

        const Certificate* cert = nullptr;
        if (cfg.certification.enabled) {
            progress(opts, "certifying");
            run_certification(cfg, result);
            cert = &*result.certificate;
            write_json(dir / cfg.output.certificate, certificate_report(*cert));
            if (!cert->certified) log_line(opts, "warning: " + cert->status);
        }

        progress(opts, "simulating with N_sim = " + std::to_string(simulated_modes(cfg)));
        const SimulationRun run = run_simulation(cfg, result);
        std::ofstream csv(dir / cfg.output.simulation, std::ios::binary | std::ios::trunc);
        if (!csv) throw ConfigError("/output/simulation", "cannot write " + (dir / cfg.output.simulation).string());
        write_simulation_csv(csv, run);
        write_json(dir / cfg.output.summary, summary_report(cfg, run, cert));
        progress(opts, "decay rate " + format_double(run.decay_rate) + " (target " +
                           format_double(-cfg.plant.delta) + ")");
        return int{kExitOk};
    });
}

unsigned sweep_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PARSTAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
    }
    return n;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts) {
    return guarded(opts, [&] {
        if (cfg.sweep.empty()) throw ConfigError("/sweep", "sweep command needs a non-empty sweep array");
        const std::vector<RunConfig> runs = expand_sweep(cfg);
        const fs::path dir = prepare_dir(opts.out_dir);

        std::mutex log_mutex;
        CommandOptions inner = opts;
        inner.log = [&](const std::string& line) {
            std::lock_guard<std::mutex> lock(log_mutex);
            log_line(opts, line);
        };

        std::vector<int> codes(runs.size(), 0);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < runs.size(); i = next++) {
                char name[32];
                std::snprintf(name, sizeof name, "run_%03zu", i);
                CommandOptions o = inner;
                o.out_dir = dir / name;
                codes[i] = cmd_pipeline(runs[i], o);
            }
        };
        const unsigned threads = std::min<unsigned>(sweep_threads(), static_cast<unsigned>(runs.size()));
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        json index = json::array();
        int worst = kExitOk;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", i);
            index.push_back({{"run", name}, {"patch", cfg.sweep[i]}, {"exit_code", codes[i]}, {"result", exit_name(codes[i])}});
            worst = std::max(worst, codes[i]);
        }
        write_json(dir / "sweep.json", {{"schema_version", kSchemaVersion}, {"runs", index}});
        return worst;
    });
}

int run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts) {
    if (name == "synthesize") return cmd_synthesize(cfg, opts);
    if (name == "certify") return cmd_certify(cfg, opts);
    if (name == "simulate") return cmd_simulate(cfg, opts);
    if (name == "pipeline") return cmd_pipeline(cfg, opts);
    if (name == "sweep") return cmd_sweep(cfg, opts);
    throw ConfigError("/", "unknown command " + name);
}

}  // namespace parstab::cli

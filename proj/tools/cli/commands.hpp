#pragma once

#include "config.hpp"

#include "parstab/certification.hpp"
#include "parstab/simulation.hpp"
#include "parstab/spectral_basis.hpp"
#include "parstab/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace parstab::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitSynthesis = 2,
    kExitCertification = 3,
    kExitSimulation = 4,
};

struct CommandOptions {
    std::filesystem::path out_dir = ".";
    bool verbose = false;
    // Receives progress lines when verbose and error lines always; defaults to stderr.
    std::function<void(const std::string&)> log;
};

// Error carrying the exit code of the stage that failed.
class StageError : public Error {
public:
    StageError(int code, const std::string& what) : Error(what), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

// Everything one config produces; stages fill their part.
struct RunResult {
    std::unique_ptr<SeparableBasis> basis;
    std::optional<SynthesisArtifacts> artifacts;
    std::optional<Certificate> certificate;
    std::optional<SimulationRun> simulation;
};

int simulated_modes(const RunConfig& cfg);
// Modes the basis must hold for every stage the config enables.
int basis_size(const RunConfig& cfg, bool with_certification);

// Builds or grows result.basis to basis_size().
void prepare_basis(const RunConfig& cfg, RunResult& result, bool with_certification);

// Stage functions throw StageError.
SynthesisArtifacts run_synthesis(const RunConfig& cfg, RunResult& result);
Certificate run_certification(const RunConfig& cfg, RunResult& result);
SimulationRun run_simulation(const RunConfig& cfg, RunResult& result);

Eigen::VectorXd initial_coefficients(const RunConfig& cfg, const SeparableBasis& basis, int n_sim);

nlohmann::json summary_report(const RunConfig& cfg, const SimulationRun& run, const Certificate* cert);

int cmd_synthesize(const RunConfig& cfg, const CommandOptions& opts);
int cmd_certify(const RunConfig& cfg, const CommandOptions& opts);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opts);
int cmd_pipeline(const RunConfig& cfg, const CommandOptions& opts);
// Runs each sweep entry as a pipeline in out_dir/run_NNN; the largest exit code wins.
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts);

int run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts);

// PARSTAB_THREADS if set and positive, else the hardware concurrency.
unsigned sweep_threads();

}  // namespace parstab::cli

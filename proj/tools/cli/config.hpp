#pragma once

#include "parstab/certification.hpp"
#include "parstab/errors.hpp"
#include "parstab/plant.hpp"
#include "parstab/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace parstab::cli {

struct BumpSpec {
    Point center{};
    double radius = 0.0;
    double amplitude = 1.0;
};

// Exactly one of the three forms is set.
struct InitialCondition {
    std::vector<std::array<int, 3>> modes;  // with `coefficients`
    std::vector<double> coefficients;       // alone: modal vector in eigenvalue order
    std::optional<BumpSpec> bump;
};

struct SimulationConfig {
    double t_end = 20.0;
    std::optional<double> h;
    std::optional<int> n_sim;  // default max(4 N, 200)
    double t_skip = 2.0;
    int projection_check_every = 100;
    InitialCondition z0;
};

struct CertificationConfig {
    bool enabled = true;
    int n_start = 30;
    int n_max = 200;
    TailPolicy tail;
};

struct OutputConfig {
    std::string synthesis = "synthesis.json";
    std::string certificate = "certificate.json";
    std::string simulation = "simulation.csv";
    std::string summary = "summary.json";
};

struct RunConfig {
    PlantConfig plant;
    Point xi1{}, xi2{};
    int n = 60;
    SynthesisOptions synthesis;
    CertificationConfig certification;
    SimulationConfig simulation;
    OutputConfig output;
    std::vector<nlohmann::json> sweep;  // merge patches applied to `source`
    nlohmann::json source;              // the document without "sweep"
};

// Errors are parstab::ConfigError carrying the JSON pointer of the offending key.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);
RunConfig config_from_json(const nlohmann::json& doc);

// Rejects duplicate object keys, which nlohmann would otherwise overwrite.
nlohmann::json parse_strict(const std::string& text);

// One config per sweep entry, each the base document with the patch merged in.
std::vector<RunConfig> expand_sweep(const RunConfig& base);

}  // namespace parstab::cli

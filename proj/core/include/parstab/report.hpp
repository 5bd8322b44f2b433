#pragma once

#include "parstab/certification.hpp"
#include "parstab/simulation.hpp"
#include "parstab/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>

namespace parstab {

inline constexpr int kSchemaVersion = 1;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);  // array of rows
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json synthesis_report(const SynthesisArtifacts& art);
nlohmann::json certificate_report(const Certificate& cert);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

void write_simulation_csv(std::ostream& os, const SimulationRun& run);

}  // namespace parstab

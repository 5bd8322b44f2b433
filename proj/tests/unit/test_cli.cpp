#include "commands.hpp"
#include "config.hpp"

#include "parstab/errors.hpp"
#include "parstab/report.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace parstab;
using namespace parstab::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = PARSTAB_CONFIG_DIR;
const std::string kCli = PARSTAB_CLI_PATH;

json minimal() {
    return json::parse(R"({
        "plant": {"preset": "example"},
        "sensors": [[0.5, 1.0], [1.0, 0.5]],
        "simulation": {"z0": {"modes": [[1, 1]], "coefficients": [1.0]}}
    })");
}

std::string pointer_of(const json& doc) {
    try {
        config_from_json(doc);
    } catch (const ConfigError& e) {
        return e.pointer();
    }
    return "<accepted>";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("parstab_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Exit status of the CLI; stderr goes to dir/stderr.txt.
int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = "\"" + kCli + "\" " + args + " 2> \"" + (dir / "stderr.txt").string() + "\" > \"" +
                            (dir / "stdout.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const json& doc) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << doc.dump(2);
    return p;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
    const RunConfig cfg = config_from_json(minimal());
    CHECK(cfg.plant.d == 2);
    CHECK(cfg.plant.c == 10.0);
    CHECK(cfg.plant.delta == 0.5);
    CHECK(cfg.xi1[0] == 0.5);
    CHECK(cfg.xi2[1] == 0.5);
    CHECK(cfg.n == 60);
    CHECK(cfg.synthesis.placement == PlacementMethod::robust);
    CHECK(cfg.certification.enabled);
    CHECK(cfg.certification.n_start == 30);
    CHECK(cfg.certification.n_max == 200);
    CHECK(cfg.simulation.t_end == 20.0);
    CHECK_FALSE(cfg.simulation.h.has_value());
    CHECK(simulated_modes(cfg) == 240);
    CHECK(cfg.output.summary == "summary.json");
    CHECK(cfg.sweep.empty());
}

TEST_CASE("the example config file parses") {
    const RunConfig cfg = parse_config(kConfigDir / "example_plant.json");
    CHECK(cfg.n == 60);
    CHECK(cfg.synthesis.spread == 1.0);
    CHECK(cfg.simulation.z0.modes.size() == 5u);
    CHECK(cfg.plant.control_face.axis == 1);
    CHECK_THROWS_AS(parse_config(kConfigDir / "no_such_file.json"), ConfigError);
}

TEST_CASE("invalid configs name the offending key") {
    json doc = minimal();
    doc["sensors"][0] = {0.0, 1.0};
    CHECK(pointer_of(doc) == "/sensors/0");

    doc = minimal();
    doc["sensors"][1] = {1.0, 3.5};
    CHECK(pointer_of(doc) == "/sensors/1");

    doc = minimal();
    doc["synthesis"]["gamma_ladder_x"] = 3;
    CHECK(pointer_of(doc) == "/synthesis/gamma_ladder_x");

    doc = minimal();
    doc["plant"]["colour"] = "blue";
    CHECK(pointer_of(doc) == "/plant/colour");

    doc = minimal();
    doc["certification"] = {{"N_start", 60}, {"N_max", 30}};
    CHECK(pointer_of(doc).rfind("/certification", 0) == 0);

    doc = minimal();
    doc["simulation"]["z0"] = {{"bump", {{"center", {1.0, 1.0}}, {"radius", -1.0}}}};
    CHECK(pointer_of(doc) == "/simulation/z0/bump/radius");

    doc = minimal();
    doc["schema_version"] = 2;
    CHECK(pointer_of(doc) == "/schema_version");

    doc = minimal();
    doc["simulation"].erase("z0");
    CHECK(pointer_of(doc) == "/simulation/z0");
}

TEST_CASE("duplicate keys are rejected") {
    const std::string text = R"({"plant": {"preset": "example", "preset": "example"},
        "sensors": [[0.5, 1.0], [1.0, 0.5]],
        "simulation": {"z0": {"coefficients": [1.0]}}})";
    try {
        parse_config_text(text);
        FAIL("expected a duplicate-key error");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/plant/preset");
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("{\"plant\": "), ConfigError);
}

TEST_CASE("sweep entries patch the base document") {
    json doc = minimal();
    doc["sweep"] = json::array({{{"synthesis", {{"N", 30}}}}, {{"plant", {{"delta", 0.25}}}}});
    const RunConfig base = config_from_json(doc);
    REQUIRE(base.sweep.size() == 2u);
    CHECK_FALSE(base.source.contains("sweep"));
    const auto runs = expand_sweep(base);
    REQUIRE(runs.size() == 2u);
    CHECK(runs[0].n == 30);
    CHECK(runs[0].plant.delta == 0.5);
    CHECK(runs[1].n == 60);
    CHECK(runs[1].plant.delta == 0.25);

    doc["sweep"] = json::array({{{"synthesis", {{"N", 30}}}}, {{"synthesis", {{"bogus", 1}}}}});
    try {
        expand_sweep(config_from_json(doc));
        FAIL("expected a sweep error");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/sweep/1/synthesis/bogus");
    }
    doc["sweep"] = json::array({{{"sweep", json::array()}}});
    CHECK_THROWS_AS(expand_sweep(config_from_json(doc)), ConfigError);
}

TEST_CASE("pipeline on the example plant") {
    const fs::path dir = scratch("pipeline");
    const int code = run_cli("pipeline --config \"" + (kConfigDir / "example_plant.json").string() + "\" --out \"" +
                                 dir.string() + "\"",
                             dir);
    CHECK(code == 0);
    for (const char* f : {"synthesis.json", "certificate.json", "simulation.csv", "summary.json"})
        CHECK(fs::exists(dir / f));
    const json summary = json::parse(read_file(dir / "summary.json"));
    CHECK(summary["schema_version"] == 1);
    CHECK(summary["delta"] == 0.5);
    CHECK(summary["decay_rate"].get<double>() <= -0.5);

    // the report reproduces the in-process matrices bit for bit
    const RunConfig cfg = parse_config(kConfigDir / "example_plant.json");
    RunResult result;
    prepare_basis(cfg, result, false);
    const SynthesisArtifacts art = run_synthesis(cfg, result);
    const json rep = json::parse(read_file(dir / "synthesis.json"));
    CHECK(matrix_from_json(rep["A"]) == art.a);
    CHECK(matrix_from_json(rep["K"]) == art.k);
    CHECK(matrix_from_json(rep["L"]) == art.l);
}

TEST_CASE("pipeline output is deterministic") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const std::string cfg = "--config \"" + (kConfigDir / "example_plant.json").string() + "\"";
    REQUIRE(run_cli("pipeline " + cfg + " --out \"" + a.string() + "\"", a) == 0);
    REQUIRE(run_cli("pipeline " + cfg + " --out \"" + b.string() + "\"", b) == 0);
    for (const char* f : {"synthesis.json", "certificate.json", "simulation.csv", "summary.json"})
        CHECK(read_file(a / f) == read_file(b / f));
}

TEST_CASE("exit codes") {
    SUBCASE("sensor placement") {
        const fs::path dir = scratch("sensors");
        json doc = minimal();
        doc["sensors"] = {{1.0, 1.0}, {1.0, 1.0}};
        const int code = run_cli("synthesize --config \"" + write_config(dir, doc).string() + "\" --out \"" +
                                     dir.string() + "\"",
                                 dir);
        CHECK(code == kExitSynthesis);
        CHECK(read_file(dir / "stderr.txt").find("sensor-placement") != std::string::npos);
    }
    SUBCASE("certification needs a larger N") {
        const fs::path dir = scratch("cert");
        json doc = minimal();
        doc["synthesis"] = {{"N", 10}};
        doc["certification"] = {{"N_start", 10}, {"N_max", 10}};
        const int code = run_cli("certify --config \"" + write_config(dir, doc).string() + "\" --out \"" +
                                     dir.string() + "\"",
                                 dir);
        CHECK(code == kExitCertification);
        const json cert = json::parse(read_file(dir / "certificate.json"));
        CHECK(cert["status"].get<std::string>().rfind("failed", 0) == 0);
    }
    SUBCASE("bad config") {
        const fs::path dir = scratch("badcfg");
        json doc = minimal();
        doc["synthesis"] = {{"gamma_ladder_x", 1}};
        const int code = run_cli("pipeline --config \"" + write_config(dir, doc).string() + "\" --out \"" +
                                     dir.string() + "\"",
                                 dir);
        CHECK(code == kExitConfig);
        CHECK(read_file(dir / "stderr.txt").find("/synthesis/gamma_ladder_x") != std::string::npos);
    }
    SUBCASE("missing flag") {
        const fs::path dir = scratch("noflag");
        CHECK(run_cli("pipeline", dir) != 0);
    }
}

TEST_CASE("sweep runs every entry") {
    const fs::path dir = scratch("sweep");
    json doc = minimal();
    doc["certification"] = {{"enabled", false}};
    doc["simulation"]["T"] = 4.0;
    doc["sweep"] = json::array({{{"plant", {{"delta", 0.5}}}}, {{"plant", {{"delta", 0.25}}}}});
    const int code =
        run_cli("sweep --config \"" + write_config(dir, doc).string() + "\" --out \"" + dir.string() + "\"", dir);
    CHECK(code == 0);
    CHECK(fs::exists(dir / "run_000" / "summary.json"));
    CHECK(fs::exists(dir / "run_001" / "summary.json"));
    const json s = json::parse(read_file(dir / "sweep.json"));
    CHECK(s.contains("runs"));
}

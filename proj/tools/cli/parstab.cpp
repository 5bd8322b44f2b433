#include "commands.hpp"
#include "config.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Boundary feedback synthesis, certification and simulation for parabolic plants"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    long long seed = 0;
    bool verbose = false;

    const std::pair<const char*, const char*> commands[] = {
        {"synthesize", "Design the gains and write the synthesis report"},
        {"certify", "Run the truncation certificate"},
        {"simulate", "Simulate the closed loop and write the CSV and summary"},
        {"pipeline", "Synthesize, certify and simulate"},
        {"sweep", "Run the pipeline for every entry of the sweep array"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Reserved; runs are deterministic");
        sub->add_flag("--verbose", verbose, "Progress on standard error");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const parstab::cli::RunConfig cfg = parstab::cli::parse_config(config_path);
        parstab::cli::CommandOptions opts;
        opts.out_dir = out_dir;
        opts.verbose = verbose;
        return parstab::cli::run_command(command, cfg, opts);
    } catch (const parstab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return parstab::cli::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return parstab::cli::kExitConfig;
    }
}

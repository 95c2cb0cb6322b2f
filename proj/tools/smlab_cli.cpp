#include "smlab/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

int main(int argc, char** argv)
{
    CLI::App app{"smlab: spectral multiplier experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, op_name;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid_M;
    std::vector<std::string> profiles;

    for (const auto& name : smlab::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "JSON config (schema smlab/1)")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory for report.json and CSV tables");
        sub->add_option("--seed", seed, "base seed");
        sub->add_option("--grid-M", grid_M, "number of grid nodes");
        sub->add_option("--operator", op_name, "operator, e.g. free_laplacian, bessel:2, inv_square:3:2");
        sub->add_option("--profile", profiles, "symbol name(s), e.g. heat, bump:1:0.5");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string experiment = app.get_subcommands().front()->get_name();

    smlab::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw smlab::ConfigError(std::string("cannot parse config: ") + e.what());
            }
            if (!j.contains("experiment"))
                j["experiment"] = experiment;
            cfg = smlab::ExperimentConfig::from_json(j);
            if (cfg.experiment != experiment)
                throw smlab::ConfigError("config is for '" + cfg.experiment + "', not '" + experiment + "'");
        } else {
            cfg.experiment = experiment;
        }
        if (!out_dir.empty())
            cfg.out_dir = out_dir;
        if (seed)
            cfg.seed = *seed;
        if (grid_M)
            cfg.grid.M = *grid_M;
        if (!profiles.empty())
            cfg.profiles = profiles;
        if (!op_name.empty()) {
            try {
                cfg.op = smlab::OperatorSpec::parse(op_name);
            } catch (const std::invalid_argument& e) {
                throw smlab::ConfigError(e.what());
            }
            cfg.op_given = true;
        }
    } catch (const smlab::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    }

    try {
        std::string message;
        const int code = smlab::run_to_exit_code(cfg, &message);
        (code == 1 ? std::cerr : std::cout) << message << '\n';
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

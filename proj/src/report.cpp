#include "smlab/experiments.hpp"

#include <filesystem>
#include <fstream>

namespace smlab {

nlohmann::json ExperimentReport::to_json() const
{
    nlohmann::json tabs = nlohmann::json::array();
    for (const auto& [stem, body] : tables)
        tabs.push_back(stem + ".csv");
    return {{"format", "smlab/1"},
            {"experiment", experiment},
            {"config", config},
            {"results", results},
            {"tables", tabs},
            {"verdict", pass ? "pass" : "fail"},
            {"runtime_seconds", runtime_seconds}};
}

void write_report(const ExperimentReport& report, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "report.json", std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write report.json in " + dir);
        out << report.to_json().dump(2) << '\n';
    }
    for (const auto& [stem, body] : report.tables) {
        std::ofstream out(fs::path(dir) / (stem + ".csv"), std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + stem + ".csv in " + dir);
        out << body;
    }
}

int run_to_exit_code(const ExperimentConfig& config, std::string* message)
{
    try {
        config.validate();
        const ExperimentReport rep = run(config);
        write_report(rep, config.out_dir);
        if (message)
            *message = config.experiment + ": " + (rep.pass ? "pass" : "fail") + " (report in " + config.out_dir + ")";
        return rep.pass ? 0 : 2;
    } catch (const ConfigError& e) {
        if (message)
            *message = std::string("configuration error: ") + e.what();
        return 1;
    }
}

}  // namespace smlab

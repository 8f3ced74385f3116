// spinxfer <scenario> --config <file> --out <file> [--workers K] [--override key=value ...]
// Exit codes: 0 ok, 2 invalid input, 3 numeric failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinxfer/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Squeezing-transfer scenarios with deterministic CSV output"};
    std::string scenario, config_path, out_path;
    std::vector<std::string> overrides;
    int workers = 0;

    std::string names;
    for (const auto& n : spinxfer::scenario_names()) names += (names.empty() ? "" : " | ") + n;
    app.add_option("scenario", scenario, names)->required();
    app.add_option("--config", config_path, "YAML configuration file")->required();
    app.add_option("--out", out_path, "output CSV file (falls back to the config's output key)");
    app.add_option("--workers", workers, "concurrent sweep points")->check(CLI::Range(1, 1024));
    app.add_option("--override", overrides, "dotted.key=value, applied before validation")->take_all();
    app.add_flag_callback(
        "--list-parameters",
        [] {
            for (const auto& [k, v] : spinxfer::parameter_catalog())
                std::cout << k << (v.empty() ? "  (optional)" : "  default " + v) << '\n';
            throw CLI::Success();
        },
        "print accepted parameter paths and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::ifstream in(config_path);
        if (!in) throw spinxfer::ValidationError("cannot read config file " + config_path);
        std::stringstream raw;
        raw << in.rdbuf();

        spinxfer::ScenarioConfig cfg = spinxfer::validate_config(raw.str(), scenario, overrides);
        if (workers > 0) cfg.workers = workers;
        if (out_path.empty()) out_path = cfg.output.value_or("");
        if (out_path.empty()) throw spinxfer::ValidationError("no output file: pass --out or set output in the config");

        const spinxfer::ResultTable table = spinxfer::run_scenario(cfg);
        for (const auto& w : nlohmann::json::parse(table.provenance).at("warnings"))
            std::cerr << "warning: " << w.get<std::string>() << '\n';

        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw spinxfer::ValidationError("cannot write output file " + out_path);
        spinxfer::write_csv(table, out);
        if (!out.flush()) throw spinxfer::ValidationError("failed writing " + out_path);
    } catch (const spinxfer::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const spinxfer::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

#pragma once

// Named scenarios, strict YAML configuration, parameter sweeps and CSV output.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "spinxfer/errors.hpp"

namespace spinxfer {

// Validation error carrying the offending config line (0 when the value came
// from an override or a default).
struct ConfigError : ValidationError {
    ConfigError(const std::string& msg, int line = 0);
    int line;
};

const std::vector<std::string>& scenario_names();

struct SweepSpec {
    std::string parameter;
    std::string scale = "linear";  // linear | log
    double min = 0;
    double max = 0;
    int points = 1;

    std::vector<double> grid() const;
};

struct ScenarioConfig {
    std::string scenario;
    std::map<std::string, double> values;        // dotted parameter paths
    std::map<std::string, std::string> choices;  // transfer.model, inhomogeneity.distribution
    SweepSpec sweep;
    std::optional<std::string> output;
    int workers = 1;
    bool deterministic = true;

    double value(const std::string& path) const;
    bool has(const std::string& path) const { return values.count(path) != 0; }
};

// Parameter paths accepted in the config, with their defaults ("" when optional).
std::vector<std::pair<std::string, std::string>> parameter_catalog();

// Parses and validates YAML text. `scenario`, when non-empty, overrides the
// config's own scenario key. Overrides are "dotted.key=value" strings applied
// before validation.
ScenarioConfig validate_config(std::string_view raw, std::string_view scenario = "",
                               const std::vector<std::string>& overrides = {});

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::string> units;
    std::vector<std::vector<double>> rows;
    std::string provenance;  // JSON text

    std::size_t column(std::string_view name) const;
};

std::string canonical_config(const ScenarioConfig& cfg);
std::uint64_t config_hash(const ScenarioConfig& cfg);

ResultTable run_scenario(const ScenarioConfig& cfg);

// CSV with the provenance JSON as a '#'-prefixed header block; 12 significant digits.
void write_csv(const ResultTable& table, std::ostream& os);

std::string code_version();

}  // namespace spinxfer

#include "spinxfer/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "spinxfer/entangler.hpp"
#include "spinxfer/exchange.hpp"
#include "spinxfer/polarization.hpp"
#include "spinxfer/readout.hpp"
#include "spinxfer/transfer.hpp"

#ifndef SPINXFER_VERSION
#define SPINXFER_VERSION "unknown"
#endif

namespace spinxfer {

ConfigError::ConfigError(const std::string& msg, int line_)
    : ValidationError(line_ > 0 ? "config line " + std::to_string(line_) + ": " + msg : "config: " + msg),
      line(line_) {}

std::string code_version() { return SPINXFER_VERSION; }

namespace {

using Values = std::map<std::string, double>;
using Choices = std::map<std::string, std::string>;

enum class Rule { Any, Positive, NonNegative, NonZero, Count };

struct ParamSpec {
    std::string path;
    std::optional<double> fallback;
    Rule rule;
};

const std::vector<ParamSpec>& catalog() {
    static const std::vector<ParamSpec> specs = {
        {"transfer.gamma", 2e7, Rule::Positive},
        {"transfer.gamma_m", 5e6, Rule::Positive},
        {"transfer.gamma_0", 0.0, Rule::NonNegative},
        {"transfer.kappa_over_gamma", 100.0, Rule::Positive},
        {"transfer.Delta_over_gamma", -2000.0, Rule::NonZero},
        {"transfer.Delta_C", std::nullopt, Rule::Any},
        {"transfer.cooperativity", 500.0, Rule::NonNegative},
        {"transfer.g_B_over_g_A", std::nullopt, Rule::Any},
        {"transfer.n", 3.2e10, Rule::Positive},
        {"transfer.n_over_N", 1e-6, Rule::Positive},
        {"transfer.squeeze_factor", 0.5, Rule::Positive},
        {"transfer.pumping_ratio", 0.1, Rule::NonNegative},
        {"transfer.delta_tilde", 0.0, Rule::Any},
        {"transfer.delta_I", 0.0, Rule::Any},
        {"transfer.Delta_18", std::nullopt, Rule::Any},
        {"transfer.Delta_27", std::nullopt, Rule::Any},
        {"transfer.Delta_38", std::nullopt, Rule::Any},
        {"transfer.delta_12", 0.0, Rule::Any},
        {"transfer.delta_23", 0.0, Rule::Any},
        {"transfer.delta_56", 0.0, Rule::Any},
        {"transfer.delta_87", 0.0, Rule::Any},
        {"transfer.delta_las", 0.0, Rule::Any},
        {"spectrum.omega", 0.0, Rule::NonNegative},
        {"mismatch.detuning_ratio", 1.0, Rule::Any},
        {"inhomogeneity.ratio_max", 6e-4, Rule::NonNegative},
        {"inhomogeneity.ratio_step", 1e-4, Rule::Positive},
        {"inhomogeneity.samples", 21.0, Rule::Count},
        {"readout.time_gamma_F", 0.0, Rule::NonNegative},
        {"readout.T_gamma_F", 10.0, Rule::Positive},
        {"readout.squeeze_factor0", 0.5, Rule::Positive},
        {"readout.envelope_ratio", 1.0, Rule::Positive},
        {"entangle.r", std::log(2.0) / 2, Rule::NonNegative},
        {"toy.Gamma_1_over_gamma_f", 5e-5, Rule::NonNegative},
    };
    return specs;
}

const std::map<std::string, std::pair<std::string, std::set<std::string>>>& choice_catalog() {
    static const std::map<std::string, std::pair<std::string, std::set<std::string>>> c = {
        {"transfer.model", {"full", {"full", "reduced"}}},
        {"inhomogeneity.distribution", {"uniform", {"uniform", "gaussian-truncated"}}},
    };
    return c;
}

const ParamSpec* find_spec(const std::string& path) {
    for (const auto& s : catalog())
        if (s.path == path) return &s;
    return nullptr;
}

void check_rule(const ParamSpec& s, double v, int line) {
    if (!std::isfinite(v)) throw ConfigError(s.path + " must be finite", line);
    switch (s.rule) {
        case Rule::Positive:
            if (!(v > 0)) throw ConfigError(s.path + " must be > 0", line);
            break;
        case Rule::NonNegative:
            if (!(v >= 0)) throw ConfigError(s.path + " must be >= 0", line);
            break;
        case Rule::NonZero:
            if (v == 0) throw ConfigError(s.path + " must be non-zero", line);
            break;
        case Rule::Count:
            if (!(v >= 3) || v != std::floor(v)) throw ConfigError(s.path + " must be an integer >= 3", line);
            break;
        case Rule::Any:
            break;
    }
}

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

double as_number(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) throw ConfigError(what + " must be a number", line_of(n));
    try {
        return n.as<double>();
    } catch (const YAML::Exception&) {
        throw ConfigError(what + " must be a number, got '" + n.Scalar() + "'", line_of(n));
    }
}

std::string as_text(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) throw ConfigError(what + " must be a scalar", line_of(n));
    return n.Scalar();
}

SweepSpec default_sweep(const std::string& scenario) {
    if (scenario == "exchange-steady") return {"transfer.squeeze_factor", "linear", 0.1, 1.0, 10};
    if (scenario == "spectrum") return {"spectrum.omega", "log", 1e2, 1e9, 36};
    if (scenario == "transfer-sweep") return {"transfer.pumping_ratio", "log", 1e-2, 1e2, 50};
    if (scenario == "mismatch") return {"mismatch.detuning_ratio", "linear", -3.0, 3.0, 25};
    if (scenario == "inhomogeneity") return {"transfer.pumping_ratio", "log", 1e-2, 1e2, 50};
    if (scenario == "readout") return {"readout.time_gamma_F", "linear", 0.0, 3.0, 31};
    if (scenario == "entangle") return {"entangle.r", "linear", 0.0, 1.5, 16};
    return {"toy.Gamma_1_over_gamma_f", "log", 1e-6, 1e-1, 26};
}

// Applies "a.b.c=value" to the YAML tree, creating maps as needed.
void apply_override(YAML::Node& root, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not key=value");
    const std::string key = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string p; std::getline(ss, p, '.');) {
        if (p.empty()) throw ConfigError("override '" + text + "' has an empty key segment");
        parts.push_back(p);
    }
    // yaml-cpp node handles alias; walk with fresh handles
    std::function<void(YAML::Node, std::size_t)> set = [&](YAML::Node node, std::size_t k) {
        if (k + 1 == parts.size()) {
            node[parts[k]] = value;
            return;
        }
        YAML::Node child = node[parts[k]];
        if (child && !child.IsMap()) throw ConfigError("override '" + text + "': " + parts[k] + " is not a section");
        if (!child) node[parts[k]] = YAML::Node(YAML::NodeType::Map);
        set(node[parts[k]], k + 1);
    };
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    set(root, 0);
}

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"exchange-steady", "spectrum", "transfer-sweep", "mismatch",
                                                   "inhomogeneity",   "readout",  "entangle",       "polarization"};
    return names;
}

std::vector<std::pair<std::string, std::string>> parameter_catalog() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : catalog()) {
        char buf[32] = "";
        if (s.fallback) std::snprintf(buf, sizeof buf, "%.12g", *s.fallback);
        out.emplace_back(s.path, buf);
    }
    for (const auto& [k, v] : choice_catalog()) out.emplace_back(k, v.first);
    return out;
}

std::vector<double> SweepSpec::grid() const {
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        const double f = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
        if (scale == "log")
            g.push_back(std::exp(std::log(min) + f * (std::log(max) - std::log(min))));
        else
            g.push_back(min + f * (max - min));
    }
    if (points > 1) g.back() = max;
    std::sort(g.begin(), g.end());
    return g;
}

double ScenarioConfig::value(const std::string& path) const {
    auto it = values.find(path);
    if (it == values.end()) throw ValidationError("parameter " + path + " is not set");
    return it->second;
}

std::size_t ResultTable::column(std::string_view name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
        if (columns[k] == name) return k;
    throw ValidationError("no column named " + std::string(name));
}

ScenarioConfig validate_config(std::string_view raw, std::string_view scenario,
                               const std::vector<std::string>& overrides) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(raw));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
    }
    if (root && !root.IsNull() && !root.IsMap()) throw ConfigError("top level must be a mapping", line_of(root));
    for (const auto& o : overrides) apply_override(root, o);

    ScenarioConfig cfg;
    static const std::set<std::string> top = {"scenario", "workers", "output", "sweep", "transfer", "spectrum",
                                              "mismatch", "inhomogeneity", "readout", "entangle", "toy"};
    YAML::Node sweep_node;
    if (root && root.IsMap()) {
        for (const auto& kv : root) {
            const std::string key = kv.first.Scalar();
            const YAML::Node& val = kv.second;
            if (!top.count(key)) throw ConfigError("unknown key '" + key + "'", line_of(kv.first));
            if (key == "scenario") {
                cfg.scenario = as_text(val, key);
            } else if (key == "workers") {
                const double w = as_number(val, key);
                if (!(w >= 1) || w != std::floor(w) || w > 1024)
                    throw ConfigError("workers must be an integer in [1, 1024]", line_of(val));
                cfg.workers = static_cast<int>(w);
            } else if (key == "output") {
                cfg.output = as_text(val, key);
            } else if (key == "sweep") {
                if (!val.IsMap()) throw ConfigError("sweep must be a mapping", line_of(val));
                sweep_node = val;
            } else {
                if (val.IsNull()) continue;
                if (!val.IsMap()) throw ConfigError(key + " must be a mapping", line_of(val));
                for (const auto& p : val) {
                    const std::string path = key + "." + p.first.Scalar();
                    if (choice_catalog().count(path)) {
                        const std::string v = as_text(p.second, path);
                        if (!choice_catalog().at(path).second.count(v))
                            throw ConfigError("invalid value '" + v + "' for " + path, line_of(p.second));
                        cfg.choices[path] = v;
                        continue;
                    }
                    const ParamSpec* s = find_spec(path);
                    if (!s) throw ConfigError("unknown key '" + path + "'", line_of(p.first));
                    const double v = as_number(p.second, path);
                    check_rule(*s, v, line_of(p.second));
                    cfg.values[path] = v;
                }
            }
        }
    }

    if (!scenario.empty()) cfg.scenario = std::string(scenario);
    if (cfg.scenario.empty()) cfg.scenario = "transfer-sweep";
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), cfg.scenario) == names.end())
        throw ConfigError("unknown scenario '" + cfg.scenario + "'");

    for (const auto& s : catalog())
        if (s.fallback && !cfg.values.count(s.path)) cfg.values[s.path] = *s.fallback;
    for (const auto& [k, v] : choice_catalog())
        if (!cfg.choices.count(k)) cfg.choices[k] = v.first;

    cfg.sweep = default_sweep(cfg.scenario);
    if (sweep_node) {
        for (const auto& kv : sweep_node) {
            const std::string key = kv.first.Scalar();
            const YAML::Node& val = kv.second;
            if (key == "parameter") {
                cfg.sweep.parameter = as_text(val, "sweep.parameter");
                if (!find_spec(cfg.sweep.parameter))
                    throw ConfigError("sweep.parameter '" + cfg.sweep.parameter + "' is not a numeric parameter",
                                      line_of(val));
            } else if (key == "scale") {
                cfg.sweep.scale = as_text(val, "sweep.scale");
                if (cfg.sweep.scale != "linear" && cfg.sweep.scale != "log")
                    throw ConfigError("sweep.scale must be linear or log", line_of(val));
            } else if (key == "min") {
                cfg.sweep.min = as_number(val, "sweep.min");
            } else if (key == "max") {
                cfg.sweep.max = as_number(val, "sweep.max");
            } else if (key == "points") {
                const double p = as_number(val, "sweep.points");
                if (!(p >= 1) || p != std::floor(p) || p > 1e6)
                    throw ConfigError("sweep.points must be an integer >= 1", line_of(val));
                cfg.sweep.points = static_cast<int>(p);
            } else {
                throw ConfigError("unknown key 'sweep." + key + "'", line_of(kv.first));
            }
        }
    }
    const SweepSpec& sw = cfg.sweep;
    if (!std::isfinite(sw.min) || !std::isfinite(sw.max)) throw ConfigError("sweep bounds must be finite");
    if (sw.scale == "log" && !(sw.min > 0 && sw.max > 0)) throw ConfigError("log sweep bounds must be > 0");
    const ParamSpec* swept = find_spec(sw.parameter);
    for (double x : sw.grid()) check_rule(*swept, x, 0);
    if (cfg.value("inhomogeneity.ratio_max") / cfg.value("inhomogeneity.ratio_step") > 1000)
        throw ConfigError("inhomogeneity: more than 1000 field steps requested");
    return cfg;
}

std::string canonical_config(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["scenario"] = cfg.scenario;
    j["values"] = cfg.values;
    j["choices"] = cfg.choices;
    j["sweep"] = {{"parameter", cfg.sweep.parameter},
                  {"scale", cfg.sweep.scale},
                  {"min", cfg.sweep.min},
                  {"max", cfg.sweep.max},
                  {"points", cfg.sweep.points}};
    j["deterministic"] = true;
    return j.dump();
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_config(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

TransferParams make_transfer(const Values& v) {
    TransferParams p;
    p.gamma = v.at("transfer.gamma");
    p.gamma_m = v.at("transfer.gamma_m");
    p.gamma_0 = v.at("transfer.gamma_0");
    p.kappa = v.at("transfer.kappa_over_gamma") * p.gamma;
    p.Delta = v.at("transfer.Delta_over_gamma") * p.gamma;
    if (v.count("transfer.Delta_C")) p.Delta_C = v.at("transfer.Delta_C");
    p.n = v.at("transfer.n");
    p.N = p.n / v.at("transfer.n_over_N");
    p.r = -0.5 * std::log(v.at("transfer.squeeze_factor"));
    p.set_cooperativity(v.at("transfer.cooperativity"));
    if (v.count("transfer.g_B_over_g_A")) p.g_B = v.at("transfer.g_B_over_g_A") * p.g_A;
    for (auto [key, slot] : {std::pair{"transfer.Delta_18", &p.Delta_18}, std::pair{"transfer.Delta_27", &p.Delta_27},
                             std::pair{"transfer.Delta_38", &p.Delta_38}})
        if (v.count(key)) *slot = v.at(key);
    p.delta_12 = v.at("transfer.delta_12");
    p.delta_23 = v.at("transfer.delta_23");
    p.delta_56 = v.at("transfer.delta_56");
    p.delta_87 = v.at("transfer.delta_87");
    p.delta_las = v.at("transfer.delta_las");
    p.delta_I = v.at("transfer.delta_I");
    p.set_pumping(v.at("transfer.pumping_ratio") * p.gamma_m);
    p.set_delta_tilde(v.at("transfer.delta_tilde"));
    p.validate();
    return p;
}

LinearLangevinSystem build_transfer(const TransferParams& p, const Choices& c) {
    return c.at("transfer.model") == "reduced" ? build_reduced_system(p) : build_full_system(p);
}

ToyParams make_toy(const TransferParams& p, const Values& v) {
    ToyParams t;
    t.gamma = p.gamma;
    t.gamma_m = p.gamma_m;
    t.gamma_f = p.gamma_f();
    t.C = p.cooperativity();
    t.Gamma_p = pumping_parameter(p) / (1 + t.C);
    t.Gamma_1 = v.at("toy.Gamma_1_over_gamma_f") * t.gamma_f;
    t.r = p.r;
    t.kappa = p.kappa;
    t.Delta = p.Delta;
    t.n = 1;
    t.validate();
    return t;
}

struct Plan {
    std::vector<std::string> columns;
    std::vector<std::string> units;
    std::function<std::vector<double>(const Values&)> row;
};

Plan plan_for(const ScenarioConfig& cfg) {
    const Choices choices = cfg.choices;
    const std::string& s = cfg.scenario;
    Plan plan;

    if (s == "exchange-steady") {
        plan.columns = {"S_y_closed", "I_y_closed", "S_y_numeric", "I_y_numeric", "C_S", "C_I"};
        plan.units = {"1", "1", "1", "1", "1", "1"};
        plan.row = [](const Values& v) {
            const TransferParams p = make_transfer(v);
            const double gexc = p.gamma_exc();
            const auto [vs, vi] = exchange_steady_variances(p.n, p.N, p.r);
            const auto [cs, ci] = exchange_correlation_functions(p.n, p.N, p.r);
            const LinearLangevinSystem sys = exchange_pair_system(p.n, p.N, gexc);
            const double t = 200 / ((p.N + 3 * p.n) * gexc);
            const CovarianceMatrix c = evolve_covariance(sys, exchange_initial_covariance(p.n, p.N, p.r), t);
            return std::vector<double>{vs, vi, quadrature_variance(c, "S43.y", p.n / 4),
                                       quadrature_variance(c, "I09.y", p.N / 4), cs, ci};
        };
    } else if (s == "spectrum") {
        plan.columns = {"S_II_smooth_closed", "S_II_smooth_numeric", "S_SS_smooth_closed", "S_SS_smooth_numeric",
                        "S_II_delta_weight", "S_SS_delta_weight"};
        plan.units = {"1/(rad/s)", "1/(rad/s)", "1/(rad/s)", "1/(rad/s)", "1", "1"};
        plan.row = [](const Values& v) {
            const TransferParams p = make_transfer(v);
            const double w = v.at("spectrum.omega");
            const double gexc = p.gamma_exc();
            const ExchangeSpectra closed = exchange_spectra(p.n, p.N, p.r, gexc);
            const LinearLangevinSystem sys = exchange_pair_system(p.n, p.N, gexc);
            const CovarianceMatrix c0 = exchange_initial_covariance(p.n, p.N, p.r);
            const std::size_t iy = sys.index_of("I09.y"), sy = sys.index_of("S43.y");
            const SpectrumResult nII = noise_spectrum(sys, c0, iy, iy);
            const SpectrumResult nSS = noise_spectrum(sys, c0, sy, sy);
            return std::vector<double>{closed.S_II.smooth(w), nII.smooth(w), closed.S_SS.smooth(w), nSS.smooth(w),
                                       closed.S_II.delta_weight, closed.S_SS.delta_weight};
        };
    } else if (s == "transfer-sweep") {
        plan.columns = {"Gamma_over_gamma_m", "B_mG",     "I_y_numeric", "S_y_numeric",
                        "I_y_analytic",       "S_y_analytic", "eta_I"};
        plan.units = {"1", "mG", "1", "1", "1", "1", "1"};
        plan.row = [choices](const Values& v) {
            const TransferParams p = make_transfer(v);
            const double Gamma = pumping_parameter(p);
            const SpinVariances sv = steady_spin_variances(build_transfer(p, choices), p);
            const auto [ia, sa] = analytic_variances(Gamma, p.gamma_m, p.cooperativity(), p.r);
            const double B = Gamma > 0 ? resonance_field(p).B * 1e3 : 0.0;
            return std::vector<double>{Gamma / p.gamma_m, B, sv.I_y, sv.S_y, ia, sa,
                                       transfer_efficiency(sv.I_y, p.r)};
        };
    } else if (s == "mismatch") {
        plan.columns = {"I_best_closed_dI", "I_best_numeric_dI", "eta_dI",
                        "I_best_closed_dt", "I_best_numeric_dt", "eta_dt"};
        plan.units = {"1", "1", "1", "1", "1", "1"};
        plan.row = [choices](const Values& v) {
            const TransferParams base = make_transfer(v);
            const double x = v.at("mismatch.detuning_ratio");
            const double Gamma = pumping_parameter(base);
            std::vector<double> out;
            for (int branch = 0; branch < 2; ++branch) {
                TransferParams p = base;
                p.delta_I = 0;
                p.set_delta_tilde(0);
                if (branch == 0)
                    p.delta_I = x * adiabatic_rates(p).Gamma_F;
                else
                    p.set_delta_tilde(x * Gamma / 3);
                const double closed = best_variance_mismatch(p);
                const CovarianceMatrix c = steady_covariance(build_transfer(p, choices));
                const double numeric = best_quadrature_variance(c, "I09.x", "I09.y", p.N / 4).second;
                out.insert(out.end(), {closed, numeric, transfer_efficiency(numeric, p.r)});
            }
            return out;
        };
    } else if (s == "inhomogeneity") {
        const double step = cfg.value("inhomogeneity.ratio_step");
        const int steps = static_cast<int>(std::floor(cfg.value("inhomogeneity.ratio_max") / step + 1e-9));
        plan.columns = {"Gamma_over_gamma_m"};
        plan.units = {"1"};
        for (int k = 0; k <= steps; ++k) {
            char name[48];
            std::snprintf(name, sizeof name, "I_best_dBB_%.6g", k * step);
            plan.columns.emplace_back(name);
            plan.units.emplace_back("1");
        }
        const FieldDistribution dist = choices.at("inhomogeneity.distribution") == "uniform"
                                           ? FieldDistribution::Uniform
                                           : FieldDistribution::GaussianTruncated;
        plan.row = [steps, step, dist](const Values& v) {
            const TransferParams p = make_transfer(v);
            const int samples = static_cast<int>(v.at("inhomogeneity.samples"));
            std::vector<double> out{pumping_parameter(p) / p.gamma_m};
            for (int k = 0; k <= steps; ++k)
                out.push_back(k == 0 ? best_variance_mismatch(p) : inhomogeneity_average(p, k * step, samples, dist));
            return out;
        };
    } else if (s == "readout") {
        plan.columns = {"t", "P_numeric", "P_closed", "N_shot"};
        plan.units = {"s", "1", "1", "1"};
        plan.row = [](const Values& v) {
            const TransferParams p = make_transfer(v);
            const double GF = adiabatic_rates(p).Gamma_F;
            const double r0 = -0.5 * std::log(v.at("readout.squeeze_factor0"));
            const ReadoutParams rp = ReadoutParams::from_transfer(p, v.at("readout.T_gamma_F") / GF, r0);
            const double lambda = v.at("readout.envelope_ratio") * GF;
            const Envelope env = [lambda](double t) { return std::exp(-lambda * t); };
            const double t = v.at("readout.time_gamma_F") / GF;
            const double shot = shot_noise_power(t, rp, env);
            const double P = homodyne_power(t, rp, env);
            const double closed = shot - rp.eta_I * (1 - std::exp(-2 * r0)) * shot * std::exp(-2 * GF * t);
            return std::vector<double>{t, P, closed, shot};
        };
    } else if (s == "entangle") {
        plan.columns = {"E_field", "eta_I", "E_I_closed", "E_I_numeric", "intra_numeric", "inter_y_numeric",
                        "intra_closed", "inter_closed"};
        plan.units = {"1", "1", "1", "1", "1", "1", "1", "1"};
        plan.row = [](const Values& v) {
            const TransferParams p = make_transfer(v);
            const double r = v.at("entangle.r");
            const double eta = resonant_efficiency(pumping_parameter(p), p.gamma_m, p.cooperativity());
            const double Ef = field_epr_variance(r);
            const TwoCellResult res = simulate_two_cells(p, r);
            const CrossCorrelations cc = cross_correlations(r, p.N, eta);
            return std::vector<double>{Ef, eta, atomic_epr_variance(eta, Ef), res.E_I, res.intra, res.inter_y,
                                       cc.intra, cc.inter};
        };
    } else {
        plan.columns = {"P", "P_star", "eta_prime", "I_y_numeric", "I_y_closed", "I_y_closed_full"};
        plan.units = {"1", "1", "1", "1", "1", "1"};
        plan.row = [](const Values& v) {
            const TransferParams p = make_transfer(v);
            const ToyParams toy = make_toy(p, v);
            const Polarization pol = steady_polarization(toy);
            return std::vector<double>{pol.P,
                                       pol.P_star,
                                       efficiency_imperfect(toy).eta_prime,
                                       toy_numeric_variance(toy),
                                       variance_imperfect(toy, ImperfectForm::Simplified),
                                       variance_imperfect(toy, ImperfectForm::Full)};
        };
    }
    return plan;
}

std::string point_context(const ScenarioConfig& cfg, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return "scenario " + cfg.scenario + " at " + cfg.sweep.parameter + "=" + buf + ": ";
}

}  // namespace

ResultTable run_scenario(const ScenarioConfig& cfg) {
    const Plan plan = plan_for(cfg);
    const std::vector<double> grid = cfg.sweep.grid();
    std::vector<std::vector<double>> rows(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());

    auto evaluate = [&](std::size_t k) {
        try {
            Values v = cfg.values;
            v[cfg.sweep.parameter] = grid[k];
            std::vector<double> r{grid[k]};
            const std::vector<double> cols = plan.row(v);
            r.insert(r.end(), cols.begin(), cols.end());
            rows[k] = std::move(r);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.workers, 1)), grid.size());
    if (workers <= 1) {
        for (std::size_t k = 0; k < grid.size(); ++k) evaluate(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k; (k = next.fetch_add(1)) < grid.size();) evaluate(k);
            });
        for (auto& t : pool) t.join();
    }

    // lowest failing sweep index wins so the reported error does not depend on scheduling
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!errors[k]) continue;
        const std::string ctx = point_context(cfg, grid[k]);
        try {
            std::rethrow_exception(errors[k]);
        } catch (const ConfigError&) {
            throw;
        } catch (const UnsupportedConfiguration& e) {
            throw UnsupportedConfiguration(ctx + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(ctx + e.what());
        } catch (const SingularSystemError& e) {
            throw SingularSystemError(ctx + e.what());
        } catch (const IntegrationError& e) {
            throw IntegrationError(ctx + e.what());
        } catch (const NumericError& e) {
            throw NumericError(ctx + e.what());
        } catch (const std::exception& e) {
            throw NumericError(ctx + e.what());
        }
    }

    ResultTable table;
    table.columns.push_back(cfg.sweep.parameter);
    table.units.push_back("1");
    table.columns.insert(table.columns.end(), plan.columns.begin(), plan.columns.end());
    table.units.insert(table.units.end(), plan.units.begin(), plan.units.end());
    table.rows = std::move(rows);
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const auto& a, const auto& b) { return a.front() < b.front(); });

    nlohmann::json prov;
    prov["tool"] = "spinxfer";
    prov["version"] = code_version();
    prov["scenario"] = cfg.scenario;
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    prov["config_hash"] = hash;
    prov["config"] = nlohmann::json::parse(canonical_config(cfg));
    prov["columns"] = table.columns;
    prov["units"] = table.units;

    nlohmann::json warnings = nlohmann::json::array();
    const TransferParams base = make_transfer(cfg.values);
    if (auto w = base.warning(); !w.empty()) warnings.push_back(w);
    if (cfg.scenario == "polarization")
        if (auto w = make_toy(base, cfg.values).warning(); !w.empty()) warnings.push_back(w);
    prov["warnings"] = warnings;

    nlohmann::json summary = nlohmann::json::object();
    if (cfg.scenario == "readout" && cfg.sweep.parameter == "readout.time_gamma_F" && table.rows.size() >= 2) {
        const double GF = adiabatic_rates(base).Gamma_F;
        const double r0 = -0.5 * std::log(cfg.value("readout.squeeze_factor0"));
        const std::size_t it = table.column("t"), ip = table.column("P_numeric"), is = table.column("N_shot");
        std::vector<double> t, y;
        for (const auto& row : table.rows) {
            t.push_back(row[it]);
            y.push_back(row[is] - row[ip]);
        }
        const DecayFit fit = fit_exponential_decay(t, y);
        summary["Gamma_F"] = GF;
        summary["fitted_rate"] = fit.rate;
        summary["fitted_rate_over_2Gamma_F"] = fit.rate / (2 * GF);
        summary["S_over_N_shot"] = fit.amplitude / ((1 - std::exp(-2 * r0)) * table.rows.front()[is]);
        summary["eta_I"] = resonant_efficiency(pumping_parameter(base), base.gamma_m, base.cooperativity());
    }
    prov["summary"] = summary;
    table.provenance = prov.dump(2);
    return table;
}

void write_csv(const ResultTable& table, std::ostream& os) {
    std::istringstream prov(table.provenance);
    for (std::string line; std::getline(prov, line);) os << "# " << line << '\n';
    for (std::size_t k = 0; k < table.columns.size(); ++k) os << (k ? "," : "") << table.columns[k];
    os << '\n';
    char buf[40];
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) throw NumericError("write_csv: row width does not match columns");
        for (std::size_t k = 0; k < row.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.12g", row[k]);
            os << (k ? "," : "") << buf;
        }
        os << '\n';
    }
}

}  // namespace spinxfer

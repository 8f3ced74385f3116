#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "spinxfer/scenario.hpp"

using namespace spinxfer;
namespace fs = std::filesystem;

namespace {

std::string csv(const ResultTable& t) {
    std::ostringstream os;
    write_csv(t, os);
    return os.str();
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / ("spinxfer_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SPINXFER_CLI) + " " + args + " 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("empty config gives the baseline defaults") {
    const auto cfg = validate_config("");
    CHECK(cfg.scenario == "transfer-sweep");
    CHECK(cfg.value("transfer.squeeze_factor") == 0.5);
    CHECK(cfg.value("transfer.cooperativity") == 500);
    CHECK(cfg.value("transfer.kappa_over_gamma") == 100);
    CHECK(cfg.value("transfer.Delta_over_gamma") == -2000);
    CHECK(cfg.value("transfer.gamma") == 2e7);
    CHECK(cfg.value("transfer.gamma_m") == 5e6);
    CHECK(cfg.value("transfer.n_over_N") == 1e-6);
    CHECK(cfg.deterministic);
    CHECK_FALSE(cfg.has("transfer.Delta_C"));
    CHECK(cfg.sweep.points >= 50);
}

TEST_CASE("config validation") {
    SUBCASE("unknown keys carry their line") {
        try {
            validate_config("transfer:\n  gamma: 1e7\n  kapa_over_gamma: 3\n");
            FAIL("expected rejection");
        } catch (const ConfigError& e) {
            CHECK(e.line == 3);
            CHECK(std::string(e.what()).find("transfer.kapa_over_gamma") != std::string::npos);
        }
        CHECK_THROWS_AS(validate_config("colour: blue\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("sweep:\n  steps: 3\n"), ConfigError);
    }
    SUBCASE("negative kappa") {
        try {
            validate_config("transfer:\n  kappa_over_gamma: -5\n");
            FAIL("expected rejection");
        } catch (const ConfigError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("malformed values") {
        CHECK_THROWS_AS(validate_config("transfer:\n  gamma: fast\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("transfer: [1, 2]\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("transfer:\n  model: huge\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("workers: 0\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("a: [\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("- 1\n- 2\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("", "no-such-scenario"), ConfigError);
        CHECK_THROWS_AS(validate_config("transfer:\n  gamma: .inf\n"), ConfigError);
    }
    SUBCASE("sweep checks") {
        CHECK_THROWS_AS(validate_config("sweep:\n  points: 0\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("sweep:\n  scale: log\n  min: 0\n  max: 1\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("sweep:\n  scale: cubic\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("sweep:\n  parameter: transfer.model\n"), ConfigError);
        CHECK_THROWS_AS(validate_config("sweep:\n  min: .nan\n"), ConfigError);
        // swept values are checked against the parameter's own rule
        CHECK_THROWS_AS(validate_config("sweep:\n  parameter: transfer.gamma\n  scale: linear\n  min: -1\n  max: 1\n"),
                        ConfigError);
    }
    SUBCASE("overrides") {
        const auto cfg = validate_config("transfer:\n  cooperativity: 100\n", "",
                                         {"transfer.cooperativity=250", "sweep.points=3", "transfer.model=reduced"});
        CHECK(cfg.value("transfer.cooperativity") == 250);
        CHECK(cfg.sweep.points == 3);
        CHECK(cfg.choices.at("transfer.model") == "reduced");
        CHECK_THROWS_AS(validate_config("", "", {"transfer.cooperativity"}), ConfigError);
        CHECK_THROWS_AS(validate_config("", "", {"transfer.bogus=1"}), ConfigError);
        CHECK_THROWS_AS(validate_config("", "", {"transfer..gamma=1"}), ConfigError);
        CHECK_THROWS_AS(validate_config("workers: 2\n", "", {"workers.x=1"}), ConfigError);
    }
    SUBCASE("scenario argument wins over the file") {
        CHECK(validate_config("scenario: readout\n", "entangle").scenario == "entangle");
        CHECK(validate_config("scenario: readout\n").scenario == "readout");
    }
}

TEST_CASE("sweep grid") {
    SweepSpec s{"x", "log", 1e-2, 1e2, 5};
    const auto g = s.grid();
    REQUIRE(g.size() == 5);
    CHECK(g[2] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.back() == 1e2);
    SweepSpec one{"x", "linear", 3.0, 7.0, 1};
    CHECK(one.grid() == std::vector<double>{3.0});
    SweepSpec rev{"x", "linear", 1.0, 0.0, 3};
    CHECK(rev.grid() == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("transfer-sweep reproduces the baseline point") {
    const auto cfg = validate_config("sweep:\n  parameter: transfer.pumping_ratio\n  min: 0.1\n  max: 0.1\n  points: 1\n");
    const auto t = run_scenario(cfg);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.columns.size() == 8);
    CHECK(t.rows[0][t.column("Gamma_over_gamma_m")] == doctest::Approx(0.1));
    CHECK(oracle::rel(t.rows[0][t.column("I_y_numeric")], 0.546) < 1e-2);
    CHECK(t.rows[0][t.column("B_mG")] > 55);
    CHECK(t.rows[0][t.column("B_mG")] < 60);
}

TEST_CASE("exchange-steady with r = 0 is coherent") {
    const auto t = run_scenario(validate_config("", "exchange-steady", {"sweep.min=1", "sweep.max=1", "sweep.points=1"}));
    REQUIRE(t.rows.size() == 1);
    for (const char* c : {"S_y_closed", "I_y_closed", "S_y_numeric", "I_y_numeric"})
        CHECK(t.rows[0][t.column(c)] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("readout scenario fit") {
    const auto t = run_scenario(validate_config("", "readout", {"sweep.points=13"}));
    const auto prov = nlohmann::json::parse(t.provenance);
    const double ratio = prov.at("summary").at("fitted_rate_over_2Gamma_F").get<double>();
    CHECK(std::abs(ratio - 1) < 1e-2);
    CHECK(oracle::rel(prov["summary"]["S_over_N_shot"].get<double>(), prov["summary"]["eta_I"].get<double>()) < 2e-2);
}

TEST_CASE("every scenario runs with short sweeps") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        const auto t = run_scenario(validate_config("", name, {"sweep.points=3"}));
        CHECK(t.rows.size() == 3);
        for (const auto& r : t.rows) {
            CHECK(r.size() == t.columns.size());
            for (double v : r) CHECK(std::isfinite(v));
        }
        CHECK(t.units.size() == t.columns.size());
    }
    const auto inh = run_scenario(validate_config("", "inhomogeneity", {"sweep.points=1", "sweep.min=0.1"}));
    CHECK(inh.columns.size() == 2 + 7);  // sweep value, Γ/γm, ΔB/B = 0..6e-4
}

TEST_CASE("determinism and order independence") {
    const auto cfg1 = validate_config("sweep:\n  points: 12\n", "mismatch");
    auto cfg4 = cfg1;
    cfg4.workers = 4;
    const std::string a = csv(run_scenario(cfg1));
    const std::string b = csv(run_scenario(cfg1));
    const std::string c = csv(run_scenario(cfg4));
    CHECK(a == b);
    CHECK(a == c);
    const auto t = run_scenario(cfg4);
    for (std::size_t k = 1; k < t.rows.size(); ++k) CHECK(t.rows[k - 1][0] < t.rows[k][0]);
    CHECK(config_hash(cfg1) == config_hash(cfg4));  // worker count is not part of the result
    auto cfg2 = cfg1;
    cfg2.values["transfer.cooperativity"] = 400;
    CHECK(config_hash(cfg1) != config_hash(cfg2));
}

TEST_CASE("CSV layout") {
    const auto t = run_scenario(validate_config("", "entangle", {"sweep.points=2"}));
    const std::string out = csv(t);
    std::istringstream in(out);
    std::string line, json;
    std::vector<std::string> data;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0)
            json += line.substr(2) + "\n";
        else
            data.push_back(line);
    }
    const auto prov = nlohmann::json::parse(json);
    CHECK(prov["version"] == code_version());
    CHECK(prov["scenario"] == "entangle");
    CHECK(prov["config_hash"].get<std::string>().size() == 16);
    REQUIRE(data.size() == 3);
    CHECK(data[0].rfind("entangle.r,E_field", 0) == 0);
    CHECK(data[2].rfind("1.5,", 0) == 0);
    CHECK(out.find("timestamp") == std::string::npos);
    // 12 significant digits
    ResultTable small{{"x"}, {"1"}, {{1.0 / 3}}, "{}"};
    CHECK(csv(small) == "# {}\nx\n0.333333333333\n");
}

TEST_CASE("numeric failures carry scenario context") {
    const auto cfg = validate_config("transfer:\n  pumping_ratio: 0\n  cooperativity: 0\n", "transfer-sweep",
                                     {"sweep.parameter=transfer.gamma_0", "sweep.min=0", "sweep.max=0",
                                      "sweep.points=1", "sweep.scale=linear"});
    try {
        run_scenario(cfg);
        FAIL("expected a numeric failure");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("scenario transfer-sweep at transfer.gamma_0=0") != std::string::npos);
    }
}

TEST_CASE("command line") {
    const fs::path dir = scratch();
    const fs::path cfg = dir / "cfg.yaml", out1 = dir / "a.csv", out2 = dir / "b.csv";
    std::ofstream(cfg) << "sweep:\n  points: 4\n";
    CHECK(run_cli("transfer-sweep --config " + cfg.string() + " --out " + out1.string()) == 0);
    CHECK(run_cli("transfer-sweep --config " + cfg.string() + " --out " + out2.string() + " --workers 3") == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(out1).find("I_y_numeric") != std::string::npos);

    CHECK(run_cli("bogus --config " + cfg.string() + " --out " + out1.string()) == 2);
    CHECK(run_cli("transfer-sweep --config " + (dir / "missing.yaml").string() + " --out " + out1.string()) == 2);
    CHECK(run_cli("transfer-sweep --config " + cfg.string()) == 2);
    const fs::path with_out = dir / "with_out.yaml", out3 = dir / "c.csv";
    std::ofstream(with_out) << "output: " << out3.string() << "\nsweep:\n  points: 4\n";
    CHECK(run_cli("transfer-sweep --config " + with_out.string()) == 0);
    CHECK(slurp(out3).find("I_y_numeric") != std::string::npos);
    CHECK(run_cli("transfer-sweep --config " + cfg.string() + " --out " + out1.string() + " --workers 0") == 2);
    CHECK(run_cli("transfer-sweep --config " + cfg.string() + " --out " + out1.string() +
                  " --override transfer.kappa_over_gamma=-1") == 2);
    const fs::path bad = dir / "bad.yaml";
    std::ofstream(bad) << "transfer:\n  pumping_ratio: 0\n  cooperativity: 0\nsweep:\n  parameter: transfer.gamma_0\n"
                          "  scale: linear\n  min: 0\n  max: 0\n  points: 1\n";
    CHECK(run_cli("transfer-sweep --config " + bad.string() + " --out " + out1.string()) == 3);
    fs::remove_all(dir);
}

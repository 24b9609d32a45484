#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
    const std::string cmd = std::string(ZENOSIM_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

fs::path temp_dir() {
    fs::path dir = fs::temp_directory_path() / "zenosim_cli_test";
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("version prints the version and exits 0") {
    CommandResult r = run_cli("version");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("zenosim") != std::string::npos);
}

TEST_CASE("list-codes names all three codes") {
    CommandResult r = run_cli("list-codes");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("four_particle") != std::string::npos);
    CHECK(r.output.find("four_particle_two_logical") != std::string::npos);
    CHECK(r.output.find("two_particle_dephasing") != std::string::npos);
}

TEST_CASE("analyze-code reports the counting numbers") {
    CommandResult r = run_cli("analyze-code four_particle --json");
    CHECK(r.exit_code == 0);
    nlohmann::json j = nlohmann::json::parse(r.output);
    CHECK(j["codewords"][0]["orthogonal_count"] == 6);
    CHECK(j["codewords"][1]["fresh_states"] == 4);
    CHECK(j["prevention"]["pass"] == true);

    CommandResult bad = run_cli("analyze-code nine_particle");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("run executes a config and writes CSV plus summary") {
    fs::path dir = temp_dir();
    fs::path config = dir / "mini_sweep.json";
    write_text(config, R"({
        "experiment": "zeno_sweep",
        "code": "four_particle",
        "noise": {"kind": "generic"},
        "gadget": {"mode": "measure-postselect"},
        "N_grid": [4, 8],
        "thetaT": 0.3,
        "logical_input": "plus",
        "seeds": [1, 2]
    })");

    CommandResult r = run_cli("run --config " + config.string() + " --out " + dir.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir / "mini_sweep.csv"));
    CHECK(fs::exists(dir / "mini_sweep_summary.json"));

    std::ifstream csv(dir / "mini_sweep.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "N,seed,fidelity,leakage,detect_prob,allpass_prob");
    int rows = 0;
    for (std::string line; std::getline(csv, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 4);  // |N_grid| x |seeds|

    // Rerunning the same config gives a byte-identical CSV.
    std::ostringstream first;
    first << std::ifstream(dir / "mini_sweep.csv").rdbuf();
    CommandResult again = run_cli("run --config " + config.string() + " --out " + dir.string());
    CHECK(again.exit_code == 0);
    std::ostringstream second;
    second << std::ifstream(dir / "mini_sweep.csv").rdbuf();
    CHECK(first.str() == second.str());
}

TEST_CASE("run rejects an invalid config with exit 2 naming the field") {
    fs::path dir = temp_dir();
    fs::path config = dir / "bad_grid.json";
    write_text(config, R"({
        "experiment": "zeno_sweep",
        "code": "four_particle",
        "noise": {"kind": "generic"},
        "N_grid": [0],
        "thetaT": 0.3,
        "logical_input": "plus",
        "seeds": [1]
    })");
    CommandResult r = run_cli("run --config " + config.string() + " --out " + dir.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("N_grid") != std::string::npos);
}

TEST_CASE("check-code accepts the printed codewords and rejects junk") {
    fs::path dir = temp_dir();
    fs::path good = dir / "eq2_codewords.json";
    write_text(good, R"([
        [[0.5,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0.5,0]],
        [[0.5,0],[0,0],[0,0],[-0.5,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[-0.5,0],[0,0],[0,0],[0.5,0]]
    ])");
    CommandResult r = run_cli("check-code " + good.string() + " --json");
    CHECK(r.exit_code == 0);
    nlohmann::json j = nlohmann::json::parse(r.output);
    CHECK(j["pass"] == true);

    fs::path malformed = dir / "malformed.json";
    write_text(malformed, "this is not json");
    CommandResult bad = run_cli("check-code " + malformed.string());
    CHECK(bad.exit_code == 2);

    fs::path skewed = dir / "skewed.json";
    write_text(skewed, R"([[[1,0],[0,0]],[[1,0],[0,0]]])");
    CommandResult notortho = run_cli("check-code " + skewed.string());
    CHECK(notortho.exit_code == 2);
}

TEST_CASE("search-3qubit reports a nonzero minimum violation") {
    CommandResult r = run_cli("search-3qubit --trials 500 --seed 1 --json");
    CHECK(r.exit_code == 0);
    nlohmann::json j = nlohmann::json::parse(r.output);
    CHECK(j["trials"] == 500);
    CHECK(j["min_violation"].get<double>() > 0.0);
    CHECK(j["repetition_code_violation"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("unknown subcommands exit with a usage error") {
    CommandResult r = run_cli("frobnicate");
    CHECK(r.exit_code == 2);
}

TEST_CASE("unwritable output locations exit with a runtime error") {
    fs::path dir = temp_dir();
    fs::path config = dir / "runtime_fail.json";
    write_text(config, R"({
        "experiment": "zeno_sweep",
        "code": "four_particle",
        "noise": {"kind": "generic"},
        "N_grid": [4],
        "thetaT": 0.3,
        "logical_input": "plus",
        "seeds": [1]
    })");
    CommandResult r = run_cli("run --config " + config.string() + " --out /dev/null/nope");
    CHECK(r.exit_code == 3);
}

TEST_CASE("every subcommand has a machine-readable mode") {
    for (const std::string& args :
         {std::string("version --json"), std::string("list-codes --json"),
          std::string("analyze-code two_particle_dephasing --json"),
          std::string("search-3qubit --trials 50 --seed 2 --json")}) {
        CommandResult r = run_cli(args);
        CHECK(r.exit_code == 0);
        nlohmann::json parsed = nlohmann::json::parse(r.output);
        CHECK((parsed.is_object() || parsed.is_array()));
    }
}

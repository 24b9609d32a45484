// zenosim command-line front end: run sweep experiments from config files,
// analyze the built-in codes, check candidate codes, and search for
// three-qubit prevention codes.
//
// Exit codes: 0 success, 2 usage/validation failure, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "zenosim/codes.hpp"
#include "zenosim/experiments.hpp"
#include "zenosim/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw zenosim::ValidationError("cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw zenosim::ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
    }
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw zenosim::SimulationError("cannot write '" + path.string() + "'");
    out << content;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool as_json) {
    json config = load_json_file(config_path);
    zenosim::ExperimentSpec spec = zenosim::spec_from_json(config);
    zenosim::ExperimentResult result = zenosim::run_experiment(spec);

    const std::string stem = fs::path(config_path).stem().string();
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / (stem + ".csv"), zenosim::result_to_csv(result));
    json summary = zenosim::result_summary_json(result);
    write_file(fs::path(out_dir) / (stem + "_summary.json"), summary.dump(2) + "\n");

    if (as_json) {
        std::cout << summary.dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "experiment: " << to_string(spec.kind) << " (" << to_string(spec.code)
              << "), " << result.records.size() << " grid points\n";
    for (const auto& [metric, fit] : result.slopes) {
        if (fit.valid)
            std::cout << "  " << metric << " log-log slope: " << fit.slope << " +- "
                      << fit.stderr << "\n";
        else
            std::cout << "  " << metric << " log-log slope: n/a\n";
    }
    std::cout << "wrote " << (fs::path(out_dir) / (stem + ".csv")).string() << "\n";
    return kExitOk;
}

json prevention_to_json(const zenosim::PreventionReport& report) {
    return json{{"pass", report.pass},
                {"worst_overlap", report.worst_overlap},
                {"witness_error", report.witness_error},
                {"witness_from", report.witness_from},
                {"witness_to", report.witness_to},
                {"worst_diagonal_spread", report.worst_diagonal_spread},
                {"diagonal_witness", report.diagonal_witness}};
}

void print_prevention(const zenosim::PreventionReport& report, const std::string& label) {
    std::cout << label << ": " << (report.pass ? "pass" : "FAIL")
              << " (worst off-diagonal overlap " << report.worst_overlap;
    if (!report.pass)
        std::cout << ", witness " << report.witness_error << " maps codeword "
                  << report.witness_from << " onto " << report.witness_to;
    std::cout << ")\n";
    std::cout << "  diagonal spread " << report.worst_diagonal_spread;
    if (!report.diagonal_witness.empty()) std::cout << " at " << report.diagonal_witness;
    std::cout << "\n";
}

int cmd_analyze_code(const std::string& name, bool as_json) {
    zenosim::Code code = zenosim::make_code(zenosim::code_name_from_string(name));
    zenosim::CodeAnalysis analysis = zenosim::analyze_code(code);

    if (as_json) {
        json j;
        j["code"] = analysis.code_name;
        j["n_physical"] = code.n_physical;
        j["max_codeword_overlap"] = analysis.max_codeword_overlap;
        j["projector_idempotence_residual"] = analysis.projector_idempotence_residual;
        json words = json::array();
        for (const auto& cw : analysis.codewords)
            words.push_back({{"index", cw.index},
                             {"orthogonal_count", cw.orthogonal_count},
                             {"fresh_states", cw.fresh_states}});
        j["codewords"] = words;
        j["prevention"] = prevention_to_json(analysis.prevention);
        j["prevention_dephasing_only"] = prevention_to_json(analysis.prevention_dephasing_only);
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }

    std::cout << "code " << analysis.code_name << " (" << code.n_physical << " qubits, "
              << code.codewords.size() << " codewords)\n";
    std::cout << "orthonormality residual: " << analysis.max_codeword_overlap
              << ", projector idempotence residual: "
              << analysis.projector_idempotence_residual << "\n";
    for (const auto& cw : analysis.codewords)
        std::cout << "codeword " << cw.index << ": " << cw.orthogonal_count
                  << " mutually orthogonal single-error states, " << cw.fresh_states
                  << " not seen in earlier orbits or the code space\n";
    print_prevention(analysis.prevention, "prevention condition (all Paulis)");
    print_prevention(analysis.prevention_dephasing_only, "prevention condition (Z only)");
    return kExitOk;
}

int cmd_check_code(const std::string& path, bool as_json) {
    json j = load_json_file(path);
    std::vector<zenosim::PureState> words = zenosim::codewords_from_json(j);
    zenosim::PreventionReport report = zenosim::check_prevention_condition(words);
    if (as_json) {
        json out = prevention_to_json(report);
        out["codewords"] = words.size();
        out["n_physical"] = words.front().reg.count;
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << words.size() << " codewords over " << words.front().reg.count
                  << " qubits\n";
        print_prevention(report, "prevention condition (all Paulis)");
    }
    return kExitOk;
}

int cmd_search_3qubit(int trials, std::uint64_t seed, bool as_json) {
    zenosim::ThreeQubitSearchReport report = zenosim::search_three_qubit_codes(trials, seed);
    if (as_json) {
        json j;
        j["trials"] = report.trials;
        j["seed"] = report.seed;
        j["min_violation"] = report.min_violation;
        j["repetition_code_violation"] = report.repetition_code_violation;
        json w0 = json::array(), w1 = json::array();
        for (const auto& a : report.best_word0) w0.push_back({a.real(), a.imag()});
        for (const auto& a : report.best_word1) w1.push_back({a.real(), a.imag()});
        j["best_word0"] = w0;
        j["best_word1"] = w1;
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "searched " << report.trials << " random three-qubit codeword pairs (seed "
              << report.seed << ")\n";
    std::cout << "minimum freeze-condition violation found: " << report.min_violation << "\n";
    auto print_word = [](const char* tag, const std::vector<zenosim::Complex>& amps) {
        std::cout << tag;
        for (const auto& a : amps) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), " (%.4f%+.4fi)", a.real(), a.imag());
            std::cout << buf;
        }
        std::cout << "\n";
    };
    print_word("best candidate |0_E>:", report.best_word0);
    print_word("best candidate |1_E>:", report.best_word1);
    std::cout << "repetition code {|000>,|111>} violation: "
              << report.repetition_code_violation << "\n";
    std::cout << "no valid three-qubit prevention code found (evidence only, not a proof)\n";
    return kExitOk;
}

int cmd_list_codes(bool as_json) {
    if (as_json) {
        json j = json::array();
        for (zenosim::CodeName name : zenosim::all_code_names()) {
            zenosim::Code code = zenosim::make_code(name);
            j.push_back({{"name", code.name},
                         {"n_physical", code.n_physical},
                         {"codewords", code.codewords.size()}});
        }
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }
    for (zenosim::CodeName name : zenosim::all_code_names()) {
        zenosim::Code code = zenosim::make_code(name);
        std::cout << code.name << ": " << code.n_physical << " physical qubits, "
                  << code.codewords.size() << " codewords\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zenosim - quantum Zeno error-prevention simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", code_name, candidate_path;
    int trials = 10000;
    std::uint64_t seed = 1;
    bool as_json = false;

    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory for CSV and summary JSON");
    run->add_flag("--json", as_json, "print the summary JSON to stdout");

    CLI::App* analyze = app.add_subcommand("analyze-code", "orbit counts and prevention checks");
    analyze->add_option("name", code_name, "built-in code name")->required();
    analyze->add_flag("--json", as_json, "machine-readable output");

    CLI::App* check = app.add_subcommand("check-code", "check candidate codewords from a file");
    check->add_option("file", candidate_path, "JSON array of codewords ([re,im] pairs)")
        ->required();
    check->add_flag("--json", as_json, "machine-readable output");

    CLI::App* search = app.add_subcommand("search-3qubit", "randomized three-qubit code search");
    search->add_option("--trials", trials, "number of random candidate pairs");
    search->add_option("--seed", seed, "search RNG seed");
    search->add_flag("--json", as_json, "machine-readable output");

    CLI::App* list = app.add_subcommand("list-codes", "list built-in codes");
    list->add_flag("--json", as_json, "machine-readable output");

    CLI::App* version = app.add_subcommand("version", "print the version");
    version->add_flag("--json", as_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, as_json);
        if (analyze->parsed()) return cmd_analyze_code(code_name, as_json);
        if (check->parsed()) return cmd_check_code(candidate_path, as_json);
        if (search->parsed()) return cmd_search_3qubit(trials, seed, as_json);
        if (list->parsed()) return cmd_list_codes(as_json);
        if (version->parsed()) {
            if (as_json)
                std::cout << json{{"name", "zenosim"}, {"version", zenosim::kVersion}}.dump()
                          << "\n";
            else
                std::cout << "zenosim " << zenosim::kVersion << "\n";
            return kExitOk;
        }
    } catch (const zenosim::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const zenosim::SimulationError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}

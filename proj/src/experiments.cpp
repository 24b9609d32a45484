#include "zenosim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "zenosim/version.hpp"

namespace zenosim {

namespace {

// Seed stream layout (mixed through derive_seed): per-qubit noise generators
// live in [0, 64), per-round test-particle draws in [1<<16, ...), trajectory
// streams in [1<<28, ...).
constexpr std::uint64_t kTestInitStream = std::uint64_t{1} << 16;
constexpr std::uint64_t kTrajectoryStream = std::uint64_t{1} << 28;

double sanitize_probability(double p, const char* what) {
    if (p < -1e-9 || p > 1.0 + 1e-9)
        throw SimulationError(std::string(what) + " outside [0,1]: " + std::to_string(p));
    return std::clamp(p, 0.0, 1.0);
}

struct EngineSetup {
    Code code;
    PureState psi_logical;
    PureState psi0;
    std::vector<Channel> qubit_channels;  // one per system qubit; empty for kick-only
    std::optional<Channel> kick;
    std::vector<int> kick_rounds;  // 1-based, sorted, may repeat
    bool gadget_enabled = true;
    GadgetProtocol protocol;  // mode as configured
};

std::vector<int> kick_round_schedule(const NoiseConfig& noise, int n) {
    std::vector<int> rounds;
    if (noise.kick_schedule == KickSchedule::PerRound) {
        for (int r = 1; r <= n; ++r) rounds.push_back(r);
        return rounds;
    }
    for (int j = 1; j <= noise.kick_intervals; ++j) {
        int r = static_cast<int>((static_cast<long long>(j) * n + noise.kick_intervals - 1) /
                                 noise.kick_intervals);
        rounds.push_back(std::clamp(r, 1, n));
    }
    std::sort(rounds.begin(), rounds.end());
    return rounds;
}

PureState logical_state(const Code& code, const ExperimentSpec& spec) {
    QubitRegister reg(std::max(1, code.logical_qubits()));
    Vector amps(spec.logical_amplitudes.size());
    for (std::size_t i = 0; i < spec.logical_amplitudes.size(); ++i)
        amps[i] = spec.logical_amplitudes[i];
    return PureState(reg, amps).normalized();
}

EngineSetup build_setup(const ExperimentSpec& spec, int n, std::uint64_t seed) {
    EngineSetup setup;
    setup.code = make_code(spec.code);
    setup.psi_logical = logical_state(setup.code, spec);
    setup.psi0 = encode(setup.code, setup.psi_logical);

    if (!spec.noise.is_kick) {
        const double eps = spec.theta_t / static_cast<double>(n);
        for (int q = 0; q < setup.code.n_physical; ++q) {
            CouplingSpec cs;
            cs.epsilon = eps;
            cs.kind = spec.noise.kind;
            cs.seed = derive_seed(seed, static_cast<std::uint64_t>(q));
            cs.env_dim = spec.noise.env_dim;
            setup.qubit_channels.push_back(derive_channel(cs));
        }
    } else {
        setup.kick = kick_noise(spec.noise.kick_p, spec.noise.kick_kind);
        setup.kick_rounds = kick_round_schedule(spec.noise, n);
    }

    setup.gadget_enabled = spec.kind != ExperimentKind::UnprotectedBaseline;
    if (setup.gadget_enabled) {
        setup.protocol = protocol_for(setup.code);
        if (!spec.gadget_steps.empty()) setup.protocol.steps = spec.gadget_steps;
        setup.protocol.mode = spec.gadget_mode;
        setup.protocol.test_init = spec.test_init;
        if (spec.gadget_noise_epsilon > 0.0) {
            CouplingSpec gs;
            gs.epsilon = spec.gadget_noise_epsilon;
            gs.seed = spec.gadget_noise_seed;
            setup.protocol.noise_op = correlated_gadget_noise(gs);
        }
    }
    return setup;
}

void apply_noise_round(DensityMatrix& rho, const EngineSetup& setup, int round) {
    for (int q = 0; q < static_cast<int>(setup.qubit_channels.size()); ++q)
        rho = apply_channel(rho, setup.qubit_channels[q], {q});
    if (setup.kick) {
        const auto range = std::equal_range(setup.kick_rounds.begin(),
                                            setup.kick_rounds.end(), round);
        for (auto it = range.first; it != range.second; ++it)
            for (int q = 0; q < setup.code.n_physical; ++q)
                rho = apply_channel(rho, *setup.kick, {q});
    }
}

GridPointRecord run_point_density(const ExperimentSpec& spec, int n, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    EngineSetup setup = build_setup(spec, n, seed);

    DensityMatrix state = DensityMatrix::from_pure(setup.psi0);
    const bool postselect = setup.protocol.mode == GadgetMode::MeasurePostselect;
    // The forced all-pass branch is tracked alongside the mode state so the
    // cumulative all-pass probability is well defined in every mode.
    GadgetProtocol pass_protocol = setup.protocol;
    pass_protocol.mode = GadgetMode::MeasurePostselect;
    DensityMatrix pass_state = state;
    double allpass = 1.0;

    for (int round = 1; round <= n; ++round) {
        if (setup.gadget_enabled && setup.protocol.test_init == TestInit::SeededRandom) {
            const std::uint64_t ts = derive_seed(seed, kTestInitStream + round);
            setup.protocol.test_init_seed = ts;
            pass_protocol.test_init_seed = ts;
        }
        apply_noise_round(pass_state, setup, round);
        if (setup.gadget_enabled) {
            GadgetRunDensity pass_run = run_gadget(pass_state, pass_protocol);
            allpass *= *pass_run.allpass_probability;
            pass_state = pass_run.state;
            if (postselect) {
                state = pass_state;
            } else {
                apply_noise_round(state, setup, round);
                state = run_gadget(state, setup.protocol).state;
            }
        } else {
            state = pass_state;
        }
    }

    GridPointRecord rec;
    rec.n = n;
    rec.seed = seed;
    state = state.normalized();
    rec.fidelity = sanitize_probability(fidelity(state, setup.psi0), "fidelity");
    const double in_space = (setup.code.projector * state.mat).trace().real();
    rec.leakage = sanitize_probability(1.0 - in_space, "leakage");
    rec.allpass_prob =
        setup.gadget_enabled ? sanitize_probability(allpass, "allpass probability") : 1.0;
    rec.detect_prob = sanitize_probability(1.0 - rec.allpass_prob, "detection probability");
    try {
        DecodeResult dec = decode(setup.code, state);
        rec.logical_error = sanitize_probability(
            1.0 - fidelity(dec.logical, setup.psi_logical), "logical error");
    } catch (const SimulationError&) {
        rec.logical_error = 1.0;  // no code-space weight left
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

PureState sample_channel(const PureState& psi, const Channel& ch,
                         const std::vector<int>& targets, std::mt19937_64& rng) {
    std::vector<PureState> branches;
    std::vector<double> probs;
    branches.reserve(ch.kraus.size());
    double total = 0.0;
    for (const Operator& k : ch.kraus) {
        branches.push_back(apply_operator(psi, k, targets));
        probs.push_back(branches.back().norm_sq());
        total += probs.back();
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng) * total;
    std::size_t pick = probs.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            pick = i;
            break;
        }
    }
    return PureState(branches[pick].reg, branches[pick].amps / std::sqrt(probs[pick]));
}

void sample_noise_round(PureState& psi, const EngineSetup& setup, int round,
                        std::mt19937_64& rng) {
    for (int q = 0; q < static_cast<int>(setup.qubit_channels.size()); ++q)
        psi = sample_channel(psi, setup.qubit_channels[q], {q}, rng);
    if (setup.kick) {
        const auto range = std::equal_range(setup.kick_rounds.begin(),
                                            setup.kick_rounds.end(), round);
        for (auto it = range.first; it != range.second; ++it)
            for (int q = 0; q < setup.code.n_physical; ++q)
                psi = sample_channel(psi, *setup.kick, {q}, rng);
    }
}

GridPointRecord run_point_trajectory(const ExperimentSpec& spec, int n, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    EngineSetup setup = build_setup(spec, n, seed);
    const bool postselect = setup.protocol.mode == GadgetMode::MeasurePostselect;

    std::vector<double> fidelities;
    std::vector<double> leakages;
    std::vector<double> logical_errors;
    int allpass_count = 0;

    for (int traj = 0; traj < spec.repetitions; ++traj) {
        std::mt19937_64 rng(derive_seed(seed, kTrajectoryStream + traj));
        PureState psi = setup.psi0;
        bool clean = true;  // no test particle ever seen flipped
        for (int round = 1; round <= n && !(postselect && !clean); ++round) {
            if (setup.gadget_enabled && setup.protocol.test_init == TestInit::SeededRandom)
                setup.protocol.test_init_seed = derive_seed(seed, kTestInitStream + round);
            sample_noise_round(psi, setup, round, rng);
            if (setup.gadget_enabled) {
                GadgetRunPure run = run_gadget(psi, setup.protocol, rng);
                psi = run.state;
                for (int outcome : run.outcomes)
                    if (outcome != 0) clean = false;
            }
        }
        if (clean) ++allpass_count;
        if (postselect && !clean) continue;  // detected; trajectory discarded
        fidelities.push_back(fidelity(psi, setup.psi0));
        const double in_space = (psi.amps.adjoint() * setup.code.projector * psi.amps)(0).real();
        leakages.push_back(1.0 - in_space);
        try {
            DecodeResult dec = decode(setup.code, psi);
            logical_errors.push_back(1.0 - fidelity(dec.logical, setup.psi_logical));
        } catch (const SimulationError&) {
            logical_errors.push_back(1.0);
        }
    }

    if (fidelities.empty())
        throw SimulationError("post-selection discarded every trajectory");

    const double count = static_cast<double>(fidelities.size());
    double mean = 0.0;
    for (double f : fidelities) mean += f;
    mean /= count;
    double var = 0.0;
    for (double f : fidelities) var += (f - mean) * (f - mean);
    var = count > 1 ? var / (count - 1) : 0.0;
    double leak_mean = 0.0;
    for (double l : leakages) leak_mean += l;
    leak_mean /= count;
    double logical_mean = 0.0;
    for (double l : logical_errors) logical_mean += l;
    logical_mean /= count;

    GridPointRecord rec;
    rec.n = n;
    rec.seed = seed;
    rec.fidelity = sanitize_probability(mean, "fidelity");
    rec.fidelity_stderr = std::sqrt(var / count);
    rec.leakage = sanitize_probability(leak_mean, "leakage");
    rec.logical_error = sanitize_probability(logical_mean, "logical error");
    rec.allpass_prob = setup.gadget_enabled
                           ? sanitize_probability(
                                 static_cast<double>(allpass_count) / spec.repetitions,
                                 "allpass probability")
                           : 1.0;
    rec.detect_prob = sanitize_probability(1.0 - rec.allpass_prob, "detection probability");
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

std::vector<std::string> slope_metrics() {
    return {"infidelity", "detect_prob", "leakage", "logical_error"};
}

double metric_value(const GridPointRecord& rec, const std::string& metric) {
    if (metric == "infidelity") return 1.0 - rec.fidelity;
    if (metric == "detect_prob") return rec.detect_prob;
    if (metric == "leakage") return rec.leakage;
    if (metric == "logical_error") return rec.logical_error;
    throw ValidationError("unknown metric '" + metric + "'");
}

// Per-N means across seeds; slope fits use these.
std::vector<std::pair<double, double>> per_n_means(const ExperimentResult& result,
                                                   const std::string& metric) {
    std::vector<std::pair<double, double>> points;
    for (int n : result.spec.n_grid) {
        double sum = 0.0;
        int count = 0;
        for (const GridPointRecord& rec : result.records)
            if (rec.n == n) {
                sum += metric_value(rec, metric);
                ++count;
            }
        points.emplace_back(static_cast<double>(n), sum / count);
    }
    return points;
}

void fit_all_slopes(ExperimentResult& result) {
    for (const std::string& metric : slope_metrics()) {
        auto points = per_n_means(result, metric);
        const bool fittable =
            points.size() >= 3 &&
            std::all_of(points.begin(), points.end(),
                        [](const auto& p) { return p.second > 1e-13; });
        result.slopes[metric] = fittable ? fit_loglog_slope(points) : SlopeFit{};
    }
}

ExperimentResult run_grid(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult result;
    result.spec = spec;

    struct Task {
        int n;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int n : spec.n_grid)
        for (std::uint64_t seed : spec.seeds) tasks.push_back({n, seed});
    result.records.resize(tasks.size());

    const int workers = std::max(1, std::min<int>(configured_thread_count(),
                                                  static_cast<int>(tasks.size())));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed.load()) return;
            try {
                result.records[i] = spec.sim_mode == SimMode::DensityMatrix
                                        ? run_point_density(spec, tasks[i].n, tasks[i].seed)
                                        : run_point_trajectory(spec, tasks[i].n, tasks[i].seed);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (failed.load()) throw SimulationError(first_error);

    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const GridPointRecord& a, const GridPointRecord& b) {
                         return a.n != b.n ? a.n < b.n : a.seed < b.seed;
                     });
    fit_all_slopes(result);
    return result;
}

void require_kind(const ExperimentSpec& spec, ExperimentKind kind) {
    if (spec.kind != kind)
        throw ConfigError("experiment", "expected '" + to_string(kind) + "', got '" +
                                            to_string(spec.kind) + "'");
}

}  // namespace

ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "zeno_sweep") return ExperimentKind::ZenoSweep;
    if (s == "unprotected_baseline") return ExperimentKind::UnprotectedBaseline;
    if (s == "fast_noise_failure") return ExperimentKind::FastNoiseFailure;
    if (s == "gadget_noise_failure") return ExperimentKind::GadgetNoiseFailure;
    if (s == "dephasing_code") return ExperimentKind::DephasingCode;
    throw ConfigError("experiment", "unknown experiment '" + s + "'");
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::ZenoSweep: return "zeno_sweep";
        case ExperimentKind::UnprotectedBaseline: return "unprotected_baseline";
        case ExperimentKind::FastNoiseFailure: return "fast_noise_failure";
        case ExperimentKind::GadgetNoiseFailure: return "gadget_noise_failure";
        case ExperimentKind::DephasingCode: return "dephasing_code";
    }
    return "?";
}

SimMode sim_mode_from_string(const std::string& s) {
    if (s == "density_matrix") return SimMode::DensityMatrix;
    if (s == "trajectory") return SimMode::Trajectory;
    throw ConfigError("sim_mode", "unknown mode '" + s + "'");
}

std::string to_string(SimMode mode) {
    return mode == SimMode::DensityMatrix ? "density_matrix" : "trajectory";
}

void ExperimentSpec::validate() const {
    if (n_grid.empty()) throw ConfigError("N_grid", "must be non-empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw ConfigError("N_grid", "entries must be >= 1");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw ConfigError("N_grid", "entries must be strictly increasing");
    }
    if (seeds.empty()) throw ConfigError("seeds", "must be non-empty");

    const Code code_obj = make_code(code);
    if (logical_amplitudes.size() != code_obj.codewords.size())
        throw ConfigError("logical_input",
                          "expected " + std::to_string(code_obj.codewords.size()) +
                              " amplitudes for code '" + code_obj.name + "'");
    double norm = 0.0;
    for (const Complex& a : logical_amplitudes) norm += std::norm(a);
    if (std::abs(norm - 1.0) > 1e-8)
        throw ConfigError("logical_input", "amplitudes are not normalized");

    if (noise.is_kick) {
        if (kind != ExperimentKind::FastNoiseFailure)
            throw ConfigError("noise.kind", "kick noise is only valid for fast_noise_failure");
        if (noise.kick_p < 0.0 || noise.kick_p > 1.0)
            throw ConfigError("noise.p", "kick probability outside [0, 1]");
        if (noise.kick_intervals < 1)
            throw ConfigError("noise.intervals", "must be >= 1");
    } else {
        if (kind == ExperimentKind::FastNoiseFailure)
            throw ConfigError("noise.kind", "fast_noise_failure requires kick noise");
        // thetaT = 0 is the noise-free control arm.
        if (theta_t < 0.0) throw ConfigError("thetaT", "must be >= 0");
        CouplingSpec probe;
        probe.epsilon = theta_t / n_grid.front();
        probe.kind = noise.kind;
        probe.env_dim = noise.env_dim;
        probe.validate();
    }

    if (kind == ExperimentKind::DephasingCode) {
        if (code != CodeName::TwoParticleDephasing)
            throw ConfigError("code", "dephasing_code requires two_particle_dephasing");
        if (!noise.is_kick && noise.kind != NoiseKind::DephasingOnly &&
            !allow_flip_on_dephasing_code)
            throw ConfigError("noise.kind",
                              "the two-particle code does not protect against flips; set "
                              "allow_flip_on_dephasing_code to run the demonstration anyway");
    }

    if (!gadget_steps.empty()) {
        GadgetProtocol probe;
        probe.steps = gadget_steps;
        try {
            probe.validate_for(QubitRegister(code_obj.n_physical));
        } catch (const ValidationError& e) {
            throw ConfigError("gadget.steps", e.what());
        }
    }
    if (gadget_noise_epsilon < 0.0)
        throw ConfigError("gadget.noise_epsilon", "must be >= 0");
    if (sim_mode == SimMode::Trajectory) {
        if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
        if (gadget_mode == GadgetMode::CoupleOnly)
            throw ConfigError("gadget.mode",
                              "couple-only is not representable in trajectory mode");
    }
    for (const std::string& out : outputs)
        if (out != "fidelity" && out != "leakage" && out != "detect_prob" &&
            out != "allpass_prob" && out != "logical_error")
            throw ConfigError("outputs", "unknown output '" + out + "'");
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3)
        throw ValidationError("slope fit needs at least 3 points");
    const int n = static_cast<int>(points.size());
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        if (x <= 0.0 || y <= 0.0)
            throw ValidationError("slope fit requires positive coordinates");
        sx += std::log(x);
        sy += std::log(y);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        const double dx = std::log(x) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y) - my);
    }
    if (sxx < 1e-12) throw ValidationError("slope fit has degenerate abscissae");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    double sse = 0;
    for (const auto& [x, y] : points) {
        const double pred = my + fit.slope * (std::log(x) - mx);
        const double res = std::log(y) - pred;
        sse += res * res;
    }
    fit.stderr = std::sqrt(sse / (n - 2) / sxx);
    fit.points = n;
    fit.valid = true;
    return fit;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::ZenoSweep: return run_zeno_sweep(spec);
        case ExperimentKind::UnprotectedBaseline: return run_unprotected_baseline(spec);
        case ExperimentKind::FastNoiseFailure: return run_fast_noise_failure(spec);
        case ExperimentKind::GadgetNoiseFailure: return run_gadget_noise_failure(spec);
        case ExperimentKind::DephasingCode: return run_dephasing_code(spec);
    }
    throw ConfigError("experiment", "unknown experiment kind");
}

ExperimentResult run_zeno_sweep(const ExperimentSpec& spec) {
    require_kind(spec, ExperimentKind::ZenoSweep);
    return run_grid(spec);
}

ExperimentResult run_unprotected_baseline(const ExperimentSpec& spec) {
    require_kind(spec, ExperimentKind::UnprotectedBaseline);
    return run_grid(spec);
}

ExperimentResult run_fast_noise_failure(const ExperimentSpec& spec) {
    require_kind(spec, ExperimentKind::FastNoiseFailure);
    return run_grid(spec);
}

ExperimentResult run_gadget_noise_failure(const ExperimentSpec& spec) {
    require_kind(spec, ExperimentKind::GadgetNoiseFailure);
    return run_grid(spec);
}

ExperimentResult run_dephasing_code(const ExperimentSpec& spec) {
    require_kind(spec, ExperimentKind::DephasingCode);
    return run_grid(spec);
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::string& where,
                         std::initializer_list<const char*> known) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw ConfigError(where.empty() ? key : where + "." + key, "unknown field");
    }
}

std::vector<Complex> resolve_logical_input(const nlohmann::json& j, const Code& code,
                                           std::string& preset_out) {
    const std::size_t k = code.codewords.size();
    if (j.is_string()) {
        const std::string preset = j.get<std::string>();
        preset_out = preset;
        std::vector<Complex> amps(k, 0.0);
        if (preset == "zero") {
            amps[0] = 1.0;
        } else if (preset == "one") {
            amps[k - 1] = 1.0;
        } else if (preset == "plus") {
            const double a = 1.0 / std::sqrt(static_cast<double>(k));
            std::fill(amps.begin(), amps.end(), Complex(a, 0.0));
        } else {
            throw ConfigError("logical_input", "unknown preset '" + preset + "'");
        }
        return amps;
    }
    if (!j.is_array())
        throw ConfigError("logical_input", "must be a preset name or an array of [re, im]");
    std::vector<Complex> amps;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2)
            throw ConfigError("logical_input", "amplitudes must be [re, im] pairs");
        amps.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    return amps;
}

}  // namespace

ExperimentSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    reject_unknown_keys(j, "",
                        {"experiment", "code", "noise", "gadget", "N_grid", "thetaT",
                         "logical_input", "seeds", "sim_mode", "repetitions",
                         "allow_flip_on_dephasing_code", "outputs"});
    ExperimentSpec spec;
    try {
        spec.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("experiment", "missing or not a string");
    }
    try {
        spec.code = code_name_from_string(j.at("code").get<std::string>());
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("code", "missing or not a string");
    } catch (const ValidationError& e) {
        throw ConfigError("code", e.what());
    }

    if (!j.contains("noise") || !j.at("noise").is_object())
        throw ConfigError("noise", "missing or not an object");
    const nlohmann::json& jn = j.at("noise");
    std::string noise_kind;
    try {
        noise_kind = jn.at("kind").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("noise.kind", "missing or not a string");
    }
    if (noise_kind == "kick") {
        reject_unknown_keys(jn, "noise", {"kind", "p", "error", "intervals", "schedule"});
        spec.noise.is_kick = true;
        if (!jn.contains("p") || !jn.at("p").is_number())
            throw ConfigError("noise.p", "missing or not a number");
        spec.noise.kick_p = jn.at("p").get<double>();
        try {
            spec.noise.kick_kind = kick_kind_from_string(jn.value("error", "X"));
        } catch (const ValidationError& e) {
            throw ConfigError("noise.error", e.what());
        }
        spec.noise.kick_intervals = jn.value("intervals", 8);
        const std::string schedule = jn.value("schedule", "fixed-intervals");
        if (schedule == "fixed-intervals")
            spec.noise.kick_schedule = KickSchedule::FixedIntervals;
        else if (schedule == "per-round")
            spec.noise.kick_schedule = KickSchedule::PerRound;
        else
            throw ConfigError("noise.schedule", "unknown schedule '" + schedule + "'");
    } else {
        reject_unknown_keys(jn, "noise", {"kind", "env_dim"});
        try {
            spec.noise.kind = noise_kind_from_string(noise_kind);
        } catch (const ValidationError& e) {
            throw ConfigError("noise.kind", e.what());
        }
        spec.noise.env_dim = jn.value("env_dim", 2);
    }

    if (j.contains("gadget")) {
        const nlohmann::json& jg = j.at("gadget");
        if (!jg.is_object()) throw ConfigError("gadget", "must be an object");
        reject_unknown_keys(jg, "gadget",
                            {"mode", "test_init", "steps", "noise_epsilon", "noise_seed"});
        try {
            spec.gadget_mode = gadget_mode_from_string(jg.value("mode", "measure-postselect"));
        } catch (const ValidationError& e) {
            throw ConfigError("gadget.mode", e.what());
        }
        const std::string init = jg.value("test_init", "zero");
        if (init == "zero")
            spec.test_init = TestInit::FixedZero;
        else if (init == "random")
            spec.test_init = TestInit::SeededRandom;
        else
            throw ConfigError("gadget.test_init", "unknown test_init '" + init + "'");
        if (jg.contains("steps")) {
            if (!jg.at("steps").is_array())
                throw ConfigError("gadget.steps", "must be an array of steps");
            try {
                for (const auto& js : jg.at("steps"))
                    spec.gadget_steps.push_back(gadget_step_from_json(js));
            } catch (const ValidationError& e) {
                throw ConfigError("gadget.steps", e.what());
            }
        }
        spec.gadget_noise_epsilon = jg.value("noise_epsilon", 0.0);
        spec.gadget_noise_seed = jg.value("noise_seed", std::uint64_t{0});
    }

    if (!j.contains("N_grid") || !j.at("N_grid").is_array())
        throw ConfigError("N_grid", "missing or not an array");
    for (const auto& entry : j.at("N_grid")) {
        if (!entry.is_number_integer()) throw ConfigError("N_grid", "entries must be integers");
        spec.n_grid.push_back(entry.get<int>());
    }

    spec.theta_t = j.value("thetaT", 0.3);

    const Code code_obj = make_code(spec.code);
    if (!j.contains("logical_input"))
        throw ConfigError("logical_input", "missing");
    spec.logical_amplitudes =
        resolve_logical_input(j.at("logical_input"), code_obj, spec.logical_preset);

    if (!j.contains("seeds") || !j.at("seeds").is_array())
        throw ConfigError("seeds", "missing or not an array");
    for (const auto& entry : j.at("seeds")) {
        if (!entry.is_number_integer() || entry.get<long long>() < 0)
            throw ConfigError("seeds", "entries must be non-negative integers");
        spec.seeds.push_back(entry.get<std::uint64_t>());
    }

    if (j.contains("sim_mode")) spec.sim_mode = sim_mode_from_string(j.at("sim_mode").get<std::string>());
    spec.repetitions = j.value("repetitions", 1000);
    spec.allow_flip_on_dephasing_code = j.value("allow_flip_on_dephasing_code", false);
    if (j.contains("outputs")) {
        if (!j.at("outputs").is_array()) throw ConfigError("outputs", "must be an array");
        for (const auto& out : j.at("outputs")) spec.outputs.push_back(out.get<std::string>());
    }

    spec.validate();
    return spec;
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["experiment"] = to_string(spec.kind);
    j["code"] = to_string(spec.code);
    if (spec.noise.is_kick) {
        j["noise"] = {{"kind", "kick"},
                      {"p", spec.noise.kick_p},
                      {"error", to_string(spec.noise.kick_kind)},
                      {"intervals", spec.noise.kick_intervals},
                      {"schedule", spec.noise.kick_schedule == KickSchedule::FixedIntervals
                                       ? "fixed-intervals"
                                       : "per-round"}};
    } else {
        j["noise"] = {{"kind", to_string(spec.noise.kind)}, {"env_dim", spec.noise.env_dim}};
        j["thetaT"] = spec.theta_t;
    }
    j["gadget"] = {{"mode", to_string(spec.gadget_mode)},
                   {"test_init", spec.test_init == TestInit::FixedZero ? "zero" : "random"},
                   {"noise_epsilon", spec.gadget_noise_epsilon},
                   {"noise_seed", spec.gadget_noise_seed}};
    if (!spec.gadget_steps.empty()) {
        nlohmann::json steps = nlohmann::json::array();
        for (const GadgetStep& step : spec.gadget_steps) steps.push_back(to_json(step));
        j["gadget"]["steps"] = steps;
    }
    j["N_grid"] = spec.n_grid;
    if (!spec.logical_preset.empty()) {
        j["logical_input"] = spec.logical_preset;
    } else {
        nlohmann::json amps = nlohmann::json::array();
        for (const Complex& a : spec.logical_amplitudes) amps.push_back({a.real(), a.imag()});
        j["logical_input"] = amps;
    }
    j["seeds"] = spec.seeds;
    j["sim_mode"] = to_string(spec.sim_mode);
    if (spec.sim_mode == SimMode::Trajectory) j["repetitions"] = spec.repetitions;
    if (spec.allow_flip_on_dephasing_code) j["allow_flip_on_dephasing_code"] = true;
    if (!spec.outputs.empty()) j["outputs"] = spec.outputs;
    return j;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string result_to_csv(const ExperimentResult& result) {
    std::string csv = "N,seed,fidelity,leakage,detect_prob,allpass_prob\n";
    for (const GridPointRecord& rec : result.records) {
        csv += std::to_string(rec.n);
        csv += ',';
        csv += std::to_string(rec.seed);
        csv += ',';
        csv += format_double(rec.fidelity);
        csv += ',';
        csv += format_double(rec.leakage);
        csv += ',';
        csv += format_double(rec.detect_prob);
        csv += ',';
        csv += format_double(rec.allpass_prob);
        csv += '\n';
    }
    return csv;
}

nlohmann::json result_summary_json(const ExperimentResult& result) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = spec_to_json(result.spec);
    nlohmann::json slopes;
    for (const auto& [metric, fit] : result.slopes) {
        if (fit.valid)
            slopes[metric] = {{"slope", fit.slope}, {"stderr", fit.stderr}, {"points", fit.points}};
        else
            slopes[metric] = nullptr;
    }
    j["slopes"] = slopes;
    nlohmann::json records = nlohmann::json::array();
    for (const GridPointRecord& rec : result.records) {
        nlohmann::json r = {{"N", rec.n},
                            {"seed", rec.seed},
                            {"fidelity", rec.fidelity},
                            {"leakage", rec.leakage},
                            {"detect_prob", rec.detect_prob},
                            {"allpass_prob", rec.allpass_prob},
                            {"logical_error", rec.logical_error},
                            {"wall_ms", rec.wall_ms}};
        if (result.spec.sim_mode == SimMode::Trajectory)
            r["fidelity_stderr"] = rec.fidelity_stderr;
        records.push_back(std::move(r));
    }
    j["records"] = records;
    return j;
}

int configured_thread_count() {
    if (const char* env = std::getenv("ZENOSIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace zenosim

#pragma once

// Declarative sweep runner. An experiment encodes a logical state, repeats N
// rounds of [per-qubit noise step at eps = thetaT / N, then gadget protocol]
// for every N in the grid, and reports per-grid-point metrics plus fitted
// log-log slopes. Density-matrix runs are deterministic; Monte Carlo
// trajectory runs are reproducible from the seed schedule.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zenosim/codes.hpp"
#include "zenosim/gadgets.hpp"
#include "zenosim/kernel.hpp"
#include "zenosim/noise.hpp"

#include "json.hpp"

namespace zenosim {

/// Config validation failure; `field` names the offending config entry.
struct ConfigError : ValidationError {
    std::string field;
    ConfigError(std::string f, const std::string& msg)
        : ValidationError("config field '" + f + "': " + msg), field(std::move(f)) {}
};

enum class ExperimentKind {
    ZenoSweep,
    UnprotectedBaseline,
    FastNoiseFailure,
    GadgetNoiseFailure,
    DephasingCode,
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind kind);

enum class SimMode { DensityMatrix, Trajectory };

SimMode sim_mode_from_string(const std::string& s);
std::string to_string(SimMode mode);

enum class KickSchedule { FixedIntervals, PerRound };

struct NoiseConfig {
    bool is_kick = false;
    // Slow entangling noise (eps derived per grid point as thetaT / N).
    NoiseKind kind = NoiseKind::Generic;
    int env_dim = 2;
    // Discrete-kick fast noise (p fixed, independent of N).
    double kick_p = 0.0;
    KickKind kick_kind = KickKind::X;
    int kick_intervals = 8;
    KickSchedule kick_schedule = KickSchedule::FixedIntervals;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::ZenoSweep;
    CodeName code = CodeName::FourParticle;
    NoiseConfig noise;
    GadgetMode gadget_mode = GadgetMode::MeasurePostselect;
    TestInit test_init = TestInit::FixedZero;
    std::vector<GadgetStep> gadget_steps;  // empty: derive from the code
    double gadget_noise_epsilon = 0.0;
    std::uint64_t gadget_noise_seed = 0;
    std::vector<int> n_grid;
    double theta_t = 0.3;  // the dimensionless product theta * T
    std::vector<Complex> logical_amplitudes;
    std::string logical_preset;  // echo of the named preset, if one was used
    std::vector<std::uint64_t> seeds;
    SimMode sim_mode = SimMode::DensityMatrix;
    int repetitions = 1000;  // trajectory mode only
    bool allow_flip_on_dephasing_code = false;
    std::vector<std::string> outputs;

    void validate() const;  // throws ConfigError
};

struct GridPointRecord {
    int n = 0;
    std::uint64_t seed = 0;
    double fidelity = 0.0;       // to the initial encoded state
    double leakage = 0.0;        // 1 - tr(P rho)
    double detect_prob = 0.0;    // 1 - allpass_prob
    double allpass_prob = 1.0;
    double logical_error = 0.0;  // infidelity of the decoded in-subspace state
    double fidelity_stderr = 0.0;  // trajectory mode only
    double wall_ms = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double stderr = 0.0;
    int points = 0;
    bool valid = false;
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<GridPointRecord> records;  // sorted by N, then seed
    std::map<std::string, SlopeFit> slopes;  // infidelity, detect_prob, leakage
};

/// Least-squares slope of log(value) vs log(N) with its standard error.
/// Requires >= 3 points and strictly positive values.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

ExperimentResult run_experiment(const ExperimentSpec& spec);

ExperimentResult run_zeno_sweep(const ExperimentSpec& spec);
ExperimentResult run_unprotected_baseline(const ExperimentSpec& spec);
ExperimentResult run_fast_noise_failure(const ExperimentSpec& spec);
ExperimentResult run_gadget_noise_failure(const ExperimentSpec& spec);
ExperimentResult run_dephasing_code(const ExperimentSpec& spec);

ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);

/// CSV with the stable column order N,seed,fidelity,leakage,detect_prob,allpass_prob.
std::string result_to_csv(const ExperimentResult& result);

/// Summary with fitted slopes, per-N means, config echo and software version.
nlohmann::json result_summary_json(const ExperimentResult& result);

/// Locale-independent shortest-roundtrip double formatting used everywhere
/// results are serialized.
std::string format_double(double v);

/// Worker count: ZENOSIM_THREADS if set, else the hardware concurrency.
int configured_thread_count();

}  // namespace zenosim

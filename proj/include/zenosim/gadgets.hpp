#pragma once

// Test-particle measurement gadgets. A fresh test particle interacts with the
// step's target qubits one after the other; the interaction flips the test
// particle iff the system qubit is |1> (computational basis) or |~1> (tilde
// basis). Passing every step is equivalent to projecting onto the code space.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "zenosim/codes.hpp"
#include "zenosim/kernel.hpp"

#include "json.hpp"

namespace zenosim {

enum class GadgetBasis { Computational, Tilde };

GadgetBasis gadget_basis_from_string(const std::string& s);
std::string to_string(GadgetBasis basis);

struct GadgetStep {
    GadgetBasis basis = GadgetBasis::Computational;
    std::vector<int> targets;
    std::string description;
};

/// Step wire format: {"basis": "computational"|"tilde", "targets": [ints]}.
nlohmann::json to_json(const GadgetStep& step);
GadgetStep gadget_step_from_json(const nlohmann::json& j);

enum class GadgetMode { MeasurePostselect, MeasureNonselective, CoupleOnly };

GadgetMode gadget_mode_from_string(const std::string& s);
std::string to_string(GadgetMode mode);

enum class TestInit { FixedZero, SeededRandom };

struct GadgetProtocol {
    std::vector<GadgetStep> steps;
    GadgetMode mode = GadgetMode::MeasurePostselect;
    TestInit test_init = TestInit::FixedZero;
    std::uint64_t test_init_seed = 0;
    /// Optional correlated coupling imperfection, applied to (test, system)
    /// after every parity interaction. Disabled when absent.
    std::optional<Operator> noise_op;

    void validate_for(const QubitRegister& reg) const;
};

/// Controlled flip of the test qubit on the system qubit's |1> (or |~1>)
/// component; the system basis states in that basis are unchanged.
PureState parity_interaction(const PureState& state, int test_qubit, int system_qubit,
                             GadgetBasis basis);

/// The paper's step list for each code, with postselect mode and |0> test
/// particles as defaults.
GadgetProtocol protocol_for(const Code& code);
GadgetProtocol protocol_for(CodeName name);

struct GadgetRunPure {
    PureState state;            // test particles removed; renormalized
    std::vector<int> outcomes;  // per step: 0 = pass (test unflipped), 1 = flip
    double probability = 1.0;   // joint probability of the recorded outcomes
};

/// Trajectory-mode gadget: outcomes sampled with Born probabilities
/// (measure modes). Couple-only is not representable on a pure state.
GadgetRunPure run_gadget(const PureState& state, const GadgetProtocol& protocol,
                         std::mt19937_64& rng);

/// Forced all-pass branch; throws SimulationError on a zero-probability branch.
GadgetRunPure run_gadget_forced_allpass(const PureState& state,
                                        const GadgetProtocol& protocol);

struct GadgetRunDensity {
    DensityMatrix state;  // normalized; per protocol.mode
    /// Probability that every step of this invocation passes. Absent in
    /// couple-only mode, where no outcome is produced.
    std::optional<double> allpass_probability;
};

GadgetRunDensity run_gadget(const DensityMatrix& rho, const GadgetProtocol& protocol);

/// Single-qubit test-particle states for TestInit::SeededRandom: uniform on
/// the pure-state manifold, resampling anything within 1e-6 of the flip
/// eigenstates (|0>+-|1>)/sqrt2, which end up uncorrelated to the system.
Eigen::Vector2cd sample_test_particle_state(std::mt19937_64& rng);

}  // namespace zenosim

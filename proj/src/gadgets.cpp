#include "zenosim/gadgets.hpp"

#include <cmath>

namespace zenosim {

namespace {

constexpr double kBranchFloor = 1e-14;

// Controlled flip with the system qubit as control (most significant local
// bit) and the test particle as target.
Matrix controlled_flip_matrix(GadgetBasis basis) {
    Matrix cx = Matrix::Zero(4, 4);
    cx(0, 0) = 1;
    cx(1, 1) = 1;
    cx(2, 3) = 1;
    cx(3, 2) = 1;
    if (basis == GadgetBasis::Computational) return cx;
    // Conjugate the control by the tilde-basis change: (H (x) I) CX (H (x) I).
    const double s = 1.0 / std::sqrt(2.0);
    Matrix hI = Matrix::Zero(4, 4);
    hI(0, 0) = s; hI(0, 2) = s;
    hI(1, 1) = s; hI(1, 3) = s;
    hI(2, 0) = s; hI(2, 2) = -s;
    hI(3, 1) = s; hI(3, 3) = -s;
    return hI * cx * hI;
}

Eigen::Vector2cd orthogonal_complement(const Eigen::Vector2cd& ket) {
    return Eigen::Vector2cd(-std::conj(ket[1]), std::conj(ket[0]));
}

PureState test_particle_pure(const Eigen::Vector2cd& ket) {
    QubitRegister reg(1, QubitRole::Test);
    Vector a(2);
    a << ket[0], ket[1];
    return PureState(reg, std::move(a));
}

Eigen::Vector2cd test_init_ket(const GadgetProtocol& protocol, std::mt19937_64& init_rng) {
    if (protocol.test_init == TestInit::FixedZero) return Eigen::Vector2cd(1.0, 0.0);
    return sample_test_particle_state(init_rng);
}

// Applies one step's interactions (and optional coupling imperfection) with
// the test particle already appended as the last qubit.
template <typename StateT>
StateT apply_step_interactions(StateT state, const GadgetStep& step,
                               const GadgetProtocol& protocol, int test_idx,
                               const Operator& flip_op) {
    for (int target : step.targets) {
        state = apply_operator(state, flip_op, {target, test_idx});
        if (protocol.noise_op)
            state = apply_operator(state, *protocol.noise_op, {test_idx, target});
    }
    return state;
}

}  // namespace

GadgetBasis gadget_basis_from_string(const std::string& s) {
    if (s == "computational") return GadgetBasis::Computational;
    if (s == "tilde") return GadgetBasis::Tilde;
    throw ValidationError("unknown gadget basis '" + s + "'");
}

std::string to_string(GadgetBasis basis) {
    return basis == GadgetBasis::Computational ? "computational" : "tilde";
}

nlohmann::json to_json(const GadgetStep& step) {
    return nlohmann::json{{"basis", to_string(step.basis)}, {"targets", step.targets}};
}

GadgetStep gadget_step_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("basis") || !j.contains("targets"))
        throw ValidationError("gadget step needs 'basis' and 'targets'");
    GadgetStep step;
    step.basis = gadget_basis_from_string(j.at("basis").get<std::string>());
    if (!j.at("targets").is_array() || j.at("targets").empty())
        throw ValidationError("gadget step targets must be a non-empty array");
    for (const auto& t : j.at("targets")) {
        if (!t.is_number_integer())
            throw ValidationError("gadget step targets must be integers");
        step.targets.push_back(t.get<int>());
    }
    step.description = to_string(step.basis) + " parity on " +
                       std::to_string(step.targets.size()) + " qubits";
    return step;
}

GadgetMode gadget_mode_from_string(const std::string& s) {
    if (s == "measure-postselect" || s == "postselect") return GadgetMode::MeasurePostselect;
    if (s == "measure-nonselective" || s == "nonselective") return GadgetMode::MeasureNonselective;
    if (s == "couple-only" || s == "couple_only") return GadgetMode::CoupleOnly;
    throw ValidationError("unknown gadget mode '" + s + "'");
}

std::string to_string(GadgetMode mode) {
    switch (mode) {
        case GadgetMode::MeasurePostselect: return "measure-postselect";
        case GadgetMode::MeasureNonselective: return "measure-nonselective";
        case GadgetMode::CoupleOnly: return "couple-only";
    }
    return "?";
}

void GadgetProtocol::validate_for(const QubitRegister& reg) const {
    for (const GadgetStep& step : steps) {
        if (step.targets.empty())
            throw ValidationError("gadget step has no targets");
        for (std::size_t i = 0; i < step.targets.size(); ++i) {
            reg.require_valid_target(step.targets[i]);
            if (reg.roles[step.targets[i]] != QubitRole::System)
                throw ValidationError("gadget step targets a non-system qubit");
            for (std::size_t j = i + 1; j < step.targets.size(); ++j)
                if (step.targets[i] == step.targets[j])
                    throw ValidationError("gadget step repeats a target");
        }
    }
    if (noise_op && noise_op->arity != 2)
        throw ValidationError("gadget noise operator must act on (test, system)");
}

PureState parity_interaction(const PureState& state, int test_qubit, int system_qubit,
                             GadgetBasis basis) {
    if (test_qubit == system_qubit)
        throw ValidationError("parity interaction needs distinct test and system qubits");
    Operator flip(2, controlled_flip_matrix(basis),
                  basis == GadgetBasis::Computational ? "CFLIP" : "CFLIP~");
    return apply_operator(state, flip, {system_qubit, test_qubit});
}

GadgetProtocol protocol_for(const Code& code) {
    return protocol_for(code_name_from_string(code.name));
}

GadgetProtocol protocol_for(CodeName name) {
    GadgetProtocol protocol;
    switch (name) {
        case CodeName::FourParticle:
            protocol.steps = {
                {GadgetBasis::Computational, {0, 1}, "pair (1,2) parity"},
                {GadgetBasis::Computational, {2, 3}, "pair (3,4) parity"},
                {GadgetBasis::Tilde, {0, 1, 2, 3}, "all-four tilde parity"},
            };
            break;
        case CodeName::FourParticleTwoLogical:
            protocol.steps = {
                {GadgetBasis::Computational, {0, 1, 2, 3}, "all-four parity"},
                {GadgetBasis::Tilde, {0, 1, 2, 3}, "all-four tilde parity"},
            };
            break;
        case CodeName::TwoParticleDephasing:
            protocol.steps = {
                {GadgetBasis::Tilde, {0, 1}, "pair tilde parity"},
            };
            break;
    }
    return protocol;
}

namespace {

GadgetRunPure run_gadget_pure(const PureState& input, const GadgetProtocol& protocol,
                              std::mt19937_64* rng, bool force_allpass) {
    protocol.validate_for(input.reg);
    if (protocol.mode == GadgetMode::CoupleOnly && rng != nullptr)
        throw ValidationError("couple-only mode is not representable on a pure state");
    std::mt19937_64 init_rng(protocol.test_init_seed);

    GadgetRunPure run;
    run.state = input;
    for (const GadgetStep& step : protocol.steps) {
        const Eigen::Vector2cd t0 = test_init_ket(protocol, init_rng);
        const int test_idx = run.state.reg.count;
        Operator flip(2, controlled_flip_matrix(step.basis), "CFLIP");
        PureState joint = apply_step_interactions(run.state.tensor(test_particle_pure(t0)),
                                                  step, protocol, test_idx, flip);

        PureState pass = project_out_qubit(joint, test_idx, t0);
        const double p_pass = pass.norm_sq() / joint.norm_sq();
        int outcome;
        if (force_allpass) {
            outcome = 0;
        } else {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            outcome = (unit(*rng) < p_pass) ? 0 : 1;
        }
        const double p_branch = outcome == 0 ? p_pass : 1.0 - p_pass;
        if (p_branch < kBranchFloor)
            throw SimulationError("gadget branch of probability < 1e-14 requested (step '" +
                                  step.description + "')");
        PureState branch = outcome == 0
                               ? std::move(pass)
                               : project_out_qubit(joint, test_idx, orthogonal_complement(t0));
        run.state = branch.normalized();
        run.outcomes.push_back(outcome);
        run.probability *= p_branch;
    }
    return run;
}

}  // namespace

GadgetRunPure run_gadget(const PureState& state, const GadgetProtocol& protocol,
                         std::mt19937_64& rng) {
    return run_gadget_pure(state, protocol, &rng, false);
}

GadgetRunPure run_gadget_forced_allpass(const PureState& state,
                                        const GadgetProtocol& protocol) {
    return run_gadget_pure(state, protocol, nullptr, true);
}

GadgetRunDensity run_gadget(const DensityMatrix& rho, const GadgetProtocol& protocol) {
    protocol.validate_for(rho.reg);
    std::mt19937_64 init_rng(protocol.test_init_seed);

    // The all-pass branch is tracked separately in the non-postselect modes so
    // the joint pass probability stays conditioned on earlier passes.
    DensityMatrix state = rho;
    DensityMatrix pass_branch = rho;  // unnormalized
    double allpass = 1.0;

    for (const GadgetStep& step : protocol.steps) {
        const Eigen::Vector2cd t0 = test_init_ket(protocol, init_rng);
        const Eigen::Vector2cd t1 = orthogonal_complement(t0);
        const int test_idx = state.reg.count;
        Operator flip(2, controlled_flip_matrix(step.basis), "CFLIP");
        DensityMatrix test_dm = DensityMatrix::from_pure(test_particle_pure(t0));

        if (protocol.mode == GadgetMode::MeasurePostselect) {
            DensityMatrix joint =
                apply_step_interactions(state.tensor(test_dm), step, protocol, test_idx, flip);
            DensityMatrix passed = project_out_qubit(joint, test_idx, t0);
            const double p = passed.trace_real() / joint.trace_real();
            if (p < kBranchFloor)
                throw SimulationError("post-selection on a zero-probability branch (step '" +
                                      step.description + "')");
            allpass *= p;
            state = passed.normalized();
            pass_branch = state;
        } else {
            DensityMatrix joint =
                apply_step_interactions(state.tensor(test_dm), step, protocol, test_idx, flip);
            if (protocol.mode == GadgetMode::MeasureNonselective) {
                DensityMatrix passed = project_out_qubit(joint, test_idx, t0);
                DensityMatrix failed = project_out_qubit(joint, test_idx, t1);
                state = DensityMatrix(passed.reg, passed.mat + failed.mat);
            } else {  // CoupleOnly: trace the test particle out, never measure it
                std::vector<int> keep(state.reg.count);
                for (int q = 0; q < state.reg.count; ++q) keep[q] = q;
                state = partial_trace(joint, keep);
            }
            DensityMatrix joint_pass = apply_step_interactions(
                pass_branch.tensor(test_dm), step, protocol, test_idx, flip);
            pass_branch = project_out_qubit(joint_pass, test_idx, t0);
        }
    }

    GadgetRunDensity run;
    run.state = std::move(state);
    if (protocol.mode == GadgetMode::MeasurePostselect) {
        run.allpass_probability = allpass;
    } else if (protocol.mode == GadgetMode::MeasureNonselective) {
        run.allpass_probability = pass_branch.trace_real() / rho.trace_real();
    }
    return run;
}

Eigen::Vector2cd sample_test_particle_state(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double s = 1.0 / std::sqrt(2.0);
    const Eigen::Vector2cd plus(s, s), minus(s, -s);
    for (;;) {
        Eigen::Vector2cd ket(Complex(gauss(rng), gauss(rng)), Complex(gauss(rng), gauss(rng)));
        const double norm = ket.norm();
        if (norm < 1e-12) continue;
        ket /= norm;
        // Flip eigenstates end up uncorrelated to the system; exclude them.
        if (std::abs(ket.dot(plus)) > 1.0 - 1e-6) continue;
        if (std::abs(ket.dot(minus)) > 1.0 - 1e-6) continue;
        return ket;
    }
}

}  // namespace zenosim

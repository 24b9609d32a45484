#include "doctest.h"

#include <bit>
#include <cmath>
#include <random>

#include "zenosim/gadgets.hpp"
#include "zenosim/noise.hpp"

using namespace zenosim;

namespace {

PureState random_state(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(std::size_t{1} << n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(gauss(rng), gauss(rng));
    v.normalize();
    return PureState(QubitRegister(n), std::move(v));
}

// Independent parity oracle for the tilde-basis step: rewrite in the tilde
// basis and sum the weight on odd-parity labels.
double tilde_odd_parity_weight(const PureState& s) {
    PureState t = s;
    for (int q = 0; q < s.reg.count; ++q) t = apply_operator(t, paulis::hadamard(), {q});
    double w = 0.0;
    for (std::size_t i = 0; i < t.dim(); ++i)
        if (std::popcount(i) % 2 == 1) w += std::norm(t.amps[i]);
    return w;
}

PureState project_code(const Code& code, const PureState& s) {
    Vector v = code.projector * s.amps;
    return PureState(s.reg, std::move(v));
}

}  // namespace

TEST_CASE("parity interaction truth table") {
    // system |0>, test |0>: nothing happens
    PureState s00 = PureState::basis_state(QubitRegister(2), 0b00);
    PureState out = parity_interaction(s00, 1, 0, GadgetBasis::Computational);
    CHECK(std::abs(out.amps[0b00] - 1.0) < 1e-15);

    // system |1>, test |0> -> test flips to |1>
    PureState s10 = PureState::basis_state(QubitRegister(2), 0b10);
    out = parity_interaction(s10, 1, 0, GadgetBasis::Computational);
    CHECK(std::abs(out.amps[0b11] - 1.0) < 1e-15);

    // tilde basis: system |~1> = (|0>-|1>)/sqrt2 flips the test particle
    PureState sys_tilde1 = apply_operator(PureState::basis_state(QubitRegister(1), 1),
                                          paulis::hadamard(), {0});
    PureState joint = sys_tilde1.tensor(PureState::basis_state(QubitRegister(1), 0));
    out = parity_interaction(joint, 1, 0, GadgetBasis::Tilde);
    // expected: |~1>|1>
    PureState expected = sys_tilde1.tensor(PureState::basis_state(QubitRegister(1), 1));
    CHECK((out.amps - expected.amps).cwiseAbs().maxCoeff() < 1e-12);
    // and the system tilde-basis state is unchanged by the interaction
    DensityMatrix sys_after = partial_trace(DensityMatrix::from_pure(out), {0});
    CHECK(fidelity(sys_after, sys_tilde1) == doctest::Approx(1.0));

    CHECK_THROWS_AS(parity_interaction(s00, 0, 0, GadgetBasis::Computational), ValidationError);
}

TEST_CASE("protocols match the per-code step lists") {
    GadgetProtocol p4 = protocol_for(CodeName::FourParticle);
    REQUIRE(p4.steps.size() == 3);
    CHECK(p4.steps[0].basis == GadgetBasis::Computational);
    CHECK(p4.steps[0].targets == std::vector<int>{0, 1});
    CHECK(p4.steps[1].basis == GadgetBasis::Computational);
    CHECK(p4.steps[1].targets == std::vector<int>{2, 3});
    CHECK(p4.steps[2].basis == GadgetBasis::Tilde);
    CHECK(p4.steps[2].targets == std::vector<int>{0, 1, 2, 3});

    GadgetProtocol p2l = protocol_for(CodeName::FourParticleTwoLogical);
    REQUIRE(p2l.steps.size() == 2);
    CHECK(p2l.steps[0].basis == GadgetBasis::Computational);
    CHECK(p2l.steps[0].targets == std::vector<int>{0, 1, 2, 3});
    CHECK(p2l.steps[1].basis == GadgetBasis::Tilde);

    GadgetProtocol pd = protocol_for(CodeName::TwoParticleDephasing);
    REQUIRE(pd.steps.size() == 1);
    CHECK(pd.steps[0].basis == GadgetBasis::Tilde);
    CHECK(pd.steps[0].targets == std::vector<int>{0, 1});
}

TEST_CASE("code states pass every test with certainty and are unchanged") {
    Code code = make_code(CodeName::FourParticle);
    GadgetProtocol protocol = protocol_for(code);
    GadgetRunPure run = run_gadget_forced_allpass(code.codewords[0], protocol);
    CHECK(run.probability == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(run.outcomes == std::vector<int>{0, 0, 0});
    CHECK(fidelity(run.state, code.codewords[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("X1 error makes step 1 fail with certainty") {
    Code code = make_code(CodeName::FourParticle);
    PureState damaged = apply_operator(code.codewords[0], paulis::x(), {0});
    GadgetProtocol protocol = protocol_for(code);
    CHECK_THROWS_AS(run_gadget_forced_allpass(damaged, protocol), SimulationError);

    std::mt19937_64 rng(2);
    GadgetRunPure sampled = run_gadget(damaged, protocol, rng);
    CHECK(sampled.outcomes[0] == 1);
}

TEST_CASE("Z1 error passes the parity steps and fails the tilde step") {
    Code code = make_code(CodeName::FourParticle);
    PureState damaged = apply_operator(code.codewords[0], paulis::z(), {0});
    // Brute-force oracle: weight on odd tilde-parity labels is the step-3
    // failure probability.
    const double fail_expected = tilde_odd_parity_weight(damaged);
    CHECK(fail_expected == doctest::Approx(1.0).epsilon(1e-12));

    GadgetProtocol protocol = protocol_for(code);
    std::mt19937_64 rng(3);
    GadgetRunPure sampled = run_gadget(damaged, protocol, rng);
    CHECK(sampled.outcomes[0] == 0);
    CHECK(sampled.outcomes[1] == 0);
    CHECK(sampled.outcomes[2] == 1);
    CHECK(sampled.probability == doctest::Approx(fail_expected).epsilon(1e-10));
}

TEST_CASE("all-pass gadget equals the code-space projector") {
    for (CodeName name : all_code_names()) {
        Code code = make_code(name);
        GadgetProtocol protocol = protocol_for(code);
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            PureState input = random_state(code.n_physical, seed * 7 + 1);
            PureState projected = project_code(code, input);
            const double expected_prob = projected.norm_sq();
            if (expected_prob < 1e-12) continue;
            GadgetRunPure run = run_gadget_forced_allpass(input, protocol);
            CHECK(std::abs(run.probability - expected_prob) < 1e-10);
            CHECK(fidelity(run.state, projected.normalized()) > 1.0 - 1e-10);
        }
    }
}

TEST_CASE("density-matrix postselect agrees with the projector too") {
    Code code = make_code(CodeName::FourParticle);
    GadgetProtocol protocol = protocol_for(code);
    PureState input = random_state(4, 77);
    GadgetRunDensity run = run_gadget(DensityMatrix::from_pure(input), protocol);
    PureState projected = project_code(code, input);
    CHECK(std::abs(*run.allpass_probability - projected.norm_sq()) < 1e-10);
    CHECK(fidelity(run.state, projected.normalized()) > 1.0 - 1e-10);
}

TEST_CASE("nonselective and couple-only give the same reduced state") {
    Code code = make_code(CodeName::FourParticle);
    CouplingSpec noise;
    noise.epsilon = 0.2;
    noise.seed = 31;
    Channel ch = derive_channel(noise);

    DensityMatrix rho = DensityMatrix::from_pure(random_state(4, 5));
    for (int q = 0; q < 4; ++q) rho = apply_channel(rho, ch, {q});

    GadgetProtocol nonsel = protocol_for(code);
    nonsel.mode = GadgetMode::MeasureNonselective;
    GadgetProtocol couple = protocol_for(code);
    couple.mode = GadgetMode::CoupleOnly;

    GadgetRunDensity a = run_gadget(rho, nonsel);
    GadgetRunDensity b = run_gadget(rho, couple);
    CHECK((a.state.mat - b.state.mat).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(a.allpass_probability.has_value());
    CHECK_FALSE(b.allpass_probability.has_value());
    CHECK(std::abs(a.state.trace_real() - 1.0) < 1e-10);
}

TEST_CASE("trace is preserved by the non-postselect modes") {
    Code code = make_code(CodeName::TwoParticleDephasing);
    DensityMatrix rho = DensityMatrix::from_pure(random_state(2, 8));
    for (GadgetMode mode : {GadgetMode::MeasureNonselective, GadgetMode::CoupleOnly}) {
        GadgetProtocol protocol = protocol_for(code);
        protocol.mode = mode;
        GadgetRunDensity run = run_gadget(rho, protocol);
        CHECK(std::abs(run.state.trace_real() - 1.0) < 1e-12);
    }
}

TEST_CASE("gadgets are transparent to encoded states in every mode") {
    for (CodeName name : all_code_names()) {
        Code code = make_code(name);
        PureState logical = random_state(code.logical_qubits(), 404);
        DensityMatrix encoded = DensityMatrix::from_pure(encode(code, logical));
        for (GadgetMode mode : {GadgetMode::MeasurePostselect, GadgetMode::MeasureNonselective,
                                GadgetMode::CoupleOnly}) {
            GadgetProtocol protocol = protocol_for(code);
            protocol.mode = mode;
            GadgetRunDensity run = run_gadget(encoded, protocol);
            CHECK((run.state.mat - encoded.mat).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("random test particles act as the identity on code states") {
    Code code = make_code(CodeName::FourParticle);
    GadgetProtocol protocol = protocol_for(code);
    protocol.test_init = TestInit::SeededRandom;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        protocol.test_init_seed = seed;
        PureState logical = random_state(1, seed + 50);
        PureState encoded = encode(code, logical);
        GadgetRunPure run = run_gadget_forced_allpass(encoded, protocol);
        CHECK(run.probability == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(fidelity(run.state, encoded) > 1.0 - 1e-10);
    }
}

TEST_CASE("the test-particle sampler avoids the flip eigenstates") {
    std::mt19937_64 rng(4);
    const double s = 1.0 / std::sqrt(2.0);
    const Eigen::Vector2cd plus(s, s), minus(s, -s);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector2cd ket = sample_test_particle_state(rng);
        CHECK(std::abs(ket.norm() - 1.0) < 1e-12);
        CHECK(std::abs(ket.dot(plus)) <= 1.0 - 1e-6);
        CHECK(std::abs(ket.dot(minus)) <= 1.0 - 1e-6);
    }
}

TEST_CASE("correlated gadget noise breaks the perfect pass") {
    Code code = make_code(CodeName::FourParticle);
    GadgetProtocol protocol = protocol_for(code);
    CouplingSpec gs;
    gs.epsilon = 0.05;
    gs.seed = 3;
    protocol.noise_op = correlated_gadget_noise(gs);
    GadgetRunDensity run = run_gadget(DensityMatrix::from_pure(code.codewords[0]), protocol);
    CHECK(*run.allpass_probability < 1.0 - 1e-6);
}

TEST_CASE("gadget protocols validate against the register") {
    Code code = make_code(CodeName::FourParticle);
    GadgetProtocol protocol = protocol_for(code);
    PureState small = random_state(2, 1);
    CHECK_THROWS_AS(run_gadget_forced_allpass(small, protocol), ValidationError);

    GadgetProtocol broken = protocol_for(code);
    broken.steps[0].targets = {0, 0};
    CHECK_THROWS_AS(run_gadget_forced_allpass(code.codewords[0], broken), ValidationError);
}

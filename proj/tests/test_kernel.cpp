#include "doctest.h"

#include <cmath>
#include <random>

#include "zenosim/gadgets.hpp"
#include "zenosim/kernel.hpp"
#include "zenosim/noise.hpp"

using namespace zenosim;

namespace {

PureState make_state(int n, std::vector<Complex> amps) {
    Vector v(amps.size());
    for (std::size_t i = 0; i < amps.size(); ++i) v[i] = amps[i];
    return PureState(QubitRegister(n), std::move(v));
}

double max_diff(const PureState& a, const PureState& b) {
    return (a.amps - b.amps).cwiseAbs().maxCoeff();
}

PureState random_state(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(std::size_t{1} << n);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(gauss(rng), gauss(rng));
    v.normalize();
    return PureState(QubitRegister(n), std::move(v));
}

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

}  // namespace

TEST_CASE("register validation") {
    CHECK_THROWS_AS(QubitRegister(0), ValidationError);
    CHECK_THROWS_AS(QubitRegister(13), ValidationError);
    QubitRegister reg(3);
    CHECK(reg.dim() == 8);
    // Qubit 0 is the most significant position of the basis label.
    CHECK(reg.bit(0b100, 0) == 1);
    CHECK(reg.bit(0b100, 2) == 0);
}

TEST_CASE("X on qubit 0 of |00> gives |10>") {
    PureState s = PureState::basis_state(QubitRegister(2), 0b00);
    PureState out = apply_operator(s, paulis::x(), {0});
    CHECK(max_diff(out, PureState::basis_state(QubitRegister(2), 0b10)) < 1e-15);
}

TEST_CASE("tilde-basis change sends |0> to (|0>+|1>)/sqrt2") {
    PureState s = PureState::basis_state(QubitRegister(1), 0);
    PureState out = apply_operator(s, paulis::hadamard(), {0});
    CHECK(std::abs(out.amps[0] - kInvSqrt2) < 1e-15);
    CHECK(std::abs(out.amps[1] - kInvSqrt2) < 1e-15);
}

TEST_CASE("X(x)X fixes the Bell state (|00>+|11>)/sqrt2") {
    // Hand expansion: X(x)X maps |00>->|11>, |11>->|00>; the sum is unchanged.
    PureState bell = make_state(2, {kInvSqrt2, 0, 0, kInvSqrt2});
    Matrix m = Matrix::Zero(4, 4);
    m(0, 3) = m(1, 2) = m(2, 1) = m(3, 0) = 1;
    PureState out = apply_operator(bell, Operator(2, m, "XX"), {0, 1});
    CHECK(max_diff(out, bell) < 1e-15);
}

TEST_CASE("apply_operator validates its targets") {
    PureState s = PureState::basis_state(QubitRegister(2), 0);
    CHECK_THROWS_AS(apply_operator(s, paulis::x(), {2}), ValidationError);
    CHECK_THROWS_AS(apply_operator(s, paulis::x(), {0, 1}), ValidationError);
    Operator xx(2, Matrix::Identity(4, 4), "II");
    CHECK_THROWS_AS(apply_operator(s, xx, {1, 1}), ValidationError);
}

TEST_CASE("identity channel leaves any density matrix unchanged") {
    Channel id({Operator::identity(1)}, "id");
    DensityMatrix rho = DensityMatrix::from_pure(random_state(2, 42));
    DensityMatrix out = apply_channel(rho, id, {1});
    CHECK((out.mat - rho.mat).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("full dephasing takes |+><+| to I/2") {
    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1;
    p1(1, 1) = 1;
    Channel dephase({Operator(1, p0, "P0"), Operator(1, p1, "P1")}, "dephase");
    PureState plus = make_state(1, {kInvSqrt2, kInvSqrt2});
    DensityMatrix out = apply_channel(DensityMatrix::from_pure(plus), dephase, {0});
    CHECK((out.mat - Matrix::Identity(2, 2) * 0.5).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("slow-coupling channel populates |1><1| only at second order") {
    // Independent oracle: the excited population after the channel must scale
    // as eps^2, checked by comparing two eps values two decades apart.
    auto excited_population = [](double eps) {
        CouplingSpec spec;
        spec.epsilon = eps;
        spec.seed = 11;
        Channel ch = derive_channel(spec);
        DensityMatrix rho =
            apply_channel(DensityMatrix::from_pure(PureState::basis_state(QubitRegister(1), 0)),
                          ch, {0});
        return rho.mat(1, 1).real();
    };
    const double p_big = excited_population(1e-2);
    const double p_small = excited_population(1e-3);
    CHECK(p_big < 4e-4);  // O(eps^2) with |H| <= 1
    CHECK(p_big / p_small == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("channel application preserves the trace") {
    CouplingSpec spec;
    spec.epsilon = 0.05;
    spec.seed = 3;
    Channel ch = derive_channel(spec);
    DensityMatrix rho = DensityMatrix::from_pure(random_state(3, 7));
    for (int q = 0; q < 3; ++q) rho = apply_channel(rho, ch, {q});
    CHECK(std::abs(rho.trace_real() - 1.0) < 1e-9);
}

TEST_CASE("density matrices stay Hermitian and positive under evolution") {
    CouplingSpec spec;
    spec.epsilon = 0.2;
    spec.seed = 19;
    Channel ch = derive_channel(spec);
    DensityMatrix rho = DensityMatrix::from_pure(random_state(3, 23));
    for (int step = 0; step < 10; ++step)
        for (int q = 0; q < 3; ++q) rho = apply_channel(rho, ch, {q});
    CHECK((rho.mat - rho.mat.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(rho.trace_real() - 1.0) < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.mat);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
}

TEST_CASE("non-trace-preserving Kraus sets are rejected at construction") {
    Operator half = Operator::identity(1);
    half.matrix *= 0.5;
    CHECK_THROWS_AS(Channel({half}, "bad"), ValidationError);
}

TEST_CASE("measurement of basis states is deterministic") {
    std::vector<Operator> projs;
    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1;
    p1(1, 1) = 1;
    projs.emplace_back(1, p0, "P0");
    projs.emplace_back(1, p1, "P1");

    PureState zero = PureState::basis_state(QubitRegister(1), 0);
    std::mt19937_64 rng(1);
    MeasurementResult r = measure_projective(zero, projs, rng);
    CHECK(r.outcome == 0);
    CHECK(r.probability == doctest::Approx(1.0));

    PureState plus = make_state(1, {kInvSqrt2, kInvSqrt2});
    MeasurementResult forced = measure_projective(plus, projs, 1);
    CHECK(forced.probability == doctest::Approx(0.5));
    CHECK(std::abs(forced.state.amps[1]) == doctest::Approx(1.0));

    // Forcing a zero-probability branch is an error.
    CHECK_THROWS_AS(measure_projective(zero, projs, 1), SimulationError);
}

TEST_CASE("the test particle is unflipped with certainty on an encoded state") {
    // Step-1 parity interaction on an encoded state, then a projective
    // measurement of the appended test qubit: the even parity of the first
    // pair forces the "unflipped" outcome.
    Code code = make_code(CodeName::FourParticle);
    PureState joint = code.codewords[0].tensor(PureState::basis_state(QubitRegister(1), 0));
    joint = parity_interaction(joint, 4, 0, GadgetBasis::Computational);
    joint = parity_interaction(joint, 4, 1, GadgetBasis::Computational);

    const std::size_t d = joint.dim();
    Matrix p_unflipped = Matrix::Zero(d, d), p_flipped = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < d; ++i)
        ((i & 1u) ? p_flipped : p_unflipped)(i, i) = 1.0;  // test qubit is the LSB
    std::vector<Operator> projs = {Operator(5, p_unflipped, "pass"),
                                   Operator(5, p_flipped, "flip")};
    MeasurementResult r = measure_projective(joint, projs, 0);
    CHECK(r.probability == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("measurement validates projector completeness and orthogonality") {
    Matrix p0 = Matrix::Zero(2, 2);
    p0(0, 0) = 1;
    PureState zero = PureState::basis_state(QubitRegister(1), 0);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(measure_projective(zero, {Operator(1, p0, "P0")}, rng), ValidationError);
    Matrix notproj = Matrix::Identity(2, 2) * 0.5;
    CHECK_THROWS_AS(
        measure_projective(zero, {Operator(1, notproj, "A"), Operator(1, notproj, "B")}, rng),
        ValidationError);
}

TEST_CASE("measurement outcome probabilities sum to one") {
    PureState psi = random_state(2, 9);
    // Projectors onto a random orthonormal basis of the 2-qubit space.
    Matrix m = Matrix::Random(4, 4);
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ();
    std::vector<Operator> projs;
    for (int i = 0; i < 4; ++i)
        projs.emplace_back(2, (q.col(i) * q.col(i).adjoint()).eval(), "P" + std::to_string(i));
    double total = 0.0;
    for (int i = 0; i < 4; ++i) total += measure_projective(psi, projs, i).probability;
    CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("partial trace of a product state") {
    PureState s = PureState::basis_state(QubitRegister(1), 0)
                      .tensor(PureState::basis_state(QubitRegister(1), 1));
    DensityMatrix reduced = partial_trace(DensityMatrix::from_pure(s), {0});
    CHECK(reduced.mat(0, 0).real() == doctest::Approx(1.0));
    CHECK(std::abs(reduced.mat(1, 1)) < 1e-15);
}

TEST_CASE("partial trace of a Bell pair is maximally mixed") {
    PureState bell = make_state(2, {kInvSqrt2, 0, 0, kInvSqrt2});
    for (int keep : {0, 1}) {
        DensityMatrix reduced = partial_trace(DensityMatrix::from_pure(bell), {keep});
        CHECK((reduced.mat - Matrix::Identity(2, 2) * 0.5).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(reduced.trace_real() - 1.0) < 1e-10);
    }
    CHECK_THROWS_AS(partial_trace(DensityMatrix::from_pure(bell), {}), ValidationError);
}

TEST_CASE("one coupling step shrinks the system off-diagonal at second order") {
    // Oracle: evolve |+> with the explicit environment, trace it out, and fit
    // the coherence loss against eps over two decades.
    auto coherence_loss = [](double eps) {
        CouplingSpec spec;
        spec.epsilon = eps;
        spec.seed = 5;
        Operator u = build_coupling_unitary(spec);
        PureState joint = PureState(QubitRegister(1), (Vector(2) << kInvSqrt2, kInvSqrt2).finished())
                              .tensor(PureState::basis_state(QubitRegister(1), 0));
        joint = apply_operator(joint, u, {0, 1});
        DensityMatrix sys = partial_trace(DensityMatrix::from_pure(joint), {0});
        return 0.5 - std::abs(sys.mat(0, 1));
    };
    const double big = coherence_loss(1e-2);
    const double small = coherence_loss(1e-3);
    CHECK(big / small == doctest::Approx(100.0).epsilon(0.1));
}

TEST_CASE("fidelity basics") {
    PureState psi = random_state(3, 1);
    CHECK(fidelity(psi, psi) == doctest::Approx(1.0));
    PureState zero = PureState::basis_state(QubitRegister(1), 0);
    PureState one = PureState::basis_state(QubitRegister(1), 1);
    CHECK(fidelity(zero, one) == doctest::Approx(0.0));
    DensityMatrix mixed = DensityMatrix::maximally_mixed(QubitRegister(1));
    CHECK(fidelity(mixed, zero) == doctest::Approx(0.5));
    CHECK_THROWS_AS(fidelity(zero, psi), ValidationError);
}

TEST_CASE("norm is preserved along random unitary circuits") {
    for (std::uint64_t seed : {1, 2, 3}) {
        CouplingSpec spec;
        spec.epsilon = 0.8;  // large rotations; still unitary
        spec.seed = seed;
        Operator u = build_coupling_unitary(spec);
        PureState psi = random_state(4, seed);
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pick(0, 3);
        for (int step = 0; step < 50; ++step) {
            int a = pick(rng), b = pick(rng);
            if (a == b) b = (b + 1) % 4;
            psi = apply_operator(psi, u, {a, b});
        }
        CHECK(std::abs(psi.norm_sq() - 1.0) < 1e-9);
    }
}

TEST_CASE("explicit-environment evolution matches the derived Kraus channel") {
    // Purity consistency: one step with an explicit environment qubit, traced
    // out, equals the density-matrix evolution under the derived channel.
    CouplingSpec spec;
    spec.epsilon = 0.07;
    spec.seed = 21;
    Operator u = build_coupling_unitary(spec);
    Channel ch = derive_channel(spec);

    PureState sys = random_state(2, 33);
    PureState joint = sys.tensor(PureState::basis_state(QubitRegister(1), 0));
    joint = apply_operator(joint, u, {1, 2});  // couple system qubit 1 to the environment
    DensityMatrix traced = partial_trace(DensityMatrix::from_pure(joint), {0, 1});

    DensityMatrix direct = apply_channel(DensityMatrix::from_pure(sys), ch, {1});
    CHECK((traced.mat - direct.mat).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("project_out_qubit splits a state into branches") {
    PureState bell = make_state(2, {kInvSqrt2, 0, 0, kInvSqrt2});
    PureState branch0 = project_out_qubit(bell, 1, Eigen::Vector2cd(1, 0));
    CHECK(branch0.norm_sq() == doctest::Approx(0.5));
    CHECK(std::abs(branch0.amps[0] - kInvSqrt2) < 1e-15);
    PureState branch1 = project_out_qubit(bell, 1, Eigen::Vector2cd(0, 1));
    CHECK(branch1.norm_sq() == doctest::Approx(0.5));
    CHECK(std::abs(branch1.amps[1] - kInvSqrt2) < 1e-15);

    DensityMatrix rho = DensityMatrix::from_pure(bell);
    DensityMatrix d0 = project_out_qubit(rho, 1, Eigen::Vector2cd(1, 0));
    CHECK(d0.trace_real() == doctest::Approx(0.5));
}

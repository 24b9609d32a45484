#pragma once

// Dense state-vector / density-matrix kernels for small multi-qubit registers.
//
// Basis convention: qubit 0 is the most significant position of the basis
// label, i.e. index(|q0 q1 ... q(n-1)>) = q0*2^(n-1) + ... + q(n-1).
// All codeword tables and operator targets in the rest of the library are
// written against this convention.

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace zenosim {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Thrown on precondition violations (bad targets, dimension mismatch, ...).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown on runtime simulation failures (zero-probability branch, ...).
struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class QubitRole { System, Environment, Test };

struct QubitRegister {
    static constexpr int kMaxQubits = 12;

    int count = 0;
    std::vector<QubitRole> roles;

    QubitRegister() = default;
    explicit QubitRegister(int n, QubitRole fill = QubitRole::System);

    std::size_t dim() const { return std::size_t{1} << count; }

    // Bit position of a qubit inside a basis index (qubit 0 = MSB).
    int shift(int qubit) const { return count - 1 - qubit; }
    std::size_t mask(int qubit) const { return std::size_t{1} << shift(qubit); }
    int bit(std::size_t index, int qubit) const {
        return static_cast<int>((index >> shift(qubit)) & 1u);
    }

    void require_valid_target(int qubit) const;
};

bool operator==(const QubitRegister& a, const QubitRegister& b);

/// Dense complex amplitude vector over a qubit register. Value-semantic;
/// operations return fresh states. Amplitudes may be transiently unnormalized
/// when a state represents an unrenormalized measurement branch.
struct PureState {
    QubitRegister reg;
    Vector amps;

    PureState() = default;
    PureState(QubitRegister r, Vector a);

    static PureState basis_state(const QubitRegister& r, std::size_t index);
    static PureState zero(const QubitRegister& r) { return basis_state(r, 0); }

    std::size_t dim() const { return reg.dim(); }
    double norm_sq() const { return amps.squaredNorm(); }
    PureState normalized() const;

    /// Tensor product; `other`'s qubits are appended after this state's.
    PureState tensor(const PureState& other) const;
};

struct DensityMatrix {
    QubitRegister reg;
    Matrix mat;

    DensityMatrix() = default;
    DensityMatrix(QubitRegister r, Matrix m);

    static DensityMatrix from_pure(const PureState& psi);
    static DensityMatrix maximally_mixed(const QubitRegister& r);

    std::size_t dim() const { return reg.dim(); }
    double trace_real() const { return mat.trace().real(); }
    DensityMatrix normalized() const;

    DensityMatrix tensor(const DensityMatrix& other) const;
};

/// A k-qubit matrix with a human-readable label. `arity` is the number of
/// target qubits; callers supply the concrete targets at application time.
struct Operator {
    int arity = 0;
    Matrix matrix;
    std::string label;

    Operator() = default;
    Operator(int k, Matrix m, std::string name);

    static Operator identity(int k);

    std::size_t dim() const { return std::size_t{1} << arity; }
    Operator adjoint() const;
    bool is_unitary(double tol = 1e-10) const;
};

/// Completely positive trace-preserving map as a finite Kraus list.
/// Construction validates sum K^dag K = I.
struct Channel {
    std::vector<Operator> kraus;
    int arity = 0;
    std::string label;

    Channel() = default;
    Channel(std::vector<Operator> ks, std::string name, double tol = 1e-8);
};

// Fixed single-qubit operators.
namespace paulis {
Operator identity();
Operator x();
Operator y();
Operator z();
/// Tilde-basis change |~0> = (|0>+|1>)/sqrt2, |~1> = (|0>-|1>)/sqrt2.
Operator hadamard();
}  // namespace paulis

// ---- Operations ------------------------------------------------------------

/// Apply `op` to the listed target qubits (targets[0] is the most significant
/// bit of the operator's local index), identity elsewhere.
PureState apply_operator(const PureState& state, const Operator& op,
                         const std::vector<int>& targets);

/// rho -> U rho U^dag on the listed targets.
DensityMatrix apply_operator(const DensityMatrix& rho, const Operator& op,
                             const std::vector<int>& targets);

/// rho -> sum_m K_m rho K_m^dag on the listed targets.
DensityMatrix apply_channel(const DensityMatrix& rho, const Channel& ch,
                            const std::vector<int>& targets);

struct MeasurementResult {
    int outcome = -1;
    PureState state;       // renormalized post-measurement state
    double probability = 0.0;
};

/// Projective measurement against a complete orthogonal projector set over the
/// full register. Sampled mode draws the outcome with Born probabilities.
MeasurementResult measure_projective(const PureState& state,
                                     const std::vector<Operator>& projectors,
                                     std::mt19937_64& rng);

/// Forced mode: the caller selects the branch and receives its probability.
/// Requesting a branch of probability < 1e-14 is an error.
MeasurementResult measure_projective(const PureState& state,
                                     const std::vector<Operator>& projectors,
                                     int forced_outcome);

/// Reduced density matrix over `keep` (result qubit order follows the list).
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep);

/// |<a|b>|^2 for pure-pure, <b|rho|b> for mixed-pure.
double fidelity(const PureState& a, const PureState& b);
double fidelity(const DensityMatrix& a, const PureState& b);

// ---- Single-qubit branch helpers (used by the gadget layer) ----------------

/// Contract qubit `q` against the single-qubit ket `bra_of` and drop it from
/// the register. The result is unnormalized; its squared norm is the branch
/// probability when the input is normalized.
PureState project_out_qubit(const PureState& state, int q,
                            const Eigen::Vector2cd& bra_of);
DensityMatrix project_out_qubit(const DensityMatrix& rho, int q,
                                const Eigen::Vector2cd& bra_of);

// ---- Small utilities --------------------------------------------------------

/// splitmix64 step; used to derive independent sub-seeds from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace zenosim

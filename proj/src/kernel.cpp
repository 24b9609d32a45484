#include "zenosim/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace zenosim {

namespace {

void require_distinct_targets(const std::vector<int>& targets) {
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if (targets[i] == targets[j])
                throw ValidationError("duplicate target qubit " + std::to_string(targets[i]));
}

void require_targets(const QubitRegister& reg, const Operator& op,
                     const std::vector<int>& targets) {
    if (static_cast<int>(targets.size()) != op.arity)
        throw ValidationError("operator arity " + std::to_string(op.arity) +
                              " does not match " + std::to_string(targets.size()) +
                              " targets");
    require_distinct_targets(targets);
    for (int t : targets) reg.require_valid_target(t);
}

// Local index m (targets[0] = MSB) -> global index bits for the targets.
std::vector<std::size_t> spread_table(const QubitRegister& reg,
                                      const std::vector<int>& targets) {
    const int k = static_cast<int>(targets.size());
    std::vector<std::size_t> spread(std::size_t{1} << k, 0);
    for (std::size_t m = 0; m < spread.size(); ++m) {
        std::size_t g = 0;
        for (int j = 0; j < k; ++j)
            if ((m >> (k - 1 - j)) & 1u) g |= reg.mask(targets[j]);
        spread[m] = g;
    }
    return spread;
}

std::size_t targets_mask(const QubitRegister& reg, const std::vector<int>& targets) {
    std::size_t m = 0;
    for (int t : targets) m |= reg.mask(t);
    return m;
}

// In-place kernel: v <- (op on targets) v for a full-register vector.
void apply_to_vector(Vector& v, const Matrix& op,
                     const std::vector<std::size_t>& spread, std::size_t tmask) {
    const std::size_t dim = v.size();
    const std::size_t sub = spread.size();
    Eigen::VectorXcd local(sub);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & tmask) continue;
        for (std::size_t m = 0; m < sub; ++m) local[m] = v[base | spread[m]];
        Eigen::VectorXcd out = op * local;
        for (std::size_t m = 0; m < sub; ++m) v[base | spread[m]] = out[m];
    }
}

}  // namespace

// ---- QubitRegister ----------------------------------------------------------

QubitRegister::QubitRegister(int n, QubitRole fill) : count(n), roles(n, fill) {
    if (n < 1 || n > kMaxQubits)
        throw ValidationError("register size " + std::to_string(n) +
                              " outside [1, " + std::to_string(kMaxQubits) + "]");
}

void QubitRegister::require_valid_target(int qubit) const {
    if (qubit < 0 || qubit >= count)
        throw ValidationError("qubit index " + std::to_string(qubit) +
                              " out of range for " + std::to_string(count) +
                              "-qubit register");
}

bool operator==(const QubitRegister& a, const QubitRegister& b) {
    return a.count == b.count && a.roles == b.roles;
}

// ---- PureState ----------------------------------------------------------------

PureState::PureState(QubitRegister r, Vector a) : reg(std::move(r)), amps(std::move(a)) {
    if (static_cast<std::size_t>(amps.size()) != reg.dim())
        throw ValidationError("amplitude vector length " + std::to_string(amps.size()) +
                              " != 2^" + std::to_string(reg.count));
}

PureState PureState::basis_state(const QubitRegister& r, std::size_t index) {
    if (index >= r.dim()) throw ValidationError("basis index out of range");
    Vector a = Vector::Zero(r.dim());
    a[index] = 1.0;
    return PureState(r, std::move(a));
}

PureState PureState::normalized() const {
    const double n = std::sqrt(norm_sq());
    if (n < 1e-300) throw SimulationError("cannot normalize a zero state");
    return PureState(reg, amps / n);
}

PureState PureState::tensor(const PureState& other) const {
    QubitRegister r(reg.count + other.reg.count);
    r.roles = reg.roles;
    r.roles.insert(r.roles.end(), other.reg.roles.begin(), other.reg.roles.end());
    Vector a(r.dim());
    const std::size_t od = other.dim();
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < od; ++j) a[i * od + j] = amps[i] * other.amps[j];
    return PureState(std::move(r), std::move(a));
}

// ---- DensityMatrix ------------------------------------------------------------

DensityMatrix::DensityMatrix(QubitRegister r, Matrix m) : reg(std::move(r)), mat(std::move(m)) {
    if (static_cast<std::size_t>(mat.rows()) != reg.dim() ||
        static_cast<std::size_t>(mat.cols()) != reg.dim())
        throw ValidationError("density matrix dimension does not match register");
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    return DensityMatrix(psi.reg, psi.amps * psi.amps.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(const QubitRegister& r) {
    const double d = static_cast<double>(r.dim());
    return DensityMatrix(r, Matrix::Identity(r.dim(), r.dim()) / d);
}

DensityMatrix DensityMatrix::normalized() const {
    const double t = trace_real();
    if (t < 1e-300) throw SimulationError("cannot normalize a zero-trace density matrix");
    return DensityMatrix(reg, mat / t);
}

DensityMatrix DensityMatrix::tensor(const DensityMatrix& other) const {
    QubitRegister r(reg.count + other.reg.count);
    r.roles = reg.roles;
    r.roles.insert(r.roles.end(), other.reg.roles.begin(), other.reg.roles.end());
    const std::size_t d1 = dim(), d2 = other.dim();
    Matrix m(d1 * d2, d1 * d2);
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t j = 0; j < d1; ++j)
            m.block(i * d2, j * d2, d2, d2) = mat(i, j) * other.mat;
    return DensityMatrix(std::move(r), std::move(m));
}

// ---- Operator -------------------------------------------------------------------

Operator::Operator(int k, Matrix m, std::string name)
    : arity(k), matrix(std::move(m)), label(std::move(name)) {
    if (k < 1) throw ValidationError("operator arity must be >= 1");
    const std::size_t d = std::size_t{1} << k;
    if (static_cast<std::size_t>(matrix.rows()) != d ||
        static_cast<std::size_t>(matrix.cols()) != d)
        throw ValidationError("operator '" + label + "' matrix is not 2^arity square");
}

Operator Operator::identity(int k) {
    const std::size_t d = std::size_t{1} << k;
    return Operator(k, Matrix::Identity(d, d), "I");
}

Operator Operator::adjoint() const { return Operator(arity, matrix.adjoint(), label + "^dag"); }

bool Operator::is_unitary(double tol) const {
    Matrix delta = matrix.adjoint() * matrix - Matrix::Identity(dim(), dim());
    return delta.cwiseAbs().maxCoeff() <= tol;
}

// ---- Channel ----------------------------------------------------------------------

Channel::Channel(std::vector<Operator> ks, std::string name, double tol)
    : kraus(std::move(ks)), label(std::move(name)) {
    if (kraus.empty()) throw ValidationError("channel '" + label + "' has no Kraus operators");
    arity = kraus.front().arity;
    const std::size_t d = std::size_t{1} << arity;
    Matrix sum = Matrix::Zero(d, d);
    for (const Operator& k : kraus) {
        if (k.arity != arity)
            throw ValidationError("channel '" + label + "' mixes Kraus arities");
        sum += k.matrix.adjoint() * k.matrix;
    }
    const double err = (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (err > tol)
        throw ValidationError("channel '" + label + "' is not trace preserving (|sum K^dag K - I| = " +
                              std::to_string(err) + ")");
}

namespace paulis {

Operator identity() { return Operator::identity(1); }

Operator x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return Operator(1, m, "X");
}

Operator y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return Operator(1, m, "Y");
}

Operator z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return Operator(1, m, "Z");
}

Operator hadamard() {
    const double s = 1.0 / std::sqrt(2.0);
    Matrix m(2, 2);
    m << s, s, s, -s;
    return Operator(1, m, "H");
}

}  // namespace paulis

// ---- Operations ----------------------------------------------------------------------

PureState apply_operator(const PureState& state, const Operator& op,
                         const std::vector<int>& targets) {
    require_targets(state.reg, op, targets);
    auto spread = spread_table(state.reg, targets);
    auto tmask = targets_mask(state.reg, targets);
    Vector v = state.amps;
    apply_to_vector(v, op.matrix, spread, tmask);
    return PureState(state.reg, std::move(v));
}

DensityMatrix apply_operator(const DensityMatrix& rho, const Operator& op,
                             const std::vector<int>& targets) {
    require_targets(rho.reg, op, targets);
    auto spread = spread_table(rho.reg, targets);
    auto tmask = targets_mask(rho.reg, targets);
    const std::size_t dim = rho.dim();
    Matrix m = rho.mat;
    // U rho U^dag: transform columns by U, then rows by conj(U).
    for (std::size_t c = 0; c < dim; ++c) {
        Vector col = m.col(c);
        apply_to_vector(col, op.matrix, spread, tmask);
        m.col(c) = col;
    }
    const Matrix conj_op = op.matrix.conjugate();
    for (std::size_t r = 0; r < dim; ++r) {
        Vector row = m.row(r).transpose();
        apply_to_vector(row, conj_op, spread, tmask);
        m.row(r) = row.transpose();
    }
    return DensityMatrix(rho.reg, std::move(m));
}

DensityMatrix apply_channel(const DensityMatrix& rho, const Channel& ch,
                            const std::vector<int>& targets) {
    if (ch.kraus.empty()) throw ValidationError("empty channel");
    Matrix acc = Matrix::Zero(rho.dim(), rho.dim());
    for (const Operator& k : ch.kraus) {
        DensityMatrix term = apply_operator(rho, k, targets);
        acc += term.mat;
    }
    return DensityMatrix(rho.reg, std::move(acc));
}

namespace {

std::vector<double> branch_probabilities(const PureState& state,
                                         const std::vector<Operator>& projectors) {
    if (projectors.empty()) throw ValidationError("empty projector set");
    const std::size_t d = state.dim();
    Matrix sum = Matrix::Zero(d, d);
    for (const Operator& p : projectors) {
        if (p.dim() != d)
            throw ValidationError("projector dimension does not match register");
        sum += p.matrix;
    }
    if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("projectors do not sum to identity");
    for (std::size_t i = 0; i < projectors.size(); ++i)
        for (std::size_t j = 0; j < projectors.size(); ++j) {
            Matrix prod = projectors[i].matrix * projectors[j].matrix;
            const Matrix& expect = (i == j) ? projectors[i].matrix
                                            : Matrix::Zero(d, d).eval();
            if ((prod - expect).cwiseAbs().maxCoeff() > 1e-8)
                throw ValidationError("projectors are not mutually orthogonal idempotents");
        }
    std::vector<double> probs(projectors.size());
    for (std::size_t i = 0; i < projectors.size(); ++i)
        probs[i] = (state.amps.adjoint() * projectors[i].matrix * state.amps)(0).real();
    return probs;
}

MeasurementResult collapse(const PureState& state, const std::vector<Operator>& projectors,
                           int outcome, double prob) {
    Vector post = projectors[outcome].matrix * state.amps;
    post /= std::sqrt(prob);
    return MeasurementResult{outcome, PureState(state.reg, std::move(post)), prob};
}

}  // namespace

MeasurementResult measure_projective(const PureState& state,
                                     const std::vector<Operator>& projectors,
                                     std::mt19937_64& rng) {
    auto probs = branch_probabilities(state, projectors);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double acc = 0.0;
    int outcome = static_cast<int>(probs.size()) - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            outcome = static_cast<int>(i);
            break;
        }
    }
    return collapse(state, projectors, outcome, probs[outcome]);
}

MeasurementResult measure_projective(const PureState& state,
                                     const std::vector<Operator>& projectors,
                                     int forced_outcome) {
    auto probs = branch_probabilities(state, projectors);
    if (forced_outcome < 0 || forced_outcome >= static_cast<int>(probs.size()))
        throw ValidationError("forced outcome index out of range");
    if (probs[forced_outcome] < 1e-14)
        throw SimulationError("forced measurement branch has probability < 1e-14");
    return collapse(state, projectors, forced_outcome, probs[forced_outcome]);
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
    if (keep.empty()) throw ValidationError("partial_trace: empty keep list");
    require_distinct_targets(keep);
    for (int q : keep) rho.reg.require_valid_target(q);

    const int n = rho.reg.count;
    const int k = static_cast<int>(keep.size());
    std::vector<int> traced;
    for (int q = 0; q < n; ++q)
        if (std::find(keep.begin(), keep.end(), q) == keep.end()) traced.push_back(q);

    QubitRegister out_reg(k);
    for (int i = 0; i < k; ++i) out_reg.roles[i] = rho.reg.roles[keep[i]];

    const std::size_t kd = out_reg.dim();
    const std::size_t td = std::size_t{1} << traced.size();
    Matrix out = Matrix::Zero(kd, kd);

    auto compose = [&](std::size_t kept_bits, std::size_t traced_bits) {
        std::size_t g = 0;
        for (int i = 0; i < k; ++i)
            if ((kept_bits >> (k - 1 - i)) & 1u) g |= rho.reg.mask(keep[i]);
        for (std::size_t i = 0; i < traced.size(); ++i)
            if ((traced_bits >> (traced.size() - 1 - i)) & 1u) g |= rho.reg.mask(traced[i]);
        return g;
    };

    for (std::size_t a = 0; a < kd; ++a)
        for (std::size_t b = 0; b < kd; ++b) {
            Complex sum = 0.0;
            for (std::size_t t = 0; t < td; ++t) sum += rho.mat(compose(a, t), compose(b, t));
            out(a, b) = sum;
        }
    return DensityMatrix(std::move(out_reg), std::move(out));
}

double fidelity(const PureState& a, const PureState& b) {
    if (a.dim() != b.dim()) throw ValidationError("fidelity: dimension mismatch");
    return std::norm(a.amps.dot(b.amps));
}

double fidelity(const DensityMatrix& a, const PureState& b) {
    if (a.dim() != b.dim()) throw ValidationError("fidelity: dimension mismatch");
    return (b.amps.adjoint() * a.mat * b.amps)(0).real();
}

// ---- Branch helpers ------------------------------------------------------------------

namespace {

QubitRegister drop_qubit(const QubitRegister& reg, int q) {
    QubitRegister out(reg.count - 1);
    out.roles.clear();
    for (int i = 0; i < reg.count; ++i)
        if (i != q) out.roles.push_back(reg.roles[i]);
    return out;
}

}  // namespace

PureState project_out_qubit(const PureState& state, int q, const Eigen::Vector2cd& bra_of) {
    state.reg.require_valid_target(q);
    if (state.reg.count < 2)
        throw ValidationError("cannot project out the only qubit of a register");
    const std::size_t qmask = state.reg.mask(q);
    const std::size_t lowmask = qmask - 1;
    QubitRegister out_reg = drop_qubit(state.reg, q);
    Vector out = Vector::Zero(out_reg.dim());
    for (std::size_t i = 0; i < out_reg.dim(); ++i) {
        const std::size_t base = ((i & ~lowmask) << 1) | (i & lowmask);
        out[i] = std::conj(bra_of[0]) * state.amps[base] +
                 std::conj(bra_of[1]) * state.amps[base | qmask];
    }
    return PureState(std::move(out_reg), std::move(out));
}

DensityMatrix project_out_qubit(const DensityMatrix& rho, int q,
                                const Eigen::Vector2cd& bra_of) {
    rho.reg.require_valid_target(q);
    if (rho.reg.count < 2)
        throw ValidationError("cannot project out the only qubit of a register");
    const std::size_t qmask = rho.reg.mask(q);
    const std::size_t lowmask = qmask - 1;
    QubitRegister out_reg = drop_qubit(rho.reg, q);
    const std::size_t od = out_reg.dim();
    Matrix out(od, od);
    auto expand = [&](std::size_t i) { return ((i & ~lowmask) << 1) | (i & lowmask); };
    for (std::size_t a = 0; a < od; ++a) {
        const std::size_t ea = expand(a);
        for (std::size_t b = 0; b < od; ++b) {
            const std::size_t eb = expand(b);
            Complex sum = 0.0;
            for (int s = 0; s < 2; ++s)
                for (int t = 0; t < 2; ++t)
                    sum += std::conj(bra_of[s]) * bra_of[t] *
                           rho.mat(ea | (s ? qmask : 0), eb | (t ? qmask : 0));
            out(a, b) = sum;
        }
    }
    return DensityMatrix(std::move(out_reg), std::move(out));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace zenosim

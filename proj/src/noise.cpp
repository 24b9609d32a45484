#include "zenosim/noise.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace zenosim {

namespace {

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

int log2_int(int v) {
    int k = 0;
    while ((1 << k) < v) ++k;
    return k;
}

Matrix random_gaussian_matrix(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    return m;
}

Matrix random_hermitian(int d, std::mt19937_64& rng) {
    Matrix m = random_gaussian_matrix(d, rng);
    return (m + m.adjoint().eval()) / 2.0;
}

// Traceless, unit spectral norm. Zero generators are rejected (cannot happen
// for the random draws above, but guards hand-built specs).
Matrix normalize_generator(Matrix h) {
    const int d = static_cast<int>(h.rows());
    h -= (h.trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    if (top < 1e-12) throw ValidationError("degenerate zero noise generator");
    return h / top;
}

Matrix generator_for(const CouplingSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    const int ed = spec.env_dim;
    const int d = 2 * ed;
    Matrix h = Matrix::Zero(d, d);
    switch (spec.kind) {
        case NoiseKind::Generic:
            h = random_hermitian(d, rng);
            break;
        case NoiseKind::DephasingOnly:
            // Commutes with Z on the system factor: block diagonal in the
            // system index, so no |0> <-> |1> terms are ever generated.
            h.block(0, 0, ed, ed) = random_hermitian(ed, rng);
            h.block(ed, ed, ed, ed) = random_hermitian(ed, rng);
            break;
        case NoiseKind::FlipOnly: {
            // Anticommutes with Z on the system factor: zero diagonal blocks.
            Matrix c = random_gaussian_matrix(ed, rng);
            h.block(0, ed, ed, ed) = c;
            h.block(ed, 0, ed, ed) = c.adjoint();
            break;
        }
    }
    return normalize_generator(std::move(h));
}

Matrix exp_minus_i_eps(const Matrix& h, double eps) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const auto& lambda = es.eigenvalues();
    Vector phases(lambda.size());
    for (int i = 0; i < lambda.size(); ++i)
        phases[i] = std::exp(Complex(0.0, -eps * lambda[i]));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

void check_coupling_bounds(const Operator& u, const CouplingSpec& spec) {
    CouplingCoefficients c = measure_coupling_coefficients(u, spec.env_dim);
    const double gamma_floor = 1.0 - spec.epsilon * spec.epsilon;
    const double delta_ceil = 2.0 * spec.epsilon;
    if (std::abs(c.gamma1) < gamma_floor || std::abs(c.gamma2) < gamma_floor ||
        c.delta_max > delta_ceil)
        throw ValidationError(
            "coupling step violates slow-noise bounds: |gamma1|=" +
            std::to_string(std::abs(c.gamma1)) + ", |gamma2|=" +
            std::to_string(std::abs(c.gamma2)) + ", |delta|max=" +
            std::to_string(c.delta_max) + " at eps=" + std::to_string(spec.epsilon));
}

}  // namespace

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "generic") return NoiseKind::Generic;
    if (s == "dephasing-only" || s == "dephasing_only") return NoiseKind::DephasingOnly;
    if (s == "flip-only" || s == "flip_only") return NoiseKind::FlipOnly;
    throw ValidationError("unknown noise kind '" + s + "'");
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Generic: return "generic";
        case NoiseKind::DephasingOnly: return "dephasing-only";
        case NoiseKind::FlipOnly: return "flip-only";
    }
    return "?";
}

void CouplingSpec::validate() const {
    if (epsilon < 0.0) throw ValidationError("coupling epsilon must be >= 0");
    if (!is_power_of_two(env_dim) || env_dim < 2)
        throw ValidationError("env_dim must be a power of two >= 2");
}

Operator build_coupling_unitary(const CouplingSpec& spec) {
    spec.validate();
    const int arity = 1 + log2_int(spec.env_dim);
    if (spec.epsilon == 0.0) return Operator::identity(arity);
    Matrix u = exp_minus_i_eps(generator_for(spec), spec.epsilon);
    Operator op(arity, std::move(u), "coupling[" + to_string(spec.kind) + "]");
    check_coupling_bounds(op, spec);
    return op;
}

CouplingCoefficients measure_coupling_coefficients(const Operator& u, int env_dim) {
    const int d = static_cast<int>(u.dim());
    if (d != 2 * env_dim)
        throw ValidationError("coupling operator does not match env_dim");
    CouplingCoefficients c;
    c.gamma1 = u.matrix(0, 0);
    c.gamma2 = u.matrix(env_dim, env_dim);
    for (int r = 0; r < d; ++r) {
        if (r != 0) c.delta_max = std::max(c.delta_max, std::abs(u.matrix(r, 0)));
        if (r != env_dim) c.delta_max = std::max(c.delta_max, std::abs(u.matrix(r, env_dim)));
    }
    return c;
}

Channel derive_channel(const CouplingSpec& spec) {
    spec.validate();
    if (spec.epsilon == 0.0)
        return Channel({Operator::identity(1)}, "coupling-channel[identity]", 1e-10);
    Operator u = build_coupling_unitary(spec);
    std::vector<Operator> kraus;
    kraus.reserve(spec.env_dim);
    for (int m = 0; m < spec.env_dim; ++m) {
        Matrix k(2, 2);
        for (int sp = 0; sp < 2; ++sp)
            for (int s = 0; s < 2; ++s)
                k(sp, s) = u.matrix(sp * spec.env_dim + m, s * spec.env_dim + 0);
        kraus.emplace_back(1, std::move(k), "K" + std::to_string(m));
    }
    return Channel(std::move(kraus), "coupling-channel[" + to_string(spec.kind) + "]", 1e-10);
}

KickKind kick_kind_from_string(const std::string& s) {
    if (s == "X" || s == "x") return KickKind::X;
    if (s == "Z" || s == "z") return KickKind::Z;
    if (s == "Y" || s == "y") return KickKind::Y;
    throw ValidationError("unknown kick kind '" + s + "'");
}

std::string to_string(KickKind kind) {
    switch (kind) {
        case KickKind::X: return "X";
        case KickKind::Z: return "Z";
        case KickKind::Y: return "Y";
    }
    return "?";
}

Channel kick_noise(double p, KickKind kind) {
    if (p < 0.0 || p > 1.0) throw ValidationError("kick probability outside [0, 1]");
    Operator error = (kind == KickKind::X)   ? paulis::x()
                     : (kind == KickKind::Z) ? paulis::z()
                                             : paulis::y();
    std::vector<Operator> kraus;
    if (p < 1.0) {
        Operator keep = Operator::identity(1);
        keep.matrix *= std::sqrt(1.0 - p);
        kraus.push_back(std::move(keep));
    }
    if (p > 0.0) {
        error.matrix *= std::sqrt(p);
        kraus.push_back(std::move(error));
    }
    return Channel(std::move(kraus), "kick[" + to_string(kind) + "]", 1e-12);
}

Operator correlated_gadget_noise(const CouplingSpec& spec) {
    CouplingSpec joint = spec;
    joint.kind = NoiseKind::Generic;
    joint.env_dim = 2;  // the "environment" slot is the system qubit being visited
    joint.validate();
    if (joint.epsilon == 0.0) return Operator::identity(2);
    Matrix u = exp_minus_i_eps(generator_for(joint), joint.epsilon);
    Operator op(2, std::move(u), "gadget-noise");
    check_coupling_bounds(op, joint);
    return op;
}

nlohmann::json to_json(const CouplingSpec& spec) {
    return nlohmann::json{{"kind", to_string(spec.kind)},
                          {"epsilon", spec.epsilon},
                          {"seed", spec.seed},
                          {"env_dim", spec.env_dim}};
}

CouplingSpec coupling_spec_from_json(const nlohmann::json& j) {
    CouplingSpec spec;
    spec.kind = noise_kind_from_string(j.at("kind").get<std::string>());
    spec.epsilon = j.at("epsilon").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.env_dim = j.value("env_dim", 2);
    spec.validate();
    return spec;
}

}  // namespace zenosim

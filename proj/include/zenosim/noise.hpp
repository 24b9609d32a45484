#pragma once

// Slow entangling noise, its traced Kraus channels, discrete-kick fast noise,
// and the correlated test-particle coupling imperfection.
//
// A coupling step acts on (system qubit tensor environment) as U = exp(-i eps H)
// with H a seeded random Hermitian generator, traceless and normalized to unit
// spectral norm, so eps is directly the per-step rotation scale. Expanding
// U|0>|e> gives gamma |0>|e> + delta_1 |0>|e1> + delta_2 |1>|e2> with
// |gamma| >= 1 - eps^2 and |delta| <= 2 eps.

#include <cstdint>
#include <string>

#include "zenosim/kernel.hpp"

#include "json.hpp"

namespace zenosim {

enum class NoiseKind { Generic, DephasingOnly, FlipOnly };

NoiseKind noise_kind_from_string(const std::string& s);
std::string to_string(NoiseKind kind);

struct CouplingSpec {
    double epsilon = 0.0;
    NoiseKind kind = NoiseKind::Generic;
    std::uint64_t seed = 0;
    int env_dim = 2;  // power of two, >= 2

    void validate() const;
};

/// Coefficients measured from the columns U|0>|e0> and U|1>|e0>.
struct CouplingCoefficients {
    Complex gamma1;
    Complex gamma2;
    double delta_max = 0.0;
};

/// Joint step unitary on (system qubit, environment). The system qubit is the
/// most significant factor: joint index = s * env_dim + e.
Operator build_coupling_unitary(const CouplingSpec& spec);

CouplingCoefficients measure_coupling_coefficients(const Operator& u, int env_dim);

/// Single-system-qubit channel obtained by tracing the environment (initial
/// state |e0>) out of the coupling unitary: K_m = <m|_env U |e0>_env.
Channel derive_channel(const CouplingSpec& spec);

enum class KickKind { X, Z, Y };

KickKind kick_kind_from_string(const std::string& s);
std::string to_string(KickKind kind);

/// Full-strength error at rate p: {sqrt(1-p) I, sqrt(p) E}. Models fast rare
/// collisions, outside the slow-noise regime.
Channel kick_noise(double p, KickKind kind);

/// Two-qubit perturbation exp(-i eps H2) on (test particle, system qubit),
/// applied around each gadget interaction. Same generator normalization and
/// bounds as build_coupling_unitary.
Operator correlated_gadget_noise(const CouplingSpec& spec);

nlohmann::json to_json(const CouplingSpec& spec);
CouplingSpec coupling_spec_from_json(const nlohmann::json& j);

}  // namespace zenosim

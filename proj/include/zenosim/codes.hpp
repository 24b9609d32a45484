#pragma once

// The three error-prevention encodings, their projectors, encode/decode maps,
// and brute-force code analysis: single-particle error orbits, the
// first-order prevention condition, and a randomized three-qubit search.

#include <cstdint>
#include <string>
#include <vector>

#include "zenosim/kernel.hpp"

#include "json.hpp"

namespace zenosim {

enum class CodeName { FourParticle, FourParticleTwoLogical, TwoParticleDephasing };

CodeName code_name_from_string(const std::string& s);
std::string to_string(CodeName name);
std::vector<CodeName> all_code_names();

struct Code {
    std::string name;
    int n_physical = 0;
    std::vector<PureState> codewords;  // logical basis, index = logical value
    Matrix projector;                  // sum_i |i_E><i_E|

    int logical_qubits() const;
    std::size_t dim() const { return std::size_t{1} << n_physical; }
};

Code make_code(CodeName name);

/// alpha_i |i> -> sum_i alpha_i |i_E>. The logical register has
/// log2(#codewords) qubits.
PureState encode(const Code& code, const PureState& logical);

struct DecodeResult {
    DensityMatrix logical;  // renormalized <i_E|rho|j_E>
    double leakage = 0.0;   // 1 - tr(P rho P)
};

DecodeResult decode(const Code& code, const PureState& physical);
DecodeResult decode(const Code& code, const DensityMatrix& physical);

struct OrbitEntry {
    std::string error_label;  // "X0".."Z3", lexicographically ordered
    PureState state;
};

struct ErrorOrbitReport {
    int source_index = 0;
    std::vector<OrbitEntry> orbit;        // all 3 * n_physical entries
    Matrix gram;                          // Gram matrix of the orbit states
    std::vector<int> distinct;            // orbit indices after phase-insensitive dedup
    int orthogonal_count = 0;             // greedy maximal mutually-orthogonal subset
    double overlaps_with_other_codewords = 0.0;  // max |<j_E|E|i_E>|, j != i
};

ErrorOrbitReport error_orbit(const Code& code, int codeword_index);

enum class ErrorSet { AllPaulis, DephasingOnly };

struct PreventionReport {
    bool pass = false;
    double worst_overlap = 0.0;   // max |<j_E|E|i_E>| over i != j
    std::string witness_error;    // error and pair achieving worst_overlap
    int witness_from = -1;
    int witness_to = -1;
    // First-order freeze diagnostics: P E P must be proportional to P, so the
    // diagonal elements <i_E|E|i_E> must also all agree.
    double worst_diagonal_spread = 0.0;
    std::string diagonal_witness;
};

/// Pass iff <j_E|E|i_E> = 0 (within 1e-10) for every single-qubit Pauli E and
/// every i != j. Diagonal spread is reported as a supplementary diagnostic and
/// does not affect pass/fail.
PreventionReport check_prevention_condition(const std::vector<PureState>& codewords,
                                            ErrorSet errors = ErrorSet::AllPaulis);

struct ThreeQubitSearchReport {
    int trials = 0;
    std::uint64_t seed = 0;
    double min_violation = 0.0;  // smallest freeze-condition violation found
    std::vector<Complex> best_word0;
    std::vector<Complex> best_word1;
    double repetition_code_violation = 0.0;  // {|000>, |111>}, always evaluated
};

/// Randomized search for a three-qubit prevention code. The violation of a
/// candidate pair is max(off-diagonal overlap, diagonal spread / 2) over all
/// nine single-qubit Paulis; a valid code would need violation 0. Evidence
/// only, never a proof.
ThreeQubitSearchReport search_three_qubit_codes(int trials, std::uint64_t seed);

struct CodewordAnalysis {
    int index = 0;
    int orthogonal_count = 0;  // mutually orthogonal states in this orbit
    int fresh_states = 0;      // deduped orbit states not seen in earlier orbits / code space
};

struct CodeAnalysis {
    std::string code_name;
    std::vector<CodewordAnalysis> codewords;
    PreventionReport prevention;
    PreventionReport prevention_dephasing_only;
    double max_codeword_overlap = 0.0;       // orthonormality residual
    double projector_idempotence_residual = 0.0;
};

CodeAnalysis analyze_code(const Code& code);

/// Candidate codewords as a JSON array of codewords, each an array of
/// [re, im] pairs over the fixed big-endian basis ordering.
std::vector<PureState> codewords_from_json(const nlohmann::json& j);
nlohmann::json codewords_to_json(const std::vector<PureState>& words);

}  // namespace zenosim

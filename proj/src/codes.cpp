#include "zenosim/codes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zenosim {

namespace {

constexpr double kDedupTol = 1e-10;      // phase-insensitive equality
constexpr double kOrthoTol = 1e-10;      // exact-zero overlap threshold
constexpr double kCodewordTol = 1e-12;

PureState four_qubit_word(std::initializer_list<std::pair<std::size_t, double>> entries) {
    QubitRegister reg(4);
    Vector a = Vector::Zero(16);
    for (auto [idx, val] : entries) a[idx] = val;
    return PureState(reg, std::move(a));
}

PureState two_qubit_word(std::initializer_list<std::pair<std::size_t, double>> entries) {
    QubitRegister reg(2);
    Vector a = Vector::Zero(4);
    for (auto [idx, val] : entries) a[idx] = val;
    return PureState(reg, std::move(a));
}

Matrix projector_of(const std::vector<PureState>& words) {
    const std::size_t d = words.front().dim();
    Matrix p = Matrix::Zero(d, d);
    for (const PureState& w : words) p += w.amps * w.amps.adjoint();
    return p;
}

std::vector<Operator> single_qubit_errors(ErrorSet set) {
    if (set == ErrorSet::DephasingOnly) return {paulis::z()};
    return {paulis::x(), paulis::y(), paulis::z()};
}

void require_orthonormal(const std::vector<PureState>& words, double tol) {
    for (std::size_t i = 0; i < words.size(); ++i)
        for (std::size_t j = i; j < words.size(); ++j) {
            const Complex ov = words[i].amps.dot(words[j].amps);
            const double expect = (i == j) ? 1.0 : 0.0;
            if (std::abs(ov - expect) > tol)
                throw ValidationError("codewords are not orthonormal (pair " +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
}

// max(off-diagonal overlap, diagonal spread / 2) over all single-qubit Paulis;
// 0 iff P E P is proportional to P for every E, the first-order freeze
// condition used by the three-qubit search.
double freeze_violation(const std::vector<PureState>& words) {
    PreventionReport r = check_prevention_condition(words);
    return std::max(r.worst_overlap, r.worst_diagonal_spread / 2.0);
}

}  // namespace

CodeName code_name_from_string(const std::string& s) {
    if (s == "four_particle") return CodeName::FourParticle;
    if (s == "four_particle_two_logical") return CodeName::FourParticleTwoLogical;
    if (s == "two_particle_dephasing") return CodeName::TwoParticleDephasing;
    throw ValidationError("unknown code '" + s + "'");
}

std::string to_string(CodeName name) {
    switch (name) {
        case CodeName::FourParticle: return "four_particle";
        case CodeName::FourParticleTwoLogical: return "four_particle_two_logical";
        case CodeName::TwoParticleDephasing: return "two_particle_dephasing";
    }
    return "?";
}

std::vector<CodeName> all_code_names() {
    return {CodeName::FourParticle, CodeName::FourParticleTwoLogical,
            CodeName::TwoParticleDephasing};
}

int Code::logical_qubits() const {
    int k = 0;
    while ((std::size_t{1} << k) < codewords.size()) ++k;
    return k;
}

Code make_code(CodeName name) {
    Code code;
    code.name = to_string(name);
    const double h = 0.5;
    const double r = 1.0 / std::sqrt(2.0);
    switch (name) {
        case CodeName::FourParticle:
            // (|00>+|11>)(|00>+|11>)/2 and (|00>-|11>)(|00>-|11>)/2.
            code.n_physical = 4;
            code.codewords = {
                four_qubit_word({{0b0000, h}, {0b0011, h}, {0b1100, h}, {0b1111, h}}),
                four_qubit_word({{0b0000, h}, {0b0011, -h}, {0b1100, -h}, {0b1111, h}}),
            };
            break;
        case CodeName::FourParticleTwoLogical:
            code.n_physical = 4;
            code.codewords = {
                four_qubit_word({{0b0000, h}, {0b0011, h}, {0b1100, h}, {0b1111, h}}),
                four_qubit_word({{0b0000, h}, {0b0011, -h}, {0b1100, -h}, {0b1111, h}}),
                four_qubit_word({{0b0101, h}, {0b0110, h}, {0b1001, h}, {0b1010, h}}),
                four_qubit_word({{0b0101, h}, {0b0110, -h}, {0b1001, -h}, {0b1010, h}}),
            };
            break;
        case CodeName::TwoParticleDephasing:
            code.n_physical = 2;
            code.codewords = {
                two_qubit_word({{0b00, r}, {0b11, r}}),
                two_qubit_word({{0b01, r}, {0b10, r}}),
            };
            break;
    }
    code.projector = projector_of(code.codewords);
    return code;
}

PureState encode(const Code& code, const PureState& logical) {
    if (logical.dim() != code.codewords.size())
        throw ValidationError("logical dimension " + std::to_string(logical.dim()) +
                              " does not match codeword count " +
                              std::to_string(code.codewords.size()));
    if (std::abs(logical.norm_sq() - 1.0) > 1e-10)
        throw ValidationError("logical input is not normalized");
    Vector out = Vector::Zero(code.dim());
    for (std::size_t i = 0; i < code.codewords.size(); ++i)
        out += logical.amps[i] * code.codewords[i].amps;
    return PureState(QubitRegister(code.n_physical), std::move(out));
}

DecodeResult decode(const Code& code, const PureState& physical) {
    return decode(code, DensityMatrix::from_pure(physical));
}

DecodeResult decode(const Code& code, const DensityMatrix& physical) {
    if (physical.dim() != code.dim())
        throw ValidationError("physical state dimension does not match code");
    const std::size_t k = code.codewords.size();
    Matrix logical(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            logical(i, j) =
                (code.codewords[i].amps.adjoint() * physical.mat * code.codewords[j].amps)(0);
    const double in_space = logical.trace().real();
    const double total = physical.trace_real();
    DecodeResult result;
    result.leakage = 1.0 - in_space / total;
    if (result.leakage > 1.0 - 1e-12)
        throw SimulationError("state lies entirely outside the code space; decode undefined");
    result.logical =
        DensityMatrix(QubitRegister(std::max(1, code.logical_qubits())), logical / in_space);
    return result;
}

ErrorOrbitReport error_orbit(const Code& code, int codeword_index) {
    if (codeword_index < 0 || codeword_index >= static_cast<int>(code.codewords.size()))
        throw ValidationError("codeword index out of range");
    ErrorOrbitReport report;
    report.source_index = codeword_index;
    const PureState& source = code.codewords[codeword_index];

    for (const Operator& err : single_qubit_errors(ErrorSet::AllPaulis))
        for (int q = 0; q < code.n_physical; ++q)
            report.orbit.push_back(
                {err.label + std::to_string(q), apply_operator(source, err, {q})});

    const std::size_t m = report.orbit.size();
    report.gram = Matrix(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            report.gram(i, j) = report.orbit[i].state.amps.dot(report.orbit[j].state.amps);

    // Deduplicate states equal up to global phase, in label order.
    for (std::size_t i = 0; i < m; ++i) {
        bool fresh = true;
        for (int d : report.distinct)
            if (std::abs(report.gram(d, i)) > 1.0 - kDedupTol) {
                fresh = false;
                break;
            }
        if (fresh) report.distinct.push_back(static_cast<int>(i));
    }

    // Greedy maximal mutually-orthogonal subset over the deduplicated states.
    std::vector<int> ortho;
    for (int d : report.distinct) {
        bool ok = true;
        for (int o : ortho)
            if (std::abs(report.gram(o, d)) > kOrthoTol) {
                ok = false;
                break;
            }
        if (ok) ortho.push_back(d);
    }
    report.orthogonal_count = static_cast<int>(ortho.size());

    for (const OrbitEntry& e : report.orbit)
        for (std::size_t j = 0; j < code.codewords.size(); ++j) {
            if (static_cast<int>(j) == codeword_index) continue;
            report.overlaps_with_other_codewords =
                std::max(report.overlaps_with_other_codewords,
                         std::abs(code.codewords[j].amps.dot(e.state.amps)));
        }
    return report;
}

PreventionReport check_prevention_condition(const std::vector<PureState>& codewords,
                                            ErrorSet errors) {
    if (codewords.size() < 2)
        throw ValidationError("prevention condition needs at least two codewords");
    require_orthonormal(codewords, 1e-8);

    PreventionReport report;
    const int n = codewords.front().reg.count;
    for (const Operator& err : single_qubit_errors(errors))
        for (int q = 0; q < n; ++q) {
            const std::string label = err.label + std::to_string(q);
            std::vector<Complex> diag(codewords.size());
            for (std::size_t i = 0; i < codewords.size(); ++i) {
                PureState moved = apply_operator(codewords[i], err, {q});
                for (std::size_t j = 0; j < codewords.size(); ++j) {
                    const Complex ov = codewords[j].amps.dot(moved.amps);
                    if (i == j) {
                        diag[i] = ov;
                        continue;
                    }
                    if (std::abs(ov) > report.worst_overlap) {
                        report.worst_overlap = std::abs(ov);
                        report.witness_error = label;
                        report.witness_from = static_cast<int>(i);
                        report.witness_to = static_cast<int>(j);
                    }
                }
            }
            for (std::size_t i = 0; i < diag.size(); ++i)
                for (std::size_t j = i + 1; j < diag.size(); ++j) {
                    const double spread = std::abs(diag[i] - diag[j]);
                    if (spread > report.worst_diagonal_spread) {
                        report.worst_diagonal_spread = spread;
                        report.diagonal_witness = label;
                    }
                }
        }
    report.pass = report.worst_overlap <= kOrthoTol;
    return report;
}

ThreeQubitSearchReport search_three_qubit_codes(int trials, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("search requires trials >= 1");
    ThreeQubitSearchReport report;
    report.trials = trials;
    report.seed = seed;

    QubitRegister reg(3);
    {
        std::vector<PureState> repetition = {PureState::basis_state(reg, 0b000),
                                             PureState::basis_state(reg, 0b111)};
        report.repetition_code_violation = freeze_violation(repetition);
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_unit = [&] {
        Vector v(8);
        for (int i = 0; i < 8; ++i) v[i] = Complex(gauss(rng), gauss(rng));
        return v.normalized().eval();
    };

    report.min_violation = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        Vector w0 = random_unit();
        Vector w1 = random_unit();
        w1 -= w0.dot(w1) * w0;  // Gram-Schmidt
        const double n1 = w1.norm();
        if (n1 < 1e-8) continue;
        w1 /= n1;
        std::vector<PureState> pair = {PureState(reg, w0), PureState(reg, w1)};
        const double v = freeze_violation(pair);
        if (v < report.min_violation) {
            report.min_violation = v;
            report.best_word0.assign(w0.data(), w0.data() + 8);
            report.best_word1.assign(w1.data(), w1.data() + 8);
        }
    }
    return report;
}

CodeAnalysis analyze_code(const Code& code) {
    CodeAnalysis analysis;
    analysis.code_name = code.name;

    for (std::size_t i = 0; i < code.codewords.size(); ++i)
        for (std::size_t j = 0; j < code.codewords.size(); ++j) {
            const Complex ov = code.codewords[i].amps.dot(code.codewords[j].amps);
            const double expect = (i == j) ? 1.0 : 0.0;
            analysis.max_codeword_overlap =
                std::max(analysis.max_codeword_overlap, std::abs(ov - expect));
        }
    analysis.projector_idempotence_residual =
        (code.projector * code.projector - code.projector).cwiseAbs().maxCoeff();

    // Orbit counts; fresh states exclude anything already seen in earlier
    // codewords' orbits or in the code space itself.
    std::vector<PureState> seen;
    for (const PureState& w : code.codewords) seen.push_back(w);
    for (std::size_t i = 0; i < code.codewords.size(); ++i) {
        ErrorOrbitReport orbit = error_orbit(code, static_cast<int>(i));
        CodewordAnalysis cw;
        cw.index = static_cast<int>(i);
        cw.orthogonal_count = orbit.orthogonal_count;
        std::vector<PureState> fresh_here;
        for (int d : orbit.distinct) {
            const PureState& s = orbit.orbit[d].state;
            bool fresh = true;
            for (const PureState& prev : seen)
                if (std::abs(prev.amps.dot(s.amps)) > 1.0 - kDedupTol) {
                    fresh = false;
                    break;
                }
            if (fresh) fresh_here.push_back(s);
        }
        cw.fresh_states = static_cast<int>(fresh_here.size());
        for (PureState& s : fresh_here) seen.push_back(std::move(s));
        analysis.codewords.push_back(cw);
    }

    analysis.prevention = check_prevention_condition(code.codewords, ErrorSet::AllPaulis);
    analysis.prevention_dephasing_only =
        check_prevention_condition(code.codewords, ErrorSet::DephasingOnly);
    return analysis;
}

std::vector<PureState> codewords_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty())
        throw ValidationError("candidate file must be a non-empty JSON array of codewords");
    std::vector<PureState> words;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.empty())
            throw ValidationError("each codeword must be an array of [re, im] pairs");
        const std::size_t dim = entry.size();
        int n = 0;
        while ((std::size_t{1} << n) < dim) ++n;
        if ((std::size_t{1} << n) != dim)
            throw ValidationError("codeword length " + std::to_string(dim) +
                                  " is not a power of two");
        Vector a(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& pair = entry[i];
            if (!pair.is_array() || pair.size() != 2)
                throw ValidationError("amplitude entries must be [re, im] pairs");
            a[i] = Complex(pair[0].get<double>(), pair[1].get<double>());
        }
        words.emplace_back(QubitRegister(n), std::move(a));
    }
    for (const PureState& w : words)
        if (w.reg.count != words.front().reg.count)
            throw ValidationError("codewords have mismatched qubit counts");
    require_orthonormal(words, 1e-8);
    return words;
}

nlohmann::json codewords_to_json(const std::vector<PureState>& words) {
    nlohmann::json j = nlohmann::json::array();
    for (const PureState& w : words) {
        nlohmann::json word = nlohmann::json::array();
        for (Eigen::Index i = 0; i < w.amps.size(); ++i)
            word.push_back({w.amps[i].real(), w.amps[i].imag()});
        j.push_back(std::move(word));
    }
    return j;
}

}  // namespace zenosim

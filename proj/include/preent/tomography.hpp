// Copyright 2026 The preent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "preent/protocol.hpp"
#include "preent/qmath.hpp"
#include "preent/states.hpp"

namespace preent {

/// P: tomography before the entangling measurement. R: after it.
enum class Stage { P, R };

inline constexpr std::string_view stage_name(Stage s) {
    return s == Stage::P ? "P" : "R";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
    if (s == "P" || s == "p") {
        return Stage::P;
    }
    if (s == "R" || s == "r") {
        return Stage::R;
    }
    return std::nullopt;
}

/// The four recorded single-qubit tomography measurements.
enum class Measurement { PA, PB, RC, RD };

struct OutcomeFilter {
    Measurement which = Measurement::RC;
    PauliAxis axis = PauliAxis::Z;
    int sign = 1;

    bool operator==(const OutcomeFilter &) const = default;
};

class SelectionError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Conjunction of predicates over a RunRecord. Unset fields match anything;
/// a default-constructed criterion selects every run.
///
/// Textual form is a flat `key=value` conjunction joined by `&`, e.g.
/// `q=PhiPlus&aliceLabel=1&rC=X+`. Keys: q (Bell names joined by `|`),
/// aliceLabel, bobLabel (1 or 2), aliceBasis, bobBasis (0 or 1) and
/// pA, pB, rC, rD (an axis followed by + or -). `all` is the trivial criterion.
struct SelectionCriterion {
    std::vector<BellIndex> bell;
    std::optional<int> alice_label;
    std::optional<int> bob_label;
    std::optional<int> alice_basis;
    std::optional<int> bob_basis;
    std::vector<OutcomeFilter> outcomes;

    static SelectionCriterion all() {
        return {};
    }

    static SelectionCriterion bell_outcome(BellIndex b) {
        SelectionCriterion c;
        c.bell.push_back(b);
        return c;
    }

    SelectionCriterion &and_outcome(Measurement which, PauliAxis axis, int sign) {
        outcomes.push_back({which, axis, sign});
        return *this;
    }

    bool matches(const RunRecord &r) const {
        if (!bell.empty() && std::find(bell.begin(), bell.end(), r.q_out) == bell.end()) {
            return false;
        }
        if (alice_label && r.alice_label != alice_label) {
            return false;
        }
        if (bob_label && r.bob_label != bob_label) {
            return false;
        }
        if (alice_basis && r.alice_basis != alice_basis) {
            return false;
        }
        if (bob_basis && r.bob_basis != bob_basis) {
            return false;
        }
        for (const auto &f : outcomes) {
            PauliAxis axis{};
            int out = 0;
            switch (f.which) {
                case Measurement::PA:
                    axis = r.pA_axis;
                    out = r.pA_out;
                    break;
                case Measurement::PB:
                    axis = r.pB_axis;
                    out = r.pB_out;
                    break;
                case Measurement::RC:
                    axis = r.rC_axis;
                    out = r.rC_out;
                    break;
                case Measurement::RD:
                    axis = r.rD_axis;
                    out = r.rD_out;
                    break;
            }
            if (axis != f.axis || out != f.sign) {
                return false;
            }
        }
        return true;
    }

    std::string to_string() const {
        std::vector<std::string> terms;
        if (!bell.empty()) {
            std::string t = "q=";
            for (std::size_t k = 0; k < bell.size(); ++k) {
                if (k) {
                    t += "|";
                }
                t += bell_name(bell[k]);
            }
            terms.push_back(t);
        }
        auto add_int = [&](const char *key, const std::optional<int> &v) {
            if (v) {
                terms.push_back(std::string(key) + "=" + std::to_string(*v));
            }
        };
        add_int("aliceLabel", alice_label);
        add_int("bobLabel", bob_label);
        add_int("aliceBasis", alice_basis);
        add_int("bobBasis", bob_basis);
        for (const auto &f : outcomes) {
            static constexpr std::array<std::string_view, 4> keys{"pA", "pB", "rC", "rD"};
            terms.push_back(
                std::string(keys[static_cast<std::size_t>(f.which)]) + "=" + std::string(axis_name(f.axis)) +
                (f.sign > 0 ? "+" : "-"));
        }
        if (terms.empty()) {
            return "all";
        }
        std::string out = terms[0];
        for (std::size_t k = 1; k < terms.size(); ++k) {
            out += "&" + terms[k];
        }
        return out;
    }

    static SelectionCriterion parse(std::string_view expr) {
        SelectionCriterion c;
        auto trim = [](std::string_view s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
                s.remove_prefix(1);
            }
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
                s.remove_suffix(1);
            }
            return s;
        };
        expr = trim(expr);
        if (expr.empty() || expr == "all") {
            return c;
        }
        bool more = true;
        while (more) {
            const auto amp = expr.find('&');
            const std::string_view term = trim(expr.substr(0, amp));
            more = amp != std::string_view::npos;
            expr = more ? expr.substr(amp + 1) : std::string_view{};
            if (term.empty()) {
                throw SelectionError("criterion has an empty term");
            }
            const auto eq = term.find('=');
            if (eq == std::string_view::npos) {
                throw SelectionError("criterion term '" + std::string(term) + "' is not key=value");
            }
            const std::string_view key = trim(term.substr(0, eq));
            const std::string_view value = trim(term.substr(eq + 1));
            auto bad = [&] {
                return SelectionError("criterion term '" + std::string(term) + "' has an invalid value");
            };
            auto parse_choice = [&](int lo, int hi) {
                if (value.size() != 1 || value[0] < '0' + lo || value[0] > '0' + hi) {
                    throw bad();
                }
                return value[0] - '0';
            };
            if (key == "q") {
                std::string_view rest = value;
                while (true) {
                    const auto bar = rest.find('|');
                    auto b = parse_bell(trim(rest.substr(0, bar)));
                    if (!b) {
                        throw bad();
                    }
                    c.bell.push_back(*b);
                    if (bar == std::string_view::npos) {
                        break;
                    }
                    rest = rest.substr(bar + 1);
                }
            } else if (key == "aliceLabel") {
                c.alice_label = parse_choice(1, 2);
            } else if (key == "bobLabel") {
                c.bob_label = parse_choice(1, 2);
            } else if (key == "aliceBasis") {
                c.alice_basis = parse_choice(0, 1);
            } else if (key == "bobBasis") {
                c.bob_basis = parse_choice(0, 1);
            } else if (key == "pA" || key == "pB" || key == "rC" || key == "rD") {
                if (value.size() != 2 || (value[1] != '+' && value[1] != '-')) {
                    throw bad();
                }
                auto axis = parse_axis(value.substr(0, 1));
                if (!axis) {
                    throw bad();
                }
                const Measurement which = key == "pA"   ? Measurement::PA
                                          : key == "pB" ? Measurement::PB
                                          : key == "rC" ? Measurement::RC
                                                        : Measurement::RD;
                c.outcomes.push_back({which, *axis, value[1] == '+' ? 1 : -1});
            } else {
                throw SelectionError("criterion key '" + std::string(key) + "' is unknown");
            }
        }
        return c;
    }
};

/// No run satisfied the selection criterion.
class EmptySelectionError : public std::runtime_error {
   public:
    explicit EmptySelectionError(const SelectionCriterion &c)
        : std::runtime_error("empty selection: no runs match criterion '" + c.to_string() + "'") {
    }
};

/// A joint setting pair does not have enough counts for reconstruction.
class InsufficientCountsError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

inline std::size_t outcome_slot(int sign) {
    return sign > 0 ? 0 : 1;
}

/// Joint outcome tallies for one stage, indexed [axisA][axisB][outA][outB]
/// with outcome slot 0 for +1 and 1 for -1.
struct CountTable {
    Stage stage = Stage::P;
    std::array<std::array<std::array<std::array<std::uint64_t, 2>, 2>, 3>, 3> counts{};
    std::uint64_t total = 0;

    void add(PauliAxis a, PauliAxis b, int out_a, int out_b, std::uint64_t n = 1) {
        counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][outcome_slot(out_a)][outcome_slot(out_b)] += n;
        total += n;
    }

    std::uint64_t at(PauliAxis a, PauliAxis b, int out_a, int out_b) const {
        return counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][outcome_slot(out_a)]
                     [outcome_slot(out_b)];
    }

    std::uint64_t setting_count(PauliAxis a, PauliAxis b) const {
        const auto &c = counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        return c[0][0] + c[0][1] + c[1][0] + c[1][1];
    }

    CountTable &operator+=(const CountTable &other) {
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                for (std::size_t x = 0; x < 2; ++x) {
                    for (std::size_t y = 0; y < 2; ++y) {
                        counts[a][b][x][y] += other.counts[a][b][x][y];
                    }
                }
            }
        }
        total += other.total;
        return *this;
    }
};

/// Conditional joint outcome probabilities per setting pair plus the weight
/// (relative frequency) of each setting pair. Used for exact-moment input.
struct ProbabilityTable {
    std::array<std::array<std::array<std::array<double, 2>, 2>, 3>, 3> prob{};
    std::array<std::array<double, 3>, 3> weight{};

    static ProbabilityTable from_counts(const CountTable &t) {
        ProbabilityTable p;
        for (auto a : kAllAxes) {
            for (auto b : kAllAxes) {
                const auto ia = static_cast<std::size_t>(a);
                const auto ib = static_cast<std::size_t>(b);
                const auto n = t.setting_count(a, b);
                p.weight[ia][ib] = static_cast<double>(n);
                for (std::size_t x = 0; x < 2; ++x) {
                    for (std::size_t y = 0; y < 2; ++y) {
                        p.prob[ia][ib][x][y] = n ? static_cast<double>(t.counts[ia][ib][x][y]) / n : 0.0;
                    }
                }
            }
        }
        return p;
    }

    /// Exact Born-rule table of a two-qubit state with uniform setting weights.
    static ProbabilityTable exact(const ComplexMatrix &rho) {
        ProbabilityTable p;
        for (auto a : kAllAxes) {
            for (auto b : kAllAxes) {
                const auto ia = static_cast<std::size_t>(a);
                const auto ib = static_cast<std::size_t>(b);
                p.weight[ia][ib] = 1.0;
                for (int sa : {1, -1}) {
                    for (int sb : {1, -1}) {
                        const auto op = tensor(pauli_projector(a, sa).matrix(), pauli_projector(b, sb).matrix());
                        p.prob[ia][ib][outcome_slot(sa)][outcome_slot(sb)] = trace_of_product(rho, op).real();
                    }
                }
            }
        }
        return p;
    }
};

/// Table indexed by Pauli index pairs (0 = identity, 1..3 = X, Y, Z).
using PauliTable = std::array<std::array<double, 4>, 4>;

/// Selects runs and tallies the stage's joint (setting, outcome) pairs.
inline CountTable conditional_counts(
    std::span<const RunRecord> records, Stage stage, const SelectionCriterion &criterion) {
    CountTable t;
    t.stage = stage;
    for (const auto &r : records) {
        if (!criterion.matches(r)) {
            continue;
        }
        if (stage == Stage::P) {
            t.add(r.pA_axis, r.pB_axis, r.pA_out, r.pB_out);
        } else {
            t.add(r.rC_axis, r.rD_axis, r.rC_out, r.rD_out);
        }
    }
    if (t.total == 0) {
        throw EmptySelectionError(criterion);
    }
    return t;
}

/// <σi ⊗ σj> estimates. Single-sided terms pool over the partner's settings,
/// weighted by setting frequency.
inline PauliTable pauli_moments(const ProbabilityTable &p) {
    PauliTable c{};
    c[0][0] = 1.0;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            const auto &q = p.prob[a][b];
            c[a + 1][b + 1] = q[0][0] - q[0][1] - q[1][0] + q[1][1];
        }
    }
    for (std::size_t a = 0; a < 3; ++a) {
        double num = 0;
        double den = 0;
        for (std::size_t b = 0; b < 3; ++b) {
            const auto &q = p.prob[a][b];
            num += p.weight[a][b] * (q[0][0] + q[0][1] - q[1][0] - q[1][1]);
            den += p.weight[a][b];
        }
        c[a + 1][0] = den > 0 ? num / den : 0.0;
    }
    for (std::size_t b = 0; b < 3; ++b) {
        double num = 0;
        double den = 0;
        for (std::size_t a = 0; a < 3; ++a) {
            const auto &q = p.prob[a][b];
            num += p.weight[a][b] * (q[0][0] - q[0][1] + q[1][0] - q[1][1]);
            den += p.weight[a][b];
        }
        c[0][b + 1] = den > 0 ? num / den : 0.0;
    }
    return c;
}

/// √((1 − c²)/n) per correlator, n being the number of runs behind it.
inline PauliTable correlator_std_errors(const CountTable &t, const PauliTable &moments) {
    PauliTable se{};
    auto err = [](double c, double n) {
        return n > 0 ? std::sqrt(std::max(0.0, 1.0 - c * c) / n) : 0.0;
    };
    for (auto a : kAllAxes) {
        const auto ia = static_cast<std::size_t>(a);
        double pooled_a = 0;
        double pooled_b = 0;
        for (auto b : kAllAxes) {
            const auto ib = static_cast<std::size_t>(b);
            se[ia + 1][ib + 1] = err(moments[ia + 1][ib + 1], static_cast<double>(t.setting_count(a, b)));
            pooled_a += static_cast<double>(t.setting_count(a, b));
            pooled_b += static_cast<double>(t.setting_count(b, a));
        }
        se[ia + 1][0] = err(moments[ia + 1][0], pooled_a);
        se[0][ia + 1] = err(moments[0][ia + 1], pooled_b);
    }
    return se;
}

/// σi ⊗ σj for Pauli indices 0..3.
inline const ComplexMatrix &pauli_pair(std::size_t i, std::size_t j) {
    static const auto table = [] {
        std::vector<ComplexMatrix> out;
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                out.push_back(tensor(pauli_matrix(a), pauli_matrix(b)));
            }
        }
        return out;
    }();
    return table[i * 4 + j];
}

/// (1/4) Σ c_ij σi ⊗ σj.
inline ComplexMatrix state_from_moments(const PauliTable &c) {
    ComplexMatrix rho(4);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (c[i][j] != 0.0) {
                rho += pauli_pair(i, j) * Complex{c[i][j] / 4.0};
            }
        }
    }
    return rho;
}

/// Pauli expansion coefficients tr(ρ σi ⊗ σj).
inline PauliTable moments_of(const ComplexMatrix &rho) {
    PauliTable c{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            c[i][j] = trace_of_product(rho, pauli_pair(i, j)).real();
        }
    }
    return c;
}

inline ComplexMatrix linear_inversion(const ProbabilityTable &p) {
    return state_from_moments(pauli_moments(p));
}

/// Linear-inversion estimate; requires every setting pair in {X,Y,Z}² to
/// carry at least `min_counts` counts. The result is Hermitian with unit
/// trace but need not be positive.
inline ComplexMatrix linear_inversion(const CountTable &t, std::uint64_t min_counts = 1) {
    for (auto a : kAllAxes) {
        for (auto b : kAllAxes) {
            const auto n = t.setting_count(a, b);
            if (n < std::max<std::uint64_t>(min_counts, 1)) {
                throw InsufficientCountsError(
                    "setting pair (" + std::string(axis_name(a)) + "," + std::string(axis_name(b)) + ") has " +
                    std::to_string(n) + " counts, need " + std::to_string(std::max<std::uint64_t>(min_counts, 1)));
            }
        }
    }
    return linear_inversion(ProbabilityTable::from_counts(t));
}

/// Clips negative eigenvalues to zero and renormalizes the trace to one.
inline DensityMatrix project_to_physical(const ComplexMatrix &raw) {
    if (std::abs(trace(raw) - 1.0) > 1e-8) {
        throw std::invalid_argument("project_to_physical: input trace is not 1");
    }
    auto spec = hermitian_eig(raw);
    double kept = 0;
    for (auto &x : spec.eigenvalues) {
        x = std::max(0.0, x);
        kept += x;
    }
    if (!(kept > 0)) {
        throw std::invalid_argument("project_to_physical: every eigenvalue was clipped");
    }
    for (auto &x : spec.eigenvalues) {
        x /= kept;
    }
    ComplexMatrix out = spec.reconstruct();
    out = (out + adjoint(out)) * Complex{0.5};
    return DensityMatrix(std::move(out));
}

/// <target|ρ|target>.
inline double fidelity_pure(const DensityMatrix &rho, const Ket &target) {
    if (rho.dim() != target.dim()) {
        throw std::invalid_argument("fidelity_pure: dimension mismatch");
    }
    return std::clamp(expectation(rho.matrix(), target), 0.0, 1.0);
}

struct ReconstructionResult {
    Stage stage = Stage::P;
    SelectionCriterion criterion;
    CountTable counts;
    PauliTable correlators{};
    PauliTable std_errors{};
    ComplexMatrix raw;
    DensityMatrix physical;
};

struct ReconstructOptions {
    std::uint64_t min_counts = 50;
    /// Reconstruct even below min_counts (but never with an empty setting).
    bool force = false;
};

/// conditional_counts → linear_inversion → project_to_physical.
inline ReconstructionResult reconstruct(
    std::span<const RunRecord> records, Stage stage, const SelectionCriterion &criterion,
    const ReconstructOptions &options = {}) {
    CountTable table = conditional_counts(records, stage, criterion);
    ComplexMatrix raw = linear_inversion(table, options.force ? 1 : options.min_counts);
    const PauliTable moments = pauli_moments(ProbabilityTable::from_counts(table));
    DensityMatrix physical = project_to_physical(raw);
    return ReconstructionResult{
        stage, criterion, table, moments, correlator_std_errors(table, moments), std::move(raw), std::move(physical)};
}

/// First party is A (stage P) or C (stage R); second is B or D.
enum class Party { First, Second };

struct SingleQubitEstimate {
    std::array<double, 3> bloch{};
    std::array<double, 3> std_error{};
    std::array<std::uint64_t, 3> counts{};
    DensityMatrix state;
};

/// Bloch-vector tomography of one qubit over the selected runs. The state is
/// (I + r·σ)/2 with r shrunk onto the unit ball when noise pushes it outside.
inline SingleQubitEstimate reconstruct_single_qubit(
    std::span<const RunRecord> records, Stage stage, Party party, const SelectionCriterion &criterion,
    std::uint64_t min_counts = 50) {
    std::array<std::int64_t, 3> sum{};
    std::array<std::uint64_t, 3> n{};
    bool any = false;
    for (const auto &r : records) {
        if (!criterion.matches(r)) {
            continue;
        }
        any = true;
        PauliAxis axis{};
        int out = 0;
        if (stage == Stage::P) {
            axis = party == Party::First ? r.pA_axis : r.pB_axis;
            out = party == Party::First ? r.pA_out : r.pB_out;
        } else {
            axis = party == Party::First ? r.rC_axis : r.rD_axis;
            out = party == Party::First ? r.rC_out : r.rD_out;
        }
        sum[static_cast<std::size_t>(axis)] += out;
        n[static_cast<std::size_t>(axis)] += 1;
    }
    if (!any) {
        throw EmptySelectionError(criterion);
    }
    std::array<double, 3> bloch{};
    std::array<double, 3> se{};
    double len2 = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        if (n[k] < std::max<std::uint64_t>(min_counts, 1)) {
            throw InsufficientCountsError(
                "axis " + std::string(axis_name(kAllAxes[k])) + " has " + std::to_string(n[k]) + " counts");
        }
        bloch[k] = static_cast<double>(sum[k]) / static_cast<double>(n[k]);
        se[k] = std::sqrt(std::max(0.0, 1.0 - bloch[k] * bloch[k]) / static_cast<double>(n[k]));
        len2 += bloch[k] * bloch[k];
    }
    std::array<double, 3> clipped = bloch;
    if (len2 > 1.0) {
        for (auto &x : clipped) {
            x /= std::sqrt(len2);
        }
    }
    ComplexMatrix rho = ComplexMatrix::identity(2);
    for (std::size_t k = 0; k < 3; ++k) {
        rho += pauli_matrix(static_cast<int>(k) + 1) * Complex{clipped[k]};
    }
    rho *= 0.5;
    return SingleQubitEstimate{bloch, se, n, DensityMatrix::trusted(std::move(rho))};
}

}  // namespace preent

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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "preent/protocol.hpp"
#include "preent/qmath.hpp"
#include "preent/rng.hpp"
#include "preent/states.hpp"
#include "preent/tomography.hpp"

namespace preent {

inline constexpr std::array<std::size_t, 2> kQubitPair{2, 2};

// ---------------------------------------------------------------------------
// Entanglement certification.
// ---------------------------------------------------------------------------

inline void require_two_qubit(const DensityMatrix &rho, const char *who) {
    if (rho.dim() != 4) {
        throw std::invalid_argument(std::string(who) + ": expected a two-qubit state");
    }
}

/// Spectrum of the partial transpose on B, descending.
inline std::vector<double> pt_spectrum(const DensityMatrix &rho) {
    require_two_qubit(rho, "pt_spectrum");
    return eigenvalues(partial_transpose(rho.matrix(), 1, kQubitPair));
}

inline double ppt_min_eigenvalue(const DensityMatrix &rho) {
    return pt_spectrum(rho).back();
}

inline double negativity(const DensityMatrix &rho) {
    double s = 0;
    for (double x : pt_spectrum(rho)) {
        s += std::max(0.0, -x);
    }
    return s;
}

/// Wootters concurrence. The eigenvalues of ρρ̃ are taken from the Hermitian
/// matrix √ρ ρ̃ √ρ, which shares them.
inline double concurrence(const DensityMatrix &rho) {
    require_two_qubit(rho, "concurrence");
    const ComplexMatrix yy = tensor(pauli_matrix(2), pauli_matrix(2));
    const ComplexMatrix flipped = yy * conjugate(rho.matrix()) * yy;
    auto spec = hermitian_eig(rho.matrix());
    for (auto &x : spec.eigenvalues) {
        x = std::sqrt(std::max(0.0, x));
    }
    const ComplexMatrix root = spec.reconstruct();
    const ComplexMatrix r = root * flipped * root;
    auto mu = eigenvalues((r + adjoint(r)) * Complex{0.5});
    std::array<double, 4> lam{};
    for (std::size_t k = 0; k < 4; ++k) {
        lam[k] = std::sqrt(std::max(0.0, mu[k]));
    }
    return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

/// T_ij = tr(ρ σi ⊗ σj) for i, j in {X, Y, Z}.
inline std::array<std::array<double, 3>, 3> correlation_matrix(const DensityMatrix &rho) {
    require_two_qubit(rho, "correlation_matrix");
    const PauliTable c = moments_of(rho.matrix());
    std::array<std::array<double, 3>, 3> t{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            t[i][j] = c[i + 1][j + 1];
        }
    }
    return t;
}

/// Maximal CHSH value 2√(t1 + t2), t1 and t2 the two largest eigenvalues of
/// TᵀT (Horodecki criterion).
inline double chsh_max(const DensityMatrix &rho) {
    const auto t = correlation_matrix(rho);
    // TᵀT padded to 4x4; the extra zero eigenvalue cannot displace the top
    // two of a PSD matrix.
    ComplexMatrix m(4);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < 3; ++k) {
                s += t[k][i] * t[k][j];
            }
            m(i, j) = s;
        }
    }
    const auto ev = eigenvalues(m);
    return 2.0 * std::sqrt(std::max(0.0, ev[0]) + std::max(0.0, ev[1]));
}

enum class Verdict { EntangledNpt, SeparablePptConsistent };

inline constexpr std::string_view verdict_name(Verdict v) {
    return v == Verdict::EntangledNpt ? "Entangled-NPT" : "Separable-PPT-consistent";
}

inline constexpr double kVerdictFloor = 1e-6;

struct CertificationReport {
    std::array<double, 4> pt_spectrum{};
    double negativity = 0;
    double concurrence = 0;
    double chsh_max = 0;
    /// First-order standard error of the minimum PT eigenvalue; zero when the
    /// state carries no sampling error.
    double min_eigenvalue_std_error = 0;
    /// The minimum PT eigenvalue must fall below -tolerance for Entangled-NPT.
    double tolerance = kVerdictFloor;
    Verdict verdict = Verdict::SeparablePptConsistent;
};

/// Propagates correlator standard errors to the minimum PT eigenvalue with
/// first-order perturbation theory, treating the correlators as independent.
inline double min_pt_eigenvalue_std_error(const DensityMatrix &rho, const PauliTable &se) {
    const auto spec = hermitian_eig(partial_transpose(rho.matrix(), 1, kQubitPair));
    const auto &v = spec.eigenvectors.back();
    double var = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if ((i == 0 && j == 0) || se[i][j] == 0.0) {
                continue;
            }
            const ComplexMatrix op = partial_transpose(pauli_pair(i, j), 1, kQubitPair);
            Complex g{};
            for (std::size_t r = 0; r < 4; ++r) {
                for (std::size_t c = 0; c < 4; ++c) {
                    g += std::conj(v[r]) * op(r, c) * v[c];
                }
            }
            const double d = g.real() / 4.0 * se[i][j];
            var += d * d;
        }
    }
    return std::sqrt(var);
}

/// Entangled-NPT iff the minimum PT eigenvalue is below -max(3·SE, 1e-6).
inline CertificationReport certify(const DensityMatrix &rho, const PauliTable *std_errors = nullptr) {
    CertificationReport rep;
    const auto spec = pt_spectrum(rho);
    std::copy(spec.begin(), spec.end(), rep.pt_spectrum.begin());
    for (double x : spec) {
        rep.negativity += std::max(0.0, -x);
    }
    rep.concurrence = concurrence(rho);
    rep.chsh_max = chsh_max(rho);
    rep.min_eigenvalue_std_error = std_errors ? min_pt_eigenvalue_std_error(rho, *std_errors) : 0.0;
    rep.tolerance = std::max(3.0 * rep.min_eigenvalue_std_error, kVerdictFloor);
    rep.verdict = spec.back() < -rep.tolerance ? Verdict::EntangledNpt : Verdict::SeparablePptConsistent;
    return rep;
}

inline CertificationReport certify(const ReconstructionResult &r) {
    return certify(r.physical, &r.std_errors);
}

// ---------------------------------------------------------------------------
// State built from the recorded preparation labels.
// ---------------------------------------------------------------------------

struct LabelWeight {
    std::optional<int> alice_basis;
    int alice_label = 1;
    std::optional<int> bob_basis;
    int bob_label = 1;
    std::uint64_t count = 0;
    double frequency = 0;
};

struct PrepLabelState {
    DensityMatrix state;
    std::vector<LabelWeight> weights;
    std::uint64_t n_selected = 0;
};

/// The single-qubit state a record says was prepared.
inline const Ket &prepared_ket(const ExperimentConfig &config, bool alice, const RunRecord &r) {
    const auto &label = alice ? r.alice_label : r.bob_label;
    if (!label) {
        throw std::invalid_argument("record " + std::to_string(r.run_id) + " carries no preparation label");
    }
    if (config.scenario == Scenario::PbrVariant) {
        const auto &basis = alice ? r.alice_basis : r.bob_basis;
        if (!basis || *basis < 0 || *basis > 1) {
            throw std::invalid_argument("record " + std::to_string(r.run_id) + " carries no PBR basis choice");
        }
        return config.pbr_bases[static_cast<std::size_t>(*basis)].state(*label);
    }
    return (alice ? config.alice_basis : config.bob_basis).state(*label);
}

/// (1/N) Σ |ψ_m⟩⟨ψ_m| ⊗ |φ_m⟩⟨φ_m| over the selected runs, using the
/// preparation labels on record. Separable by construction.
inline PrepLabelState ensemble_state_from_preps(
    std::span<const RunRecord> records, const SelectionCriterion &criterion, const ExperimentConfig &config) {
    if (config.scenario == Scenario::Dces) {
        throw std::invalid_argument("ensemble_state_from_preps: D-CES runs have no preparation labels");
    }
    using Key = std::tuple<int, int, int, int>;
    std::map<Key, std::uint64_t> tally;
    std::uint64_t n = 0;
    for (const auto &r : records) {
        if (!criterion.matches(r)) {
            continue;
        }
        if (!r.alice_label || !r.bob_label) {
            throw std::invalid_argument("record " + std::to_string(r.run_id) + " carries no preparation label");
        }
        ++tally[{r.alice_basis.value_or(-1), *r.alice_label, r.bob_basis.value_or(-1), *r.bob_label}];
        ++n;
    }
    if (n == 0) {
        throw EmptySelectionError(criterion);
    }
    ComplexMatrix rho(4);
    std::vector<LabelWeight> weights;
    for (const auto &[key, count] : tally) {
        const auto [ab, al, bb, bl] = key;
        RunRecord probe;
        probe.alice_label = al;
        probe.bob_label = bl;
        if (ab >= 0) {
            probe.alice_basis = ab;
        }
        if (bb >= 0) {
            probe.bob_basis = bb;
        }
        const double f = static_cast<double>(count) / static_cast<double>(n);
        rho += tensor(prepared_ket(config, true, probe).projector(), prepared_ket(config, false, probe).projector()) *
               Complex{f};
        weights.push_back({probe.alice_basis, al, probe.bob_basis, bl, count, f});
    }
    rho = (rho + adjoint(rho)) * Complex{0.5};
    return PrepLabelState{DensityMatrix(std::move(rho)), std::move(weights), n};
}

// ---------------------------------------------------------------------------
// Analytic conditionals for unbiased sources.
// ---------------------------------------------------------------------------

/// tr(P_Φn (P_{j±} ⊗ P_{k±})): the probability of the tomography outcome pair
/// given Bell outcome n. Sources are unbiased, so the same expression holds
/// before (stage P) and after (stage R) the entangling measurement.
inline double analytic_conditional(
    Stage /*stage*/, PauliAxis axis_a, PauliAxis axis_b, int out_a, int out_b, BellIndex bell) {
    const ComplexMatrix op = tensor(pauli_projector(axis_a, out_a).matrix(), pauli_projector(axis_b, out_b).matrix());
    return trace_of_product(bell_projector(bell).matrix(), op).real();
}

/// σ = ½(|1⟩⟨1| + |2⟩⟨2|) for an equal-probability preparation basis.
inline ComplexMatrix source_state(const PreparationBasis &basis) {
    return (basis.state(1).projector() + basis.state(2).projector()) * Complex{0.5};
}

/// Bayes route before the entangling measurement:
/// P[j & k & Φn] / P[Φn] with the tomography projectors applied to σA ⊗ σB
/// and the Bell projector afterwards.
inline double bayes_conditional_pre(
    PauliAxis axis_a, PauliAxis axis_b, int out_a, int out_b, BellIndex bell,
    const PreparationBasis &alice = PreparationBasis::z_basis(),
    const PreparationBasis &bob = PreparationBasis::z_basis()) {
    const ComplexMatrix rho = tensor(source_state(alice), source_state(bob));
    const ComplexMatrix pi = tensor(pauli_projector(axis_a, out_a).matrix(), pauli_projector(axis_b, out_b).matrix());
    const ComplexMatrix bell_p = bell_projector(bell).matrix();
    const double joint = trace_of_product(pi * rho * pi, bell_p).real();
    const double marginal = trace_of_product(rho, bell_p).real();
    return joint / marginal;
}

/// Bayes route after the entangling measurement: collapse σA ⊗ σB onto Φn,
/// then apply the Born rule for the tomography pair.
inline double bayes_conditional_post(
    PauliAxis axis_a, PauliAxis axis_b, int out_a, int out_b, BellIndex bell,
    const PreparationBasis &alice = PreparationBasis::z_basis(),
    const PreparationBasis &bob = PreparationBasis::z_basis()) {
    const ComplexMatrix rho = tensor(source_state(alice), source_state(bob));
    const ComplexMatrix bell_p = bell_projector(bell).matrix();
    ComplexMatrix post = bell_p * rho * bell_p;
    post *= 1.0 / trace(post).real();
    const ComplexMatrix pi = tensor(pauli_projector(axis_a, out_a).matrix(), pauli_projector(axis_b, out_b).matrix());
    return trace(pi * post * pi).real();
}

/// P[Φn] = tr(σA ⊗ σB · P_Φn).
inline double bell_marginal(
    BellIndex bell, const PreparationBasis &alice = PreparationBasis::z_basis(),
    const PreparationBasis &bob = PreparationBasis::z_basis()) {
    return trace_of_product(tensor(source_state(alice), source_state(bob)), bell_projector(bell).matrix()).real();
}

/// Haar-ish random mixed state GG†/tr(GG†) with Gaussian G, reproducible
/// from a seed.
inline DensityMatrix random_density_matrix(std::uint64_t seed, std::size_t dim, std::uint64_t index = 0) {
    const RngStream rng(seed, index);
    ComplexMatrix g(dim);
    std::uint32_t draw = 0;
    auto gauss = [&] {
        const double u1 = std::max(rng.uniform(draw, 0), 1e-300);
        const double u2 = rng.uniform(draw, 1);
        ++draw;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
    };
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            const double re = gauss();
            const double im = gauss();
            g(r, c) = Complex{re, im};
        }
    }
    ComplexMatrix rho = g * adjoint(g);
    rho *= 1.0 / trace(rho).real();
    rho = (rho + adjoint(rho)) * Complex{0.5};
    return DensityMatrix(std::move(rho));
}

struct OracleRow {
    PauliAxis axis_a = PauliAxis::Z;
    PauliAxis axis_b = PauliAxis::Z;
    int out_a = 1;
    int out_b = 1;
    BellIndex bell = BellIndex::PhiPlus;
    double closed_form = 0;
    double bayes_pre = 0;
    double bayes_post = 0;

    double deviation() const {
        return std::max(std::abs(closed_form - bayes_pre), std::abs(closed_form - bayes_post));
    }
};

struct OracleReport {
    std::vector<OracleRow> rows;
    std::array<double, 4> bell_marginals{};
    /// Largest entry-wise error of linear inversion fed exact probabilities.
    double max_inversion_error = 0;
    std::size_t inversion_states = 0;
    double tolerance = 1e-12;

    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto &r : rows) {
            n += r.deviation() > tolerance;
        }
        for (double p : bell_marginals) {
            n += std::abs(p - 0.25) > tolerance;
        }
        n += max_inversion_error > tolerance;
        return n;
    }
    bool ok() const {
        return failures() == 0;
    }
};

/// Checks the closed form against both Bayes routes for all 144 tuples, the
/// Bell marginals, and the exact-moment inversion round trip on the Bell
/// states, Î/4 and `random_states` random mixed states.
///
/// `inject_sign_flip` flips Alice's outcome in the closed form; it exists so
/// tests can confirm the check actually fails.
inline OracleReport run_oracle(bool inject_sign_flip = false, std::size_t random_states = 50) {
    OracleReport rep;
    for (auto bell : kAllBell) {
        for (auto a : kAllAxes) {
            for (auto b : kAllAxes) {
                for (int sa : {1, -1}) {
                    for (int sb : {1, -1}) {
                        OracleRow row;
                        row.axis_a = a;
                        row.axis_b = b;
                        row.out_a = sa;
                        row.out_b = sb;
                        row.bell = bell;
                        row.closed_form = analytic_conditional(Stage::P, a, b, inject_sign_flip ? -sa : sa, sb, bell);
                        row.bayes_pre = bayes_conditional_pre(a, b, sa, sb, bell);
                        row.bayes_post = bayes_conditional_post(a, b, sa, sb, bell);
                        rep.rows.push_back(row);
                    }
                }
            }
        }
    }
    for (auto bell : kAllBell) {
        rep.bell_marginals[static_cast<std::size_t>(bell)] = bell_marginal(bell);
    }

    std::vector<ComplexMatrix> states;
    for (auto bell : kAllBell) {
        states.push_back(bell_projector(bell).matrix());
    }
    states.push_back(ComplexMatrix::identity(4) * Complex{0.25});
    for (std::size_t k = 0; k < random_states; ++k) {
        states.push_back(random_density_matrix(0x5eed, 4, k).matrix());
    }
    for (const auto &rho : states) {
        const ComplexMatrix back = linear_inversion(ProbabilityTable::exact(rho));
        rep.max_inversion_error = std::max(rep.max_inversion_error, max_abs_diff(back, rho));
    }
    rep.inversion_states = states.size();
    return rep;
}

// ---------------------------------------------------------------------------
// Headline reports.
// ---------------------------------------------------------------------------

/// The tomographic state of a Bell-conditioned sub-ensemble set against the
/// separable state its preparation labels imply.
struct ContradictionReport {
    BellIndex bell = BellIndex::PhiPlus;
    ReconstructionResult tomographic;
    CertificationReport tomographic_certification;
    double tomographic_fidelity = 0;
    PrepLabelState prep_label;
    CertificationReport prep_label_certification;
};

inline ContradictionReport contradiction_report(
    std::span<const RunRecord> records, const ExperimentConfig &config, BellIndex bell = BellIndex::PhiPlus,
    const ReconstructOptions &options = {}) {
    if (config.scenario == Scenario::Dces) {
        throw std::invalid_argument("contradiction_report: needs labelled preparations (standard or pbr scenario)");
    }
    const auto criterion = SelectionCriterion::bell_outcome(bell);
    auto tomo = reconstruct(records, Stage::P, criterion, options);
    auto tomo_cert = certify(tomo);
    const double fid = fidelity_pure(tomo.physical, bell_state(bell));
    auto prep = ensemble_state_from_preps(records, criterion, config);
    auto prep_cert = certify(prep.state);
    return ContradictionReport{bell, std::move(tomo), tomo_cert, fid, std::move(prep), prep_cert};
}

/// Bloch vector of the partner qubit when the first qubit of Bell state
/// `bell` is found in eigenstate (axis, sign): sign · T[axis][·].
inline std::array<double, 3> conditional_partner_bloch(BellIndex bell, PauliAxis axis, int sign) {
    const auto t = correlation_matrix(DensityMatrix::pure(bell_state(bell)));
    const auto &row = t[static_cast<std::size_t>(axis)];
    return {sign * row[0], sign * row[1], sign * row[2]};
}

struct SubEnsemble {
    PauliAxis partner_axis = PauliAxis::Z;
    int partner_sign = 1;
    SelectionCriterion criterion;
    SingleQubitEstimate estimate;
    std::array<double, 3> expected{};

    double max_deviation() const {
        double worst = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            worst = std::max(worst, std::abs(estimate.bloch[k] - expected[k]));
        }
        return worst;
    }
};

/// Splits the Bell-conditioned runs by qubit C's R outcome and reconstructs
/// qubit D in each of the six resulting sub-ensembles.
inline std::vector<SubEnsemble> partner_sub_ensembles(
    std::span<const RunRecord> records, BellIndex bell = BellIndex::PhiPlus, std::uint64_t min_counts = 50) {
    std::vector<SubEnsemble> out;
    for (auto axis : kAllAxes) {
        for (int sign : {1, -1}) {
            auto crit = SelectionCriterion::bell_outcome(bell);
            crit.and_outcome(Measurement::RC, axis, sign);
            auto est = reconstruct_single_qubit(records, Stage::R, Party::Second, crit, min_counts);
            out.push_back({axis, sign, crit, std::move(est), conditional_partner_bloch(bell, axis, sign)});
        }
    }
    return out;
}

struct PbrSummary {
    std::uint64_t n_runs = 0;
    /// Fraction of prepared qubits in ψ0⊥ or ψ1⊥.
    double source_eliminated_fraction = 0;
    /// Fraction of runs in which either source prepared a ⊥ state.
    double pair_eliminated_fraction = 0;
    std::uint64_t retained_runs = 0;
    ReconstructionResult phi_plus;
    CertificationReport phi_plus_certification;
};

/// Elimination bookkeeping plus certification of the Φ+-conditioned
/// sub-ensemble before any runs are eliminated.
inline PbrSummary pbr_summary(std::span<const RunRecord> records, const ReconstructOptions &options = {}) {
    if (records.empty()) {
        throw std::invalid_argument("pbr_summary: no records");
    }
    std::uint64_t perp_qubits = 0;
    std::uint64_t perp_runs = 0;
    for (const auto &r : records) {
        if (!r.alice_basis || !r.bob_basis || !r.alice_label || !r.bob_label) {
            throw std::invalid_argument("pbr_summary: record " + std::to_string(r.run_id) + " is not a PBR record");
        }
        const bool a = *r.alice_label == 2;
        const bool b = *r.bob_label == 2;
        perp_qubits += a + b;
        perp_runs += a || b;
    }
    const auto n = static_cast<double>(records.size());
    auto rec = reconstruct(records, Stage::P, SelectionCriterion::bell_outcome(BellIndex::PhiPlus), options);
    auto cert = certify(rec);
    return PbrSummary{
        records.size(), static_cast<double>(perp_qubits) / (2 * n), static_cast<double>(perp_runs) / n,
        records.size() - perp_runs, std::move(rec), cert};
}

/// Bell outcome frequencies in record order of kAllBell.
inline std::array<double, 4> bell_frequencies(std::span<const RunRecord> records) {
    std::array<double, 4> f{};
    for (const auto &r : records) {
        f[static_cast<std::size_t>(r.q_out)] += 1;
    }
    for (auto &x : f) {
        x /= records.empty() ? 1.0 : static_cast<double>(records.size());
    }
    return f;
}

}  // namespace preent

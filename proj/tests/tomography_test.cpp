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

#include "preent/tomography.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "preent/analysis.hpp"

using namespace preent;

namespace {

ComplexMatrix diag(std::initializer_list<double> v) {
    const std::vector<double> d(v);
    return ComplexMatrix::diagonal(d);
}

const std::vector<RunRecord> &standard_runs() {
    static const std::vector<RunRecord> records = [] {
        ExperimentConfig c;
        c.n_runs = 100000;
        c.master_seed = 2024;
        return run_experiment(c);
    }();
    return records;
}

}  // namespace

TEST(criterion, parse_and_print) {
    EXPECT_EQ(SelectionCriterion::parse("all").to_string(), "all");
    EXPECT_EQ(SelectionCriterion::parse("").to_string(), "all");
    const auto c = SelectionCriterion::parse(" q=PhiPlus|PsiMinus & aliceLabel=1&rC=X+ & pB=Z- ");
    EXPECT_EQ(c.bell, (std::vector<BellIndex>{BellIndex::PhiPlus, BellIndex::PsiMinus}));
    EXPECT_EQ(c.alice_label, 1);
    EXPECT_FALSE(c.bob_label.has_value());
    ASSERT_EQ(c.outcomes.size(), 2u);
    EXPECT_EQ(c.outcomes[0], (OutcomeFilter{Measurement::RC, PauliAxis::X, 1}));
    EXPECT_EQ(c.outcomes[1], (OutcomeFilter{Measurement::PB, PauliAxis::Z, -1}));
    EXPECT_EQ(c.to_string(), "q=PhiPlus|PsiMinus&aliceLabel=1&rC=X+&pB=Z-");
    EXPECT_EQ(SelectionCriterion::parse(c.to_string()).to_string(), c.to_string());
}

TEST(criterion, rejects_malformed_terms) {
    for (const char *bad : {"q", "q=Phi", "aliceLabel=3", "bobBasis=2", "rC=X", "rC=W+", "rE=X+", "q=PhiPlus&", "&q=PhiPlus"}) {
        EXPECT_THROW(SelectionCriterion::parse(bad), SelectionError) << bad;
    }
}

TEST(criterion, matches) {
    RunRecord r;
    r.q_out = BellIndex::PsiPlus;
    r.alice_label = 2;
    r.rC_axis = PauliAxis::Y;
    r.rC_out = -1;
    EXPECT_TRUE(SelectionCriterion::all().matches(r));
    EXPECT_TRUE(SelectionCriterion::parse("q=PsiPlus&aliceLabel=2&rC=Y-").matches(r));
    EXPECT_FALSE(SelectionCriterion::parse("q=PsiMinus").matches(r));
    EXPECT_FALSE(SelectionCriterion::parse("rC=Y+").matches(r));
    EXPECT_FALSE(SelectionCriterion::parse("rC=X-").matches(r));
    EXPECT_FALSE(SelectionCriterion::parse("aliceBasis=0").matches(r));
}

TEST(conditional_counts, phi_plus_zz_correlated) {
    const auto t = conditional_counts(standard_runs(), Stage::P, SelectionCriterion::bell_outcome(BellIndex::PhiPlus));
    const double n = t.setting_count(PauliAxis::Z, PauliAxis::Z);
    ASSERT_GT(n, 1000);
    EXPECT_NEAR(t.at(PauliAxis::Z, PauliAxis::Z, 1, 1) / n, 0.5, 0.05);
    EXPECT_NEAR(t.at(PauliAxis::Z, PauliAxis::Z, 1, -1) / n, 0.0, 0.05);
    std::uint64_t sum = 0;
    for (auto a : kAllAxes) {
        for (auto b : kAllAxes) {
            sum += t.setting_count(a, b);
        }
    }
    EXPECT_EQ(sum, t.total);
}

TEST(conditional_counts, empty_selection) {
    const std::vector<RunRecord> none;
    EXPECT_THROW(conditional_counts(none, Stage::P, SelectionCriterion::all()), EmptySelectionError);
    // Standard runs never carry a basis index.
    EXPECT_THROW(
        conditional_counts(standard_runs(), Stage::R, SelectionCriterion::parse("aliceBasis=0")), EmptySelectionError);
}

TEST(linear_inversion, exact_bell_and_mixed) {
    for (auto b : kAllBell) {
        const auto rho = bell_projector(b).matrix();
        EXPECT_LT(max_abs_diff(linear_inversion(ProbabilityTable::exact(rho)), rho), 1e-12) << bell_name(b);
    }
    const auto mixed = ComplexMatrix::identity(4) * Complex{0.25};
    EXPECT_LT(max_abs_diff(linear_inversion(ProbabilityTable::exact(mixed)), mixed), 1e-12);
}

TEST(linear_inversion, correlation_matrix_phi_plus) {
    PauliTable c{};
    c[0][0] = 1;
    c[1][1] = 1;
    c[2][2] = -1;
    c[3][3] = 1;
    EXPECT_LT(max_abs_diff(state_from_moments(c), bell_projector(BellIndex::PhiPlus).matrix()), 1e-15);
}

TEST(linear_inversion, random_state_round_trip) {
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto rho = random_density_matrix(31, 4, k).matrix();
        EXPECT_LT(max_abs_diff(linear_inversion(ProbabilityTable::exact(rho)), rho), 1e-12);
        EXPECT_LT(max_abs_diff(state_from_moments(moments_of(rho)), rho), 1e-12);
    }
}

TEST(linear_inversion, min_counts) {
    CountTable t;
    for (auto a : kAllAxes) {
        for (auto b : kAllAxes) {
            t.add(a, b, 1, 1, 10);
            t.add(a, b, -1, -1, 10);
        }
    }
    EXPECT_NO_THROW(linear_inversion(t, 20));
    EXPECT_THROW(linear_inversion(t, 21), InsufficientCountsError);
    CountTable gap = t;
    gap.counts[0][2] = {};
    EXPECT_THROW(linear_inversion(gap, 0), InsufficientCountsError);
}

TEST(reconstruct, force_allows_small_samples) {
    const std::vector<RunRecord> few(standard_runs().begin(), standard_runs().begin() + 2000);
    const auto sel = SelectionCriterion::bell_outcome(BellIndex::PhiPlus);
    EXPECT_THROW(reconstruct(few, Stage::P, sel), InsufficientCountsError);
    ReconstructOptions opt;
    opt.force = true;
    const auto r = reconstruct(few, Stage::P, sel, opt);
    EXPECT_NEAR(trace(r.physical.matrix()).real(), 1.0, 1e-12);
    EXPECT_GT(fidelity_pure(r.physical, bell_state(BellIndex::PhiPlus)), 0.7);
}

TEST(project_to_physical, clips_and_renormalizes) {
    const auto p = project_to_physical(diag({0.6, 0.5, -0.1, 0.0}));
    EXPECT_LT(max_abs_diff(p.matrix(), diag({6.0 / 11, 5.0 / 11, 0, 0})), 1e-12);
    EXPECT_LT(max_abs_diff(project_to_physical(p.matrix()).matrix(), p.matrix()), 1e-12);
    EXPECT_THROW(project_to_physical(diag({0.5, 0.5, 0.5, 0.5})), std::invalid_argument);
    EXPECT_THROW(project_to_physical(diag({-0.5, 1.5, 0, 0}) - diag({0, 1.0, 0, 0}) * Complex{2.0}),
                 std::invalid_argument);
}

TEST(project_to_physical, idempotent_on_valid_states) {
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto rho = random_density_matrix(5, 4, k);
        EXPECT_LT(max_abs_diff(project_to_physical(rho.matrix()).matrix(), rho.matrix()), 1e-12);
    }
}

TEST(fidelity_pure, examples) {
    const auto phi = bell_state(BellIndex::PhiPlus);
    EXPECT_NEAR(fidelity_pure(DensityMatrix::pure(phi), phi), 1.0, 1e-15);
    EXPECT_NEAR(fidelity_pure(DensityMatrix::maximally_mixed(4), phi), 0.25, 1e-15);
    EXPECT_NEAR(fidelity_pure(DensityMatrix::pure(bell_state(BellIndex::PsiMinus)), phi), 0.0, 1e-15);
    EXPECT_THROW(fidelity_pure(DensityMatrix::maximally_mixed(2), phi), std::invalid_argument);
}

TEST(reconstruct, p_and_r_stages_agree_per_bell_outcome) {
    for (auto b : kAllBell) {
        const auto sel = SelectionCriterion::bell_outcome(b);
        const auto p = reconstruct(standard_runs(), Stage::P, sel);
        const auto r = reconstruct(standard_runs(), Stage::R, sel);
        EXPECT_LE(trace_distance(p.physical.matrix(), r.physical.matrix()), 0.05) << bell_name(b);
        EXPECT_GE(fidelity_pure(r.physical, bell_state(b)), 0.97) << bell_name(b);
    }
}

TEST(reconstruct, std_errors_shrink_with_counts) {
    const auto r = reconstruct(standard_runs(), Stage::P, SelectionCriterion::all());
    const double n = r.counts.setting_count(PauliAxis::X, PauliAxis::X);
    EXPECT_NEAR(r.std_errors[1][1], std::sqrt((1 - r.correlators[1][1] * r.correlators[1][1]) / n), 1e-15);
    EXPECT_LT(r.std_errors[1][1], 0.02);
    EXPECT_LT(trace_distance(r.physical.matrix(), ComplexMatrix::identity(4) * Complex{0.25}), 0.03);
}

TEST(reconstruct_single_qubit, partner_of_phi_plus_z_outcome) {
    auto sel = SelectionCriterion::bell_outcome(BellIndex::PhiPlus);
    sel.and_outcome(Measurement::PA, PauliAxis::Z, 1);
    const auto est = reconstruct_single_qubit(standard_runs(), Stage::P, Party::Second, sel);
    EXPECT_NEAR(est.bloch[2], 1.0, 0.05);
    EXPECT_NEAR(est.bloch[0], 0.0, 5 * est.std_error[0] + 1e-3);
    EXPECT_NEAR(trace(est.state.matrix()).real(), 1.0, 1e-12);
}

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

#include "preent/protocol.hpp"

#include <cmath>
#include <random>

#include "gtest/gtest.h"

using namespace preent;

namespace {

std::vector<Projector> axis_projectors(PauliAxis axis) {
    return {pauli_projector(axis, 1), pauli_projector(axis, -1)};
}

/// Fraction of a uniform grid of variates that yields each outcome. Because
/// sampling is inverse-CDF on u, this equals the outcome probability up to
/// the grid spacing.
std::vector<double> outcome_fractions(const DensityMatrix &rho, std::span<const Projector> ps, int grid = 4000) {
    std::vector<double> f(ps.size());
    for (int k = 0; k < grid; ++k) {
        f[measure_projective(rho, ps, (k + 0.5) / grid).outcome] += 1.0 / grid;
    }
    return f;
}

ExperimentConfig standard(std::uint64_t n, std::uint64_t seed) {
    ExperimentConfig c;
    c.n_runs = n;
    c.master_seed = seed;
    return c;
}

}  // namespace

TEST(measure_projective, eigenstate_is_deterministic) {
    const auto rho = DensityMatrix::pure(Ket({1, 0}));
    const auto ps = axis_projectors(PauliAxis::Z);
    for (double u : {0.0, 0.3, 0.999999}) {
        const auto r = measure_projective(rho, ps, u);
        EXPECT_EQ(r.outcome, 0u);
        EXPECT_LT(max_abs_diff(r.post_state.matrix(), rho.matrix()), 1e-15);
    }
}

TEST(measure_projective, maximally_mixed_is_fair) {
    const auto f = outcome_fractions(DensityMatrix::maximally_mixed(2), axis_projectors(PauliAxis::Z));
    EXPECT_NEAR(f[0], 0.5, 1e-3);
    EXPECT_NEAR(f[1], 0.5, 1e-3);
}

TEST(measure_projective, x_on_zero_state) {
    const auto rho = DensityMatrix::pure(Ket({1, 0}));
    const auto ps = axis_projectors(PauliAxis::X);
    const auto f = outcome_fractions(rho, ps);
    EXPECT_NEAR(f[0], 0.5, 1e-3);
    const auto plus = measure_projective(rho, ps, 0.1);
    const auto minus = measure_projective(rho, ps, 0.9);
    EXPECT_EQ(plus.outcome, 0u);
    EXPECT_EQ(minus.outcome, 1u);
    // (I ± σx)/2
    EXPECT_LT(
        max_abs_diff(plus.post_state.matrix(), (ComplexMatrix::identity(2) + pauli_matrix(1)) * Complex{0.5}), 1e-15);
    EXPECT_LT(
        max_abs_diff(minus.post_state.matrix(), (ComplexMatrix::identity(2) - pauli_matrix(1)) * Complex{0.5}),
        1e-15);
}

TEST(measure_projective, never_samples_zero_probability_outcome) {
    const auto rho = DensityMatrix::pure(Ket({0, 1}));
    const auto ps = axis_projectors(PauliAxis::Z);
    for (double u : {0.0, 1e-17, 0.5, 1.0 - 1e-16}) {
        EXPECT_EQ(measure_projective(rho, ps, u).outcome, 1u);
    }
}

TEST(measure_projective, errors) {
    const auto rho = DensityMatrix::maximally_mixed(2);
    const std::vector<Projector> incomplete{pauli_projector(PauliAxis::Z, 1)};
    EXPECT_THROW(measure_projective(rho, incomplete, 0.5), std::invalid_argument);
    const auto ps = axis_projectors(PauliAxis::Z);
    EXPECT_THROW(measure_projective(DensityMatrix::trusted(ComplexMatrix(2)), ps, 0.5), std::invalid_argument);
    EXPECT_THROW(measure_projective(DensityMatrix::maximally_mixed(4), ps, 0.5), std::invalid_argument);
}

TEST(measure_projective, collapse_consistency) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 200; ++trial) {
        const auto rho = DensityMatrix::pure(bloch_to_ket(u(rng) * 3.14159, u(rng) * 6.28318));
        const auto axis = kAllAxes[trial % 3];
        const auto ps = axis_projectors(axis);
        const auto first = measure_projective(rho, ps, u(rng));
        for (int again = 0; again < 5; ++again) {
            EXPECT_EQ(measure_projective(first.post_state, ps, u(rng)).outcome, first.outcome);
        }
    }
}

TEST(bell_measure, product_zero_zero) {
    const auto rho = DensityMatrix::pure(Ket({1, 0, 0, 0}));
    const auto f = outcome_fractions(rho, bell_projectors());
    EXPECT_NEAR(f[0], 0.5, 1e-3);
    EXPECT_NEAR(f[1], 0.5, 1e-3);
    EXPECT_EQ(f[2], 0.0);
    EXPECT_EQ(f[3], 0.0);
    const auto [b, post] = bell_measure(rho, 0.25);
    EXPECT_EQ(b, BellIndex::PhiPlus);
    EXPECT_LT(max_abs_diff(post.matrix(), bell_projector(BellIndex::PhiPlus).matrix()), 1e-12);
}

TEST(bell_measure, eigenstate_and_mixed) {
    const auto phi = DensityMatrix::pure(bell_state(BellIndex::PhiPlus));
    for (double u : {0.0, 0.5, 0.99}) {
        EXPECT_EQ(bell_measure(phi, u).first, BellIndex::PhiPlus);
    }
    const auto f = outcome_fractions(DensityMatrix::maximally_mixed(4), bell_projectors());
    for (double x : f) {
        EXPECT_NEAR(x, 0.25, 1e-3);
    }
    EXPECT_THROW(bell_measure(DensityMatrix::maximally_mixed(2), 0.5), std::invalid_argument);
}

TEST(run_experiment, rejects_invalid_config) {
    EXPECT_THROW(run_experiment(standard(0, 1)), ConfigError);
    auto c = standard(10, 1);
    c.tomography_axes.clear();
    EXPECT_THROW(run_experiment(c), ConfigError);
    c.tomography_axes = {PauliAxis::X, PauliAxis::X};
    EXPECT_THROW(run_experiment(c), ConfigError);
    try {
        run_experiment(standard(0, 1));
    } catch (const ConfigError &e) {
        EXPECT_EQ(e.field(), "nRuns");
    }
}

TEST(run_experiment, bell_frequencies_seed_one) {
    const auto records = run_experiment(standard(10000, 1));
    std::array<int, 4> n{};
    for (const auto &r : records) {
        ++n[static_cast<std::size_t>(r.q_out)];
    }
    for (int k : n) {
        EXPECT_NEAR(k / 10000.0, 0.25, 0.02);
    }
}

TEST(run_experiment, replay_and_thread_independence) {
    const auto cfg = standard(3000, 99);
    const auto a = run_experiment(cfg);
    EXPECT_EQ(a, run_experiment(cfg));
    EXPECT_EQ(a, run_experiment(cfg, RunOptions{4, {}}));
    EXPECT_EQ(a, run_experiment(cfg, RunOptions{7, {}}));
    for (std::uint64_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].run_id, i);
    }
    // A single run in isolation matches its slot in the full list.
    auto one = cfg;
    one.n_runs = 1;
    EXPECT_EQ(run_experiment(one)[0], a[0]);
}

TEST(run_experiment, p_stage_marginals_uniform) {
    const std::uint64_t n = 60000;
    const auto records = run_experiment(standard(n, 3));
    std::array<std::array<int, 2>, 3> tally{};
    for (const auto &r : records) {
        ++tally[static_cast<std::size_t>(r.pA_axis)][r.pA_out > 0 ? 0 : 1];
    }
    const double p = 1.0 / 6.0;
    const double sigma = std::sqrt(p * (1 - p) / n);
    for (const auto &row : tally) {
        for (int k : row) {
            EXPECT_NEAR(k / double(n), p, 4 * sigma);
        }
    }
}

TEST(run_experiment, standard_state_entering_bell_is_pure_product) {
    int checked = 0;
    RunOptions opt;
    opt.on_enter_bell = [&](std::uint64_t, const DensityMatrix &rho) {
        const auto a = partial_trace(rho.matrix(), {0}, {2, 2});
        const auto b = partial_trace(rho.matrix(), {1}, {2, 2});
        EXPECT_NEAR(trace(a * a).real(), 1.0, 1e-12);
        EXPECT_NEAR(trace(b * b).real(), 1.0, 1e-12);
        EXPECT_LT(max_abs_diff(tensor(a, b), rho.matrix()), 1e-12);
        ++checked;
    };
    run_experiment(standard(500, 4), opt);
    EXPECT_EQ(checked, 500);
}

TEST(run_experiment, restricted_axes_respected) {
    auto cfg = standard(2000, 5);
    cfg.tomography_axes = {PauliAxis::Z};
    for (const auto &r : run_experiment(cfg)) {
        ASSERT_EQ(r.pA_axis, PauliAxis::Z);
        ASSERT_EQ(r.rD_axis, PauliAxis::Z);
        // Z-basis preparation measured in Z reproduces the label.
        ASSERT_EQ(r.pA_out, *r.alice_label == 1 ? 1 : -1);
        ASSERT_EQ(r.pB_out, *r.bob_label == 1 ? 1 : -1);
        // |00> and |11> only reach Φ±; |01>, |10> only Ψ±.
        const bool same = r.alice_label == r.bob_label;
        const bool phi = r.q_out == BellIndex::PhiPlus || r.q_out == BellIndex::PhiMinus;
        ASSERT_EQ(same, phi);
    }
}

TEST(run_experiment, r_stage_follows_bell_outcome) {
    for (const auto &r : run_experiment(standard(5000, 6))) {
        if (r.rC_axis != r.rD_axis || r.rC_axis == PauliAxis::Y) {
            continue;
        }
        // X and Z correlations: + for Φ+, Ψ+ on X; + for Φ± on Z.
        const int product = r.rC_out * r.rD_out;
        if (r.rC_axis == PauliAxis::Z) {
            const bool phi = r.q_out == BellIndex::PhiPlus || r.q_out == BellIndex::PhiMinus;
            ASSERT_EQ(product, phi ? 1 : -1);
        } else {
            const bool plus = r.q_out == BellIndex::PhiPlus || r.q_out == BellIndex::PsiPlus;
            ASSERT_EQ(product, plus ? 1 : -1);
        }
    }
}

TEST(run_experiment, pbr_records_carry_basis) {
    auto cfg = standard(4000, 8);
    cfg.scenario = Scenario::PbrVariant;
    int basis_one = 0;
    for (const auto &r : run_experiment(cfg)) {
        ASSERT_TRUE(r.alice_basis.has_value());
        ASSERT_TRUE(r.bob_basis.has_value());
        ASSERT_TRUE(r.alice_label.has_value());
        basis_one += *r.alice_basis;
        // ψ0 = |0>, ψ0⊥ = |1>: a Z measurement reproduces the label.
        if (*r.alice_basis == 0 && r.pA_axis == PauliAxis::Z) {
            ASSERT_EQ(r.pA_out, *r.alice_label == 1 ? 1 : -1);
        }
        // ψ1 = |+>, ψ1⊥ = |->: an X measurement reproduces the label.
        if (*r.alice_basis == 1 && r.pA_axis == PauliAxis::X) {
            ASSERT_EQ(r.pA_out, *r.alice_label == 1 ? 1 : -1);
        }
    }
    EXPECT_NEAR(basis_one / 4000.0, 0.5, 4 * std::sqrt(0.25 / 4000));
}

TEST(run_experiment, dces_shape_and_swapped_correlations) {
    auto cfg = standard(4000, 9);
    cfg.scenario = Scenario::Dces;
    const auto records = run_experiment(cfg);
    int zz = 0;
    for (const auto &r : records) {
        ASSERT_FALSE(r.alice_label.has_value());
        ASSERT_FALSE(r.alice_basis.has_value());
        // Outer qubits conditioned on inner Ψ- are in Ψ-: anti-correlated in every axis.
        if (r.q_out == BellIndex::PsiMinus && r.pA_axis == r.pB_axis) {
            ASSERT_EQ(r.pA_out * r.pB_out, -1);
            ++zz;
        }
        // R re-measures the outer qubits after their P collapse.
        if (r.rC_axis == r.pA_axis) {
            ASSERT_EQ(r.rC_out, r.pA_out);
        }
    }
    EXPECT_GT(zz, 100);
}

TEST(run_experiment, dces_state_entering_bell) {
    auto cfg = standard(50, 10);
    cfg.scenario = Scenario::Dces;
    RunOptions opt;
    opt.on_enter_bell = [](std::uint64_t, const DensityMatrix &rho) {
        EXPECT_EQ(rho.dim(), 16u);
        EXPECT_NEAR(trace(rho.matrix()).real(), 1.0, 1e-12);
        // The outer measurements steer each inner qubit to a pure state.
        const auto inner = partial_trace(rho.matrix(), {1, 2}, {2, 2, 2, 2});
        const auto a2 = partial_trace(inner, {0}, {2, 2});
        const auto b1 = partial_trace(inner, {1}, {2, 2});
        EXPECT_NEAR(trace(a2 * a2).real(), 1.0, 1e-12);
        EXPECT_NEAR(trace(b1 * b1).real(), 1.0, 1e-12);
        EXPECT_LT(max_abs_diff(tensor(a2, b1), inner), 1e-12);
    };
    run_experiment(cfg, opt);
}

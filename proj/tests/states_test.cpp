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

#include "preent/states.hpp"

#include <numbers>

#include "gtest/gtest.h"

using namespace preent;

TEST(bloch_to_ket, poles_and_equator) {
    const Ket zero = bloch_to_ket(0, 0);
    EXPECT_NEAR(std::abs(zero[0] - 1.0), 0, 1e-15);
    EXPECT_NEAR(std::abs(zero[1]), 0, 1e-15);

    const Ket one = bloch_to_ket(std::numbers::pi, 0);
    EXPECT_NEAR(std::norm(inner(one, Ket({0, 1}))), 1.0, 1e-15);

    const Ket plus = bloch_to_ket(std::numbers::pi / 2, 0);
    EXPECT_NEAR(plus[0].real(), std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(plus[1].real(), std::sqrt(0.5), 1e-15);
}

TEST(ket, canonical_phase_and_norm) {
    const Ket k({Complex{0, 1}, 0});
    EXPECT_EQ(k[0], Complex{1});
    EXPECT_THROW(Ket({1, 1}), std::invalid_argument);
}

TEST(pauli_projector, eigen_projectors) {
    EXPECT_LT(max_abs_diff(pauli_projector(PauliAxis::Z, 1).matrix(), ComplexMatrix{{1, 0}, {0, 0}}), 1e-15);
    EXPECT_LT(
        max_abs_diff(pauli_projector(PauliAxis::X, 1).matrix(), ComplexMatrix{{0.5, 0.5}, {0.5, 0.5}}), 1e-15);
    const Complex i{0, 1};
    EXPECT_LT(
        max_abs_diff(pauli_projector(PauliAxis::Y, -1).matrix(), ComplexMatrix{{0.5, 0.5 * i}, {-0.5 * i, 0.5}}),
        1e-15);
}

TEST(pauli_projector, projector_invariants) {
    for (auto axis : kAllAxes) {
        ComplexMatrix sum(2);
        for (int s : {1, -1}) {
            const auto p = pauli_projector(axis, s);
            EXPECT_LT(frobenius_norm(p.matrix() * p.matrix() - p.matrix()), 1e-12);
            EXPECT_EQ(p.rank(), 1);
            // σ|i±> = ±|i±>
            EXPECT_LT(max_abs_diff(pauli_matrix(axis) * p.matrix(), p.matrix() * Complex{double(s)}), 1e-15);
            sum += p.matrix();
        }
        EXPECT_LT(max_abs_diff(sum, ComplexMatrix::identity(2)), 1e-15);
    }
}

TEST(projector, rejects_non_idempotent) {
    EXPECT_THROW(Projector(ComplexMatrix::identity(2) * Complex{0.5}), std::invalid_argument);
}

TEST(bell_state, definitions) {
    const double h = std::sqrt(0.5);
    const Ket phi = bell_state(0);
    EXPECT_NEAR(phi[0].real(), h, 1e-15);
    EXPECT_NEAR(phi[3].real(), h, 1e-15);
    const Ket psi_minus = bell_state(3);
    EXPECT_NEAR(psi_minus[1].real(), h, 1e-15);
    EXPECT_NEAR(psi_minus[2].real(), -h, 1e-15);
    EXPECT_THROW(bell_state(4), std::invalid_argument);
}

TEST(bell_state, orthonormal_and_complete) {
    ComplexMatrix sum(4);
    for (auto a : kAllBell) {
        for (auto b : kAllBell) {
            EXPECT_NEAR(std::abs(inner(bell_state(a), bell_state(b))), a == b ? 1.0 : 0.0, 1e-15);
        }
        const auto p = bell_projector(a);
        EXPECT_EQ(p.rank(), 1);
        sum += p.matrix();
    }
    EXPECT_LT(max_abs_diff(sum, ComplexMatrix::identity(4)), 1e-12);
}

TEST(preparation_basis, orthogonal_and_complete) {
    for (double theta : {0.0, 0.3, std::numbers::pi / 2, 2.0, std::numbers::pi}) {
        for (double phi : {0.0, 1.1, -2.5}) {
            const auto b = PreparationBasis::from_bloch(theta, phi);
            EXPECT_LT(std::abs(inner(b.state(1), b.state(2))), 1e-12);
            EXPECT_LT(
                max_abs_diff(b.state(1).projector() + b.state(2).projector(), ComplexMatrix::identity(2)), 1e-12);
        }
    }
    EXPECT_THROW(PreparationBasis::z_basis().state(3), std::invalid_argument);
}

TEST(density_matrix, validation) {
    EXPECT_NO_THROW(DensityMatrix(ComplexMatrix::identity(2) * Complex{0.5}));
    EXPECT_THROW(DensityMatrix(ComplexMatrix::identity(2)), std::invalid_argument);
    const std::vector<double> neg{1.2, -0.2};
    EXPECT_THROW(DensityMatrix(ComplexMatrix::diagonal(neg)), std::invalid_argument);
    EXPECT_THROW(DensityMatrix(ComplexMatrix{{0.5, 0.1}, {0.2, 0.5}}), std::invalid_argument);
}

TEST(embed, single_and_pair) {
    const auto z = pauli_matrix(3);
    EXPECT_EQ(embed_single(z, 0, 2), tensor(z, ComplexMatrix::identity(2)));
    EXPECT_EQ(embed_single(z, 1, 2), tensor(ComplexMatrix::identity(2), z));
    const auto bell = bell_projector(BellIndex::PsiMinus).matrix();
    EXPECT_EQ(
        embed_adjacent_pair(bell, 1, 4),
        tensor(tensor(ComplexMatrix::identity(2), bell), ComplexMatrix::identity(2)));
}

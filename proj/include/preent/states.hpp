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
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "preent/qmath.hpp"

namespace preent {

inline constexpr double kUnitTolerance = 1e-12;

/// Normalized state vector with canonical global phase: the first amplitude
/// whose magnitude exceeds 1e-12 is made real and non-negative.
class Ket {
   public:
    explicit Ket(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)) {
        if (amps_.empty()) {
            throw std::invalid_argument("Ket must have at least one amplitude");
        }
        double norm = 0;
        for (const auto &a : amps_) {
            norm += std::norm(a);
        }
        if (std::abs(std::sqrt(norm) - 1.0) > kUnitTolerance) {
            throw std::invalid_argument("Ket is not unit norm (norm " + std::to_string(std::sqrt(norm)) + ")");
        }
        for (const auto &a : amps_) {
            if (std::abs(a) > 1e-12) {
                const Complex undo = std::conj(a) / std::abs(a);
                for (auto &x : amps_) {
                    x *= undo;
                }
                break;
            }
        }
    }

    std::size_t dim() const {
        return amps_.size();
    }
    const Complex &operator[](std::size_t k) const {
        return amps_[k];
    }
    const std::vector<Complex> &amplitudes() const {
        return amps_;
    }

    /// |ψ><ψ|
    ComplexMatrix projector() const {
        ComplexMatrix out(dim());
        for (std::size_t r = 0; r < dim(); ++r) {
            for (std::size_t c = 0; c < dim(); ++c) {
                out(r, c) = amps_[r] * std::conj(amps_[c]);
            }
        }
        return out;
    }

   private:
    std::vector<Complex> amps_;
};

inline Complex inner(const Ket &a, const Ket &b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("inner: dimension mismatch");
    }
    Complex s{};
    for (std::size_t k = 0; k < a.dim(); ++k) {
        s += std::conj(a[k]) * b[k];
    }
    return s;
}

inline Ket tensor(const Ket &a, const Ket &b) {
    std::vector<Complex> amps;
    amps.reserve(a.dim() * b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t j = 0; j < b.dim(); ++j) {
            amps.push_back(a[i] * b[j]);
        }
    }
    return Ket(std::move(amps));
}

/// <ψ|m|ψ>, real part.
inline double expectation(const ComplexMatrix &m, const Ket &psi) {
    if (m.dim() != psi.dim()) {
        throw std::invalid_argument("expectation: dimension mismatch");
    }
    Complex s{};
    for (std::size_t r = 0; r < m.dim(); ++r) {
        for (std::size_t c = 0; c < m.dim(); ++c) {
            s += std::conj(psi[r]) * m(r, c) * psi[c];
        }
    }
    return s.real();
}

/// cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>.
inline Ket bloch_to_ket(double theta, double phi) {
    return Ket({std::cos(theta / 2), std::polar(1.0, phi) * std::sin(theta / 2)});
}

enum class PauliAxis { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<PauliAxis, 3> kAllAxes{PauliAxis::X, PauliAxis::Y, PauliAxis::Z};

inline constexpr std::string_view axis_name(PauliAxis axis) {
    switch (axis) {
        case PauliAxis::X:
            return "X";
        case PauliAxis::Y:
            return "Y";
        case PauliAxis::Z:
            return "Z";
    }
    return "?";
}

inline std::optional<PauliAxis> parse_axis(std::string_view s) {
    if (s == "X" || s == "x") {
        return PauliAxis::X;
    }
    if (s == "Y" || s == "y") {
        return PauliAxis::Y;
    }
    if (s == "Z" || s == "z") {
        return PauliAxis::Z;
    }
    return std::nullopt;
}

/// Pauli matrix for index 0 (identity), 1 (X), 2 (Y), 3 (Z).
inline ComplexMatrix pauli_matrix(int index) {
    constexpr Complex i{0, 1};
    switch (index) {
        case 0:
            return ComplexMatrix::identity(2);
        case 1:
            return {{0, 1}, {1, 0}};
        case 2:
            return {{0, -i}, {i, 0}};
        case 3:
            return {{1, 0}, {0, -1}};
        default:
            throw std::invalid_argument("pauli_matrix: index must be 0..3");
    }
}

inline ComplexMatrix pauli_matrix(PauliAxis axis) {
    return pauli_matrix(static_cast<int>(axis) + 1);
}

/// Eigenvector of the Pauli along `axis` with eigenvalue `sign` (+1 or -1).
inline Ket pauli_eigenket(PauliAxis axis, int sign) {
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("pauli_eigenket: sign must be +1 or -1");
    }
    const double h = std::numbers::sqrt2 / 2;
    switch (axis) {
        case PauliAxis::X:
            return Ket({h, sign * h});
        case PauliAxis::Y:
            return Ket({h, Complex{0, sign * h}});
        case PauliAxis::Z:
            return sign > 0 ? Ket({1, 0}) : Ket({0, 1});
    }
    throw std::invalid_argument("pauli_eigenket: bad axis");
}

/// Hermitian idempotent operator of a given rank.
class Projector {
   public:
    explicit Projector(ComplexMatrix m) : m_(std::move(m)) {
        if (hermitian_asymmetry(m_) > kUnitTolerance) {
            throw std::invalid_argument("Projector is not Hermitian");
        }
        if (frobenius_norm(m_ * m_ - m_) >= kUnitTolerance) {
            throw std::invalid_argument("Projector is not idempotent");
        }
        const double tr = trace(m_).real();
        rank_ = static_cast<int>(std::lround(tr));
        if (rank_ <= 0 || std::abs(tr - rank_) > kUnitTolerance) {
            throw std::invalid_argument("Projector trace is not a positive integer");
        }
    }

    static Projector onto(const Ket &k) {
        return Projector(k.projector());
    }

    const ComplexMatrix &matrix() const {
        return m_;
    }
    int rank() const {
        return rank_;
    }
    std::size_t dim() const {
        return m_.dim();
    }

   private:
    ComplexMatrix m_;
    int rank_ = 0;
};

inline Projector pauli_projector(PauliAxis axis, int sign) {
    return Projector::onto(pauli_eigenket(axis, sign));
}

/// Index into the Bell basis, which is the eigenbasis of the entangling
/// observable.
enum class BellIndex { PhiPlus = 0, PhiMinus = 1, PsiPlus = 2, PsiMinus = 3 };

inline constexpr std::array<BellIndex, 4> kAllBell{
    BellIndex::PhiPlus, BellIndex::PhiMinus, BellIndex::PsiPlus, BellIndex::PsiMinus};

inline constexpr std::string_view bell_name(BellIndex b) {
    switch (b) {
        case BellIndex::PhiPlus:
            return "PhiPlus";
        case BellIndex::PhiMinus:
            return "PhiMinus";
        case BellIndex::PsiPlus:
            return "PsiPlus";
        case BellIndex::PsiMinus:
            return "PsiMinus";
    }
    return "?";
}

inline std::optional<BellIndex> parse_bell(std::string_view s) {
    for (auto b : kAllBell) {
        if (bell_name(b) == s) {
            return b;
        }
    }
    return std::nullopt;
}

/// Φ+ = (|00>+|11>)/√2, Φ- = (|00>-|11>)/√2, Ψ+ = (|01>+|10>)/√2,
/// Ψ- = (|01>-|10>)/√2.
inline Ket bell_state(BellIndex b) {
    const double h = std::numbers::sqrt2 / 2;
    switch (b) {
        case BellIndex::PhiPlus:
            return Ket({h, 0, 0, h});
        case BellIndex::PhiMinus:
            return Ket({h, 0, 0, -h});
        case BellIndex::PsiPlus:
            return Ket({0, h, h, 0});
        case BellIndex::PsiMinus:
            return Ket({0, h, -h, 0});
    }
    throw std::invalid_argument("bell_state: bad index");
}

inline Ket bell_state(int n) {
    if (n < 0 || n > 3) {
        throw std::invalid_argument("bell_state: index must be 0..3");
    }
    return bell_state(static_cast<BellIndex>(n));
}

inline Projector bell_projector(BellIndex b) {
    return Projector::onto(bell_state(b));
}

/// Orthonormal pair of single-qubit states labelled 1 and 2.
///
/// Built from the Bloch angles of the label-1 state; label 2 is the antipodal
/// point on the sphere.
class PreparationBasis {
   public:
    PreparationBasis() : PreparationBasis(from_bloch(0, 0)) {
    }

    static PreparationBasis from_bloch(double theta, double phi) {
        return PreparationBasis(
            theta, phi, bloch_to_ket(theta, phi), bloch_to_ket(std::numbers::pi - theta, phi + std::numbers::pi));
    }

    static PreparationBasis z_basis() {
        return from_bloch(0, 0);
    }

    double theta() const {
        return theta_;
    }
    double phi() const {
        return phi_;
    }

    /// State for label 1 or 2.
    const Ket &state(int label) const {
        if (label == 1) {
            return first_;
        }
        if (label == 2) {
            return second_;
        }
        throw std::invalid_argument("PreparationBasis label must be 1 or 2");
    }

   private:
    PreparationBasis(double theta, double phi, Ket first, Ket second)
        : theta_(theta), phi_(phi), first_(std::move(first)), second_(std::move(second)) {
        if (first_.dim() != 2 || second_.dim() != 2) {
            throw std::invalid_argument("PreparationBasis states must be single qubits");
        }
        if (std::abs(inner(first_, second_)) > kUnitTolerance) {
            throw std::invalid_argument("PreparationBasis states are not orthogonal");
        }
    }

    double theta_;
    double phi_;
    Ket first_;
    Ket second_;
};

inline constexpr double kDensityTolerance = 1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
   public:
    /// Validates the matrix; throws std::invalid_argument on failure.
    explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
        if (!all_finite(m_)) {
            throw std::invalid_argument("DensityMatrix has non-finite entries");
        }
        if (hermitian_asymmetry(m_) >= kDensityTolerance) {
            throw std::invalid_argument("DensityMatrix is not Hermitian");
        }
        if (std::abs(trace(m_) - 1.0) > kDensityTolerance) {
            throw std::invalid_argument("DensityMatrix trace is not 1");
        }
        if (eigenvalues(m_).back() < -kDensityTolerance) {
            throw std::invalid_argument("DensityMatrix is not positive semidefinite");
        }
    }

    /// Skips validation. For internal paths whose output is valid by
    /// construction, such as Born-rule collapse of a valid state.
    static DensityMatrix trusted(ComplexMatrix m) {
        return DensityMatrix(std::move(m), Unchecked{});
    }

    static DensityMatrix pure(const Ket &k) {
        return trusted(k.projector());
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        return trusted(ComplexMatrix::identity(dim) * Complex{1.0 / static_cast<double>(dim)});
    }

    const ComplexMatrix &matrix() const {
        return m_;
    }
    std::size_t dim() const {
        return m_.dim();
    }
    const Complex &operator()(std::size_t r, std::size_t c) const {
        return m_(r, c);
    }

   private:
    struct Unchecked {};
    DensityMatrix(ComplexMatrix m, Unchecked) : m_(std::move(m)) {
    }

    ComplexMatrix m_;
};

/// Embeds a single-qubit operator on qubit `target` of an n-qubit register
/// (qubit 0 is the slowest index).
inline ComplexMatrix embed_single(const ComplexMatrix &op, std::size_t target, std::size_t num_qubits) {
    if (op.dim() != 2 || target >= num_qubits) {
        throw std::invalid_argument("embed_single: bad operator or target");
    }
    ComplexMatrix out = target == 0 ? op : ComplexMatrix::identity(2);
    for (std::size_t q = 1; q < num_qubits; ++q) {
        out = tensor(out, q == target ? op : ComplexMatrix::identity(2));
    }
    return out;
}

/// Embeds a two-qubit operator on adjacent qubits (first, first + 1).
inline ComplexMatrix embed_adjacent_pair(const ComplexMatrix &op, std::size_t first, std::size_t num_qubits) {
    if (op.dim() != 4 || first + 1 >= num_qubits) {
        throw std::invalid_argument("embed_adjacent_pair: bad operator or position");
    }
    ComplexMatrix out = first == 0 ? op : ComplexMatrix::identity(2);
    for (std::size_t q = 1; q < num_qubits; ++q) {
        if (q == first + 1) {
            continue;
        }
        out = tensor(out, q == first ? op : ComplexMatrix::identity(2));
    }
    return out;
}

}  // namespace preent

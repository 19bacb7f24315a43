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
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace preent {

using Complex = std::complex<double>;

/// Dense square complex matrix stored row-major.
///
/// Sized for the handful of qubits this library deals with (dimension 2, 4
/// or 16). Multiplication skips exact zeros of the left operand, which makes
/// products with embedded local projectors cheap without a sparse type.
class ComplexMatrix {
   public:
    ComplexMatrix() = default;

    explicit ComplexMatrix(std::size_t dim) : dim_(dim), data_(dim * dim) {
        if (dim == 0) {
            throw std::invalid_argument("ComplexMatrix dimension must be positive");
        }
    }

    ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows) : ComplexMatrix(rows.size()) {
        std::size_t r = 0;
        for (const auto &row : rows) {
            if (row.size() != dim_) {
                throw std::invalid_argument("ComplexMatrix rows must form a square matrix");
            }
            std::copy(row.begin(), row.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * dim_));
            ++r;
        }
    }

    static ComplexMatrix identity(std::size_t dim) {
        ComplexMatrix m(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            m(k, k) = 1.0;
        }
        return m;
    }

    static ComplexMatrix diagonal(std::span<const double> values) {
        ComplexMatrix m(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
            m(k, k) = values[k];
        }
        return m;
    }

    std::size_t dim() const {
        return dim_;
    }

    Complex &operator()(std::size_t r, std::size_t c) {
        return data_[r * dim_ + c];
    }
    const Complex &operator()(std::size_t r, std::size_t c) const {
        return data_[r * dim_ + c];
    }

    std::span<const Complex> entries() const {
        return data_;
    }

    ComplexMatrix &operator+=(const ComplexMatrix &other) {
        require_same_dim(other);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] += other.data_[k];
        }
        return *this;
    }

    ComplexMatrix &operator-=(const ComplexMatrix &other) {
        require_same_dim(other);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] -= other.data_[k];
        }
        return *this;
    }

    ComplexMatrix &operator*=(Complex s) {
        for (auto &x : data_) {
            x *= s;
        }
        return *this;
    }

    bool operator==(const ComplexMatrix &other) const = default;

    void require_same_dim(const ComplexMatrix &other) const {
        if (dim_ != other.dim_) {
            throw std::invalid_argument(
                "matrix dimension mismatch: " + std::to_string(dim_) + " vs " + std::to_string(other.dim_));
        }
    }

   private:
    std::size_t dim_ = 0;
    std::vector<Complex> data_;
};

inline ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix &b) {
    return a += b;
}
inline ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix &b) {
    return a -= b;
}
inline ComplexMatrix operator*(ComplexMatrix a, Complex s) {
    return a *= s;
}
inline ComplexMatrix operator*(Complex s, ComplexMatrix a) {
    return a *= s;
}

inline ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b) {
    a.require_same_dim(b);
    const std::size_t n = a.dim();
    ComplexMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const Complex aik = a(i, k);
            if (aik == Complex{}) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

inline ComplexMatrix adjoint(const ComplexMatrix &m) {
    ComplexMatrix out(m.dim());
    for (std::size_t r = 0; r < m.dim(); ++r) {
        for (std::size_t c = 0; c < m.dim(); ++c) {
            out(c, r) = std::conj(m(r, c));
        }
    }
    return out;
}

inline ComplexMatrix transpose(const ComplexMatrix &m) {
    ComplexMatrix out(m.dim());
    for (std::size_t r = 0; r < m.dim(); ++r) {
        for (std::size_t c = 0; c < m.dim(); ++c) {
            out(c, r) = m(r, c);
        }
    }
    return out;
}

inline ComplexMatrix conjugate(const ComplexMatrix &m) {
    ComplexMatrix out(m.dim());
    for (std::size_t r = 0; r < m.dim(); ++r) {
        for (std::size_t c = 0; c < m.dim(); ++c) {
            out(r, c) = std::conj(m(r, c));
        }
    }
    return out;
}

inline Complex trace(const ComplexMatrix &m) {
    Complex t{};
    for (std::size_t k = 0; k < m.dim(); ++k) {
        t += m(k, k);
    }
    return t;
}

/// tr(a·b) without forming the product.
inline Complex trace_of_product(const ComplexMatrix &a, const ComplexMatrix &b) {
    a.require_same_dim(b);
    Complex t{};
    for (std::size_t i = 0; i < a.dim(); ++i) {
        for (std::size_t k = 0; k < a.dim(); ++k) {
            t += a(i, k) * b(k, i);
        }
    }
    return t;
}

inline double frobenius_norm(const ComplexMatrix &m) {
    double s = 0;
    for (const auto &x : m.entries()) {
        s += std::norm(x);
    }
    return std::sqrt(s);
}

inline double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
    a.require_same_dim(b);
    double worst = 0;
    for (std::size_t k = 0; k < a.entries().size(); ++k) {
        worst = std::max(worst, std::abs(a.entries()[k] - b.entries()[k]));
    }
    return worst;
}

inline bool all_finite(const ComplexMatrix &m) {
    return std::all_of(m.entries().begin(), m.entries().end(), [](const Complex &x) {
        return std::isfinite(x.real()) && std::isfinite(x.imag());
    });
}

/// Largest entry-wise deviation of m from its adjoint.
inline double hermitian_asymmetry(const ComplexMatrix &m) {
    double worst = 0;
    for (std::size_t r = 0; r < m.dim(); ++r) {
        for (std::size_t c = r; c < m.dim(); ++c) {
            worst = std::max(worst, std::abs(m(r, c) - std::conj(m(c, r))));
        }
    }
    return worst;
}

/// Kronecker product. The left factor is the slow index, so for two qubits the
/// basis order is |00>, |01>, |10>, |11>.
inline ComplexMatrix tensor(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (!all_finite(a) || !all_finite(b)) {
        throw std::invalid_argument("tensor: non-finite input");
    }
    const std::size_t na = a.dim();
    const std::size_t nb = b.dim();
    ComplexMatrix out(na * nb);
    for (std::size_t ar = 0; ar < na; ++ar) {
        for (std::size_t ac = 0; ac < na; ++ac) {
            const Complex x = a(ar, ac);
            if (x == Complex{}) {
                continue;
            }
            for (std::size_t br = 0; br < nb; ++br) {
                for (std::size_t bc = 0; bc < nb; ++bc) {
                    out(ar * nb + br, ac * nb + bc) = x * b(br, bc);
                }
            }
        }
    }
    return out;
}

namespace detail {

inline std::size_t checked_product(const ComplexMatrix &m, std::span<const std::size_t> dims) {
    if (dims.empty()) {
        throw std::invalid_argument("factor dimension list is empty");
    }
    std::size_t total = 1;
    for (auto d : dims) {
        if (d == 0) {
            throw std::invalid_argument("factor dimension must be positive");
        }
        total *= d;
    }
    if (total != m.dim()) {
        throw std::invalid_argument(
            "factor dimensions multiply to " + std::to_string(total) + " but matrix has dim " +
            std::to_string(m.dim()));
    }
    return total;
}

/// Mixed-radix decomposition of a flat index, first factor most significant.
inline void split_index(std::size_t index, std::span<const std::size_t> dims, std::span<std::size_t> digits) {
    for (std::size_t f = dims.size(); f-- > 0;) {
        digits[f] = index % dims[f];
        index /= dims[f];
    }
}

inline std::size_t join_index(std::span<const std::size_t> digits, std::span<const std::size_t> dims) {
    std::size_t index = 0;
    for (std::size_t f = 0; f < dims.size(); ++f) {
        index = index * dims[f] + digits[f];
    }
    return index;
}

}  // namespace detail

/// Transposes the named tensor factor only.
inline ComplexMatrix partial_transpose(
    const ComplexMatrix &rho, std::size_t subsystem, std::span<const std::size_t> dims) {
    detail::checked_product(rho, dims);
    if (subsystem >= dims.size()) {
        throw std::invalid_argument("partial_transpose: subsystem index out of range");
    }
    const std::size_t n = rho.dim();
    std::vector<std::size_t> rd(dims.size());
    std::vector<std::size_t> cd(dims.size());
    ComplexMatrix out(n);
    for (std::size_t r = 0; r < n; ++r) {
        detail::split_index(r, dims, rd);
        for (std::size_t c = 0; c < n; ++c) {
            detail::split_index(c, dims, cd);
            std::swap(rd[subsystem], cd[subsystem]);
            out(detail::join_index(rd, dims), detail::join_index(cd, dims)) = rho(r, c);
            std::swap(rd[subsystem], cd[subsystem]);
        }
    }
    return out;
}

inline ComplexMatrix partial_transpose(
    const ComplexMatrix &rho, std::size_t subsystem, std::initializer_list<std::size_t> dims) {
    return partial_transpose(rho, subsystem, std::span<const std::size_t>(dims.begin(), dims.size()));
}

/// Traces out every factor not listed in `keep`. Kept factors stay in their
/// original order.
inline ComplexMatrix partial_trace(
    const ComplexMatrix &rho, std::span<const std::size_t> keep, std::span<const std::size_t> dims) {
    detail::checked_product(rho, dims);
    std::vector<bool> kept(dims.size(), false);
    for (auto k : keep) {
        if (k >= dims.size()) {
            throw std::invalid_argument("partial_trace: kept subsystem index out of range");
        }
        if (kept[k]) {
            throw std::invalid_argument("partial_trace: kept subsystem listed twice");
        }
        kept[k] = true;
    }
    std::vector<std::size_t> out_dims;
    for (std::size_t f = 0; f < dims.size(); ++f) {
        if (kept[f]) {
            out_dims.push_back(dims[f]);
        }
    }
    if (out_dims.empty()) {
        ComplexMatrix scalar(1);
        scalar(0, 0) = trace(rho);
        return scalar;
    }
    const std::size_t out_n = std::accumulate(out_dims.begin(), out_dims.end(), std::size_t{1}, std::multiplies<>());
    ComplexMatrix out(out_n);
    std::vector<std::size_t> rd(dims.size());
    std::vector<std::size_t> cd(dims.size());
    std::vector<std::size_t> ro;
    std::vector<std::size_t> co;
    for (std::size_t r = 0; r < rho.dim(); ++r) {
        detail::split_index(r, dims, rd);
        for (std::size_t c = 0; c < rho.dim(); ++c) {
            detail::split_index(c, dims, cd);
            bool diagonal_in_traced = true;
            ro.clear();
            co.clear();
            for (std::size_t f = 0; f < dims.size(); ++f) {
                if (kept[f]) {
                    ro.push_back(rd[f]);
                    co.push_back(cd[f]);
                } else if (rd[f] != cd[f]) {
                    diagonal_in_traced = false;
                    break;
                }
            }
            if (diagonal_in_traced) {
                out(detail::join_index(ro, out_dims), detail::join_index(co, out_dims)) += rho(r, c);
            }
        }
    }
    return out;
}

inline ComplexMatrix partial_trace(
    const ComplexMatrix &rho, std::initializer_list<std::size_t> keep, std::initializer_list<std::size_t> dims) {
    return partial_trace(
        rho, std::span<const std::size_t>(keep.begin(), keep.size()),
        std::span<const std::size_t>(dims.begin(), dims.size()));
}

/// Eigenvalues in descending order; eigenvectors[k] pairs with eigenvalues[k].
struct HermitianSpectrum {
    std::vector<double> eigenvalues;
    std::vector<std::vector<Complex>> eigenvectors;

    ComplexMatrix reconstruct() const {
        const std::size_t n = eigenvalues.size();
        ComplexMatrix out(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto &v = eigenvectors[k];
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    out(r, c) += eigenvalues[k] * v[r] * std::conj(v[c]);
                }
            }
        }
        return out;
    }
};

class EigenNonConvergence : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kJacobiOffDiagonalTolerance = 1e-12;
inline constexpr int kJacobiSweepBudget = 100;

/// Cyclic complex Jacobi eigensolver.
///
/// The input is symmetrized as (m + m†)/2 first; inputs further than
/// kHermitianTolerance from Hermitian are rejected. Sweeps continue until the
/// off-diagonal Frobenius mass drops below 1e-12 (scaled by the matrix norm
/// when that exceeds one) and throw EigenNonConvergence when the sweep budget
/// runs out.
inline HermitianSpectrum hermitian_eig(const ComplexMatrix &m) {
    if (!all_finite(m)) {
        throw std::invalid_argument("hermitian_eig: non-finite input");
    }
    const double asym = hermitian_asymmetry(m);
    if (asym >= kHermitianTolerance) {
        throw std::invalid_argument("hermitian_eig: input is not Hermitian (asymmetry " + std::to_string(asym) + ")");
    }
    const std::size_t n = m.dim();
    ComplexMatrix a = (m + adjoint(m)) * Complex{0.5};
    ComplexMatrix v = ComplexMatrix::identity(n);
    const double tol = kJacobiOffDiagonalTolerance * std::max(1.0, frobenius_norm(a));

    auto off_diagonal_mass = [&] {
        double s = 0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                if (r != c) {
                    s += std::norm(a(r, c));
                }
            }
        }
        return std::sqrt(s);
    };

    bool converged = off_diagonal_mass() < tol;
    for (int sweep = 0; sweep < kJacobiSweepBudget && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag == 0.0) {
                    continue;
                }
                // Phase the q column so the (p, q) entry is real, then apply the
                // real symmetric rotation that annihilates it.
                const Complex phase = apq / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double theta = (aqq - app) / (2.0 * mag);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                const Complex jpp = cs;
                const Complex jpq = sn;
                const Complex jqp = -sn * std::conj(phase);
                const Complex jqq = cs * std::conj(phase);

                for (std::size_t k = 0; k < n; ++k) {
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = akp * jpp + akq * jqp;
                    a(k, q) = akp * jpq + akq * jqq;
                    const Complex vkp = v(k, p);
                    const Complex vkq = v(k, q);
                    v(k, p) = vkp * jpp + vkq * jqp;
                    v(k, q) = vkp * jpq + vkq * jqq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
                    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
        }
        converged = off_diagonal_mass() < tol;
    }
    if (!converged) {
        throw EigenNonConvergence(
            "hermitian_eig: no convergence after " + std::to_string(kJacobiSweepBudget) + " sweeps (dim " +
            std::to_string(n) + ")");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return a(x, x).real() > a(y, y).real();
    });
    HermitianSpectrum out;
    out.eigenvalues.reserve(n);
    out.eigenvectors.reserve(n);
    for (auto k : order) {
        out.eigenvalues.push_back(a(k, k).real());
        std::vector<Complex> col(n);
        double norm = 0;
        for (std::size_t r = 0; r < n; ++r) {
            col[r] = v(r, k);
            norm += std::norm(col[r]);
        }
        norm = std::sqrt(norm);
        for (auto &x : col) {
            x /= norm;
        }
        out.eigenvectors.push_back(std::move(col));
    }
    return out;
}

inline std::vector<double> eigenvalues(const ComplexMatrix &m) {
    return hermitian_eig(m).eigenvalues;
}

/// (1/2) Σ |λ(ρ − σ)|.
inline double trace_distance(const ComplexMatrix &rho, const ComplexMatrix &sigma) {
    rho.require_same_dim(sigma);
    double s = 0;
    for (double x : eigenvalues(rho - sigma)) {
        s += std::abs(x);
    }
    return 0.5 * s;
}

}  // namespace preent

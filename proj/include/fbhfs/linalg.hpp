#pragma once

#include "fbhfs/precision.hpp"

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fbhfs {

using Vector = std::vector<Real>;

/// Dense symmetric matrix holding its lower triangle row by row.
class SymMatrix {
public:
    SymMatrix() = default;
    /// Zero matrix of the given order at the active precision.
    explicit SymMatrix(std::size_t order);
    /// Builds from full rows; only the lower triangle is read.
    SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t order() const noexcept { return order_; }

    Real& operator()(std::size_t i, std::size_t j) noexcept { return data_[index(i, j)]; }
    const Real& operator()(std::size_t i, std::size_t j) const noexcept { return data_[index(i, j)]; }

    /// Contiguous entries (i,0)..(i,i).
    std::span<const Real> row(std::size_t i) const noexcept {
        return {data_.data() + i * (i + 1) / 2, i + 1};
    }
    std::span<Real> row(std::size_t i) noexcept { return {data_.data() + i * (i + 1) / 2, i + 1}; }

    /// Largest absolute entry.
    Real max_abs() const;

    /// y = M x.
    Vector multiply(std::span<const Real> x) const;

    /// x^T M x.
    Real quadratic_form(std::span<const Real> x) const;

    /// Leading principal submatrix of the given order.
    SymMatrix leading(std::size_t order) const;

    bool operator==(const SymMatrix&) const = default;

private:
    static std::size_t index(std::size_t i, std::size_t j) noexcept {
        return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
    }

    std::size_t order_ = 0;
    std::vector<Real> data_;
};

/// Lower-triangular factor, stored with the same packed layout. Entries above
/// the diagonal are implicitly zero.
class CholeskyFactor {
public:
    explicit CholeskyFactor(SymMatrix lower) : lower_(std::move(lower)) {}

    std::size_t order() const noexcept { return lower_.order(); }
    const Real& operator()(std::size_t i, std::size_t j) const noexcept { return lower_(i, j); }

    /// Solves L z = b.
    Vector solve_lower(std::span<const Real> b) const;
    /// Solves L^T x = z.
    Vector solve_upper(std::span<const Real> z) const;
    /// Solves (L L^T) x = b.
    Vector solve(std::span<const Real> b) const;

    /// L L^T expanded back into a symmetric matrix.
    SymMatrix product() const;

private:
    SymMatrix lower_;
};

/// Factors S = L L^T. Throws NotPositiveDefinite(k) with the 1-based pivot
/// index when a pivot is not numerically positive, which for an overlap
/// matrix means basis function k is linearly dependent on its predecessors.
CholeskyFactor cholesky(const SymMatrix& s, const PrecisionContext& ctx);

struct Eigenpair {
    Real value;
    /// Normalized so that c^T S c = 1; largest-magnitude entry positive.
    Vector vector;
    /// ||H c - E S c||_2.
    Real residual;
    int iterations = 0;
    int factorizations = 0;
};

/// Lowest eigenpair of H c = E S c by Cholesky reduction and shifted inverse
/// iteration. `tol` bounds the residual relative to ||H c||; the bound is
/// raised to the rounding floor of the residual evaluation when that is larger.
Eigenpair solve_lowest_gevp(const SymMatrix& h, const SymMatrix& s, const PrecisionContext& ctx,
                            const Real& tol);

/// Same, with the context's default tolerance.
Eigenpair solve_lowest_gevp(const SymMatrix& h, const SymMatrix& s, const PrecisionContext& ctx);

Real dot(std::span<const Real> a, std::span<const Real> b);
Real norm2(std::span<const Real> a);

}  // namespace fbhfs

#include "fbhfs/linalg.hpp"

#include "fbhfs/errors.hpp"
#include "fbhfs/parallel.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace fbhfs {

namespace {

// acc -= sum_{k<n} a[k] b[k], accumulated left to right.
void subtract_dot(Real& acc, const Real* a, const Real* b, std::size_t n) {
    if (n == 0) return;
    mpfr_t t;
    mpfr_init2(t, mpfr_get_prec(acc.backend().data()));
    for (std::size_t k = 0; k < n; ++k) {
        mpfr_mul(t, a[k].backend().data(), b[k].backend().data(), MPFR_RNDN);
        mpfr_sub(acc.backend().data(), acc.backend().data(), t, MPFR_RNDN);
    }
    mpfr_clear(t);
}

// Column-oriented factorization in place; returns 0 on success or the 1-based
// index of the first non-positive pivot.
std::size_t factor_in_place(SymMatrix& a, const Real& eps) {
    const std::size_t n = a.order();
    for (std::size_t j = 0; j < n; ++j) {
        auto rj = a.row(j);
        const Real scale = rj[j];
        Real d = rj[j];
        subtract_dot(d, rj.data(), rj.data(), j);
        // A pivot within rounding of zero carries no information.
        if (d <= eps * abs(scale) * Real(n) || d <= 0) return j + 1;
        const Real pivot = sqrt(d);
        rj[j] = pivot;
        parallel_for(j + 1, n, [&](std::size_t i) {
            auto ri = a.row(i);
            Real v = ri[j];
            subtract_dot(v, ri.data(), rj.data(), j);
            ri[j] = v / pivot;
        });
    }
    return 0;
}

// Factor of (H - shift S) or nullopt-equivalent empty factor if indefinite.
bool try_shifted_factor(const SymMatrix& h, const SymMatrix& s, const Real& shift, const Real& eps,
                        SymMatrix& out) {
    const std::size_t n = h.order();
    out = SymMatrix(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto hi = h.row(i);
        auto si = s.row(i);
        auto oi = out.row(i);
        for (std::size_t j = 0; j <= i; ++j) oi[j] = hi[j] - shift * si[j];
    }
    return factor_in_place(out, eps) == 0;
}

}  // namespace

SymMatrix::SymMatrix(std::size_t order) : order_(order), data_(order * (order + 1) / 2, Real(0)) {}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows) : SymMatrix(rows.size()) {
    std::size_t i = 0;
    for (const auto& r : rows) {
        if (r.size() != order_) throw DimensionMismatch("SymMatrix rows must be square");
        std::size_t j = 0;
        for (double v : r) {
            if (j <= i) (*this)(i, j) = Real(v);
            ++j;
        }
        ++i;
    }
}

Real SymMatrix::max_abs() const {
    Real m = 0;
    for (const auto& v : data_) m = std::max(m, Real(abs(v)));
    return m;
}

Vector SymMatrix::multiply(std::span<const Real> x) const {
    if (x.size() != order_) throw DimensionMismatch("vector length differs from matrix order");
    Vector y(order_, Real(0));
    for (std::size_t i = 0; i < order_; ++i) {
        auto r = row(i);
        for (std::size_t j = 0; j < i; ++j) {
            y[i] += r[j] * x[j];
            y[j] += r[j] * x[i];
        }
        y[i] += r[i] * x[i];
    }
    return y;
}

Real SymMatrix::quadratic_form(std::span<const Real> x) const { return dot(x, multiply(x)); }

SymMatrix SymMatrix::leading(std::size_t order) const {
    if (order > order_) throw DimensionMismatch("leading block larger than matrix");
    SymMatrix out;
    out.order_ = order;
    out.data_.assign(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(order * (order + 1) / 2));
    return out;
}

Vector CholeskyFactor::solve_lower(std::span<const Real> b) const {
    const std::size_t n = order();
    Vector z(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        auto r = lower_.row(i);
        subtract_dot(z[i], r.data(), z.data(), i);
        z[i] /= r[i];
    }
    return z;
}

Vector CholeskyFactor::solve_upper(std::span<const Real> zin) const {
    const std::size_t n = order();
    Vector x(zin.begin(), zin.end());
    for (std::size_t ii = n; ii-- > 0;) {
        auto r = lower_.row(ii);
        x[ii] /= r[ii];
        for (std::size_t k = 0; k < ii; ++k) x[k] -= r[k] * x[ii];
    }
    return x;
}

Vector CholeskyFactor::solve(std::span<const Real> b) const { return solve_upper(solve_lower(b)); }

SymMatrix CholeskyFactor::product() const {
    const std::size_t n = order();
    SymMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ri = lower_.row(i);
        for (std::size_t j = 0; j <= i; ++j) {
            auto rj = lower_.row(j);
            Real acc = 0;
            for (std::size_t k = 0; k <= j; ++k) acc += ri[k] * rj[k];
            out(i, j) = acc;
        }
    }
    return out;
}

CholeskyFactor cholesky(const SymMatrix& s, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    SymMatrix a(s.order());
    for (std::size_t i = 0; i < s.order(); ++i) {
        auto src = s.row(i);
        auto dst = a.row(i);
        for (std::size_t j = 0; j <= i; ++j) dst[j] = src[j];
    }
    if (std::size_t k = factor_in_place(a, ctx.epsilon())) throw NotPositiveDefinite(k);
    return CholeskyFactor(std::move(a));
}

Real dot(std::span<const Real> a, std::span<const Real> b) {
    Real acc = 0;
    subtract_dot(acc, a.data(), b.data(), std::min(a.size(), b.size()));
    return -acc;
}

Real norm2(std::span<const Real> a) { return sqrt(dot(a, a)); }

Eigenpair solve_lowest_gevp(const SymMatrix& h, const SymMatrix& s, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    return solve_lowest_gevp(h, s, ctx, ctx.default_tolerance());
}

Eigenpair solve_lowest_gevp(const SymMatrix& h, const SymMatrix& s, const PrecisionContext& ctx,
                            const Real& tol_in) {
    PrecisionScope scope(ctx);
    const std::size_t n = h.order();
    if (s.order() != n) throw DimensionMismatch("H and S differ in order");
    if (n == 0) throw DimensionMismatch("empty eigenproblem");

    const Real eps = ctx.epsilon();
    const Real tol = tol_in;
    // Also reports a dependent basis through NotPositiveDefinite.
    cholesky(s, ctx);

    // Start from the unit vector with the lowest diagonal Rayleigh quotient.
    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (h(i, i) / s(i, i) < h(start, start) / s(start, start)) start = i;
    }
    Vector x(n, Real(0));
    x[start] = 1 / sqrt(s(start, start));
    Real rho = h(start, start) / s(start, start);

    Eigenpair out;
    if (n == 1) {
        out.value = rho;
        out.vector = x;
        out.residual = 0;
        return out;
    }

    // Initial shift: walk down from rho until H - shift S is positive definite.
    Real step = std::max(Real(abs(rho)), Real(1)) / 1000;
    Real shift;
    SymMatrix factor;
    for (int attempt = 0;; ++attempt) {
        shift = rho - step;
        ++out.factorizations;
        if (try_shifted_factor(h, s, shift, eps, factor)) break;
        if (attempt > 60) throw NoConvergence("no shift below the lowest eigenvalue", attempt);
        step *= 8;
    }
    CholeskyFactor shifted(std::move(factor));

    const int max_iterations = 400;
    const int max_factorizations = out.factorizations + 16;
    Real prev_residual = -1;
    Real best_residual = -1;
    int stagnant = 0;
    for (int it = 1; it <= max_iterations; ++it) {
        Vector y = shifted.solve(s.multiply(x));
        const Vector sy = s.multiply(y);
        const Real norm = sqrt(dot(y, sy));
        for (auto& v : y) v /= norm;
        x = std::move(y);

        const Vector hx = h.multiply(x);
        Vector sx = s.multiply(x);
        rho = dot(x, hx);
        Vector r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = hx[i] - rho * sx[i];
        const Real res = norm2(r);
        const Real hx_norm = norm2(hx);

        out.iterations = it;
        if (std::getenv("FBHFS_DEBUG_GEVP")) {
            std::fprintf(stderr, "gevp it %d rho %s res %s shift %s\n", it, format_real(rho, 40).c_str(),
                         format_real(res, 4).c_str(), format_real(shift, 30).c_str());
        }
        bool converged = res <= tol * hx_norm;
        if (best_residual < 0 || res < best_residual * Real(0.9)) {
            stagnant = 0;
        } else {
            ++stagnant;
        }
        if (best_residual < 0 || res < best_residual) best_residual = res;
        // A residual that no longer shrinks has reached the rounding level of
        // the solves. The eigenvalue error is of order res^2, so a plateau below
        // sqrt(eps) still gives the eigenvalue to working precision.
        if (!converged && stagnant >= 3) {
            if (best_residual <= sqrt(eps) * hx_norm) converged = true;
            else if (stagnant >= 8) throw NoConvergence("inverse iteration stalled", it);
        }
        if (converged) {
            out.value = rho;
            out.residual = res;
            out.vector = std::move(x);
            break;
        }
        const Real ratio = prev_residual > 0 ? Real(res / prev_residual) : Real(1);
        prev_residual = res;

        // Slow convergence means the shift sits far below the lowest
        // eigenvalue. Move it toward rho; a failed factorization shows the
        // candidate passed the eigenvalue, so retry closer to the old shift.
        if (it > 1 && ratio > Real(0.1) && res > sqrt(eps) * hx_norm) {
            Real fraction = Real(7) / 8;
            for (int k = 0; k < 3 && out.factorizations < max_factorizations; ++k, fraction /= 4) {
                const Real candidate = shift + fraction * (rho - shift);
                SymMatrix f;
                ++out.factorizations;
                if (try_shifted_factor(h, s, candidate, eps, f)) {
                    shift = candidate;
                    shifted = CholeskyFactor(std::move(f));
                    break;
                }
            }
        }
        if (it == max_iterations) throw NoConvergence("inverse iteration did not converge", it);
    }

    std::size_t big = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (abs(out.vector[i]) > abs(out.vector[big])) big = i;
    }
    if (out.vector[big] < 0) {
        for (auto& v : out.vector) v = -v;
    }
    return out;
}

}  // namespace fbhfs

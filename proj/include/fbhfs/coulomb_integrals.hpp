#pragma once

#include "fbhfs/precision.hpp"

#include <array>

namespace fbhfs {

/// Moment of the three-body exponential over the triangle domain
///   |r31 - r32| <= r21 <= r31 + r32,
/// with powers (l, m, n) of (r21, r31, r32) and exponents (a, b, c).
struct GammaArgs {
    int l = 0;
    int m = 0;
    int n = 0;
    Real a;
    Real b;
    Real c;
};

/// Largest supported l + m + n.
inline constexpr int kMaxGammaOrder = 20;

/// 2 / ((a+b)(b+c)(c+a)). Throws DomainError unless every pairwise sum is positive.
Real gamma000(const Real& a, const Real& b, const Real& c);

/// Closed-form moment by the perimetric substitution
///   r21 = u1 + u2, r31 = u1 + u3, r32 = u2 + u3   (Jacobian 2),
/// which turns the domain into the positive octant and the integrand into a
/// finite sum of products of one-dimensional factorial moments.
Real gamma_lmn(const GammaArgs& args);

/// Evaluates many moments sharing one exponent triple. Holds the factorial
/// moments k!/p^(k+1) of the three perimetric exponents
/// p1 = a+b, p2 = a+c, p3 = b+c.
class GammaTable {
public:
    /// Throws DomainError for a non-positive pairwise sum and Overflow when
    /// `max_order` exceeds kMaxGammaOrder.
    GammaTable(const Real& a, const Real& b, const Real& c, int max_order);

    Real operator()(int l, int m, int n) const;

    int max_order() const noexcept { return max_order_; }

private:
    int max_order_;
    // moments_[s][k] = k! / p_s^(k+1)
    std::array<std::array<Real, kMaxGammaOrder + 1>, 3> moments_;
};

/// Numerical value of the same moment computed directly on the triangle
/// domain, without the perimetric substitution: each half r31 <= r32 and
/// r31 >= r32 is parametrized by r31 = x, r32 = x + t, r21 = t + 2 x w (or the
/// mirror), Gauss-Laguerre handles x and t, adaptive Gauss-Kronrod handles w.
/// Double precision; validation only. Requires rel_tol >= 1e-12; throws
/// NoConvergence when the estimated error exceeds the request.
double quadrature_oracle(int l, int m, int n, double a, double b, double c, double rel_tol);

}  // namespace fbhfs

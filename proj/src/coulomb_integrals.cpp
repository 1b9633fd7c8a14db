#include "fbhfs/coulomb_integrals.hpp"

#include "fbhfs/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace fbhfs {

namespace {

constexpr std::uint64_t binomial(int n, int k) {
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

constexpr auto kBinomial = [] {
    std::array<std::array<std::uint64_t, kMaxGammaOrder + 1>, kMaxGammaOrder + 1> t{};
    for (int n = 0; n <= kMaxGammaOrder; ++n)
        for (int k = 0; k <= n; ++k) t[n][k] = binomial(n, k);
    return t;
}();

constexpr auto kFactorial = [] {
    std::array<std::uint64_t, kMaxGammaOrder + 1> t{};
    t[0] = 1;
    for (int k = 1; k <= kMaxGammaOrder; ++k) t[k] = t[k - 1] * static_cast<std::uint64_t>(k);
    return t;
}();

void check_exponents(const Real& a, const Real& b, const Real& c) {
    if (a + b <= 0 || a + c <= 0 || b + c <= 0) {
        throw DomainError("pairwise exponent sums must be positive, got a=" + format_real(a, 8) +
                          " b=" + format_real(b, 8) + " c=" + format_real(c, 8));
    }
}

struct LaguerreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Laguerre rule for the weight exp(-x) by Golub-Welsch. Exact for
// polynomials up to degree 2 * kLaguerreOrder - 1.
constexpr int kLaguerreOrder = 16;

const LaguerreRule& laguerre_rule() {
    static const LaguerreRule rule = [] {
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(kLaguerreOrder, kLaguerreOrder);
        for (int i = 0; i < kLaguerreOrder; ++i) {
            jacobi(i, i) = 2.0 * i + 1;
            if (i > 0) jacobi(i, i - 1) = jacobi(i - 1, i) = i;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
        LaguerreRule out;
        for (int i = 0; i < kLaguerreOrder; ++i) {
            out.nodes.push_back(solver.eigenvalues()(i));
            const double v = solver.eigenvectors()(0, i);
            out.weights.push_back(v * v);
        }
        return out;
    }();
    return rule;
}

// Part of the moment with r31 <= r32, parametrized as
//   r31 = x, r32 = x + t, r21 = t + 2 x w,  dr21 dr31 dr32 = 2 x dw dt dx.
// For fixed w the x and t factors are polynomials times exponentials, which
// the scaled Laguerre rule integrates exactly; w is left to adaptive
// Gauss-Kronrod.
double triangle_half(int l, int m, int n, double a, double b, double c, double rel_tol, double& err_total) {
    const LaguerreRule& rule = laguerre_rule();
    const double rate_t = a + c;
    auto over_xt = [&](double w) {
        const double rate_x = 2 * a * w + b + c;
        double sum = 0;
        for (int j = 0; j < kLaguerreOrder; ++j) {
            const double t = rule.nodes[j] / rate_t;
            double inner = 0;
            for (int i = 0; i < kLaguerreOrder; ++i) {
                const double x = rule.nodes[i] / rate_x;
                inner += rule.weights[i] * 2 * x * std::pow(t + 2 * x * w, l) * std::pow(x, m) * std::pow(x + t, n);
            }
            sum += rule.weights[j] * inner / rate_x;
        }
        return sum / rate_t;
    };
    // R(w) = 2 a w + b + c runs from r0 to r1. Where they differ a lot the
    // integrand varies like a power of R, so integrate in u with R geometric in u.
    const double r0 = b + c, r1 = 2 * a + b + c;
    auto integrand = [&](double u) {
        if (std::abs(r1 / r0 - 1) < 1e-3) return over_xt(u);
        const double r = r0 * std::pow(r1 / r0, u);
        return over_xt((r - r0) / (r1 - r0)) * r * std::log(r1 / r0) / (r1 - r0);
    };
    double err = 0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, rel_tol, &err);
    err_total += err;
    return value;
}

}  // namespace

Real gamma000(const Real& a, const Real& b, const Real& c) {
    check_exponents(a, b, c);
    return 2 / ((a + b) * (b + c) * (c + a));
}

GammaTable::GammaTable(const Real& a, const Real& b, const Real& c, int max_order) : max_order_(max_order) {
    check_exponents(a, b, c);
    if (max_order < 0 || max_order > kMaxGammaOrder) {
        throw Overflow("moment order " + std::to_string(max_order) + " exceeds the supported maximum " +
                       std::to_string(kMaxGammaOrder));
    }
    const std::array<Real, 3> p{a + b, a + c, b + c};
    for (int s = 0; s < 3; ++s) {
        const Real inv = 1 / p[s];
        Real power = inv;  // 1 / p^(k+1)
        for (int k = 0; k <= max_order; ++k) {
            moments_[s][k] = power * kFactorial[k];
            power *= inv;
        }
    }
}

Real GammaTable::operator()(int l, int m, int n) const {
    if (l < 0 || m < 0 || n < 0) throw DomainError("moment powers must be non-negative");
    if (l + m + n > max_order_) throw Overflow("moment order exceeds the table");

    // (u1+u2)^l (u1+u3)^m (u2+u3)^n expanded binomially; u1 carries i+j,
    // u2 carries (l-i)+k and u3 carries (m-j)+(n-k).
    Real sum = 0;
    for (int i = 0; i <= l; ++i) {
        for (int j = 0; j <= m; ++j) {
            const Real outer = moments_[0][i + j] * (kBinomial[l][i] * kBinomial[m][j]);
            Real inner = 0;
            for (int k = 0; k <= n; ++k) {
                inner += moments_[1][l - i + k] * moments_[2][m - j + n - k] * kBinomial[n][k];
            }
            sum += outer * inner;
        }
    }
    return 2 * sum;
}

Real gamma_lmn(const GammaArgs& args) {
    const int order = args.l + args.m + args.n;
    if (args.l < 0 || args.m < 0 || args.n < 0) throw DomainError("moment powers must be non-negative");
    if (order > kMaxGammaOrder) {
        throw Overflow("moment order " + std::to_string(order) + " exceeds the supported maximum");
    }
    return GammaTable(args.a, args.b, args.c, order)(args.l, args.m, args.n);
}

double quadrature_oracle(int l, int m, int n, double a, double b, double c, double rel_tol) {
    if (!(rel_tol >= 1e-12)) throw DomainError("oracle tolerance must be at least 1e-12");
    if (l < 0 || m < 0 || n < 0) throw DomainError("moment powers must be non-negative");
    if (l + m + n > kMaxGammaOrder) throw Overflow("moment order above " + std::to_string(kMaxGammaOrder));
    if (a + b <= 0 || a + c <= 0 || b + c <= 0) throw DomainError("pairwise exponent sums must be positive");

    double err_total = 0;
    const double value = triangle_half(l, m, n, a, b, c, rel_tol, err_total) +
                         triangle_half(l, n, m, a, c, b, rel_tol, err_total);
    if (!(err_total <= rel_tol * std::abs(value))) {
        throw NoConvergence("quadrature oracle reached only " + std::to_string(err_total / std::abs(value)) +
                                " relative error",
                            0);
    }
    return value;
}

}  // namespace fbhfs

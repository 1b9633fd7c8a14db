#include "fbhfs/observables.hpp"

#include "fbhfs/coulomb_integrals.hpp"
#include "fbhfs/errors.hpp"
#include "fbhfs/parallel.hpp"

#include <mpfr.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fbhfs {

namespace {

Real pi() {
    Real p;
    mpfr_const_pi(p.backend().data(), MPFR_RNDN);
    return p;
}

int slot(Pair pair) { return static_cast<int>(pair); }

struct Sums {
    Real norm = 0;
    Real kinetic = 0;
    Real potential = 0;
    std::array<Real, 3> delta{0, 0, 0};
    std::array<Real, 3> cusp{0, 0, 0};
};

// Sums over basis pairs. The operator expectations need the full pair
// elements; everything else uses closed forms of the combined exponents.
Sums accumulate(const BoundState& state, bool with_operators) {
    if (!state.basis) throw DomainError("bound state carries no basis");
    const BasisSet& basis = *state.basis;
    const std::size_t n = basis.size();
    if (state.coefficients.size() != n) throw DimensionMismatch("coefficient count differs from basis size");

    const Real eight_pi = 8 * pi();
    const Real angular = eight_pi * pi();
    std::vector<Sums> rows(n);
    parallel_for(0, n, [&](std::size_t i) {
        Sums& acc = rows[i];
        const ExponentTriple& ti = basis.triples[i];
        for (std::size_t j = 0; j <= i; ++j) {
            const ExponentTriple& tj = basis.triples[j];
            Real w = state.coefficients[i] * state.coefficients[j];
            if (j != i) w *= 2;
            const Real a = ti.alpha + tj.alpha;
            const Real b = ti.beta + tj.beta;
            const Real c = ti.gamma + tj.gamma;
            if (with_operators) {
                const PairElements e = pair_elements(ti, tj, state.system);
                acc.norm += w * e.overlap;
                acc.kinetic += w * e.kinetic;
                acc.potential += w * e.potential;
            } else {
                acc.norm += w * angular * GammaTable(a, b, c, 3)(1, 1, 1);
            }
            // At a coalescence the two remaining distances are equal.
            const std::array<Real, 3> remaining{b + c, a + c, a + b};
            const std::array<const Real*, 3> own{&a, &b, &c};
            for (int k = 0; k < 3; ++k) {
                const Real d = w * eight_pi / (remaining[k] * remaining[k] * remaining[k]);
                acc.delta[k] += d;
                acc.cusp[k] -= d * *own[k] / 2;
            }
        }
    });

    Sums total;
    for (const Sums& r : rows) {
        total.norm += r.norm;
        total.kinetic += r.kinetic;
        total.potential += r.potential;
        for (int k = 0; k < 3; ++k) {
            total.delta[k] += r.delta[k];
            total.cusp[k] += r.cusp[k];
        }
    }
    return total;
}

PrecisionContext context_of(const BoundState& state) { return PrecisionContext::make(state.precision); }

}  // namespace

std::string to_string(Pair pair) {
    switch (pair) {
        case Pair::R21: return "21";
        case Pair::R31: return "31";
        case Pair::R32: return "32";
    }
    return "?";
}

Real delta_pair(const BoundState& state, Pair pair) {
    PrecisionScope scope(context_of(state));
    const Sums s = accumulate(state, false);
    return s.delta[slot(pair)] / s.norm;
}

Real delta_triple(const BoundState& state) {
    PrecisionScope scope(context_of(state));
    const Sums s = accumulate(state, false);
    Real sum = 0;
    for (const auto& c : state.coefficients) sum += c;
    return sum * sum / s.norm;
}

Real cusp(const BoundState& state, Pair pair) {
    PrecisionScope scope(context_of(state));
    const Sums s = accumulate(state, false);
    return s.cusp[slot(pair)] / s.delta[slot(pair)];
}

Real kato_target(const ParticleSystem& sys, Pair pair) {
    static constexpr std::array<std::array<int, 2>, 3> kParticles{{{1, 0}, {2, 0}, {2, 1}}};
    const auto [i, j] = kParticles[slot(pair)];
    return sys.charges[i] * sys.charges[j] * sys.reduced_mass(i, j);
}

VirialTerms virial(const BoundState& state) {
    PrecisionScope scope(context_of(state));
    const Sums s = accumulate(state, true);
    VirialTerms out{s.kinetic / s.norm, s.potential / s.norm, 0};
    out.ratio = out.v_expect / out.t_expect;
    return out;
}

double delta_pair_oracle(const BoundState& state, Pair pair, double rel_tol) {
    if (!state.basis) throw DomainError("bound state carries no basis");
    const auto& triples = state.basis->triples;
    const std::size_t n = triples.size();
    if (state.coefficients.size() != n) throw DimensionMismatch("coefficient count differs from basis size");
    std::vector<double> c(n), a(n), b(n), g(n), decay(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = state.coefficients[i].convert_to<double>();
        a[i] = triples[i].alpha.convert_to<double>();
        b[i] = triples[i].beta.convert_to<double>();
        g[i] = triples[i].gamma.convert_to<double>();
        // Exponent of the two remaining distances, both equal to s.
        decay[i] = pair == Pair::R21 ? b[i] + g[i] : pair == Pair::R31 ? a[i] + g[i] : a[i] + b[i];
    }

    double norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            norm += c[i] * c[j] * quadrature_oracle(1, 1, 1, a[i] + a[j], b[i] + b[j], g[i] + g[j], 1e-11);
        }
    }
    norm *= 8 * std::numbers::pi * std::numbers::pi;

    auto density = [&](double s) {
        double psi = 0;
        for (std::size_t i = 0; i < n; ++i) psi += c[i] * std::exp(-decay[i] * s);
        return s * s * psi * psi;
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0;
    const double value = integrator.integrate(density, rel_tol, &error);
    if (!(error <= rel_tol * std::abs(value) * 10)) throw NoConvergence("contact density quadrature", 0);
    return 4 * std::numbers::pi * value / norm;
}

ExpectationSet expectation_report(const BoundState& state) {
    PrecisionScope scope(context_of(state));
    const Sums s = accumulate(state, true);
    Real sum = 0;
    for (const auto& c : state.coefficients) sum += c;

    ExpectationSet e;
    e.norm = s.norm;
    e.delta21 = s.delta[0] / s.norm;
    e.delta31 = s.delta[1] / s.norm;
    e.delta32 = s.delta[2] / s.norm;
    e.delta321 = sum * sum / s.norm;
    e.t_expect = s.kinetic / s.norm;
    e.v_expect = s.potential / s.norm;
    e.virial_ratio = e.v_expect / e.t_expect;
    e.cusp21 = s.cusp[0] / s.delta[0];
    e.cusp31 = s.cusp[1] / s.delta[1];
    e.cusp32 = s.cusp[2] / s.delta[2];
    e.delta21_spread = e.delta31_spread = e.delta32_spread = e.delta321_spread = 0;
    return e;
}

ExpectationSet expectation_report(std::span<const BoundState> nested) {
    if (nested.empty()) throw DomainError("expectation report needs at least one state");
    PrecisionScope scope(context_of(nested.back()));
    const std::size_t first = nested.size() >= 3 ? nested.size() - 3 : 0;
    std::vector<ExpectationSet> tail;
    for (std::size_t k = first; k < nested.size(); ++k) tail.push_back(expectation_report(nested[k]));
    return with_spreads(tail);
}

ExpectationSet with_spreads(std::span<const ExpectationSet> reports) {
    if (reports.empty()) throw DomainError("expectation report needs at least one state");
    const auto tail = reports.subspan(reports.size() >= 3 ? reports.size() - 3 : 0);
    ExpectationSet out = tail.back();
    auto spread = [&](Real ExpectationSet::*field) {
        Real lo = tail.front().*field, hi = lo;
        for (const auto& t : tail) {
            lo = std::min(lo, Real(t.*field));
            hi = std::max(hi, Real(t.*field));
        }
        return Real(hi - lo);
    };
    out.delta21_spread = spread(&ExpectationSet::delta21);
    out.delta31_spread = spread(&ExpectationSet::delta31);
    out.delta32_spread = spread(&ExpectationSet::delta32);
    out.delta321_spread = spread(&ExpectationSet::delta321);
    return out;
}

}  // namespace fbhfs

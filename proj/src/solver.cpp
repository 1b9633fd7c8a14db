#include "fbhfs/solver.hpp"

#include "fbhfs/coulomb_integrals.hpp"
#include "fbhfs/errors.hpp"
#include "fbhfs/parallel.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbhfs {

namespace {

Real pi() {
    Real p;
    mpfr_const_pi(p.backend().data(), MPFR_RNDN);
    return p;
}

Real angular_factor() {
    const Real p = pi();
    return 8 * p * p;
}

struct Combined {
    GammaTable g;
    explicit Combined(const ExponentTriple& ti, const ExponentTriple& tj)
        : g(ti.alpha + tj.alpha, ti.beta + tj.beta, ti.gamma + tj.gamma, 3) {}
};

// Angular factors cos(theta_k) at particle k times the volume element r21 r31 r32.
Real cos_at_electron(const GammaTable& g) { return (g(2, 0, 1) + g(0, 2, 1) - g(0, 0, 3)) / 2; }
Real cos_at_muon(const GammaTable& g) { return (g(2, 1, 0) + g(0, 1, 2) - g(0, 3, 0)) / 2; }
Real cos_at_nucleus(const GammaTable& g) { return (g(1, 2, 0) + g(1, 0, 2) - g(3, 0, 0)) / 2; }

Real potential_from(const GammaTable& g, const ParticleSystem& sys) {
    const auto& q = sys.charges;
    return q[0] * q[1] * g(0, 1, 1) + q[0] * q[2] * g(1, 0, 1) + q[1] * q[2] * g(1, 1, 0);
}

}  // namespace

PairElements pair_elements(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys) {
    const Combined c(ti, tj);
    const GammaTable& g = c.g;
    const Real g111 = g(1, 1, 1);
    const auto& m = sys.masses;

    const Real t1 = ((ti.alpha * tj.alpha + ti.beta * tj.beta) * g111 +
                     (ti.alpha * tj.beta + ti.beta * tj.alpha) * cos_at_electron(g)) /
                    (2 * m[0]);
    const Real t2 = ((ti.alpha * tj.alpha + ti.gamma * tj.gamma) * g111 +
                     (ti.alpha * tj.gamma + ti.gamma * tj.alpha) * cos_at_muon(g)) /
                    (2 * m[1]);
    const Real t3 = ((ti.beta * tj.beta + ti.gamma * tj.gamma) * g111 +
                     (ti.beta * tj.gamma + ti.gamma * tj.beta) * cos_at_nucleus(g)) /
                    (2 * m[2]);

    const Real f = angular_factor();
    return {f * g111, f * (t1 + t2 + t3), f * potential_from(g, sys)};
}

Real overlap_element(const ExponentTriple& ti, const ExponentTriple& tj) {
    return angular_factor() * gamma_lmn({1, 1, 1, ti.alpha + tj.alpha, ti.beta + tj.beta, ti.gamma + tj.gamma});
}

Real kinetic_element_right(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys) {
    const Combined c(ti, tj);
    const GammaTable& g = c.g;
    const Real g111 = g(1, 1, 1);
    const auto& m = sys.masses;
    const Real& a = tj.alpha;
    const Real& b = tj.beta;
    const Real& y = tj.gamma;

    // grad^2 exp(-a r) = (a^2 - 2a/r) exp(-a r); the cross term of two
    // distances meeting at particle k carries 2 a b cos(theta_k).
    const Real l1 = (a * a + b * b) * g111 - 2 * a * g(0, 1, 1) - 2 * b * g(1, 0, 1) + 2 * a * b * cos_at_electron(g);
    const Real l2 = (a * a + y * y) * g111 - 2 * a * g(0, 1, 1) - 2 * y * g(1, 1, 0) + 2 * a * y * cos_at_muon(g);
    const Real l3 = (b * b + y * y) * g111 - 2 * b * g(1, 0, 1) - 2 * y * g(1, 1, 0) + 2 * b * y * cos_at_nucleus(g);
    return -angular_factor() * (l1 / (2 * m[0]) + l2 / (2 * m[1]) + l3 / (2 * m[2]));
}

Real potential_element(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys) {
    const Combined c(ti, tj);
    return angular_factor() * potential_from(c.g, sys);
}

Real hamiltonian_element(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys) {
    return kinetic_element_right(ti, tj, sys) + potential_element(ti, tj, sys);
}

double local_kinetic(const ExponentTriple& t, const ParticleSystem& sys,
                     const std::array<std::array<double, 3>, 3>& x) {
    auto dist = [&](int i, int j) {
        double s = 0;
        for (int d = 0; d < 3; ++d) s += (x[i][d] - x[j][d]) * (x[i][d] - x[j][d]);
        return std::sqrt(s);
    };
    const double r21 = dist(1, 0), r31 = dist(2, 0), r32 = dist(2, 1);
    const double a = static_cast<double>(t.alpha), b = static_cast<double>(t.beta), c = static_cast<double>(t.gamma);
    const double cos1 = (r21 * r21 + r31 * r31 - r32 * r32) / (2 * r21 * r31);
    const double cos2 = (r21 * r21 + r32 * r32 - r31 * r31) / (2 * r21 * r32);
    const double cos3 = (r31 * r31 + r32 * r32 - r21 * r21) / (2 * r31 * r32);
    const double l1 = a * a - 2 * a / r21 + b * b - 2 * b / r31 + 2 * a * b * cos1;
    const double l2 = a * a - 2 * a / r21 + c * c - 2 * c / r32 + 2 * a * c * cos2;
    const double l3 = b * b - 2 * b / r31 + c * c - 2 * c / r32 + 2 * b * c * cos3;
    const auto& m = sys.masses;
    return -(l1 / (2 * static_cast<double>(m[0])) + l2 / (2 * static_cast<double>(m[1])) +
             l3 / (2 * static_cast<double>(m[2])));
}

SymMatrix Operators::hamiltonian() const {
    SymMatrix h(kinetic.order());
    for (std::size_t i = 0; i < h.order(); ++i) {
        auto t = kinetic.row(i);
        auto v = potential.row(i);
        auto out = h.row(i);
        for (std::size_t j = 0; j <= i; ++j) out[j] = t[j] + v[j];
    }
    return h;
}

Operators assemble_operators(const BasisSet& basis, const ParticleSystem& sys, const PrecisionContext& ctx) {
    PrecisionScope scope(ctx);
    sys.validate();
    const std::size_t n = basis.size();
    // Rebuild inputs at the working precision so that stored triples of a
    // different precision cannot leak into the arithmetic.
    std::vector<ExponentTriple> triples;
    triples.reserve(n);
    for (const auto& t : basis.triples) triples.push_back({Real(t.alpha), Real(t.beta), Real(t.gamma)});
    ParticleSystem local = sys;
    for (int k = 0; k < 3; ++k) {
        local.masses[k] = Real(sys.masses[k]);
        local.charges[k] = Real(sys.charges[k]);
    }

    Operators ops{SymMatrix(n), SymMatrix(n), SymMatrix(n)};
    parallel_for(0, n, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j) {
            PairElements e = pair_elements(triples[i], triples[j], local);
            ops.overlap(i, j) = std::move(e.overlap);
            ops.kinetic(i, j) = std::move(e.kinetic);
            ops.potential(i, j) = std::move(e.potential);
        }
    });
    return ops;
}

Assembled assemble(const BasisSet& basis, const ParticleSystem& sys, const PrecisionContext& ctx) {
    Operators ops = assemble_operators(basis, sys, ctx);
    PrecisionScope scope(ctx);
    return {ops.hamiltonian(), std::move(ops.overlap)};
}

namespace {

SymMatrix without(const SymMatrix& m, const std::vector<std::size_t>& keep) {
    SymMatrix out(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) out(i, j) = m(keep[i], keep[j]);
    return out;
}

}  // namespace

BoundState solve_ground(const BasisSet& basis, const Operators& ops, const ParticleSystem& sys,
                        const PrecisionContext& ctx, const SolveOptions& options) {
    PrecisionScope scope(ctx);
    if (!validate_basis(basis).empty()) throw DomainError(validate_basis(basis).front().message);
    const Real tol = options.tolerance ? Real(*options.tolerance) : ctx.default_tolerance();

    std::vector<std::size_t> keep(basis.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    std::vector<std::size_t> pruned;
    SymMatrix h = ops.hamiltonian();
    SymMatrix s = ops.overlap;

    for (;;) {
        try {
            Eigenpair pair = solve_lowest_gevp(h, s, ctx, tol);
            BoundState out;
            out.energy = std::move(pair.value);
            out.coefficients = std::move(pair.vector);
            out.residual = std::move(pair.residual);
            out.system = sys;
            out.precision = ctx.decimal_digits();
            out.pruned = pruned;
            if (pruned.empty()) {
                out.basis = std::make_shared<const BasisSet>(basis);
            } else {
                BasisSet reduced;
                reduced.boxes = basis.boxes;
                for (std::size_t k : keep) reduced.triples.push_back(basis.triples[k]);
                out.basis = std::make_shared<const BasisSet>(std::move(reduced));
            }
            return out;
        } catch (const NotPositiveDefinite& e) {
            if (!options.prune_dependent || keep.size() <= 1) throw;
            const std::size_t local = e.index() - 1;
            const std::size_t original = keep[local];
            if (options.log) {
                options.log("dropping linearly dependent basis function " + std::to_string(original + 1));
            }
            pruned.push_back(original);
            std::vector<std::size_t> rest;
            rest.reserve(keep.size() - 1);
            for (std::size_t i = 0; i < keep.size(); ++i)
                if (i != local) rest.push_back(i);
            h = without(h, rest);
            s = without(s, rest);
            keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(local));
        }
    }
}

BoundState solve_ground(const BasisSet& basis, const ParticleSystem& sys, const PrecisionContext& ctx,
                        const SolveOptions& options) {
    if (!validate_basis(basis).empty()) throw DomainError(validate_basis(basis).front().message);
    const Operators ops = assemble_operators(basis, sys, ctx);
    return solve_ground(basis, ops, sys, ctx, options);
}

namespace {

Real& endpoint(std::vector<ParameterBox>& boxes, std::size_t p) {
    ParameterBox& box = boxes[p / 6];
    Interval* iv[3] = {&box.alpha, &box.beta, &box.gamma};
    Interval& i = *iv[(p % 6) / 2];
    return (p % 2 == 0) ? i.lo : i.hi;
}

const Interval& interval_of(const std::vector<ParameterBox>& boxes, std::size_t p) {
    const ParameterBox& box = boxes[p / 6];
    const Interval* iv[3] = {&box.alpha, &box.beta, &box.gamma};
    return *iv[(p % 6) / 2];
}

}  // namespace

OptimizationResult optimize_boxes(std::span<const ParameterBox> initial, const ParticleSystem& sys,
                                  const PrecisionContext& ctx, int budget, const OptimizeOptions& options) {
    if (budget < 1) throw DomainError("optimization budget must be at least one evaluation");
    PrecisionScope scope(ctx);

    std::vector<ParameterBox> current(initial.begin(), initial.end());
    OptimizationResult result;
    {
        const BasisSet basis = generate_basis(current);
        result.state = solve_ground(basis, sys, ctx);
    }
    result.evaluations = 1;
    result.initial_energy = result.state.energy;
    result.boxes = current;
    if (options.log) options.log("eval 1 E=" + format_real(result.state.energy, 30));

    const std::size_t params = current.size() * 6;
    std::vector<Real> step(params), start_step(params);
    for (std::size_t p = 0; p < params; ++p) {
        const Interval& iv = interval_of(current, p);
        Real scale = iv.hi - iv.lo;
        if (scale <= 0) scale = std::max(Real(abs(iv.lo)), Real(1e-3));
        step[p] = scale * options.initial_step;
        start_step[p] = step[p];
    }

    // Returns the energy of a candidate or nullopt if it is not admissible.
    auto evaluate = [&](const std::vector<ParameterBox>& boxes) -> std::optional<BoundState> {
        try {
            return solve_ground(generate_basis(boxes), sys, ctx);
        } catch (const Error& e) {
            if (options.log) options.log(std::string("rejected candidate: ") + e.what());
            return std::nullopt;
        }
    };

    for (int sweep = 0; result.evaluations < budget; ++sweep) {
        bool all_small = true;
        for (std::size_t p = 0; p < params && result.evaluations < budget; ++p) {
            bool improved = false;
            for (int dir : {+1, -1}) {
                if (result.evaluations >= budget) break;
                std::vector<ParameterBox> trial = current;
                endpoint(trial, p) += step[p] * dir;
                const Interval& iv = interval_of(trial, p);
                if (iv.hi < iv.lo) continue;
                ++result.evaluations;
                auto state = evaluate(trial);
                if (options.log && state) {
                    options.log("eval " + std::to_string(result.evaluations) + " param " + std::to_string(p) +
                                " E=" + format_real(state->energy, 30));
                }
                if (state && state->energy < result.state.energy) {
                    current = std::move(trial);
                    result.state = std::move(*state);
                    result.boxes = current;
                    ++result.accepted_moves;
                    improved = true;
                    break;
                }
            }
            if (!improved) step[p] /= 2;
            if (step[p] > start_step[p] * options.min_step_ratio) all_small = false;
        }
        if (sweep + 1 >= options.min_sweeps && all_small) break;
    }
    return result;
}

std::vector<ConvergenceRow> convergence_study(const BasisSet& basis, const ParticleSystem& sys,
                                              std::span<const std::size_t> sizes, const PrecisionContext& ctx,
                                              const SolveOptions& options) {
    if (sizes.empty()) return {};
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] == 0 || sizes[k] > basis.size()) {
            throw DomainError("basis size " + std::to_string(sizes[k]) + " outside 1.." + std::to_string(basis.size()));
        }
        if (k > 0 && sizes[k] <= sizes[k - 1]) throw DomainError("basis sizes must be strictly ascending");
    }
    PrecisionScope scope(ctx);
    const BasisSet largest = basis.prefix(sizes.back());
    const Operators all = assemble_operators(largest, sys, ctx);

    std::vector<ConvergenceRow> rows;
    for (std::size_t n : sizes) {
        const BasisSet sub = basis.prefix(n);
        const Operators ops{all.overlap.leading(n), all.kinetic.leading(n), all.potential.leading(n)};
        rows.push_back({n, solve_ground(sub, ops, sys, ctx, options)});
    }
    return rows;
}

}  // namespace fbhfs

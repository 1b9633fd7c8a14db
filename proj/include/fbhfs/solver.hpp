#pragma once

#include "fbhfs/basis.hpp"
#include "fbhfs/linalg.hpp"
#include "fbhfs/particles.hpp"
#include "fbhfs/precision.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace fbhfs {

/// One-pair matrix elements of the overlap, kinetic and Coulomb operators
/// between two basis functions, including the 8 pi^2 angular factor of the
/// S-state volume element.
struct PairElements {
    Real overlap;
    Real kinetic;
    Real potential;
};

/// Elements with the kinetic term in symmetric gradient form
///   sum_k 1/(2 m_k) <grad_k phi_i . grad_k phi_j>,
/// which equals the right-acting Laplacian form exactly and is symmetric in
/// (i, j) at any precision.
PairElements pair_elements(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys);

/// 8 pi^2 Gamma_111 of the combined exponents.
Real overlap_element(const ExponentTriple& ti, const ExponentTriple& tj);

/// <phi_i| T + V |phi_j> with the Laplacians applied to phi_j.
Real hamiltonian_element(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys);

/// <phi_i| T |phi_j> with the Laplacians applied to phi_j.
Real kinetic_element_right(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys);

/// <phi_i| V |phi_j>.
Real potential_element(const ExponentTriple& ti, const ExponentTriple& tj, const ParticleSystem& sys);

/// (T phi)(x) / phi(x) at Cartesian particle positions, from the
/// interparticle-distance form of the Laplacians. Double precision; used to
/// validate the kinetic reduction against finite differences.
double local_kinetic(const ExponentTriple& t, const ParticleSystem& sys,
                     const std::array<std::array<double, 3>, 3>& positions);

struct Operators {
    SymMatrix overlap;
    SymMatrix kinetic;
    SymMatrix potential;

    SymMatrix hamiltonian() const;
};

/// All three operator matrices. Entry (i, j) is computed by exactly one
/// worker, so the result does not depend on the thread count.
Operators assemble_operators(const BasisSet& basis, const ParticleSystem& sys, const PrecisionContext& ctx);

struct Assembled {
    SymMatrix h;
    SymMatrix s;
};

Assembled assemble(const BasisSet& basis, const ParticleSystem& sys, const PrecisionContext& ctx);

struct BoundState {
    Real energy;
    Vector coefficients;
    std::shared_ptr<const BasisSet> basis;
    ParticleSystem system;
    int precision = 0;
    Real residual;
    /// Zero-based indices (into the requested basis) dropped as linearly dependent.
    std::vector<std::size_t> pruned;
};

struct SolveOptions {
    /// Drop linearly dependent functions and retry instead of throwing.
    bool prune_dependent = true;
    /// Residual tolerance; the context default when unset.
    std::optional<Real> tolerance;
    /// Receives one line per pruned function.
    std::function<void(const std::string&)> log;
};

/// Rayleigh-Ritz ground state. The energy is an upper bound to the exact
/// non-relativistic ground-state energy of `sys`.
BoundState solve_ground(const BasisSet& basis, const ParticleSystem& sys, const PrecisionContext& ctx,
                        const SolveOptions& options = {});

/// Same, reusing already assembled operators.
BoundState solve_ground(const BasisSet& basis, const Operators& ops, const ParticleSystem& sys,
                        const PrecisionContext& ctx, const SolveOptions& options = {});

struct OptimizationResult {
    std::vector<ParameterBox> boxes;
    BoundState state;
    Real initial_energy;
    int evaluations = 0;
    int accepted_moves = 0;
};

struct OptimizeOptions {
    /// Initial step as a fraction of each interval's width (or magnitude when
    /// the interval is degenerate).
    double initial_step = 0.1;
    /// Minimum number of complete sweeps before small steps may end the search.
    int min_sweeps = 2;
    /// Stop once every step is below this fraction of its starting value.
    double min_step_ratio = 1e-3;
    /// Receives one line per evaluation.
    std::function<void(const std::string&)> log;
};

/// Cyclic coordinate search over the 6 interval endpoints of every box at a
/// fixed total size, halving a coordinate's step when neither direction
/// improves the energy. `budget` caps the number of energy evaluations,
/// including the initial one. The returned energy never exceeds the initial.
OptimizationResult optimize_boxes(std::span<const ParameterBox> initial, const ParticleSystem& sys,
                                  const PrecisionContext& ctx, int budget, const OptimizeOptions& options = {});

struct ConvergenceRow {
    std::size_t n = 0;
    BoundState state;
};

/// Ground states of the nested prefixes of `basis` of sizes `sizes`
/// (ascending). Throws DomainError for unsorted sizes or sizes beyond the basis.
std::vector<ConvergenceRow> convergence_study(const BasisSet& basis, const ParticleSystem& sys,
                                              std::span<const std::size_t> sizes, const PrecisionContext& ctx,
                                              const SolveOptions& options = {});

}  // namespace fbhfs

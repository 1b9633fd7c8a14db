#pragma once

#include "fbhfs/solver.hpp"

#include <span>
#include <string>

namespace fbhfs {

/// Interparticle distance: r21 electron-muon, r31 electron-nucleus,
/// r32 muon-nucleus.
enum class Pair { R21, R31, R32 };

std::string to_string(Pair pair);

/// <delta^3(r_pair)> in atomic units. At r21 = 0 the triangle domain
/// collapses to r31 = r32 = r, so each basis pair contributes
///   4 pi Int r^2 exp(-(B + C) r) dr = 8 pi / (B + C)^3
/// with the combined exponents of the two remaining distances.
Real delta_pair(const BoundState& state, Pair pair);

/// |Psi(0,0,0)|^2 / <Psi|Psi> = (sum_i C_i)^2 / <Psi|Psi>.
Real delta_triple(const BoundState& state);

/// <delta(r_pair) d/dr_pair> / <delta(r_pair)>. Equals the Kato value
/// q_i q_j mu_ij for the exact wave function.
Real cusp(const BoundState& state, Pair pair);

/// q_i q_j m_i m_j / (m_i + m_j) for the particles joined by `pair`.
Real kato_target(const ParticleSystem& sys, Pair pair);

struct VirialTerms {
    Real t_expect;
    Real v_expect;
    /// <V> / <T>; -2 for an exact Coulomb eigenstate.
    Real ratio;
};

/// <T> and <V> from the operator matrices.
VirialTerms virial(const BoundState& state);

/// <delta^3(r_pair)> by one-dimensional adaptive quadrature of
/// 4 pi Int s^2 Psi(coalescence at s)^2 ds, normalized with overlap moments
/// from the quadrature oracle. Double precision; validation only, so keep the
/// basis small enough that the coefficient sums do not cancel.
double delta_pair_oracle(const BoundState& state, Pair pair, double rel_tol = 1e-11);

/// All expectation values of one state, with the spreads of the deltas over
/// a nested sequence when one is supplied.
struct ExpectationSet {
    Real norm;
    Real delta21;
    Real delta31;
    Real delta32;
    Real delta321;
    Real t_expect;
    Real v_expect;
    Real virial_ratio;
    Real cusp21;
    Real cusp31;
    Real cusp32;

    /// Max-min spread of each delta over the last three states of a nested
    /// sequence; zero for a single state.
    Real delta21_spread;
    Real delta31_spread;
    Real delta32_spread;
    Real delta321_spread;
};

/// Every field of one state in a single pass over basis pairs.
ExpectationSet expectation_report(const BoundState& state);

/// Report for the last state of `nested` (ascending N), with spreads taken
/// over the last three entries.
ExpectationSet expectation_report(std::span<const BoundState> nested);

/// The last entry of `reports` with spreads over the last three entries.
ExpectationSet with_spreads(std::span<const ExpectationSet> reports);

}  // namespace fbhfs

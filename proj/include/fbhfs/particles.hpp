#pragma once

#include "fbhfs/precision.hpp"

#include <array>
#include <string>

namespace fbhfs {

/// Three charged particles in atomic units. Index 0 is the electron, 1 the
/// muon, 2 the nucleus; distances r21, r31, r32 join particles (1,0), (2,0)
/// and (2,1).
struct ParticleSystem {
    std::string name;
    std::array<std::string, 3> labels;
    std::array<Real, 3> masses;
    std::array<Real, 3> charges;

    /// Throws DomainError for a non-positive mass.
    void validate() const;

    /// Reduced mass of the pair (i, j), zero-based indices.
    Real reduced_mass(int i, int j) const;

    bool operator==(const ParticleSystem&) const = default;
};

enum class Isotope { He3, He4 };

/// Muon mass in electron masses.
inline constexpr const char* kMuonMass = "206.768262";
inline constexpr const char* kHelium3Mass = "5495.8852";
inline constexpr const char* kHelium4Mass = "7294.2996";

/// e^- mu^- He^2+ at the active precision.
ParticleSystem muonic_helium(Isotope isotope);

}  // namespace fbhfs

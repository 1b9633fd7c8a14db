#include "fbhfs/particles.hpp"

#include "fbhfs/errors.hpp"

namespace fbhfs {

void ParticleSystem::validate() const {
    for (int k = 0; k < 3; ++k) {
        if (!(masses[k] > 0)) throw DomainError("mass of particle '" + labels[k] + "' must be positive");
    }
}

Real ParticleSystem::reduced_mass(int i, int j) const { return masses[i] * masses[j] / (masses[i] + masses[j]); }

ParticleSystem muonic_helium(Isotope isotope) {
    const bool he3 = isotope == Isotope::He3;
    ParticleSystem s;
    s.name = he3 ? "He3" : "He4";
    s.labels = {"e", "mu", he3 ? "He3" : "He4"};
    s.masses = {Real(1), parse_real(kMuonMass), parse_real(he3 ? kHelium3Mass : kHelium4Mass)};
    s.charges = {Real(-1), Real(-1), Real(2)};
    return s;
}

}  // namespace fbhfs

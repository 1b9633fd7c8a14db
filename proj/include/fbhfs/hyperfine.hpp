#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace fbhfs {

/// Physical constants entering the contact hyperfine Hamiltonian, in atomic
/// units unless noted. Defaults are the values the reference calculation used.
struct ConstantsTable {
    double alpha_fs = 7.2973525698e-3;
    double m_p = 1836.152701;
    double m_mu = 206.768262;
    double m_e = 1.0;
    double g_mu = -2.0023318414;
    double g_e = -2.0023193043622;
    /// Magnetic moment of the helium-3 nucleus in nuclear magnetons.
    double moment_N3 = -2.1277508;
    double I_N3 = 0.5;
    /// Hartree to MHz.
    double au_to_MHz = 6.579683920729e9;
    /// Published helium-4 splitting per unit <delta(r_e mu)>, MHz.
    double coefficient_4He = 14229.178083766834;

    /// g_N = moment / I.
    double g_N3() const { return moment_N3 / I_N3; }

    /// (2 pi / 3) alpha^2 g_e g_mu / (m_e m_mu) * au_to_MHz, from the table.
    double derived_coefficient_4He() const;

    /// Overrides one named field; throws ConfigError for an unknown name.
    void set(const std::string& name, double value);

    /// (name, value) for every field, in declaration order.
    std::vector<std::pair<std::string, double>> entries() const;
};

enum class Species { He3, He4 };

/// Spin quantum numbers of the particles carrying spin, in the order used for
/// the product basis.
struct SpinSystem {
    std::vector<double> spins;

    /// Product of (2 s + 1).
    int dimension() const;

    /// electron, muon, helium-3 nucleus.
    static SpinSystem he3() { return {{0.5, 0.5, 0.5}}; }
    /// electron, muon.
    static SpinSystem he4() { return {{0.5, 0.5}}; }
};

/// Contact densities <delta(r21)>, <delta(r31)>, <delta(r32)> in atomic units.
struct ContactDensities {
    double delta21 = 0;
    double delta31 = 0;
    double delta32 = 0;
};

struct HfsLevel {
    double energy_MHz;
    int degeneracy;
    std::string label;  // total spin J, e.g. "3/2"
};

struct HfsResult {
    /// Sorted by descending energy.
    std::vector<HfsLevel> levels;
    double splitting_MHz = 0;
    double uncertainty_MHz = 0;
};

/// s_a . s_b on the product space, built from the ladder form
/// s_az s_bz + (s_a+ s_b- + s_a- s_b+) / 2. Throws IndexError.
Eigen::MatrixXd spin_dot_matrix(const SpinSystem& sys, int a, int b);

/// Contact hyperfine Hamiltonian in hartree. For He3 the spin order is
/// (electron, muon, nucleus) and all three pair terms are present; for He4
/// only the electron-muon term exists. Throws DimensionMismatch when the spin
/// system does not match the species.
Eigen::MatrixXd build_hfs_hamiltonian(const SpinSystem& sys, const ContactDensities& deltas,
                                      const ConstantsTable& consts, Species species);

/// Diagonalizes, converts to MHz and groups levels whose relative gap is
/// below 1e-9. He3 needs the 4/2/2 pattern (splitting J=3/2 minus the upper
/// J=1/2 doublet); He4 needs 3/1 (J=1 minus J=0). Throws UnexpectedDegeneracy.
HfsResult hfs_levels(const Eigen::MatrixXd& hamiltonian, const ConstantsTable& consts);

/// coefficient_4He * delta21 in MHz.
double splitting_4he_direct(double delta21, const ConstantsTable& consts);

struct Propagated {
    double value;
    double sigma;
};

/// Evaluates at central - spread, central and central + spread; sigma is half
/// the max-min range of the three results.
Propagated propagate_uncertainty(double central, double spread, const std::function<double(double)>& evaluator);

double au_to_mhz(double hartree, const ConstantsTable& consts = {});
double mhz_to_au(double mhz, const ConstantsTable& consts = {});

/// Levels and splitting for a species from its contact densities, with the
/// uncertainty of each density propagated by the three-point rule and the
/// contributions combined in quadrature.
HfsResult hyperfine_structure(Species species, const ContactDensities& deltas, const ContactDensities& spreads,
                              const ConstantsTable& consts);

}  // namespace fbhfs

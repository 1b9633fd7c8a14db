#include "fbhfs/hyperfine.hpp"

#include "fbhfs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fbhfs {

namespace {

constexpr double kGroupGap = 1e-9;

// (2 pi / 3) alpha^2 g_a g_b / (m_a m_b)
double contact_factor(const ConstantsTable& c, double g_a, double m_a, double g_b, double m_b) {
    return 2.0 * std::numbers::pi / 3.0 * c.alpha_fs * c.alpha_fs * g_a * g_b / (m_a * m_b);
}

struct SingleSpin {
    Eigen::MatrixXd z;
    Eigen::MatrixXd raise;
};

// Basis ordered m = s, s-1, ..., -s.
SingleSpin single_spin(double s) {
    const int dim = static_cast<int>(std::lround(2 * s)) + 1;
    SingleSpin out{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, dim)};
    for (int k = 0; k < dim; ++k) {
        const double m = s - k;
        out.z(k, k) = m;
        if (k > 0) out.raise(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
    }
    return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Operator `op` acting on particle `which`, identity elsewhere.
Eigen::MatrixXd embed(const SpinSystem& sys, int which, const Eigen::MatrixXd& op) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
    for (int k = 0; k < static_cast<int>(sys.spins.size()); ++k) {
        const int dim = static_cast<int>(std::lround(2 * sys.spins[k])) + 1;
        out = kron(out, k == which ? op : Eigen::MatrixXd::Identity(dim, dim));
    }
    return out;
}

std::string j_label(int degeneracy) {
    // 2J + 1 = degeneracy for a single multiplet.
    const int twice_j = degeneracy - 1;
    return twice_j % 2 == 0 ? std::to_string(twice_j / 2) : std::to_string(twice_j) + "/2";
}

}  // namespace

double ConstantsTable::derived_coefficient_4He() const {
    return contact_factor(*this, g_e, m_e, g_mu, m_mu) * au_to_MHz;
}

void ConstantsTable::set(const std::string& name, double value) {
    for (auto& [key, field] : std::initializer_list<std::pair<const char*, double*>>{
             {"alpha_fs", &alpha_fs},
             {"m_p", &m_p},
             {"m_mu", &m_mu},
             {"m_e", &m_e},
             {"g_mu", &g_mu},
             {"g_e", &g_e},
             {"moment_N3", &moment_N3},
             {"I_N3", &I_N3},
             {"au_to_MHz", &au_to_MHz},
             {"coefficient_4He", &coefficient_4He}}) {
        if (name == key) {
            *field = value;
            return;
        }
    }
    throw ConfigError("unknown constant '" + name + "'");
}

std::vector<std::pair<std::string, double>> ConstantsTable::entries() const {
    return {{"alpha_fs", alpha_fs}, {"m_p", m_p},           {"m_mu", m_mu},
            {"m_e", m_e},           {"g_mu", g_mu},         {"g_e", g_e},
            {"moment_N3", moment_N3}, {"I_N3", I_N3},       {"g_N3", g_N3()},
            {"au_to_MHz", au_to_MHz}, {"coefficient_4He", coefficient_4He}};
}

int SpinSystem::dimension() const {
    int d = 1;
    for (double s : spins) d *= static_cast<int>(std::lround(2 * s)) + 1;
    return d;
}

Eigen::MatrixXd spin_dot_matrix(const SpinSystem& sys, int a, int b) {
    const int count = static_cast<int>(sys.spins.size());
    if (a < 0 || b < 0 || a >= count || b >= count) throw IndexError("spin index out of range");
    if (a == b) throw IndexError("spin product needs two distinct particles");
    const SingleSpin sa = single_spin(sys.spins[a]);
    const SingleSpin sb = single_spin(sys.spins[b]);
    const Eigen::MatrixXd za = embed(sys, a, sa.z), zb = embed(sys, b, sb.z);
    const Eigen::MatrixXd pa = embed(sys, a, sa.raise), pb = embed(sys, b, sb.raise);
    return za * zb + 0.5 * (pa * pb.transpose() + pa.transpose() * pb);
}

Eigen::MatrixXd build_hfs_hamiltonian(const SpinSystem& sys, const ContactDensities& d, const ConstantsTable& c,
                                      Species species) {
    constexpr int kElectron = 0, kMuon = 1, kNucleus = 2;
    const Eigen::MatrixXd e_mu = contact_factor(c, c.g_e, c.m_e, c.g_mu, c.m_mu) * d.delta21 *
                                 (sys.spins.size() >= 2 ? spin_dot_matrix(sys, kElectron, kMuon) : Eigen::MatrixXd());
    if (species == Species::He4) {
        if (sys.spins.size() != 2 || sys.dimension() != 4) {
            throw DimensionMismatch("helium-4 needs the electron-muon spin space of dimension 4");
        }
        return e_mu;
    }
    if (sys.spins.size() != 3 || sys.dimension() != 8) {
        throw DimensionMismatch("helium-3 needs the electron-muon-nucleus spin space of dimension 8");
    }
    const double g_n = c.g_N3();
    return contact_factor(c, g_n, c.m_p, c.g_mu, c.m_mu) * d.delta32 * spin_dot_matrix(sys, kNucleus, kMuon) +
           contact_factor(c, g_n, c.m_p, c.g_e, c.m_e) * d.delta31 * spin_dot_matrix(sys, kNucleus, kElectron) + e_mu;
}

HfsResult hfs_levels(const Eigen::MatrixXd& hamiltonian, const ConstantsTable& consts) {
    if (hamiltonian.rows() != hamiltonian.cols()) throw DimensionMismatch("hyperfine matrix must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hamiltonian, Eigen::EigenvaluesOnly);
    std::vector<double> e(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    for (double& v : e) v = au_to_mhz(v, consts);
    std::sort(e.begin(), e.end(), std::greater<>());

    double scale = 0;
    for (double v : e) scale = std::max(scale, std::abs(v));

    HfsResult out;
    for (std::size_t k = 0; k < e.size();) {
        std::size_t end = k + 1;
        double sum = e[k];
        while (end < e.size() && std::abs(e[end - 1] - e[end]) < kGroupGap * scale) sum += e[end++];
        const int deg = static_cast<int>(end - k);
        out.levels.push_back({sum / deg, deg, j_label(deg)});
        k = end;
    }

    std::vector<int> pattern;
    for (const auto& l : out.levels) pattern.push_back(l.degeneracy);
    auto find_deg = [&](int deg, int nth) -> HfsLevel& {
        for (auto& l : out.levels) {
            if (l.degeneracy == deg && nth-- == 0) return l;
        }
        throw UnexpectedDegeneracy("missing level of degeneracy " + std::to_string(deg));
    };
    std::vector<int> sorted = pattern;
    std::sort(sorted.begin(), sorted.end());
    if (e.size() == 8 && sorted == std::vector<int>{2, 2, 4}) {
        HfsLevel& upper = find_deg(2, 0);
        HfsLevel& lower = find_deg(2, 1);
        upper.label += " upper";
        lower.label += " lower";
        out.splitting_MHz = find_deg(4, 0).energy_MHz - upper.energy_MHz;
    } else if (e.size() == 4 && sorted == std::vector<int>{1, 3}) {
        out.splitting_MHz = find_deg(3, 0).energy_MHz - find_deg(1, 0).energy_MHz;
    } else {
        std::string got;
        for (int d : pattern) got += (got.empty() ? "" : "/") + std::to_string(d);
        throw UnexpectedDegeneracy("level degeneracies " + got + " match neither 4/2/2 nor 3/1");
    }
    return out;
}

double splitting_4he_direct(double delta21, const ConstantsTable& consts) { return consts.coefficient_4He * delta21; }

Propagated propagate_uncertainty(double central, double spread, const std::function<double(double)>& evaluator) {
    if (spread < 0) throw DomainError("spread must be non-negative");
    const double lo = evaluator(central - spread);
    const double mid = evaluator(central);
    const double hi = evaluator(central + spread);
    const double mx = std::max({lo, mid, hi});
    const double mn = std::min({lo, mid, hi});
    return {mid, (mx - mn) / 2};
}

double au_to_mhz(double hartree, const ConstantsTable& consts) { return hartree * consts.au_to_MHz; }

double mhz_to_au(double mhz, const ConstantsTable& consts) { return mhz / consts.au_to_MHz; }

HfsResult hyperfine_structure(Species species, const ContactDensities& deltas, const ContactDensities& spreads,
                              const ConstantsTable& consts) {
    const SpinSystem spins = species == Species::He3 ? SpinSystem::he3() : SpinSystem::he4();
    HfsResult out = hfs_levels(build_hfs_hamiltonian(spins, deltas, consts, species), consts);

    double variance = 0;
    for (double ContactDensities::*field :
         {&ContactDensities::delta21, &ContactDensities::delta31, &ContactDensities::delta32}) {
        if (species == Species::He4 && field != &ContactDensities::delta21) continue;
        if (spreads.*field == 0) continue;
        const Propagated p = propagate_uncertainty(deltas.*field, spreads.*field, [&](double v) {
            ContactDensities varied = deltas;
            varied.*field = v;
            return hfs_levels(build_hfs_hamiltonian(spins, varied, consts, species), consts).splitting_MHz;
        });
        variance += p.sigma * p.sigma;
    }
    out.uncertainty_MHz = std::sqrt(variance);
    return out;
}

}  // namespace fbhfs

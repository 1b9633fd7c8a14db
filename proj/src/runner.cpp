#include "fbhfs/runner.hpp"

#include "fbhfs/basis.hpp"
#include "fbhfs/coulomb_integrals.hpp"
#include "fbhfs/errors.hpp"
#include "fbhfs/observables.hpp"
#include "fbhfs/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unistd.h>

namespace fbhfs {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxBoxes = 4;
constexpr std::array<std::size_t, 4> kDefaultLadder{100, 200, 400, 800};
// Small enough that double-precision coefficient sums stay accurate.
constexpr std::size_t kOracleBasis = 24;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

// Shortest string that reads back to the same double.
std::string format_double(double v) {
    char buf[40];
    const auto result = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, result.ptr);
}

std::string format_sig(double v, int sig) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*e", sig - 1, v);
    return buf;
}

long long parse_integer(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    const long long v = parse_integer(key, value);
    if (v < 1) throw ConfigError(key + ": must be at least 1");
    return static_cast<std::size_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
        throw ConfigError(key + ": expected a finite number, got '" + value + "'");
    }
    return v;
}

// Decimal strings are checked for syntax here and converted later at the run precision.
std::string parse_decimal(const std::string& key, const std::string& value) {
    parse_double(key, value);
    return value;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::array<std::string, 3> parse_triple(const std::string& key, const std::string& value) {
    const auto words = split_words(value);
    if (words.size() != 3) throw ConfigError(key + ": expected three numbers");
    return {parse_decimal(key, words[0]), parse_decimal(key, words[1]), parse_decimal(key, words[2])};
}

const std::set<std::string>& constant_names() {
    static const std::set<std::string> names = [] {
        std::set<std::string> out;
        for (const auto& [name, value] : ConstantsTable{}.entries()) out.insert(name);
        out.erase("g_N3");  // derived
        return out;
    }();
    return names;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Run-wide state resolved from the configuration.
struct Session {
    const RunConfig& config;
    PrecisionContext ctx;
    ParticleSystem system;
    std::optional<Species> species;
    ConstantsTable constants;
    std::string hash;
    const std::function<void(const std::string&)>& progress;

    void log(const std::string& line) const {
        if (progress) progress(line);
    }
};

ParticleSystem make_system(const RunConfig& c) {
    if (c.system == "he3") return muonic_helium(Isotope::He3);
    if (c.system == "he4") return muonic_helium(Isotope::He4);
    ParticleSystem sys;
    sys.name = "custom";
    sys.labels = {"e", "mu", "N"};
    for (int k = 0; k < 3; ++k) {
        sys.masses[k] = parse_real((*c.masses)[k]);
        sys.charges[k] = parse_real((*c.charges)[k]);
    }
    sys.validate();
    return sys;
}

std::vector<std::size_t> ladder(const RunConfig& c) {
    std::vector<std::size_t> out;
    if (!c.sizes.empty()) {
        out = c.sizes;
    } else {
        for (std::size_t n : kDefaultLadder) {
            if (n < c.n) out.push_back(n);
        }
    }
    if (out.empty() || out.back() != c.n) out.push_back(c.n);
    return out;
}

std::vector<ParameterBox> boxes_for(const RunConfig& c, std::size_t n) {
    const std::vector<BoxTemplate> templates = c.boxes.empty() ? preset_boxes() : c.boxes;
    double total = 0;
    for (const auto& t : templates) total += t.weight;
    std::vector<std::size_t> counts;
    std::size_t assigned = 0;
    for (const auto& t : templates) {
        counts.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(n) * t.weight / total)));
        assigned += counts.back();
    }
    for (std::size_t k = 0; assigned < n; k = (k + 1) % counts.size(), ++assigned) ++counts[k];

    std::vector<ParameterBox> out;
    for (std::size_t k = 0; k < templates.size(); ++k) {
        if (counts[k] == 0) continue;
        const auto& b = templates[k].bounds;
        out.push_back({{parse_real(b[0]), parse_real(b[1])},
                       {parse_real(b[2]), parse_real(b[3])},
                       {parse_real(b[4]), parse_real(b[5])},
                       counts[k]});
    }
    return out;
}

json real_json(const Real& x) { return to_decimal_string(x); }

json boxes_json(const std::vector<ParameterBox>& boxes) {
    json out = json::array();
    for (const auto& b : boxes) {
        out.push_back({{"alpha", {real_json(b.alpha.lo), real_json(b.alpha.hi)}},
                       {"beta", {real_json(b.beta.lo), real_json(b.beta.hi)}},
                       {"gamma", {real_json(b.gamma.lo), real_json(b.gamma.hi)}},
                       {"count", b.count}});
    }
    return out;
}

json constants_json(const ConstantsTable& c) {
    json out = json::object();
    for (const auto& [name, value] : c.entries()) out[name] = format_double(value);
    return out;
}

json system_json(const ParticleSystem& sys) {
    json out{{"name", sys.name}, {"labels", sys.labels}};
    for (int k = 0; k < 3; ++k) {
        out["masses"].push_back(real_json(sys.masses[k]));
        out["charges"].push_back(real_json(sys.charges[k]));
    }
    return out;
}

json header(const Session& s, Command command) {
    json config = json::array();
    std::istringstream lines(s.config.canonical());
    for (std::string line; std::getline(lines, line);) config.push_back(line);
    return {{"format", "fbhfs-report"},
            {"version", 1},
            {"command", to_string(command)},
            {"config_hash", s.hash},
            {"config", config},
            {"precision", {{"digits", s.ctx.decimal_digits()}, {"bits", s.ctx.bits()}}},
            {"system", system_json(s.system)},
            {"constants", constants_json(s.constants)}};
}

struct PreparedBasis {
    BasisSet basis;
    json provenance;
};

PreparedBasis prepare_basis(const Session& s, std::size_t n) {
    const RunConfig& c = s.config;
    if (!c.basis_file.empty()) {
        const WavefunctionDocument doc = load_basis_file(c.basis_file);
        if (doc.basis.size() < n) {
            throw ConfigError("basis.file holds " + std::to_string(doc.basis.size()) + " functions, " +
                              std::to_string(n) + " requested");
        }
        // Re-read the exponents at the run precision.
        BasisSet basis;
        for (const auto& t : doc.basis.prefix(n).triples) {
            basis.triples.push_back({parse_real(to_decimal_string(t.alpha)), parse_real(to_decimal_string(t.beta)),
                                     parse_real(to_decimal_string(t.gamma))});
        }
        basis.boxes = doc.basis.prefix(n).boxes;
        return {basis, {{"source", "file"}, {"path", c.basis_file}, {"n", n}, {"boxes", boxes_json(basis.boxes)}}};
    }
    std::vector<ParameterBox> boxes = boxes_for(c, n);
    json provenance{{"source", "generated"}, {"n", n}, {"rule", "frac(k(k+1)/2*sqrt(p)), p = 2, 3, 5"}};
    if (c.optimizer_budget > 0) {
        s.log("optimizing boxes at N = " + std::to_string(n) + ", budget " + std::to_string(c.optimizer_budget));
        OptimizeOptions options;
        options.log = [&](const std::string& line) { s.log("  " + line); };
        const OptimizationResult r = optimize_boxes(boxes, s.system, s.ctx, c.optimizer_budget, options);
        provenance["optimizer"] = {{"budget", c.optimizer_budget},
                                   {"evaluations", r.evaluations},
                                   {"accepted_moves", r.accepted_moves},
                                   {"initial_energy", real_json(r.initial_energy)},
                                   {"final_energy", real_json(r.state.energy)},
                                   {"initial_boxes", boxes_json(boxes)}};
        boxes = r.boxes;
    }
    provenance["boxes"] = boxes_json(boxes);
    return {generate_basis(boxes), provenance};
}

SolveOptions solve_options(const Session& s) {
    SolveOptions o;
    o.prune_dependent = s.config.prune;
    if (s.config.tolerance) o.tolerance = parse_real(*s.config.tolerance);
    o.log = [&](const std::string& line) { s.log(line); };
    return o;
}

std::vector<ConvergenceRow> nested_states(const Session& s, const BasisSet& basis) {
    const auto sizes = ladder(s.config);
    s.log("solving N = " + [&] {
        std::string t;
        for (auto n : sizes) t += (t.empty() ? "" : ", ") + std::to_string(n);
        return t;
    }());
    return convergence_study(basis, s.system, sizes, s.ctx, solve_options(s));
}

Artifact wavefunction_artifact(const Session& s, const BoundState& state) {
    WavefunctionDocument doc;
    doc.system = s.system;
    doc.digits = s.ctx.decimal_digits();
    doc.basis = *state.basis;
    doc.coefficients = state.coefficients;
    doc.energy = state.energy;
    return {"wavefunction.fbvs", save_basis(doc)};
}

std::string rule(std::size_t width) { return std::string(width, '-') + "\n"; }

std::string title(const Session& s, const std::string& what) {
    std::ostringstream out;
    out << what << "  system " << s.system.name << "  digits " << s.ctx.decimal_digits() << "  config "
        << s.hash << "\n";
    return out.str();
}

// Table I layout: one energy per basis size.
std::string energy_table(const Session& s, const std::vector<ConvergenceRow>& rows) {
    std::ostringstream out;
    out << title(s, "Total energy (a.u.)");
    char line[160];
    std::snprintf(line, sizeof line, "%8s  %-36s %s\n", "N", "E", "pruned");
    out << line << rule(54);
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%8zu  %-36s %zu\n", r.n, format_real(r.state.energy, 30).c_str(),
                      r.state.pruned.size());
        out << line;
    }
    return out.str();
}

json energy_rows_json(const std::vector<ConvergenceRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"n", r.n},
                       {"energy", real_json(r.state.energy)},
                       {"residual", format_real(r.state.residual, 6)},
                       {"pruned", r.state.pruned}});
    }
    return out;
}

bool monotone(const std::vector<ConvergenceRow>& rows) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].state.energy > rows[k - 1].state.energy) return false;
    }
    return true;
}

json expectation_json(const ExpectationSet& e, const ParticleSystem& sys) {
    return {{"norm", real_json(e.norm)},
            {"delta21", real_json(e.delta21)},
            {"delta31", real_json(e.delta31)},
            {"delta32", real_json(e.delta32)},
            {"delta321", real_json(e.delta321)},
            {"t_expect", real_json(e.t_expect)},
            {"v_expect", real_json(e.v_expect)},
            {"virial_ratio", real_json(e.virial_ratio)},
            {"cusp21", real_json(e.cusp21)},
            {"cusp31", real_json(e.cusp31)},
            {"cusp32", real_json(e.cusp32)},
            {"kato21", real_json(kato_target(sys, Pair::R21))},
            {"kato31", real_json(kato_target(sys, Pair::R31))},
            {"kato32", real_json(kato_target(sys, Pair::R32))},
            {"spread", {{"delta21", format_real(e.delta21_spread, 6)},
                        {"delta31", format_real(e.delta31_spread, 6)},
                        {"delta32", format_real(e.delta32_spread, 6)},
                        {"delta321", format_real(e.delta321_spread, 6)}}}};
}

// Table II layout: delta functions per basis size, then the diagnostics of the largest.
std::string expectation_table(const Session& s, const std::vector<ConvergenceRow>& rows,
                              const std::vector<ExpectationSet>& reports, const ExpectationSet& last) {
    std::ostringstream out;
    out << title(s, "Delta-function expectation values (a.u.)");
    char line[256];
    std::snprintf(line, sizeof line, "%8s  %-22s %-22s %-26s %-22s\n", "N", "<d21>", "<d31>", "<d32>", "<d321>");
    out << line << rule(104);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& e = reports[k];
        std::snprintf(line, sizeof line, "%8zu  %-22s %-22s %-26s %-22s\n", rows[k].n,
                      format_real(e.delta21, 16).c_str(), format_real(e.delta31, 16).c_str(),
                      format_real(e.delta32, 20).c_str(), format_real(e.delta321, 16).c_str());
        out << line;
    }
    std::snprintf(line, sizeof line, "%8s  %-22s %-22s %-26s %-22s\n", "spread", format_real(last.delta21_spread, 3).c_str(),
                  format_real(last.delta31_spread, 3).c_str(), format_real(last.delta32_spread, 3).c_str(),
                  format_real(last.delta321_spread, 3).c_str());
    out << line << "\n";
    std::snprintf(line, sizeof line, "%-14s %-26s %s\n", "", "value", "target");
    out << line;
    std::snprintf(line, sizeof line, "%-14s %-26s %s\n", "<V>/<T>", format_real(last.virial_ratio, 16).c_str(), "-2");
    out << line;
    const std::array<std::pair<const char*, const Real*>, 3> cusps{
        {{"cusp 21", &last.cusp21}, {"cusp 31", &last.cusp31}, {"cusp 32", &last.cusp32}}};
    for (int k = 0; k < 3; ++k) {
        std::snprintf(line, sizeof line, "%-14s %-26s %s\n", cusps[k].first, format_real(*cusps[k].second, 12).c_str(),
                      format_real(kato_target(s.system, static_cast<Pair>(k)), 12).c_str());
        out << line;
    }
    return out.str();
}

struct HfsInputs {
    ContactDensities deltas;
    ContactDensities spreads;
    std::string source;
};

json hfs_json(const HfsInputs& in, const HfsResult& r, const ConstantsTable& c) {
    json levels = json::array();
    for (const auto& l : r.levels) {
        levels.push_back({{"label", l.label}, {"degeneracy", l.degeneracy}, {"energy_MHz", format_double(l.energy_MHz)}});
    }
    return {{"deltas_source", in.source},
            {"deltas", {{"delta21", format_double(in.deltas.delta21)},
                        {"delta31", format_double(in.deltas.delta31)},
                        {"delta32", format_double(in.deltas.delta32)}}},
            {"spreads", {{"delta21", format_double(in.spreads.delta21)},
                         {"delta31", format_double(in.spreads.delta31)},
                         {"delta32", format_double(in.spreads.delta32)}}},
            {"levels", levels},
            {"splitting_MHz", format_double(r.splitting_MHz)},
            {"uncertainty_MHz", format_double(r.uncertainty_MHz)},
            {"coefficient_4He_derived", format_double(c.derived_coefficient_4He())}};
}

std::string hfs_table(const Session& s, const HfsInputs& in, const HfsResult& r) {
    std::ostringstream out;
    out << title(s, "Hyperfine structure (MHz)");
    char line[160];
    out << "constants\n";
    for (const auto& [name, value] : s.constants.entries()) {
        std::snprintf(line, sizeof line, "  %-16s %s\n", name.c_str(), format_double(value).c_str());
        out << line;
    }
    out << "contact densities (a.u., " << in.source << ")\n";
    const std::array<std::tuple<const char*, double, double>, 3> d{{{"<d21>", in.deltas.delta21, in.spreads.delta21},
                                                                     {"<d31>", in.deltas.delta31, in.spreads.delta31},
                                                                     {"<d32>", in.deltas.delta32, in.spreads.delta32}}};
    for (const auto& [name, value, spread] : d) {
        std::snprintf(line, sizeof line, "  %-16s %-22s +- %s\n", name, format_sig(value, 13).c_str(),
                      format_sig(spread, 2).c_str());
        out << line;
    }
    std::snprintf(line, sizeof line, "%-12s %-6s %s\n", "J", "deg", "E (MHz)");
    out << line << rule(40);
    for (const auto& l : r.levels) {
        std::snprintf(line, sizeof line, "%-12s %-6d %s\n", l.label.c_str(), l.degeneracy,
                      format_sig(l.energy_MHz, 13).c_str());
        out << line;
    }
    std::snprintf(line, sizeof line, "splitting  %.5f +- %.5f MHz\n", r.splitting_MHz, r.uncertainty_MHz);
    out << line;
    return out.str();
}

HfsInputs deltas_from(const ExpectationSet& e) {
    return {{e.delta21.convert_to<double>(), e.delta31.convert_to<double>(), e.delta32.convert_to<double>()},
            {e.delta21_spread.convert_to<double>(), e.delta31_spread.convert_to<double>(),
             e.delta32_spread.convert_to<double>()},
            "computed"};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Pipeline {
    std::vector<ConvergenceRow> rows;
    std::vector<ExpectationSet> reports;
    ExpectationSet last;
    json provenance;
};

Pipeline energies(const Session& s) {
    Pipeline p;
    PreparedBasis prepared = prepare_basis(s, s.config.n);
    p.provenance = std::move(prepared.provenance);
    p.provenance["file"] = "wavefunction.fbvs";
    p.rows = nested_states(s, prepared.basis);
    return p;
}

void add_expectations(const Session& s, Pipeline& p) {
    for (const auto& r : p.rows) {
        s.log("expectation values at N = " + std::to_string(r.n));
        p.reports.push_back(expectation_report(r.state));
    }
    p.last = with_spreads(p.reports);
}

RunOutput run_solve(const Session& s) {
    PreparedBasis prepared = prepare_basis(s, s.config.n);
    s.log("solving N = " + std::to_string(s.config.n));
    const BoundState state = solve_ground(prepared.basis, s.system, s.ctx, solve_options(s));
    prepared.provenance["file"] = "wavefunction.fbvs";
    json j = header(s, Command::Solve);
    j["basis"] = prepared.provenance;
    j["energy"] = real_json(state.energy);
    j["residual"] = format_real(state.residual, 6);
    j["pruned"] = state.pruned;
    std::vector<ConvergenceRow> rows{{state.basis->size() + state.pruned.size(), state}};
    RunOutput out;
    out.text = energy_table(s, rows);
    out.artifacts = {{"solve.json", dump(j)}, {"solve.txt", out.text}, wavefunction_artifact(s, state)};
    return out;
}

RunOutput run_convergence(const Session& s) {
    Pipeline p = energies(s);
    json j = header(s, Command::Convergence);
    j["basis"] = p.provenance;
    j["rows"] = energy_rows_json(p.rows);
    j["monotone"] = monotone(p.rows);
    RunOutput out;
    out.text = energy_table(s, p.rows);
    out.artifacts = {{"convergence.json", dump(j)}, {"convergence.txt", out.text},
                     wavefunction_artifact(s, p.rows.back().state)};
    return out;
}

RunOutput run_expect(const Session& s) {
    Pipeline p = energies(s);
    add_expectations(s, p);
    json j = header(s, Command::Expect);
    j["basis"] = p.provenance;
    j["rows"] = energy_rows_json(p.rows);
    j["expectations"] = expectation_json(p.last, s.system);
    RunOutput out;
    out.text = expectation_table(s, p.rows, p.reports, p.last);
    out.artifacts = {{"expect.json", dump(j)}, {"expect.txt", out.text}, wavefunction_artifact(s, p.rows.back().state)};
    return out;
}

RunOutput run_hfs(const Session& s) {
    const RunConfig& c = s.config;
    json j = header(s, Command::Hfs);
    RunOutput out;
    HfsInputs in;
    if (c.delta21) {
        in = {{*c.delta21, c.delta31.value_or(0), c.delta32.value_or(0)}, {c.spread21, c.spread31, c.spread32},
              "configured"};
        j["basis"] = nullptr;
    } else {
        Pipeline p = energies(s);
        add_expectations(s, p);
        in = deltas_from(p.last);
        j["basis"] = p.provenance;
        j["energy"] = real_json(p.rows.back().state.energy);
        out.artifacts.push_back(wavefunction_artifact(s, p.rows.back().state));
    }
    const HfsResult r = hyperfine_structure(*s.species, in.deltas, in.spreads, s.constants);
    j["hfs"] = hfs_json(in, r, s.constants);
    out.text = hfs_table(s, in, r);
    out.artifacts.insert(out.artifacts.begin(), {{"hfs.json", dump(j)}, {"hfs.txt", out.text}});
    return out;
}

RunOutput run_oracle(const Session& s) {
    RunOutput out;
    std::ostringstream text;
    text << title(s, "Oracle comparisons");
    char line[200];

    // Closed-form moments against nested quadrature.
    const std::array<std::array<double, 3>, 4> triples{{{1, 1, 1}, {0.5, 2, 400}, {3, 0.2, 350}, {900, 1, 0.1}}};
    double gamma_worst = 0;
    int cases = 0;
    json gamma_rows = json::array();
    for (const auto& t : triples) {
        double worst = 0;
        const GammaTable table(parse_real(format_double(t[0])), parse_real(format_double(t[1])),
                               parse_real(format_double(t[2])), 12);
        for (int l = 0; l <= 4; ++l) {
            for (int m = 0; m <= 4; ++m) {
                for (int n = 0; n <= 4; ++n) {
                    const double closed = table(l, m, n).convert_to<double>();
                    const double quad = quadrature_oracle(l, m, n, t[0], t[1], t[2], 1e-12);
                    worst = std::max(worst, std::abs(closed - quad) / std::abs(closed));
                    ++cases;
                }
            }
        }
        gamma_worst = std::max(gamma_worst, worst);
        gamma_rows.push_back({{"a", format_double(t[0])}, {"b", format_double(t[1])}, {"c", format_double(t[2])},
                              {"max_rel_diff", format_sig(worst, 3)}});
        std::snprintf(line, sizeof line, "gamma  a=%-6g b=%-6g c=%-6g  l,m,n<=4  max rel diff %s\n", t[0], t[1], t[2],
                      format_sig(worst, 3).c_str());
        text << line;
    }
    const bool gamma_ok = gamma_worst <= 1e-10;

    // Contact densities of a small ground state against one-dimensional quadrature.
    const std::size_t n = std::min(s.config.n, kOracleBasis);
    const PreparedBasis prepared = prepare_basis(s, n);
    const BoundState state = solve_ground(prepared.basis, s.system, s.ctx, solve_options(s));
    json delta_rows = json::array();
    double delta_worst = 0;
    for (Pair pair : {Pair::R21, Pair::R31, Pair::R32}) {
        const double closed = delta_pair(state, pair).convert_to<double>();
        const double quad = delta_pair_oracle(state, pair);
        const double diff = std::abs(closed - quad) / std::abs(closed);
        delta_worst = std::max(delta_worst, diff);
        delta_rows.push_back({{"pair", to_string(pair)},
                              {"closed_form", format_double(closed)},
                              {"quadrature", format_double(quad)},
                              {"rel_diff", format_sig(diff, 3)}});
        std::snprintf(line, sizeof line, "delta%s  N=%zu  closed %s  quadrature %s  rel diff %s\n",
                      to_string(pair).c_str(), n, format_sig(closed, 15).c_str(), format_sig(quad, 15).c_str(),
                      format_sig(diff, 3).c_str());
        text << line;
    }
    const bool delta_ok = delta_worst <= 1e-8;
    text << "gamma " << (gamma_ok ? "PASS" : "FAIL") << "  delta " << (delta_ok ? "PASS" : "FAIL") << "\n";

    json j = header(s, Command::Oracle);
    j["basis"] = prepared.provenance;
    j["gamma"] = {{"cases", cases}, {"triples", gamma_rows}, {"max_rel_diff", format_sig(gamma_worst, 3)},
                  {"tolerance", "1e-10"}, {"pass", gamma_ok}};
    j["delta"] = {{"n", n}, {"pairs", delta_rows}, {"tolerance", "1e-8"}, {"pass", delta_ok}};
    out.text = text.str();
    out.passed = gamma_ok && delta_ok;
    out.artifacts = {{"oracle.json", dump(j)}, {"oracle.txt", out.text}};
    return out;
}

RunOutput run_all(const Session& s) {
    Pipeline p = energies(s);
    add_expectations(s, p);
    json j = header(s, Command::All);
    j["basis"] = p.provenance;
    j["rows"] = energy_rows_json(p.rows);
    j["monotone"] = monotone(p.rows);
    j["expectations"] = expectation_json(p.last, s.system);
    RunOutput out;
    out.text = energy_table(s, p.rows) + "\n" + expectation_table(s, p.rows, p.reports, p.last);
    if (s.species) {
        const HfsInputs in = deltas_from(p.last);
        const HfsResult r = hyperfine_structure(*s.species, in.deltas, in.spreads, s.constants);
        j["hfs"] = hfs_json(in, r, s.constants);
        out.text += "\n" + hfs_table(s, in, r);
    }
    out.artifacts = {{"all.json", dump(j)}, {"all.txt", out.text}, wavefunction_artifact(s, p.rows.back().state)};
    return out;
}

}  // namespace

std::vector<BoxTemplate> preset_boxes() {
    // Boxes 1-3 tuned by optimize_boxes at N = 400 for He-4; box 4 picked by
    // the cusp and delta21 errors at the same size. Used for He-3 as well.
    return {{{"-0.14", "2.5", "0.08", "2.28", "370", "440"}, 1},
            {{"0.585", "7.14", "1.44", "7.14", "300", "500"}, 1},
            {{"0.2", "3", "0.2", "3.14", "345", "480"}, 1},
            {{"41.9", "128", "0.11", "9.9", "355", "600"}, 1}};
}

std::string RunConfig::canonical() const {
    std::map<std::string, std::string> kv;
    kv["system.name"] = system;
    if (masses) kv["system.masses"] = (*masses)[0] + " " + (*masses)[1] + " " + (*masses)[2];
    if (charges) kv["system.charges"] = (*charges)[0] + " " + (*charges)[1] + " " + (*charges)[2];
    kv["basis.n"] = std::to_string(n);
    std::string ladder_text;
    for (auto v : ladder(*this)) ladder_text += (ladder_text.empty() ? "" : " ") + std::to_string(v);
    kv["basis.sizes"] = ladder_text;
    if (basis_file.empty()) {
        const auto resolved = boxes.empty() ? preset_boxes() : boxes;
        for (std::size_t k = 0; k < resolved.size(); ++k) {
            std::string v;
            for (const auto& b : resolved[k].bounds) v += b + " ";
            kv["basis.box." + std::to_string(k + 1)] = v + format_double(resolved[k].weight);
        }
    } else {
        kv["basis.file"] = basis_file;
    }
    kv["precision.digits"] = std::to_string(digits);
    kv["solver.tolerance"] = tolerance.value_or("default");
    kv["solver.prune"] = prune ? "true" : "false";
    kv["optimizer.budget"] = std::to_string(optimizer_budget);
    ConstantsTable table;
    for (const auto& [name, value] : constants) table.set(name, value);
    for (const auto& [name, value] : table.entries()) {
        if (constant_names().count(name)) kv["hfs." + name] = format_double(value);
    }
    if (delta21) kv["hfs.delta21"] = format_double(*delta21);
    if (delta31) kv["hfs.delta31"] = format_double(*delta31);
    if (delta32) kv["hfs.delta32"] = format_double(*delta32);
    if (delta21) {
        kv["hfs.spread21"] = format_double(spread21);
        kv["hfs.spread31"] = format_double(spread31);
        kv["hfs.spread32"] = format_double(spread32);
    }
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

void apply_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    if (value.empty()) throw ConfigError(key + ": missing value");
    if (key == "system.name") {
        if (value != "he3" && value != "he4" && value != "custom") {
            throw ConfigError("system.name: expected he3, he4 or custom, got '" + value + "'");
        }
        c.system = value;
    } else if (key == "system.masses") {
        c.masses = parse_triple(key, value);
    } else if (key == "system.charges") {
        c.charges = parse_triple(key, value);
    } else if (key == "basis.n") {
        c.n = parse_count(key, value);
    } else if (key == "basis.sizes") {
        c.sizes.clear();
        for (const auto& w : split_words(value)) c.sizes.push_back(parse_count(key, w));
    } else if (key.rfind("basis.box.", 0) == 0) {
        const std::string index = key.substr(10);
        const long long k = parse_integer(key, index);
        if (k < 1 || k > static_cast<long long>(kMaxBoxes)) {
            throw ConfigError(key + ": box index must be 1.." + std::to_string(kMaxBoxes));
        }
        const auto words = split_words(value);
        if (words.size() != 6 && words.size() != 7) {
            throw ConfigError(key + ": expected A1 A2 B1 B2 C1 C2 [weight]");
        }
        BoxTemplate box;
        for (int i = 0; i < 6; ++i) box.bounds[i] = parse_decimal(key, words[i]);
        if (words.size() == 7) box.weight = parse_double(key, words[6]);
        if (c.boxes.size() < static_cast<std::size_t>(k)) c.boxes.resize(k, BoxTemplate{{}, 0});
        c.boxes[k - 1] = box;
    } else if (key == "basis.file") {
        c.basis_file = value;
    } else if (key == "precision.digits") {
        c.digits = static_cast<int>(parse_integer(key, value));
    } else if (key == "solver.tolerance") {
        if (parse_double(key, value) <= 0) throw ConfigError(key + ": must be positive");
        c.tolerance = value;
    } else if (key == "solver.prune") {
        c.prune = parse_bool(key, value);
    } else if (key == "optimizer.budget") {
        c.optimizer_budget = static_cast<int>(parse_integer(key, value));
    } else if (key == "output.dir") {
        c.out_dir = value;
    } else if (key == "hfs.delta21") {
        c.delta21 = parse_double(key, value);
    } else if (key == "hfs.delta31") {
        c.delta31 = parse_double(key, value);
    } else if (key == "hfs.delta32") {
        c.delta32 = parse_double(key, value);
    } else if (key == "hfs.spread21") {
        c.spread21 = parse_double(key, value);
    } else if (key == "hfs.spread31") {
        c.spread31 = parse_double(key, value);
    } else if (key == "hfs.spread32") {
        c.spread32 = parse_double(key, value);
    } else if (key.rfind("hfs.", 0) == 0 && constant_names().count(key.substr(4))) {
        const double v = parse_double(key, value);
        const std::string name = key.substr(4);
        std::erase_if(c.constants, [&](const auto& e) { return e.first == name; });
        c.constants.emplace_back(name, v);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

void apply_config_text(RunConfig& config, std::string_view text) {
    std::set<std::string> seen;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++number;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const auto where = "line " + std::to_string(number) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "missing key");
        if (!seen.insert(key).second) throw ConfigError(where + "repeated key '" + key + "'");
        try {
            apply_config_value(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
}

void validate_config(const RunConfig& c) {
    if (c.digits < PrecisionContext::kMinDigits || c.digits > 2000) {
        throw ConfigError("precision.digits must lie in " + std::to_string(PrecisionContext::kMinDigits) + "..2000");
    }
    if (c.system == "custom") {
        if (!c.masses || !c.charges) throw ConfigError("system.name = custom needs system.masses and system.charges");
        for (const auto& m : *c.masses) {
            if (std::strtod(m.c_str(), nullptr) <= 0) throw ConfigError("system.masses must be positive");
        }
    } else if (c.masses || c.charges) {
        throw ConfigError("system.masses and system.charges apply only to system.name = custom");
    }
    if (c.n < 1) throw ConfigError("basis.n must be at least 1");
    for (std::size_t k = 0; k < c.sizes.size(); ++k) {
        if (c.sizes[k] > c.n) throw ConfigError("basis.sizes must not exceed basis.n");
        if (k > 0 && c.sizes[k] <= c.sizes[k - 1]) throw ConfigError("basis.sizes must be strictly ascending");
    }
    for (std::size_t k = 0; k < c.boxes.size(); ++k) {
        const auto& b = c.boxes[k];
        const std::string key = "basis.box." + std::to_string(k + 1);
        if (b.weight == 0 && b.bounds[0].empty()) throw ConfigError(key + " is missing; boxes must be numbered from 1");
        if (!(b.weight > 0)) throw ConfigError(key + ": weight must be positive");
        for (int i = 0; i < 6; i += 2) {
            if (std::strtod(b.bounds[i].c_str(), nullptr) > std::strtod(b.bounds[i + 1].c_str(), nullptr)) {
                throw ConfigError(key + ": lower bound above upper bound");
            }
        }
    }
    if (!c.basis_file.empty()) {
        if (!c.boxes.empty()) throw ConfigError("basis.file and basis.box.* are mutually exclusive");
        if (c.optimizer_budget > 0) throw ConfigError("optimizer.budget needs generated boxes, not basis.file");
        std::ifstream probe(c.basis_file);
        if (!probe) throw ConfigError("basis.file '" + c.basis_file + "' cannot be read");
    }
    if (c.optimizer_budget < 0) throw ConfigError("optimizer.budget must be non-negative");
    if (c.spread21 < 0 || c.spread31 < 0 || c.spread32 < 0) throw ConfigError("hfs spreads must be non-negative");
    if ((c.delta31 || c.delta32) && !c.delta21) throw ConfigError("hfs.delta21 is required with other stored deltas");
    if (c.delta21 && c.system == "he3" && (!c.delta31 || !c.delta32)) {
        throw ConfigError("helium-3 stored deltas need hfs.delta21, hfs.delta31 and hfs.delta32");
    }
    if (c.out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string config_hash(const RunConfig& config) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.canonical())));
    return buf;
}

Command parse_command(std::string_view name) {
    static const std::map<std::string, Command, std::less<>> names{
        {"solve", Command::Solve}, {"convergence", Command::Convergence}, {"expect", Command::Expect},
        {"hfs", Command::Hfs},     {"oracle", Command::Oracle},           {"all", Command::All}};
    const auto it = names.find(name);
    if (it == names.end()) throw ConfigError("unknown subcommand '" + std::string(name) + "'");
    return it->second;
}

std::string to_string(Command command) {
    switch (command) {
        case Command::Solve: return "solve";
        case Command::Convergence: return "convergence";
        case Command::Expect: return "expect";
        case Command::Hfs: return "hfs";
        case Command::Oracle: return "oracle";
        case Command::All: return "all";
    }
    return "?";
}

RunOutput run(const RunConfig& config, Command command, const std::function<void(const std::string&)>& progress) {
    validate_config(config);
    const PrecisionContext ctx = PrecisionContext::make(config.digits);
    PrecisionScope scope(ctx);
    Session s{config, ctx, make_system(config), std::nullopt, {}, config_hash(config), progress};
    if (config.system == "he3") s.species = Species::He3;
    if (config.system == "he4") s.species = Species::He4;
    for (const auto& [name, value] : config.constants) s.constants.set(name, value);
    if (command == Command::Hfs && !s.species) throw ConfigError("hfs needs system.name he3 or he4");

    switch (command) {
        case Command::Solve: return run_solve(s);
        case Command::Convergence: return run_convergence(s);
        case Command::Expect: return run_expect(s);
        case Command::Hfs: return run_hfs(s);
        case Command::Oracle: return run_oracle(s);
        case Command::All: return run_all(s);
    }
    throw ConfigError("unknown subcommand");
}

void write_artifacts(const std::string& directory, const std::vector<Artifact>& artifacts) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw ConfigError("cannot create output directory '" + directory + "': " + ec.message());

    std::vector<std::pair<fs::path, fs::path>> staged;
    auto discard = [&] {
        for (const auto& [tmp, final] : staged) fs::remove(tmp, ec);
    };
    for (const auto& a : artifacts) {
        const fs::path final = fs::path(directory) / a.name;
        const fs::path tmp = fs::path(directory) / ("." + a.name + ".partial-" + std::to_string(::getpid()));
        staged.emplace_back(tmp, final);
        std::ofstream out(tmp, std::ios::binary);
        out << a.content;
        out.close();
        if (!out) {
            discard();
            throw Error("cannot write '" + tmp.string() + "'");
        }
    }
    for (const auto& [tmp, final] : staged) fs::rename(tmp, final);
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config error";
    if (dynamic_cast<const FormatError*>(&e)) return "format error";
    if (dynamic_cast<const DomainError*>(&e)) return "domain error";
    if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "not positive definite";
    if (dynamic_cast<const NoConvergence*>(&e)) return "no convergence";
    if (dynamic_cast<const Overflow*>(&e)) return "overflow";
    if (dynamic_cast<const CannotSatisfy*>(&e)) return "cannot satisfy";
    if (dynamic_cast<const IndexError*>(&e)) return "index error";
    if (dynamic_cast<const DimensionMismatch*>(&e)) return "dimension mismatch";
    if (dynamic_cast<const UnexpectedDegeneracy*>(&e)) return "unexpected degeneracy";
    if (dynamic_cast<const Error*>(&e)) return "error";
    return "internal error";
}

}  // namespace fbhfs

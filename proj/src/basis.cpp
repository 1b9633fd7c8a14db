#include "fbhfs/basis.hpp"

#include "fbhfs/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace fbhfs {

namespace {

Real frac(const Real& x) { return x - floor(x); }

Real place(const Interval& iv, const Real& unit) { return iv.lo + (iv.hi - iv.lo) * unit; }

struct TripleLess {
    bool operator()(const ExponentTriple& x, const ExponentTriple& y) const {
        return std::tie(x.alpha, x.beta, x.gamma) < std::tie(y.alpha, y.beta, y.gamma);
    }
};

void check_box(const ParameterBox& box, std::size_t index) {
    const std::string where = "box " + std::to_string(index + 1);
    for (const Interval* iv : {&box.alpha, &box.beta, &box.gamma}) {
        if (!isfinite(iv->lo) || !isfinite(iv->hi) || iv->hi < iv->lo) {
            throw CannotSatisfy(where + ": interval bounds must be finite with lo <= hi");
        }
    }
    if (box.alpha.hi + box.beta.hi <= 0 || box.alpha.hi + box.gamma.hi <= 0 || box.beta.hi + box.gamma.hi <= 0) {
        throw CannotSatisfy(where + ": every point violates pairwise-sum positivity");
    }
}

std::vector<std::string> split(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

// Sum of mantissa digits of a decimal token.
std::uint32_t mantissa_digit_sum(const std::string& token) {
    std::uint32_t sum = 0;
    for (char ch : token) {
        if (ch == 'e' || ch == 'E') break;
        if (ch >= '0' && ch <= '9') sum += static_cast<std::uint32_t>(ch - '0');
    }
    return sum;
}

}  // namespace

BasisSet BasisSet::prefix(std::size_t n) const {
    if (n > triples.size()) throw DimensionMismatch("prefix longer than the basis");
    BasisSet out;
    out.triples.assign(triples.begin(), triples.begin() + static_cast<std::ptrdiff_t>(n));
    out.boxes = boxes;
    // Replay the round-robin to find how many functions each box contributed.
    std::vector<std::size_t> used(boxes.size(), 0);
    std::size_t emitted = 0;
    while (emitted < n) {
        bool progressed = false;
        for (std::size_t b = 0; b < boxes.size() && emitted < n; ++b) {
            if (used[b] < boxes[b].count) {
                ++used[b];
                ++emitted;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    if (!boxes.empty()) {
        for (std::size_t b = 0; b < boxes.size(); ++b) out.boxes[b].count = used[b];
    }
    return out;
}

BasisSet generate_basis(std::span<const ParameterBox> boxes) {
    std::size_t total = 0;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        check_box(boxes[b], b);
        total += boxes[b].count;
    }
    if (total == 0) throw CannotSatisfy("box counts must sum to at least one function");

    const Real root2 = sqrt(Real(2)), root3 = sqrt(Real(3)), root5 = sqrt(Real(5));
    BasisSet out;
    out.boxes.assign(boxes.begin(), boxes.end());
    out.triples.reserve(total);
    std::map<ExponentTriple, std::size_t, TripleLess> seen;
    std::vector<std::size_t> emitted(boxes.size(), 0);
    std::vector<std::uint64_t> next_k(boxes.size(), 1);

    while (out.triples.size() < total) {
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            const ParameterBox& box = boxes[b];
            if (emitted[b] == box.count) continue;
            const std::uint64_t limit = next_k[b] + 1000 + 100 * box.count;
            for (;; ++next_k[b]) {
                if (next_k[b] > limit) {
                    throw CannotSatisfy("box " + std::to_string(b + 1) + " cannot supply " +
                                        std::to_string(box.count) + " distinct integrable triples");
                }
                const std::uint64_t k = next_k[b];
                const Real t = Real(k) * Real(k + 1) / 2;
                ExponentTriple x{place(box.alpha, frac(t * root2)), place(box.beta, frac(t * root3)),
                                 place(box.gamma, frac(t * root5))};
                if (!x.integrable() || seen.count(x)) continue;
                seen.emplace(x, out.triples.size());
                out.triples.push_back(std::move(x));
                ++next_k[b];
                break;
            }
            ++emitted[b];
        }
    }
    return out;
}

std::vector<BasisViolation> validate_basis(const BasisSet& basis) {
    std::vector<BasisViolation> out;
    std::map<ExponentTriple, std::size_t, TripleLess> seen;
    for (std::size_t i = 0; i < basis.triples.size(); ++i) {
        const ExponentTriple& t = basis.triples[i];
        if (!t.integrable()) {
            std::string detail;
            if (t.alpha + t.beta <= 0) detail = "alpha+beta = " + format_real(t.alpha + t.beta, 6);
            else if (t.alpha + t.gamma <= 0) detail = "alpha+gamma = " + format_real(t.alpha + t.gamma, 6);
            else detail = "beta+gamma = " + format_real(t.beta + t.gamma, 6);
            out.push_back({BasisViolation::Kind::NotIntegrable, i, i,
                           "function " + std::to_string(i + 1) + " is not integrable: " + detail});
        }
        auto [it, inserted] = seen.emplace(t, i);
        if (!inserted) {
            out.push_back({BasisViolation::Kind::Duplicate, it->second, i,
                           "duplicate at indices " + std::to_string(it->second + 1) + "," + std::to_string(i + 1)});
        }
    }
    return out;
}

std::string save_basis(const WavefunctionDocument& doc) {
    if (doc.coefficients && doc.coefficients->size() != doc.basis.size()) {
        throw DimensionMismatch("coefficient count differs from basis size");
    }
    std::uint32_t checksum = 0;
    auto num = [&checksum](const Real& x) {
        std::string s = to_decimal_string(x);
        checksum += mantissa_digit_sum(s);
        return s;
    };

    std::ostringstream out;
    out << "FBVS v1\n";
    out << "system " << doc.system.name;
    for (int k = 0; k < 3; ++k) {
        out << ' ' << doc.system.labels[k] << ' ' << to_decimal_string(doc.system.masses[k]) << ' '
            << to_decimal_string(doc.system.charges[k]);
    }
    out << "\nN " << doc.basis.size() << " digits " << doc.digits << '\n';
    for (std::size_t i = 0; i < doc.basis.size(); ++i) {
        const auto& t = doc.basis.triples[i];
        out << num(t.alpha) << ' ' << num(t.beta) << ' ' << num(t.gamma);
        if (doc.coefficients) out << ' ' << num((*doc.coefficients)[i]);
        out << '\n';
    }
    for (const auto& box : doc.basis.boxes) {
        out << "box " << to_decimal_string(box.alpha.lo) << ' ' << to_decimal_string(box.alpha.hi) << ' '
            << to_decimal_string(box.beta.lo) << ' ' << to_decimal_string(box.beta.hi) << ' '
            << to_decimal_string(box.gamma.lo) << ' ' << to_decimal_string(box.gamma.hi) << ' ' << box.count
            << '\n';
    }
    if (doc.energy) out << "energy " << num(*doc.energy) << '\n';
    out << "checksum " << checksum << '\n';
    return out.str();
}

WavefunctionDocument load_basis(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::istringstream in{std::string(text)};
        for (std::string line; std::getline(in, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    if (lines.empty()) throw FormatError("empty document", 1);
    const auto header = split(lines[0]);
    if (header.size() != 2 || header[0] != "FBVS") throw FormatError("missing 'FBVS' header", 1);
    if (header[1] != "v1") throw FormatError("unsupported version '" + header[1] + "'", 1);
    if (lines.size() < 3) throw FormatError("truncated before the size line", lines.size() + 1);

    const auto sizes = split(lines[2]);
    if (sizes.size() != 4 || sizes[0] != "N" || sizes[2] != "digits") {
        throw FormatError("expected 'N <count> digits <precision>'", 3);
    }
    std::size_t count = 0;
    int digits = 0;
    try {
        count = std::stoul(sizes[1]);
        digits = std::stoi(sizes[3]);
    } catch (const std::exception&) {
        throw FormatError("non-numeric count or precision", 3);
    }
    PrecisionContext ctx = [&] {
        try {
            return PrecisionContext::make(digits);
        } catch (const DomainError& e) {
            throw FormatError(e.what(), 3);
        }
    }();
    PrecisionScope scope(ctx);

    auto real_at = [](const std::string& tok, std::size_t line, const char* field) {
        try {
            return parse_real(tok);
        } catch (const DomainError&) {
            throw FormatError(std::string("field '") + field + "' is not a decimal number: '" + tok + "'", line);
        }
    };

    WavefunctionDocument doc;
    doc.digits = digits;
    const auto sys = split(lines[1]);
    if (sys.size() != 11 || sys[0] != "system") {
        throw FormatError("expected 'system <name>' followed by three 'label mass charge' groups", 2);
    }
    doc.system.name = sys[1];
    for (int k = 0; k < 3; ++k) {
        doc.system.labels[k] = sys[2 + 3 * k];
        doc.system.masses[k] = real_at(sys[3 + 3 * k], 2, "mass");
        doc.system.charges[k] = real_at(sys[4 + 3 * k], 2, "charge");
    }

    std::uint32_t checksum = 0;
    if (lines.size() < 3 + count) throw FormatError("truncated: expected " + std::to_string(count) + " functions", lines.size() + 1);
    std::optional<bool> with_coefficients;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t ln = 4 + i;
        const auto tok = split(lines[3 + i]);
        if (tok.size() != 3 && tok.size() != 4) throw FormatError("expected 'alpha beta gamma [coefficient]'", ln);
        const bool has_c = tok.size() == 4;
        if (with_coefficients && *with_coefficients != has_c) {
            throw FormatError("coefficients must be given for all functions or none", ln);
        }
        with_coefficients = has_c;
        for (const auto& t : tok) checksum += mantissa_digit_sum(t);
        doc.basis.triples.push_back(
            {real_at(tok[0], ln, "alpha"), real_at(tok[1], ln, "beta"), real_at(tok[2], ln, "gamma")});
        if (has_c) {
            if (!doc.coefficients) doc.coefficients.emplace();
            doc.coefficients->push_back(real_at(tok[3], ln, "coefficient"));
        }
    }

    bool saw_checksum = false;
    for (std::size_t i = 3 + count; i < lines.size(); ++i) {
        const std::size_t ln = i + 1;
        const auto tok = split(lines[i]);
        if (tok.empty()) continue;
        if (saw_checksum) throw FormatError("content after checksum", ln);
        if (tok[0] == "box") {
            if (tok.size() != 8) throw FormatError("expected 'box A1 A2 B1 B2 C1 C2 count'", ln);
            ParameterBox box;
            box.alpha = {real_at(tok[1], ln, "A1"), real_at(tok[2], ln, "A2")};
            box.beta = {real_at(tok[3], ln, "B1"), real_at(tok[4], ln, "B2")};
            box.gamma = {real_at(tok[5], ln, "C1"), real_at(tok[6], ln, "C2")};
            try {
                box.count = std::stoul(tok[7]);
            } catch (const std::exception&) {
                throw FormatError("box count is not an integer", ln);
            }
            doc.basis.boxes.push_back(std::move(box));
        } else if (tok[0] == "energy") {
            if (tok.size() != 2) throw FormatError("expected 'energy <decimal>'", ln);
            checksum += mantissa_digit_sum(tok[1]);
            doc.energy = real_at(tok[1], ln, "energy");
        } else if (tok[0] == "checksum") {
            if (tok.size() != 2) throw FormatError("expected 'checksum <integer>'", ln);
            unsigned long long stated = 0;
            try {
                stated = std::stoull(tok[1]);
            } catch (const std::exception&) {
                throw FormatError("checksum is not an integer", ln);
            }
            if (stated != checksum) {
                throw FormatError("checksum mismatch: file says " + tok[1] + ", digits sum to " +
                                      std::to_string(checksum),
                                  ln);
            }
            saw_checksum = true;
        } else {
            throw FormatError("unexpected line '" + tok[0] + "' after " + std::to_string(count) + " functions", ln);
        }
    }
    if (!saw_checksum) throw FormatError("missing checksum line (truncated file?)", lines.size() + 1);
    return doc;
}

void save_basis_file(const std::string& path, const WavefunctionDocument& doc) {
    const std::string text = save_basis(doc);
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot open '" + tmp + "' for writing");
        out << text;
        if (!out) throw Error("write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot move '" + tmp + "' to '" + path + "'");
}

WavefunctionDocument load_basis_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_basis(buf.str());
}

}  // namespace fbhfs

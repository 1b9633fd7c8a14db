#pragma once

#include "fbhfs/linalg.hpp"
#include "fbhfs/particles.hpp"
#include "fbhfs/precision.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fbhfs {

/// Nonlinear exponents of one basis function exp(-alpha r21 - beta r31 - gamma r32).
struct ExponentTriple {
    Real alpha;  // electron-muon
    Real beta;   // electron-nucleus
    Real gamma;  // muon-nucleus

    /// Pairwise sums positive, i.e. square integrable.
    bool integrable() const { return alpha + beta > 0 && alpha + gamma > 0 && beta + gamma > 0; }

    bool operator==(const ExponentTriple&) const = default;
};

struct Interval {
    Real lo;
    Real hi;

    bool operator==(const Interval&) const = default;
};

/// A region of exponent space and how many functions to draw from it.
struct ParameterBox {
    Interval alpha;
    Interval beta;
    Interval gamma;
    std::size_t count = 0;

    bool operator==(const ParameterBox&) const = default;
};

/// Ordered exponent list. Every prefix is itself a usable basis.
struct BasisSet {
    std::vector<ExponentTriple> triples;
    std::vector<ParameterBox> boxes;

    std::size_t size() const noexcept { return triples.size(); }

    /// The first `n` functions, with box counts trimmed to match.
    BasisSet prefix(std::size_t n) const;

    bool operator==(const BasisSet&) const = default;
};

/// Quasi-random fill of each box: the k-th point (k = 1, 2, ...) of a box is
///   lo + (hi - lo) * frac(k (k + 1) / 2 * sqrt(p)),  p = 2, 3, 5
/// for alpha, beta, gamma. Boxes are visited round-robin, skipping exhausted
/// ones, so a prefix of the result equals the generation with the prefix's
/// per-box counts. Points that repeat an earlier triple or are not integrable
/// are skipped by advancing k. Throws CannotSatisfy when a box has no
/// integrable points or cannot supply enough distinct ones.
BasisSet generate_basis(std::span<const ParameterBox> boxes);

struct BasisViolation {
    enum class Kind { NotIntegrable, Duplicate };
    Kind kind;
    std::size_t first;   // zero-based
    std::size_t second;  // duplicates only
    std::string message;
};

/// Empty iff every triple is integrable and no two triples are identical.
std::vector<BasisViolation> validate_basis(const BasisSet& basis);

/// Contents of an FBVS v1 wave-function file.
struct WavefunctionDocument {
    ParticleSystem system;
    int digits = PrecisionContext::kDefaultDigits;
    BasisSet basis;
    std::optional<Vector> coefficients;
    std::optional<Real> energy;

    bool operator==(const WavefunctionDocument&) const = default;
};

/// Serializes to FBVS v1 text. Numbers are written as decimal strings that
/// read back to the identical binary value.
std::string save_basis(const WavefunctionDocument& doc);

/// Parses FBVS v1 text at the precision recorded in its header. Throws
/// FormatError with the offending line.
WavefunctionDocument load_basis(std::string_view text);

void save_basis_file(const std::string& path, const WavefunctionDocument& doc);
WavefunctionDocument load_basis_file(const std::string& path);

}  // namespace fbhfs

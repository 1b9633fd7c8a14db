#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <string>
#include <string_view>

namespace fbhfs {

/// Extended-precision real. Precision of newly created values follows the
/// active PrecisionScope.
using Real = boost::multiprecision::mpfr_float;

/// Working precision shared by every extended-precision computation.
class PrecisionContext {
public:
    static constexpr int kMinDigits = 30;
    static constexpr int kDefaultDigits = 64;

    /// Throws DomainError when `decimal_digits` < 30.
    static PrecisionContext make(int decimal_digits);

    int decimal_digits() const noexcept { return digits_; }

    /// Binary mantissa bits carried for `decimal_digits()` digits.
    long bits() const noexcept;

    /// Unit roundoff, 10^-digits.
    Real epsilon() const;

    /// Default eigensolver tolerance, 10^-(digits-10).
    Real default_tolerance() const;

    bool operator==(const PrecisionContext&) const = default;

private:
    explicit PrecisionContext(int digits) : digits_(digits) {}
    int digits_;
};

/// Makes `ctx` the precision of all Real values created while alive and
/// restores the previous default on destruction. The default is
/// process-wide: activate before spawning workers, not inside them.
class PrecisionScope {
public:
    explicit PrecisionScope(const PrecisionContext& ctx);
    ~PrecisionScope();
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned previous_;
};

/// Shortest decimal string that reads back to the identical binary value at
/// the same precision.
std::string to_decimal_string(const Real& x);

/// Parses a decimal string at the active precision. Throws DomainError.
Real parse_real(std::string_view text);

/// Decimal string with `significant` digits in scientific notation.
std::string format_real(const Real& x, int significant);

}  // namespace fbhfs

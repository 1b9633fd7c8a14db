#include "fbhfs/precision.hpp"

#include "fbhfs/errors.hpp"

#include <mpfr.h>

#include <cmath>
#include <memory>

namespace fbhfs {

namespace {

// Guard bits beyond ceil(digits * log2(10)).
constexpr long kGuardBits = 8;

}  // namespace

PrecisionContext PrecisionContext::make(int decimal_digits) {
    if (decimal_digits < kMinDigits) {
        throw DomainError("precision of " + std::to_string(decimal_digits) +
                          " digits is below the minimum of " + std::to_string(kMinDigits));
    }
    return PrecisionContext(decimal_digits);
}

long PrecisionContext::bits() const noexcept {
    return static_cast<long>(std::ceil(digits_ * 3.321928094887362)) + kGuardBits;
}

Real PrecisionContext::epsilon() const {
    PrecisionScope scope(*this);
    return boost::multiprecision::pow(Real(10), -digits_);
}

Real PrecisionContext::default_tolerance() const {
    PrecisionScope scope(*this);
    return boost::multiprecision::pow(Real(10), -(digits_ - 10));
}

PrecisionScope::PrecisionScope(const PrecisionContext& ctx) : previous_(Real::default_precision()) {
    // Boost expresses precision in decimal digits; derive them from our bit count so
    // that the mantissa carries the guard bits.
    auto digits10 = static_cast<unsigned>(std::ceil(ctx.bits() * 0.30102999566398120));
    Real::default_precision(digits10);
}

PrecisionScope::~PrecisionScope() { Real::default_precision(previous_); }

std::string to_decimal_string(const Real& x) {
    mpfr_srcptr v = x.backend().data();
    if (mpfr_zero_p(v)) return mpfr_signbit(v) ? "-0" : "0";
    if (!mpfr_number_p(v)) throw DomainError("cannot serialize a non-finite value");

    mpfr_exp_t exp10 = 0;
    std::unique_ptr<char, void (*)(char*)> raw(mpfr_get_str(nullptr, &exp10, 10, 0, v, MPFR_RNDN),
                                               mpfr_free_str);
    std::string mantissa(raw.get());
    bool negative = !mantissa.empty() && mantissa.front() == '-';
    if (negative) mantissa.erase(0, 1);
    while (mantissa.size() > 1 && mantissa.back() == '0') mantissa.pop_back();

    // value = 0.mantissa * 10^exp10 = m.antissa * 10^(exp10-1)
    std::string out = negative ? "-" : "";
    out += mantissa.substr(0, 1);
    if (mantissa.size() > 1) {
        out += '.';
        out += mantissa.substr(1);
    }
    long e = static_cast<long>(exp10) - 1;
    if (e != 0) out += "e" + std::to_string(e);
    return out;
}

Real parse_real(std::string_view text) {
    std::string s(text);
    Real r;
    if (s.empty() || mpfr_set_str(r.backend().data(), s.c_str(), 10, MPFR_RNDN) != 0) {
        throw DomainError("not a decimal number: '" + s + "'");
    }
    return r;
}

std::string format_real(const Real& x, int significant) {
    return x.str(significant, std::ios_base::scientific);
}

}  // namespace fbhfs

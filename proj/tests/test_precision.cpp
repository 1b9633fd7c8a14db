#include "fbhfs/errors.hpp"
#include "fbhfs/precision.hpp"

#include <doctest.h>

using namespace fbhfs;

TEST_SUITE("precision") {

TEST_CASE("context rejects fewer than 30 digits") {
    CHECK_THROWS_AS(PrecisionContext::make(29), DomainError);
    CHECK(PrecisionContext::make(30).decimal_digits() == 30);
}

TEST_CASE("bits carry the requested digits plus guard bits") {
    const auto ctx = PrecisionContext::make(64);
    CHECK(ctx.bits() >= 213);
    CHECK(ctx.bits() <= 230);
}

TEST_CASE("scope sets and restores the default precision") {
    const unsigned before = Real::default_precision();
    {
        PrecisionScope scope(PrecisionContext::make(100));
        CHECK(Real::default_precision() >= 100);
        Real third = Real(1) / 3;
        CHECK(format_real(third, 60).substr(0, 12) == "3.3333333333");
    }
    CHECK(Real::default_precision() == before);
}

TEST_CASE("decimal strings round-trip exactly") {
    PrecisionScope scope(PrecisionContext::make(64));
    for (const char* text : {"1", "-402.637263035135454018941", "2.07001373517002e7", "1e-300", "0.1"}) {
        const Real x = parse_real(text);
        CHECK(parse_real(to_decimal_string(x)) == x);
    }
    const Real third = Real(1) / 3;
    CHECK(parse_real(to_decimal_string(third)) == third);
    const Real pi_ish = Real(355) / 113;
    CHECK(parse_real(to_decimal_string(-pi_ish)) == -pi_ish);
}

TEST_CASE("parse_real rejects garbage") {
    PrecisionScope scope(PrecisionContext::make(40));
    CHECK_THROWS_AS(parse_real("abc"), DomainError);
    CHECK_THROWS_AS(parse_real("1.5x"), DomainError);
    CHECK_THROWS_AS(parse_real(""), DomainError);
}

TEST_CASE("epsilon and default tolerance") {
    const auto ctx = PrecisionContext::make(50);
    PrecisionScope scope(ctx);
    CHECK(abs(ctx.epsilon() / parse_real("1e-50") - 1) < parse_real("1e-45"));
    CHECK(abs(ctx.default_tolerance() / parse_real("1e-40") - 1) < parse_real("1e-35"));
}

}

#include "fbhfs/basis.hpp"
#include "fbhfs/errors.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace fbhfs;

namespace {

ParameterBox box(double a1, double a2, double b1, double b2, double c1, double c2, std::size_t count) {
    return {{Real(a1), Real(a2)}, {Real(b1), Real(b2)}, {Real(c1), Real(c2)}, count};
}

std::vector<ParameterBox> two_boxes(std::size_t n1, std::size_t n2) {
    return {box(0.3, 2.5, 0.3, 2.5, 350, 450, n1), box(0.3, 6, 0.3, 6, 300, 550, n2)};
}

WavefunctionDocument sample_document() {
    WavefunctionDocument doc;
    doc.system = muonic_helium(Isotope::He4);
    doc.digits = 64;
    doc.basis = generate_basis(two_boxes(5, 5));
    Vector c;
    for (std::size_t i = 0; i < 10; ++i) c.push_back(Real(1) / Real(i + 3) - Real("0.2"));
    doc.coefficients = c;
    doc.energy = parse_real("-402.6372630351");
    return doc;
}

}  // namespace

TEST_SUITE("basis") {

TEST_CASE("first point of a unit box") {
    PrecisionScope scope(PrecisionContext::make(40));
    const auto b = generate_basis(std::vector{box(1, 2, 1, 2, 1, 2, 1)});
    REQUIRE(b.size() == 1);
    // k = 1: frac(sqrt 2), frac(sqrt 3), frac(sqrt 5)
    CHECK(abs(b.triples[0].alpha - sqrt(Real(2))) < Real("1e-35"));
    CHECK(abs(b.triples[0].beta - sqrt(Real(3))) < Real("1e-35"));
    CHECK(abs(b.triples[0].gamma - (sqrt(Real(5)) - 1)) < Real("1e-35"));
}

TEST_CASE("degenerate interval pins a coordinate") {
    PrecisionScope scope(PrecisionContext::make(40));
    const auto b = generate_basis(std::vector{box(1.5, 1.5, 0.1, 3, 300, 500, 20)});
    for (const auto& t : b.triples) CHECK(t.alpha == Real("1.5"));
}

TEST_CASE("unsatisfiable boxes") {
    PrecisionScope scope(PrecisionContext::make(40));
    CHECK_THROWS_AS(generate_basis(std::vector{box(-3, -2, -3, -2, 1, 2, 3)}), CannotSatisfy);
    CHECK_THROWS_AS(generate_basis(std::vector{box(2, 1, 0, 1, 0, 1, 3)}), CannotSatisfy);
    CHECK_THROWS_AS(generate_basis(std::vector{box(1, 1, 1, 1, 1, 1, 2)}), CannotSatisfy);
    CHECK_THROWS_AS(generate_basis(std::vector{box(0, 1, 0, 1, 0, 1, 0)}), CannotSatisfy);
}

TEST_CASE("partially integrable boxes skip bad points") {
    PrecisionScope scope(PrecisionContext::make(40));
    const auto b = generate_basis(std::vector{box(-1, 1, -1, 1, 1, 2, 30)});
    CHECK(b.size() == 30);
    CHECK(validate_basis(b).empty());
}

TEST_CASE("generation is nested") {
    PrecisionScope scope(PrecisionContext::make(40));
    const auto full = generate_basis(two_boxes(40, 25));
    CHECK(validate_basis(full).empty());
    for (std::size_t n : {1u, 7u, 30u, 50u, 64u}) {
        const BasisSet pre = full.prefix(n);
        std::vector<ParameterBox> boxes = pre.boxes;
        std::vector<ParameterBox> trimmed;
        for (const auto& b : boxes) {
            if (b.count) trimmed.push_back(b);
        }
        const BasisSet direct = generate_basis(trimmed);
        REQUIRE(direct.size() == n);
        for (std::size_t i = 0; i < n; ++i) CHECK(direct.triples[i] == full.triples[i]);
    }
    CHECK(full.prefix(50).boxes[0].count == 25);
    CHECK(full.prefix(50).boxes[1].count == 25);
    CHECK_THROWS_AS(full.prefix(66), DimensionMismatch);
}

TEST_CASE("generation is deterministic") {
    PrecisionScope scope(PrecisionContext::make(40));
    CHECK(generate_basis(two_boxes(10, 10)) == generate_basis(two_boxes(10, 10)));
}

TEST_CASE("validation reports bad and repeated triples") {
    PrecisionScope scope(PrecisionContext::make(40));
    BasisSet b;
    b.triples = {{Real(1), Real(-2), Real("0.5")}, {Real(1), Real(1), Real(1)}, {Real(1), Real(1), Real(1)}};
    const auto v = validate_basis(b);
    REQUIRE(v.size() == 2);
    CHECK(v[0].kind == BasisViolation::Kind::NotIntegrable);
    CHECK(v[0].first == 0);
    CHECK(v[1].kind == BasisViolation::Kind::Duplicate);
    CHECK(v[1].first == 1);
    CHECK(v[1].second == 2);
}

TEST_CASE("wave-function document round-trips digit for digit") {
    PrecisionScope scope(PrecisionContext::make(64));
    const WavefunctionDocument doc = sample_document();
    const std::string text = save_basis(doc);
    CHECK(text.rfind("FBVS v1\n", 0) == 0);
    const WavefunctionDocument back = load_basis(text);
    CHECK(back == doc);
    CHECK(save_basis(back) == text);

    WavefunctionDocument bare = doc;
    bare.coefficients.reset();
    bare.energy.reset();
    CHECK(load_basis(save_basis(bare)) == bare);
}

TEST_CASE("documents load at their own precision") {
    std::string text;
    {
        PrecisionScope scope(PrecisionContext::make(120));
        WavefunctionDocument doc = sample_document();
        doc.digits = 120;
        doc.coefficients = Vector(10, Real(1) / 7);
        text = save_basis(doc);
    }
    PrecisionScope scope(PrecisionContext::make(40));
    const auto back = load_basis(text);
    CHECK(back.digits == 120);
    CHECK(save_basis(back) == text);
}

TEST_CASE("malformed documents") {
    PrecisionScope scope(PrecisionContext::make(64));
    const std::string text = save_basis(sample_document());

    std::string v99 = text;
    v99.replace(0, 7, "FBVS v99");
    CHECK_THROWS_AS(load_basis(v99), FormatError);

    const std::string truncated = text.substr(0, text.size() / 2);
    CHECK_THROWS_AS(load_basis(truncated), FormatError);

    std::string tampered = text;
    const auto pos = tampered.find('\n', tampered.find("N 10")) + 1;
    tampered[pos] = tampered[pos] == '1' ? '2' : '1';
    CHECK_THROWS_AS(load_basis(tampered), FormatError);

    try {
        load_basis("FBVS v1\nsystem x\nN 0 digits 40\n");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("files are written whole") {
    PrecisionScope scope(PrecisionContext::make(64));
    const auto dir = std::filesystem::temp_directory_path() / "fbhfs_basis_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "wf.fbvs").string();
    const WavefunctionDocument doc = sample_document();
    save_basis_file(path, doc);
    CHECK(load_basis_file(path) == doc);
    CHECK_FALSE(std::filesystem::exists(path + ".partial"));
    CHECK_THROWS_AS(load_basis_file((dir / "missing.fbvs").string()), FormatError);
    std::filesystem::remove_all(dir);
}

}

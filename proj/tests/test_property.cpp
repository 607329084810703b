#include <catch2/catch_amalgamated.hpp>

#include "assurekit/property.hpp"
#include "assurekit/scenario.hpp"
#include "support.hpp"

using namespace assurekit;

TEST_CASE("query and bound forms", "[property]") {
    auto q = parse_property("P=? [ F robotState=handoverSuccessful ]");
    CHECK(q.mode == PropertyQuery::Mode::Query);
    CHECK(q.path.pattern == PathFormula::Pattern::Eventually);

    auto b = parse_property("P>=0.9 [ F robotState=handoverSuccessful ]");
    CHECK(b.mode == PropertyQuery::Mode::Bound);
    CHECK(b.bound_op == BoundOp::Ge);
    CHECK(b.bound == 0.9);
    CHECK(b.path.pattern == PathFormula::Pattern::Eventually);

    CHECK(parse_property("P<0.5 [ G x=0 ]").bound_op == BoundOp::Lt);
    CHECK(parse_property("P>0.5 [ x=0 U x=1 ]").bound_op == BoundOp::Gt);
    CHECK(parse_property("P<=1 [ F x=1 ]").bound_op == BoundOp::Le);
}

TEST_CASE("all six patterns classify", "[property]") {
    using P = PathFormula::Pattern;
    CHECK(parse_property("P=? [ F a=1 ]").path.pattern == P::Eventually);
    CHECK(parse_property("P=? [ G a=1 ]").path.pattern == P::Globally);
    CHECK(parse_property("P=? [ G (a=1 => F b=1) ]").path.pattern == P::Response);
    CHECK(parse_property("P=? [ G (a=1 => !X b=1) ]").path.pattern == P::NextSafety);
    CHECK(parse_property("P=? [ G (a=1 => !(X b=1)) ]").path.pattern == P::NextSafety);
    CHECK(parse_property("P=? [ a=1 U b=1 ]").path.pattern == P::Until);

    auto ga = parse_property("P=? [ G ((F a=1) | (F b=1) | (F (a=2 U b=2))) ]");
    CHECK(ga.path.pattern == P::GloballyAny);
    REQUIRE(ga.path.eventualities.size() == 3);
    CHECK_FALSE(ga.path.eventualities[0].is_until);
    CHECK(ga.path.eventualities[2].is_until);

    // a tautological response still classifies structurally
    auto t = parse_property("P=? [ G (true => F (true & true)) ]");
    CHECK(t.path.pattern == P::Response);
}

TEST_CASE("a plain G over a boolean implication is Globally", "[property]") {
    auto q = parse_property(
        "P=? [ G (!(gazeState=1 & pressureState=1) => !(robotState=7 | robotState=8)) ]");
    CHECK(q.path.pattern == PathFormula::Pattern::Globally);
    REQUIRE(q.path.phi);
    CHECK(q.path.phi->op == Expr::Op::Implies);
}

TEST_CASE("unsupported nestings are rejected with the pattern list", "[property]") {
    for (const char* text : {
             "P=? [ X a=1 ]",
             "P=? [ F (a=1 U b=1) ]",
             "P=? [ G F G a=1 ]",
             "P=? [ G (a=1 => X b=1) ]",
             "P=? [ G ((F a=1) & (F b=1)) ]",
             "P=? [ (F a=1) | (G b=1) ]",
             "P=? [ G (F (a=1 => F b=1)) ]",
         }) {
        try {
            parse_property(text);
            FAIL(std::string("expected UnsupportedPattern for: ") + text);
        } catch (const UnsupportedPattern& e) {
            CHECK(std::string(e.what()).find("G (phi => F psi)") != std::string::npos);
        }
    }
}

TEST_CASE("bounds outside the unit interval are rejected", "[property]") {
    CHECK_THROWS_AS(parse_property("P>=1.5 [ F a=1 ]"), ProbabilityOutOfRange);
    CHECK_THROWS_AS(parse_property("P>= [ F a=1 ]"), SyntaxError);
    CHECK_THROWS_AS(parse_property("P=? [ F a=1 ] extra"), SyntaxError);
}

TEST_CASE("property files parse with annotations", "[property]") {
    auto lines = parse_property_file(
        "// header comment\n"
        "\n"
        "P=? [ F x=1 ]   // req 1a\n"
        "P>=0.5 [ G x=0 ]\n");
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].annotation == "req 1a");
    CHECK(lines[1].annotation.empty());
}

TEST_CASE("shipped requirement properties match the library", "[property]") {
    auto lines = parse_property_file(
        testsupport::read_file(testsupport::repo_root() / "props" / "reqs.qry"));
    auto reqs = requirement_library();
    std::size_t with_property = 0;
    for (const auto& r : reqs)
        if (r.property) ++with_property;
    REQUIRE(lines.size() == with_property);
    std::size_t i = 0;
    for (const auto& r : reqs) {
        if (!r.property) continue;
        CHECK(lines[i].annotation == "req " + r.id);
        CHECK(lines[i].query.text == r.property->text);
        ++i;
    }
}

TEST_CASE("atom resolution is checked against the chain", "[property]") {
    Chain c = build_chain(parse_model("module m x : [0..1] init 0; endmodule"));
    auto q = parse_property("P=? [ F y=1 ]");
    CHECK_THROWS_AS(resolve_atoms(q.path, c), AtomResolutionError);
    auto ok = parse_property("P=? [ F x=1 ]");
    CHECK_NOTHROW(resolve_atoms(ok.path, c));
}

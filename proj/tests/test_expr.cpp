#include <catch2/catch_amalgamated.hpp>

#include "assurekit/parse.hpp"

using namespace assurekit;

namespace {

Env env_of(std::map<std::string, Value> bindings) {
    return [bindings = std::move(bindings)](const std::string& n) -> std::optional<Value> {
        auto it = bindings.find(n);
        if (it == bindings.end()) return std::nullopt;
        return it->second;
    };
}

double eval_d(const std::string& text, const Env& env) {
    return eval_expr(parse_expression(text), env).as_double();
}

}  // namespace

TEST_CASE("complement of a calibrated rate", "[expr]") {
    auto env = env_of({{"pGazeFN", Value::of_double(0.00)}});
    CHECK(eval_d("1-pGazeFN", env) == 1.0);
}

TEST_CASE("state predicate in the initial state", "[expr]") {
    auto env = env_of({{"humanState", Value::of_int(0)}, {"start", Value::of_int(0)}});
    CHECK(eval_expr(parse_expression("humanState=start"), env).as_bool());
}

TEST_CASE("sensor product matches the published refined rate", "[expr]") {
    auto env = env_of({{"pGazeTP", Value::of_double(1.0 - 0.00)},
                       {"pPressureTP", Value::of_double(1.0 - 0.071428571)},
                       {"pLocationTP", Value::of_double(1.0 - 0.030612245)}});
    CHECK(eval_d("pGazeTP*pPressureTP*pLocationTP", env) ==
          Catch::Approx(0.9001457729154516).margin(1e-12));
}

TEST_CASE("integer arithmetic stays exact, division widens", "[expr]") {
    Env empty = env_of({});
    Value v = eval_expr(parse_expression("2+3*4"), empty);
    CHECK(v.kind == Kind::Int);
    CHECK(v.i == 14);
    Value q = eval_expr(parse_expression("7/2"), empty);
    CHECK(q.kind == Kind::Double);
    CHECK(q.d == 3.5);
    CHECK(eval_expr(parse_expression("-(2-5)"), empty).as_int() == 3);
}

TEST_CASE("boolean connectives and implication", "[expr]") {
    Env empty = env_of({});
    CHECK(eval_expr(parse_expression("true & !false"), empty).as_bool());
    CHECK(eval_expr(parse_expression("false | 1<2"), empty).as_bool());
    CHECK(eval_expr(parse_expression("false => false"), empty).as_bool());
    CHECK_FALSE(eval_expr(parse_expression("true => false"), empty).as_bool());
    CHECK(eval_expr(parse_expression("1=1 & 2!=3 & 2<=2 & 3>=2"), empty).as_bool());
}

TEST_CASE("evaluation errors", "[expr]") {
    Env empty = env_of({});
    CHECK_THROWS_AS(eval_expr(parse_expression("1/0"), empty), DivisionByZero);
    CHECK_THROWS_AS(eval_expr(parse_expression("missing+1"), empty), UnboundIdentifier);
    CHECK_THROWS_AS(eval_expr(parse_expression("true+1"), empty), KindMismatch);
    CHECK_THROWS_AS(eval_expr(parse_expression("1 & true"), empty), KindMismatch);
}

TEST_CASE("printed expressions re-parse to the same value", "[expr]") {
    auto env = env_of({{"x", Value::of_int(7)}, {"p", Value::of_double(0.25)}});
    for (const char* text : {
             "1-p*2",
             "(x+1)*(x-2)",
             "x=7 & (p<0.5 | !(x<0))",
             "p*p*p",
             "x-1-2",
             "x-(1-2)",
             "2<=x => x*2>13",
         }) {
        ExprPtr e = parse_expression(text);
        ExprPtr reparsed = parse_expression(print_expr(e));
        CHECK(eval_expr(e, env) == eval_expr(reparsed, env));
        // printing is a fixed point after one round
        CHECK(print_expr(reparsed) == print_expr(e));
    }
}

TEST_CASE("double literals survive print and re-parse bit-exactly", "[expr]") {
    for (double v : {0.071428571, 0.030612245, 0.9999948082592586, 1.0 / 3.0, 1e-12}) {
        ExprPtr e = Expr::lit(Value::of_double(v));
        Value round = eval_expr(parse_expression(print_expr(e)), env_of({}));
        CHECK(round.as_double() == v);
    }
}

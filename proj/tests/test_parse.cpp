#include <catch2/catch_amalgamated.hpp>

#include "assurekit/parse.hpp"
#include "assurekit/rng.hpp"
#include "support.hpp"

using namespace assurekit;

namespace {

// the printed human fragment, with the constants it references
const char* kHumanFragment = R"(
const int start = 0;
const int activatedRobot = 1;
const int responding = 2;
const int setGPL = 3;
const int offTask = 4;
const double pDisengages = 0;
const double pStaysOnTask = 1-pDisengages;

module human
  humanState : [0..99] init start;
  [activateRobot] humanState=start -> (humanState'=activatedRobot);
  [tick] humanState=activatedRobot -> (humanState'=activatedRobot);
  [informHumanOfHandoverStart] humanState=activatedRobot -> (humanState'=responding);
  [humanIsReady] humanState=responding -> (humanState'=setGPL);
  [tick] humanState=setGPL -> pDisengages: (humanState'=offTask) + pStaysOnTask: (humanState'=setGPL);
endmodule
)";

}  // namespace

TEST_CASE("human module fragment", "[parse]") {
    Model m = parse_model(kHumanFragment);
    REQUIRE(m.modules.size() == 1);
    const ModuleDef& human = m.modules[0];
    CHECK(human.name == "human");
    REQUIRE(human.vars.size() == 1);
    CHECK(human.vars[0].name == "humanState");
    CHECK_FALSE(human.vars[0].is_bool);
    Env consts = [&](const std::string& n) -> std::optional<Value> {
        auto cs = evaluate_constants(m);
        auto it = cs.find(n);
        if (it == cs.end()) return std::nullopt;
        return it->second;
    };
    CHECK(eval_expr(human.vars[0].lo, consts).as_int() == 0);
    CHECK(eval_expr(human.vars[0].hi, consts).as_int() == 99);
    REQUIRE(human.commands.size() == 5);
    std::set<std::string> labels;
    for (const auto& cmd : human.commands) labels.insert(cmd.label);
    CHECK(labels == std::set<std::string>{"activateRobot", "tick", "informHumanOfHandoverStart",
                                          "humanIsReady"});
}

TEST_CASE("empty module body", "[parse]") {
    Model m = parse_model("module m endmodule");
    REQUIRE(m.modules.size() == 1);
    CHECK(m.modules[0].vars.empty());
    CHECK(m.modules[0].commands.empty());
}

TEST_CASE("shipped refined model parses with ten modules", "[parse]") {
    Model m = parse_model(testsupport::read_file(testsupport::repo_root() / "models" /
                                                 "handover_refined.gcm"));
    CHECK(m.modules.size() == 10);
    std::vector<std::string> names;
    for (const auto& mod : m.modules) names.push_back(mod.name);
    CHECK(names == std::vector<std::string>{"human", "gaze", "pressure", "location", "proximity",
                                            "robot", "gazeSensor", "pressureSensor",
                                            "locationSensor", "timekeeper"});
}

TEST_CASE("parse-print-parse is idempotent on every shipped model", "[parse]") {
    for (const char* name : {"handover_baseline.gcm", "handover_sensors.gcm",
                             "handover_sensors_gripper.gcm", "handover_refined.gcm"}) {
        std::string text = testsupport::read_file(testsupport::repo_root() / "models" / name);
        REQUIRE_FALSE(text.empty());
        std::string printed = print_model(parse_model(text));
        CHECK(print_model(parse_model(printed)) == printed);
    }
}

TEST_CASE("syntax errors carry position and expectation", "[parse]") {
    try {
        parse_model("const int x = ;");
        FAIL("expected a SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line == 1);
        CHECK(e.column == 15);
        CHECK(std::string(e.what()).find("expected") != std::string::npos);
    }
    try {
        parse_model("module m\n  x : [0..3 init 0;\nendmodule");
        FAIL("expected a SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("name and identifier validation", "[parse]") {
    CHECK_THROWS_AS(parse_model("const int a = 1; const double a = 0.5;"), DuplicateName);
    CHECK_THROWS_AS(parse_model("module m x : [0..1] init 0; endmodule module m endmodule"),
                    DuplicateName);
    CHECK_THROWS_AS(parse_model("module m x : [0..zz] init 0; endmodule"), UnboundIdentifier);
    CHECK_THROWS_AS(parse_model("module m x : [0..1] init 2; endmodule"), ModelError);
    // probability expressions may reference constants only
    CHECK_THROWS_AS(
        parse_model("module m x : [0..1] init 0;"
                    " [] x=0 -> x: (x'=1) + 1-x: (x'=0); endmodule"),
        ModelError);
    // one module cannot update another module's variable
    CHECK_THROWS_AS(
        parse_model("module a x : [0..1] init 0; endmodule"
                    " module b y : [0..1] init 0; [] y=0 -> (x'=1); endmodule"),
        ModelError);
    // a branch cannot write the same variable twice
    CHECK_THROWS_AS(
        parse_model("module m x : [0..2] init 0; [] x=0 -> (x'=1) & (x'=2); endmodule"),
        ModelError);
}

TEST_CASE("comments and bool variables", "[parse]") {
    Model m = parse_model(
        "// a tiny model\n"
        "module m\n"
        "  flag : bool init false; // latch\n"
        "  [] !flag -> (flag'=true);\n"
        "endmodule\n");
    REQUIRE(m.modules[0].vars.size() == 1);
    CHECK(m.modules[0].vars[0].is_bool);
    CHECK(m.modules[0].commands[0].label.empty());
}

TEST_CASE("set_constants rebinds and re-evaluates derived constants", "[parse]") {
    Model m = parse_model(
        "const double pPressureFN = 0.05;\n"
        "const double pPressureTP = 1-pPressureFN;\n"
        "const double pGripperFailure = 0.1;\n"
        "const double pGripperOk = 1 - pGripperFailure;\n"
        "module m x : [0..1] init 0;"
        " [] x=0 -> pPressureTP: (x'=1) + pPressureFN: (x'=0); endmodule");

    SECTION("pressure false-negative override") {
        Model m2 = set_constants(m, {{"pPressureFN", Value::of_double(0.071428571)}});
        auto cs = evaluate_constants(m2);
        CHECK(cs["pPressureTP"].as_double() == 1.0 - 0.071428571);
        CHECK(cs["pPressureTP"].as_double() == Catch::Approx(0.928571429).margin(1e-12));
    }
    SECTION("empty override set is the identity") {
        Model m2 = set_constants(m, {});
        CHECK(print_model(m2) == print_model(m));
    }
    SECTION("gripper failure override") {
        Model m2 = set_constants(m, {{"pGripperFailure", Value::of_double(0.02)}});
        auto cs = evaluate_constants(m2);
        CHECK(cs["pGripperOk"].as_double() == 0.98);
    }
    SECTION("errors") {
        CHECK_THROWS_AS(set_constants(m, {{"nope", Value::of_double(0.5)}}), UnknownConstant);
        CHECK_THROWS_AS(set_constants(m, {{"pPressureFN", Value::of_bool(true)}}), KindMismatch);
        CHECK_THROWS_AS(set_constants(m, {{"pPressureFN", Value::of_double(1.5)}}),
                        ProbabilityOutOfRange);
    }
}

TEST_CASE("constant-pair identities hold for arbitrary overrides", "[parse]") {
    Model m = parse_model(
        "const double pGazeFN = 0.05;\n"
        "const double pGazeTP = 1-pGazeFN;\n"
        "module m x : [0..1] init 0;"
        " [] x=0 -> pGazeTP: (x'=1) + pGazeFN: (x'=0); endmodule");
    Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        double r = rng.uniform01();
        auto cs = evaluate_constants(set_constants(m, {{"pGazeFN", Value::of_double(r)}}));
        CHECK(cs["pGazeTP"].as_double() == 1.0 - r);
    }
}

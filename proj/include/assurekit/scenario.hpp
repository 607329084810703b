#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "assurekit/check.hpp"
#include "assurekit/parse.hpp"
#include "assurekit/property.hpp"

namespace assurekit {

/// One refinement stage of the handover model family. The all-false flag
/// combination is the baseline model with resampling sensors and the initial
/// 0.95 sensor estimates; enabling flags applies the published refinements.
struct ScenarioVariant {
    bool one_shot_sensors = false;
    bool gripper_failure = false;
    bool motion_failure = false;
    bool proximity_module = false;
    ConstantSet overrides;

    std::string name() const {
        if (!one_shot_sensors && !gripper_failure && !motion_failure && !proximity_module)
            return "handover_baseline";
        std::string n = "handover";
        n += one_shot_sensors ? "_oneshot" : "_resampling";
        if (gripper_failure) n += "_gripper";
        if (motion_failure) n += "_motion";
        if (proximity_module) n += "_proximity";
        return n;
    }
};

namespace detail {

inline void emit_sensor(std::string& out, const std::string& stem, const std::string& cap,
                        bool one_shot) {
    const std::string sensor = stem + "Sensor";
    const std::string state = sensor + "State";
    const std::string set = sensor + "Set";
    const std::string ok = stem + "Ok";
    const std::string not_ok = stem + "NotOk";
    const std::string truth = stem + "State";
    out += "module " + sensor + "\n";
    out += "  " + state + " : [0..2] init sensorNull;\n";
    out += "  " + set + " : bool init false;\n";
    out += "  [senseGPL] robotState=waitForGPLUpdate & " + truth + "=" + ok + " & !" + set +
           " ->\n";
    out += "    p" + cap + "FN: (" + state + "'=" + not_ok + ") & (" + set + "'=true) +\n";
    out += "    p" + cap + "TP: (" + state + "'=" + ok + ") & (" + set + "'=true);\n";
    out += "  [senseGPL] robotState=waitForGPLUpdate & " + truth + "=" + not_ok + " & !" + set +
           " ->\n";
    out += "    p" + cap + "TN: (" + state + "'=" + not_ok + ") & (" + set + "'=true) +\n";
    out += "    p" + cap + "FP: (" + state + "'=" + ok + ") & (" + set + "'=true);\n";
    if (!one_shot) {
        // resampling: the latch clears on every tick, opening the next round
        out += "  [tick] " + set + " -> (" + set + "'=false) & (" + state + "'=sensorNull);\n";
        out += "  [tick] !" + set + " -> true;\n";
    }
    out += "endmodule\n\n";
}

}  // namespace detail

/// Emits the model text for one variant; flag combinations map to exactly one
/// text. Constant overrides are applied after parsing, not in the text.
inline std::string variant_text(const ScenarioVariant& v) {
    std::string out;
    out += "// " + v.name() + ": robot-to-human object handover\n";
    out += "// tick = 0.1 s; timeout after timeoutTicks ticks; the release\n";
    out += "// decision falls when objectReleaseTimer reaches releaseTicks\n\n";

    out += "const int start = 0;\n";
    out += "const int activatedRobot = 1;\n";
    out += "const int responding = 2;\n";
    out += "const int setGPL = 3;\n";
    out += "const int offTask = 4;\n\n";

    out += "const int waiting = 1100;\n";
    out += "const int moveHandToObjectLocation = 1101;\n";
    out += "const int graspObject = 1102;\n";
    out += "const int moveHandToHandoverLocation = 1103;\n";
    out += "const int informedHumanOfHandoverStart = 1104;\n";
    out += "const int waitForGPLUpdate = 1105;\n";
    out += "const int GPLOk = 1106;\n";
    out += "const int handoverSuccessful = 1107;\n";
    out += "const int handoverUnsuccessful = 1108;\n";
    out += "const int timedOut = 1109;\n";
    out += "const int motionError = 1110;\n";
    out += "const int interactionDone = 1111;\n\n";

    out += "const int nothing = 0;\n";
    out += "const int leg = 1;\n\n";

    out += "const int sensorNull = 0;\n";
    out += "const int gazeOk = 1;\n";
    out += "const int gazeNotOk = 2;\n";
    out += "const int pressureOk = 1;\n";
    out += "const int pressureNotOk = 2;\n";
    out += "const int locationOk = 1;\n";
    out += "const int locationNotOk = 2;\n\n";

    out += "const double pDisengages = 0;\n";
    out += "const double pStaysOnTask = 1-pDisengages;\n\n";

    if (v.one_shot_sensors) {
        // calibrated failure rates, false negatives primary
        out += "const double pGazeFN = 0.00;\n";
        out += "const double pGazeTP = 1-pGazeFN;\n";
        out += "const double pGazeFP = 0.00;\n";
        out += "const double pGazeTN = 1-pGazeFP;\n";
        out += "const double pPressureFN = 0.071428571;\n";
        out += "const double pPressureTP = 1-pPressureFN;\n";
        out += "const double pPressureFP = 0.00;\n";
        out += "const double pPressureTN = 1-pPressureFP;\n";
        out += "const double pLocationFN = 0.030612245;\n";
        out += "const double pLocationTP = 1-pLocationFN;\n";
        out += "const double pLocationFP = 0.00;\n";
        out += "const double pLocationTN = 1-pLocationFP;\n\n";
    } else {
        // first estimates: the sensors are right "most of the time"
        out += "const double pGazeTP = 0.95;\n";
        out += "const double pGazeFN = 1-pGazeTP;\n";
        out += "const double pGazeTN = 0.95;\n";
        out += "const double pGazeFP = 1-pGazeTN;\n";
        out += "const double pPressureTP = 0.95;\n";
        out += "const double pPressureFN = 1-pPressureTP;\n";
        out += "const double pPressureTN = 0.95;\n";
        out += "const double pPressureFP = 1-pPressureTN;\n";
        out += "const double pLocationTP = 0.95;\n";
        out += "const double pLocationFN = 1-pLocationTP;\n";
        out += "const double pLocationTN = 0.95;\n";
        out += "const double pLocationFP = 1-pLocationTN;\n\n";
    }

    if (v.gripper_failure) {
        out += "const double pGripperFailure = 0.02;\n";
        out += "const double pGripperOk = 1 - pGripperFailure;\n\n";
    }
    if (v.motion_failure) {
        out += "const double pMotionFailure = 0.002;\n";
        out += "const double pMotionOk = 1 - pMotionFailure;\n\n";
    }
    if (v.proximity_module) {
        out += "const int proximityOk = 1;\n";
        out += "const int proximityNotOk = 2;\n";
        out += "const double pClose = 0.075;\n";
        out += "const double pFar = 1-pClose;\n\n";
    }

    out += "const int timeoutTicks = 1000;\n";
    out += "const int releaseTicks = 20;\n";
    if (!v.one_shot_sensors) out += "const int sensingRounds = 6;\n";
    out += "\n";

    out += "module human\n";
    out += "  humanState : [0..99] init start;\n";
    out += "  [activateRobot] humanState=start -> (humanState'=activatedRobot);\n";
    out += "  [tick] humanState=activatedRobot -> (humanState'=activatedRobot);\n";
    out += "  [informHumanOfHandoverStart] humanState=activatedRobot -> "
           "(humanState'=responding);\n";
    out += "  [humanIsReady] humanState=responding -> (humanState'=setGPL);\n";
    out += "  [tick] humanState=setGPL -> pDisengages: (humanState'=offTask) + pStaysOnTask: "
           "(humanState'=setGPL);\n";
    out += "  [tick] humanState=offTask -> (humanState'=offTask);\n";
    out += "endmodule\n\n";

    // the verified scenario is the typical use case: gaze, pressure and
    // location are within acceptable bounds throughout
    out += "module gaze\n  gazeState : [0..2] init gazeOk;\nendmodule\n\n";
    out += "module pressure\n  pressureState : [0..2] init pressureOk;\nendmodule\n\n";
    out += "module location\n  locationState : [0..2] init locationOk;\nendmodule\n\n";

    if (v.proximity_module) {
        // observer only: the robot has no proximity guard
        out += "module proximity\n";
        out += "  proximityState : [0..2] init proximityOk;\n";
        out += "  [activateRobot] true -> pClose: (proximityState'=proximityNotOk) + pFar: "
               "(proximityState'=proximityOk);\n";
        out += "  [movingHand] true -> pClose: (proximityState'=proximityNotOk) + pFar: "
               "(proximityState'=proximityOk);\n";
        out += "endmodule\n\n";
    }

    out += "module robot\n";
    out += "  robotState : [1100..1199] init waiting;\n";
    out += "  handContents : [0..1] init nothing;\n";
    out += "  GPLWasOk : bool init false;\n";
    if (v.motion_failure) {
        out += "  [activateRobot] robotState=waiting -> pMotionOk: "
               "(robotState'=moveHandToObjectLocation) + pMotionFailure: "
               "(robotState'=motionError);\n";
    } else {
        out += "  [activateRobot] robotState=waiting -> (robotState'=moveHandToObjectLocation);\n";
    }
    out += "  [movingHand] robotState=moveHandToObjectLocation -> (robotState'=graspObject) & "
           "(handContents'=leg);\n";
    out += "  [graspingObject] robotState=graspObject -> "
           "(robotState'=moveHandToHandoverLocation);\n";
    out += "  [informHumanOfHandoverStart] robotState=moveHandToHandoverLocation -> "
           "(robotState'=informedHumanOfHandoverStart);\n";
    out += "  [humanIsReady] robotState=informedHumanOfHandoverStart -> "
           "(robotState'=waitForGPLUpdate);\n";
    out += "  [GPLOkSet] robotState=waitForGPLUpdate & humanState=setGPL & "
           "gazeSensorState=gazeOk & pressureSensorState=pressureOk & "
           "locationSensorState=locationOk -> (robotState'=GPLOk) & (GPLWasOk'=true);\n";
    out += "  [tick] robotState=waitForGPLUpdate & humanState=setGPL & "
           "(gazeSensorState=gazeNotOk | pressureSensorState=pressureNotOk | "
           "locationSensorState=locationNotOk) -> (robotState'=waitForGPLUpdate);\n";
    out += "  [tick] robotState=waitForGPLUpdate & humanState=offTask -> "
           "(robotState'=interactionDone);\n";
    out += "  [tick] robotState=GPLOk & objectReleaseTimer<releaseTicks -> "
           "(robotState'=GPLOk);\n";
    if (v.gripper_failure) {
        out += "  [tick] robotState=GPLOk & objectReleaseTimer=releaseTicks -> pGripperOk: "
               "(handContents'=nothing) & (robotState'=handoverSuccessful) + pGripperFailure: "
               "(handContents'=nothing) & (robotState'=handoverUnsuccessful);\n";
    } else {
        out += "  [tick] robotState=GPLOk & objectReleaseTimer=releaseTicks -> "
               "(handContents'=nothing) & (robotState'=handoverSuccessful);\n";
    }
    if (v.one_shot_sensors) {
        out += "  [timeout] robotState=waitForGPLUpdate & t=timeoutTicks -> "
               "(robotState'=timedOut);\n";
    } else {
        out += "  [timeout] robotState=waitForGPLUpdate & ((humanState=setGPL & "
               "sensingRoundsUsed=sensingRounds & !gazeSensorSet) | t=timeoutTicks) -> "
               "(robotState'=timedOut);\n";
    }
    out += "endmodule\n\n";

    detail::emit_sensor(out, "gaze", "Gaze", v.one_shot_sensors);
    detail::emit_sensor(out, "pressure", "Pressure", v.one_shot_sensors);
    detail::emit_sensor(out, "location", "Location", v.one_shot_sensors);

    out += "module timekeeper\n";
    out += "  t : [0..timeoutTicks] init 0;\n";
    out += "  objectReleaseTimer : [0..releaseTicks] init 0;\n";
    if (!v.one_shot_sensors)
        out += "  sensingRoundsUsed : [0..sensingRounds] init 0;\n";
    out += "  [tick] robotState=waitForGPLUpdate & t<timeoutTicks -> (t'=t+1);\n";
    out += "  [tick] robotState=GPLOk & objectReleaseTimer<releaseTicks -> "
           "(objectReleaseTimer'=objectReleaseTimer+1);\n";
    out += "  [tick] robotState=GPLOk & objectReleaseTimer=releaseTicks -> true;\n";
    if (!v.one_shot_sensors)
        out += "  [senseGPL] sensingRoundsUsed<sensingRounds & t<timeoutTicks -> "
               "(sensingRoundsUsed'=sensingRoundsUsed+1);\n";
    out += "endmodule\n";
    return out;
}

/// Generates the variant's model, with the variant's constant overrides
/// applied on top of the stage defaults.
inline Model build_variant(const ScenarioVariant& v) {
    Model m = parse_model(variant_text(v), v.name());
    if (!v.overrides.empty()) m = set_constants(m, v.overrides);
    return m;
}

// ---------------------------------------------------------------------------
// requirement library

struct RequirementSpec {
    std::string id;
    std::string statement;
    std::optional<PropertyQuery> property;
    std::string monitor_id;            // coverage-table monitor
    std::string assurance_estimator;   // "success", a monitor id, or "" (none)
    bool formal = false;
    bool simulation = false;
    bool experiment = false;
};

/// All ten requirement specs (1a, 1b, 2-6, 5b, 7, 8).
inline std::vector<RequirementSpec> requirement_library() {
    auto q = [](const std::string& text) { return parse_property(text); };
    const std::string success = "robotState=handoverSuccessful";
    const std::string handed_over =
        "(robotState=handoverSuccessful | robotState=handoverUnsuccessful)";
    const std::string sensors_ok_truth =
        "(gazeState=gazeOk & pressureState=pressureOk & locationState=locationOk)";

    std::vector<RequirementSpec> reqs;
    reqs.push_back({"1a", "At least 95% of handover attempts should be completed successfully.",
                    q("P>=0.95 [ F " + success + " ]"), "M1", "success", true, true, true});
    reqs.push_back({"1b", "At least 60% of handover attempts should be completed successfully.",
                    q("P>=0.6 [ F " + success + " ]"), "M1", "success", true, true, true});
    reqs.push_back({"2", "If the human is not ready, the robot shall not hand over the object.",
                    q("P=? [ G (!" + sensors_ok_truth + " => !" + handed_over + ") ]"), "M2",
                    "M2", true, true, true});
    // the simulation estimate reuses the refined success monitor: its pass
    // rate estimates the same quantity the formal response property measures
    reqs.push_back({"3", "If the human is ready, the robot shall hand over the object.",
                    q("P=? [ G (" + sensors_ok_truth + " => F " + success + ") ]"), "M3", "M1",
                    true, true, true});
    reqs.push_back({"4", "The robot always reaches a decision within a threshold of time.",
                    q("P=? [ G (robotState=GPLOk => F (" + handed_over +
                      " & objectReleaseTimer<=20)) ]"),
                    "M4", "M4", true, true, true});
    reqs.push_back({"5",
                    "The robot shall always either time out, decide to release the object, or "
                    "decide not to release the object.",
                    q("P=? [ G ((F robotState=handoverSuccessful) | (F "
                      "robotState=handoverUnsuccessful) | (F (robotState=waitForGPLUpdate U "
                      "robotState=timedOut))) ]"),
                    "M5", "M5", true, true, true});
    reqs.push_back({"5b",
                    "As requirement 5, admitting the motion-planner failure as a terminal "
                    "outcome.",
                    q("P=? [ G ((F robotState=handoverSuccessful) | (F "
                      "robotState=handoverUnsuccessful) | (F (robotState=waitForGPLUpdate U "
                      "robotState=timedOut)) | (F robotState=motionError)) ]"),
                    "M5", "", true, false, false});
    reqs.push_back({"6", "The robot shall not close its hand when the human is too close.",
                    q("P=? [ G ((robotState=moveHandToObjectLocation & "
                      "proximityState=proximityNotOk) => !X robotState=graspObject) ]"),
                    "M6", "M6", true, true, true});
    reqs.push_back({"7", "The robot shall start in restricted speed.", std::nullopt, "M7", "M7",
                    false, true, true});
    reqs.push_back({"8",
                    "If the robot is within 10 cm of the human, the robot's hand speed is less "
                    "than 250 mm/s.",
                    std::nullopt, "M8", "M8", false, true, true});
    return reqs;
}

/// Property-file rendition of the library, for props/reqs.qry.
inline std::string requirement_properties_text() {
    std::string out = "// handover requirement properties\n";
    for (const auto& r : requirement_library()) {
        if (!r.property) continue;
        out += r.property->text + "   // req " + r.id + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// calibration dataset

struct ModeCount {
    std::int64_t occurrences = 0;
    std::int64_t opportunities = 0;
};

struct CalibrationDataset {
    std::int64_t tests = 0;
    std::int64_t successes = 0;
    std::map<std::string, ModeCount> modes;
};

inline CalibrationDataset parse_calibration(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("tests") || !j.contains("successes") ||
        !j.contains("modes") || !j["modes"].is_object())
        throw SchemaError("calibration file must be {tests, successes, modes{...}}");
    CalibrationDataset ds;
    if (!j["tests"].is_number_integer() || !j["successes"].is_number_integer())
        throw SchemaError("calibration counts must be integers");
    ds.tests = j["tests"].get<std::int64_t>();
    ds.successes = j["successes"].get<std::int64_t>();
    if (ds.tests < 1) throw SchemaError("calibration needs at least one test");
    if (ds.successes < 0 || ds.successes > ds.tests)
        throw CountInconsistency("successes outside [0, tests]");
    for (const auto& [name, mode] : j["modes"].items()) {
        if (!mode.is_object() || !mode.contains("occ") || !mode.contains("opp") ||
            !mode["occ"].is_number_integer() || !mode["opp"].is_number_integer())
            throw SchemaError("mode '" + name + "' must be {occ, opp} with integer counts");
        ModeCount mc{mode["occ"].get<std::int64_t>(), mode["opp"].get<std::int64_t>()};
        if (mc.occurrences < 0 || mc.opportunities < 0)
            throw CountInconsistency("negative count in mode '" + name + "'");
        if (mc.occurrences > mc.opportunities)
            throw CountInconsistency("mode '" + name + "' has occurrences > opportunities");
        if (mc.opportunities > ds.tests)
            throw CountInconsistency("mode '" + name + "' has opportunities > tests");
        ds.modes.emplace(name, mc);
    }
    return ds;
}

inline CalibrationDataset load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open calibration file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("calibration file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_calibration(j);
}

/// The user-experiment counts from the calibration campaign (100 tests).
inline std::string default_experiments_json() {
    return R"({
  "tests": 100,
  "successes": 88,
  "modes": {
    "grip": {"occ": 2, "opp": 100},
    "gaze_fn": {"occ": 0, "opp": 98},
    "pressure_fn": {"occ": 7, "opp": 98},
    "location_fn": {"occ": 3, "opp": 98},
    "runtime_error": {"occ": 0, "opp": 100}
  }
}
)";
}

}  // namespace assurekit

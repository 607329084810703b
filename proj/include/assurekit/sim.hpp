#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "assurekit/errors.hpp"
#include "assurekit/rng.hpp"

namespace assurekit {

// ---------------------------------------------------------------------------
// abstract tests

enum class GazeAction { Ok, Away };
enum class PressureAction { Pull, None };
enum class LocationAction { OnObject, Off };

struct HumanAction {
    enum class Type { ActivateRobot, WaitForHandoverAnnounce, SignalReady, ApplyGPL, Disengage };
    Type type = Type::ActivateRobot;
    GazeAction gaze = GazeAction::Ok;
    PressureAction pressure = PressureAction::Pull;
    LocationAction location = LocationAction::OnObject;
};

/// Ordered high-level human actions; ActivateRobot first, at most one
/// Disengage.
struct AbstractTest {
    std::vector<HumanAction> actions;

    bool has(HumanAction::Type t) const {
        for (const auto& a : actions)
            if (a.type == t) return true;
        return false;
    }
    /// Index of the Disengage action, or -1.
    int disengage_at() const {
        for (std::size_t i = 0; i < actions.size(); ++i)
            if (actions[i].type == HumanAction::Type::Disengage) return static_cast<int>(i);
        return -1;
    }
    std::optional<HumanAction> gpl() const {
        for (const auto& a : actions)
            if (a.type == HumanAction::Type::ApplyGPL) return a;
        return std::nullopt;
    }
};

inline void validate_abstract(const AbstractTest& t) {
    if (t.actions.empty() || t.actions.front().type != HumanAction::Type::ActivateRobot)
        throw InvalidParams("abstract test must start with ActivateRobot");
    int disengages = 0;
    for (const auto& a : t.actions)
        if (a.type == HumanAction::Type::Disengage) ++disengages;
    if (disengages > 1) throw InvalidParams("abstract test has more than one Disengage");
}

namespace detail {

// The generator walks this little transition system of the interaction;
// strategies choose the ApplyGPL parameters and disengagement point.
//   Idle -activate-> Activated -wait-> Announced -ready-> Ready -apply-> Done
inline AbstractTest walk_interaction(GazeAction g, PressureAction p, LocationAction l,
                                     int disengage_slot /* -1, or 1..3 */) {
    AbstractTest t;
    t.actions.push_back({HumanAction::Type::ActivateRobot});
    for (int slot = 1; slot <= 3; ++slot) {
        if (slot == disengage_slot) {
            t.actions.push_back({HumanAction::Type::Disengage});
            return t;
        }
        switch (slot) {
            case 1: t.actions.push_back({HumanAction::Type::WaitForHandoverAnnounce}); break;
            case 2: t.actions.push_back({HumanAction::Type::SignalReady}); break;
            case 3: t.actions.push_back({HumanAction::Type::ApplyGPL, g, p, l}); break;
        }
    }
    return t;
}

}  // namespace detail

/// Generation strategies. Mixed draws a strategy per test from the weights.
struct GenerationStrategy {
    std::string name = "typical";  // typical | not_ready | disengage | mixed
    std::map<std::string, double> weights;
};

inline std::vector<AbstractTest> generate_abstract_tests(const GenerationStrategy& strategy,
                                                         std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidParams("need at least one test");
    if (strategy.name == "mixed") {
        double sum = 0.0;
        for (const auto& [name, w] : strategy.weights) {
            if (w < 0.0) throw InvalidWeights("negative weight for '" + name + "'");
            if (name != "typical" && name != "not_ready" && name != "disengage")
                throw InvalidWeights("unknown strategy '" + name + "' in weights");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw InvalidWeights("mixed weights sum to " + std::to_string(sum) + ", expected 1");
    } else if (strategy.name != "typical" && strategy.name != "not_ready" &&
               strategy.name != "disengage") {
        throw InvalidParams("unknown strategy '" + strategy.name + "'");
    }

    Rng rng(splitmix64(seed));
    std::vector<AbstractTest> tests;
    tests.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string pick = strategy.name;
        if (pick == "mixed") {
            double u = rng.uniform01(), acc = 0.0;
            pick = strategy.weights.rbegin()->first;
            for (const auto& [name, w] : strategy.weights) {
                acc += w;
                if (u < acc) {
                    pick = name;
                    break;
                }
            }
        }
        if (pick == "typical") {
            tests.push_back(detail::walk_interaction(GazeAction::Ok, PressureAction::Pull,
                                                     LocationAction::OnObject, -1));
        } else if (pick == "not_ready") {
            // corrupt a non-empty subset of the three GPL components
            auto mask = static_cast<unsigned>(1 + rng.below(7));
            tests.push_back(detail::walk_interaction(
                (mask & 1u) ? GazeAction::Away : GazeAction::Ok,
                (mask & 2u) ? PressureAction::None : PressureAction::Pull,
                (mask & 4u) ? LocationAction::Off : LocationAction::OnObject, -1));
        } else {
            auto slot = static_cast<int>(1 + rng.below(3));
            tests.push_back(detail::walk_interaction(GazeAction::Ok, PressureAction::Pull,
                                                     LocationAction::OnObject, slot));
        }
        validate_abstract(tests.back());
    }
    return tests;
}

// ---------------------------------------------------------------------------
// concretization

struct ScenarioParams {
    double step_s = 0.1;
    double timeout_s = 100.0;
    double decision_window_s = 2.0;

    double force_lo_n = 1.0;   // lowered from 5 N to reproduce gentle pulls
    double force_hi_n = 15.0;
    double pressure_threshold_n = 2.0;
    double track_loss_rate = 3.0 / 98.0;
    double grip_failure_rate = 0.02;
    double motion_error_rate = 0.002;
    double reset_overspeed_rate = 0.126;

    double gaze_cone_deg = 30.0;
    double approach_min_distance_mm = 150.0;
    double close_threshold_mm = 100.0;
    double speed_limit_mm_s = 250.0;
    double reset_overspeed_mm_s = 300.0;
    double normal_speed_mm_s = 150.0;
    double reset_window_s = 0.5;
};

inline void validate_params(const ScenarioParams& p) {
    auto prob = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidParams(std::string(name) + " must lie in [0,1]");
    };
    prob(p.track_loss_rate, "track_loss_rate");
    prob(p.grip_failure_rate, "grip_failure_rate");
    prob(p.motion_error_rate, "motion_error_rate");
    prob(p.reset_overspeed_rate, "reset_overspeed_rate");
    if (!(p.force_lo_n < p.force_hi_n)) throw InvalidParams("force bounds need lo < hi");
    if (p.force_lo_n < 0.0) throw InvalidParams("pull force cannot be negative");
    if (p.approach_min_distance_mm <= 0.0)
        throw InvalidParams("approach_min_distance_mm must be positive");
    if (p.step_s <= 0.0 || p.timeout_s <= 0.0 || p.decision_window_s <= 0.0)
        throw InvalidParams("timing parameters must be positive");
}

struct ConcreteTest {
    AbstractTest abstract;
    double pull_force_n = 0.0;
    double head_angle_deg = 0.0;
    bool track_loss = false;
    double approach_min_distance_mm = 150.0;
    bool reset_overspeed = false;
    bool grip_fails = false;
    bool motion_error = false;
    std::uint64_t rng_seed = 0;
};

/// Instantiates low-level parameters for one abstract test. Deterministic in
/// (abstract, params, seed); the sampling order below is part of the format.
inline ConcreteTest concretize(const AbstractTest& abstract, const ScenarioParams& params,
                               std::uint64_t seed) {
    validate_abstract(abstract);
    validate_params(params);
    Rng rng(splitmix64(seed));
    ConcreteTest c;
    c.abstract = abstract;
    c.pull_force_n = rng.uniform(params.force_lo_n, params.force_hi_n);
    auto gpl = abstract.gpl();
    bool gaze_ok = gpl && gpl->gaze == GazeAction::Ok;
    // within the cone for a correct gaze, well outside it otherwise
    c.head_angle_deg = gaze_ok ? rng.uniform(0.0, 0.8 * params.gaze_cone_deg)
                               : params.gaze_cone_deg + rng.uniform(10.0, 40.0);
    c.track_loss = rng.bernoulli(params.track_loss_rate);
    c.grip_fails = rng.bernoulli(params.grip_failure_rate);
    c.motion_error = rng.bernoulli(params.motion_error_rate);
    c.reset_overspeed = rng.bernoulli(params.reset_overspeed_rate);
    c.approach_min_distance_mm = params.approach_min_distance_mm;
    c.rng_seed = rng.next_u64();
    return c;
}

// ---------------------------------------------------------------------------
// traces and verdicts

enum class Outcome { Success, NotReleased, Timeout, GripFailure, RuntimeError, Disengaged };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::NotReleased: return "not_released";
        case Outcome::Timeout: return "timeout";
        case Outcome::GripFailure: return "grip_failure";
        case Outcome::RuntimeError: return "runtime_error";
        case Outcome::Disengaged: return "disengaged";
    }
    return "?";
}

struct TraceStep {
    int step = 0;
    double time_s = 0.0;
    std::string human_action;  // empty while idle
    std::string robot_state;
    bool gaze_ok = false;
    double pressure_force_n = 0.0;
    bool location_tracked = false;
    double hand_speed_mm_s = 0.0;
    double human_robot_distance_mm = 0.0;
    std::string event;  // empty for plain steps
};

struct TestTrace {
    std::vector<TraceStep> steps;
    Outcome outcome = Outcome::Timeout;

    int event_step(const std::string& event) const {
        for (const auto& s : steps)
            if (s.event == event) return s.step;
        return -1;
    }
    const TraceStep* at_event(const std::string& event) const {
        for (const auto& s : steps)
            if (s.event == event) return &s;
        return nullptr;
    }
};

struct AssertionVerdict {
    enum class Result { Pass, Fail, Unresolved };
    std::string monitor;
    bool triggered = false;
    Result result = Result::Unresolved;
    int trigger_step = -1;
    std::string detail;
};

inline const char* verdict_name(AssertionVerdict::Result r) {
    switch (r) {
        case AssertionVerdict::Result::Pass: return "pass";
        case AssertionVerdict::Result::Fail: return "fail";
        case AssertionVerdict::Result::Unresolved: return "unresolved";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// the desk-scale handover run

namespace detail {

/// Fixed step schedule of the nominal interaction (indices at 0.1 s).
struct Schedule {
    int reset_end = 5;       // reset window covers steps [0, reset_end)
    int activate = 5;
    int reach_end = 16;      // moveHandToObjectLocation during [activate+1, reach_end)
    int grasp_start = 16;    // M1 precondition; motion planning runs here
    int grasped = 17;
    int carry_end = 28;      // moveHandToHandoverLocation during [grasped+1, carry_end)
    int announce = 28;
    int ready = 30;
    int apply = 32;
    int sensing_steps = 5;   // sensors latch 0.5 s after the GPL update
};

}  // namespace detail

/// Steps the kinematic scenario and runs all assertion monitors online.
/// A runtime error is a simulated outcome here, not a failure of the call.
inline std::pair<TestTrace, std::vector<AssertionVerdict>> run_test(const ConcreteTest& test,
                                                                    const ScenarioParams& params) {
    validate_params(params);
    validate_abstract(test.abstract);
    detail::Schedule sched;
    Rng rng(splitmix64(test.rng_seed));

    const int timeout_step = static_cast<int>(std::lround(params.timeout_s / params.step_s));
    const int decision_steps =
        static_cast<int>(std::lround(params.decision_window_s / params.step_s));
    const int release_steps = 10;  // the gripper opens over 1.0 s

    auto gpl = test.abstract.gpl();
    const int disengage_slot = test.abstract.disengage_at();
    // leaving before the ready signal or instead of the GPL update
    const int disengage_step =
        disengage_slot == -1 ? -1 : (disengage_slot <= 2 ? sched.ready : sched.apply);
    const bool will_signal_ready = test.abstract.has(HumanAction::Type::SignalReady);
    const bool will_apply = gpl.has_value();
    const int drop_step = sched.grasped + 1 + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(sched.carry_end - sched.grasped - 1)));

    TestTrace trace;
    std::vector<AssertionVerdict> verdicts;

    // ---- online monitors ------------------------------------------------
    // Small state machines fed one step record at a time. The offline
    // replay in replay_verdicts() recomputes these by direct scans.
    struct MonitorState {
        bool triggered = false;
        int trigger_step = -1;
        std::optional<AssertionVerdict::Result> result;
        std::string detail;
        void trigger(int step) {
            if (!triggered) {
                triggered = true;
                trigger_step = step;
            }
        }
        void resolve(AssertionVerdict::Result r, const std::string& d = "") {
            if (triggered && !result) {
                result = r;
                detail = d;
            }
        }
    };
    MonitorState m1, mgrip, m2, m3, m4, m5, m6, m7, m8;

    // ---- simulation state ------------------------------------------------
    std::string robot_state = "waiting";
    bool object_in_hand = false;
    bool dropped = false;
    bool human_present = true;
    bool gpl_applied = false;
    bool sensing_done = false;
    bool sensors_all_ok = false;
    bool released = false;
    int apply_step = -1, sensing_done_step = -1, decision_step = -1, release_done_step = -1;
    std::optional<Outcome> outcome;

    auto sensor_gaze = [&]() {
        return gpl_applied && human_present && gpl->gaze == GazeAction::Ok &&
               test.head_angle_deg <= params.gaze_cone_deg;
    };
    auto applied_force = [&]() {
        return (gpl_applied && human_present && gpl->pressure == PressureAction::Pull)
                   ? test.pull_force_n
                   : 0.0;
    };
    auto sensor_location = [&]() {
        return gpl_applied && human_present && gpl->location == LocationAction::OnObject &&
               !test.track_loss;
    };

    auto distance_at = [&](int step) {
        // the hand starts away from the human and closes to the approach
        // minimum while carrying the object to the handover location
        const double far = 700.0, reach = 500.0;
        if (step <= sched.activate) return far;
        if (step < sched.grasp_start) {
            double f = double(step - sched.activate) / double(sched.grasp_start - sched.activate);
            return far + f * (reach - far);
        }
        if (step <= sched.grasped) return reach;
        if (step < sched.carry_end) {
            double f = double(step - sched.grasped) / double(sched.carry_end - sched.grasped);
            return reach + f * (test.approach_min_distance_mm - reach);
        }
        return test.approach_min_distance_mm;
    };
    auto speed_at = [&](int step) {
        if (step < sched.reset_end)
            return test.reset_overspeed ? params.reset_overspeed_mm_s : params.normal_speed_mm_s;
        if (step <= sched.activate) return 0.0;
        if (step < sched.carry_end) return params.normal_speed_mm_s;
        if (released || robot_state == "GPLOk") return 50.0;  // gripper motion only
        return 0.0;
    };

    for (int step = 0; step <= timeout_step; ++step) {
        TraceStep row;
        row.step = step;
        row.time_s = step * params.step_s;

        // human actions on the fixed schedule
        if (step == sched.activate) {
            row.human_action = "activateRobot";
            row.event = "activated";
            robot_state = "moveHandToObjectLocation";
            m4.trigger(step);  // the decision window spans the attempt
        } else if (step == disengage_step && human_present && !dropped) {
            row.human_action = "disengage";
            row.event = "human_disengaged";
            human_present = false;
        } else if (step == sched.ready && will_signal_ready && human_present && !dropped) {
            row.human_action = "signalReady";
            row.event = "human_ready";
            if (robot_state == "informedHumanOfHandoverStart") robot_state = "waitForGPLUpdate";
        } else if (step == sched.apply && will_apply && human_present && !dropped &&
                   robot_state == "waitForGPLUpdate") {
            row.human_action = "applyGPL";
            row.event = "gpl_applied";
            gpl_applied = true;
            apply_step = step;
        }

        if (step == 0) {
            row.event = "test_start";
            m5.trigger(step);
            m7.trigger(step);
        }

        // robot phase transitions
        if (step == sched.grasp_start && robot_state == "moveHandToObjectLocation") {
            robot_state = "graspObject";
            if (row.event.empty()) row.event = "grasp_start";
            m1.trigger(step);
            if (test.motion_error) {
                // the motion pipeline for the grasp-and-carry cannot be
                // reached; the control code has no handler for this
                row.event = "runtime_error";
                row.robot_state = "runtimeError";
                row.gaze_ok = sensor_gaze();
                row.pressure_force_n = applied_force();
                row.location_tracked = sensor_location();
                row.hand_speed_mm_s = 0.0;
                row.human_robot_distance_mm = distance_at(step);
                trace.steps.push_back(row);
                outcome = Outcome::RuntimeError;
                break;
            }
        } else if (step == sched.grasped && robot_state == "graspObject") {
            robot_state = "moveHandToHandoverLocation";
            object_in_hand = true;
            if (row.event.empty()) row.event = "grasped";
            mgrip.trigger(step);
        } else if (step == sched.announce && robot_state == "moveHandToHandoverLocation") {
            robot_state = "informedHumanOfHandoverStart";
            if (row.event.empty()) row.event = "announced";
        }

        // grip failure drops the object somewhere along the carry
        if (test.grip_fails && object_in_hand && !dropped && step == drop_step) {
            dropped = true;
            object_in_hand = false;
            row.event = "object_dropped";
            row.robot_state = "objectDropped";
            row.gaze_ok = sensor_gaze();
            row.pressure_force_n = applied_force();
            row.location_tracked = sensor_location();
            row.hand_speed_mm_s = speed_at(step);
            row.human_robot_distance_mm = distance_at(step);
            trace.steps.push_back(row);
            m1.resolve(AssertionVerdict::Result::Fail, "object contact lost before sensing");
            mgrip.resolve(AssertionVerdict::Result::Fail, "object fell from the hand");
            outcome = Outcome::GripFailure;
            break;
        }

        // sensing window: the three conditions latch one-shot at its end
        if (gpl_applied && !sensing_done && step == apply_step + sched.sensing_steps) {
            sensing_done = true;
            sensing_done_step = step;
            bool g = sensor_gaze(), l = sensor_location();
            bool p = applied_force() >= params.pressure_threshold_n;
            sensors_all_ok = g && p && l;
            row.event = "sensing_done";
            if (sensors_all_ok) {
                m3.trigger(step);
            } else {
                m2.trigger(step);
                m1.resolve(AssertionVerdict::Result::Fail, "sensor conditions not met");
            }
        }

        // decision: release as soon as all conditions latched ok, otherwise
        // declare no release when the decision window closes
        if (sensing_done && decision_step == -1) {
            if (sensors_all_ok && step == sensing_done_step + 1) {
                decision_step = step;
                robot_state = "GPLOk";
                row.event = "decision_release";
                release_done_step = step + release_steps;
            } else if (!sensors_all_ok && step == apply_step + decision_steps) {
                decision_step = step;
                robot_state = "notReleased";
                row.event = "decision_no_release";
            }
        }
        if (release_done_step != -1 && step == release_done_step && !released) {
            released = true;
            robot_state = "handoverSuccessful";
            row.event = "released";
        }

        // proximity monitors
        double dist = distance_at(step);
        double speed = speed_at(step);
        bool hand_closing = robot_state == "graspObject";
        if (hand_closing && dist < params.close_threshold_mm) {
            m6.trigger(step);
            m6.resolve(AssertionVerdict::Result::Fail, "hand closed with the human too close");
        }
        if (dist < params.close_threshold_mm) {
            m8.trigger(step);
            if (speed >= params.speed_limit_mm_s)
                m8.resolve(AssertionVerdict::Result::Fail, "overspeed inside 10 cm");
        }
        if (step < sched.reset_end && speed > params.speed_limit_mm_s)
            m7.resolve(AssertionVerdict::Result::Fail, "overspeed during reset");

        row.robot_state = robot_state;
        row.gaze_ok = sensor_gaze();
        row.pressure_force_n = applied_force();
        row.location_tracked = sensor_location();
        row.hand_speed_mm_s = speed;
        row.human_robot_distance_mm = dist;
        trace.steps.push_back(row);

        if (released) {
            outcome = Outcome::Success;
            break;
        }
        if (decision_step != -1 && !sensors_all_ok) {
            outcome = Outcome::NotReleased;
            break;
        }
        if (step == timeout_step) {
            trace.steps.back().event = "timed_out";
            trace.steps.back().robot_state = "timedOut";
            outcome = human_present ? Outcome::Timeout : Outcome::Disengaged;
        }
    }

    trace.outcome = *outcome;

    // ---- final monitor resolution ----------------------------------------
    if (m1.triggered && !m1.result) {
        if (trace.outcome == Outcome::Success)
            m1.resolve(AssertionVerdict::Result::Pass);
        else if (trace.outcome == Outcome::RuntimeError)
            m1.detail = "aborted by runtime error";  // stays unresolved
        else if (!sensing_done)
            m1.detail = "sensing never completed";  // stays unresolved
        else
            m1.resolve(AssertionVerdict::Result::Fail, "object was not released");
    }
    mgrip.resolve(AssertionVerdict::Result::Pass);
    m2.resolve(released ? AssertionVerdict::Result::Fail : AssertionVerdict::Result::Pass,
               released ? "released without the conditions met" : "");
    m3.resolve(released ? AssertionVerdict::Result::Pass : AssertionVerdict::Result::Fail,
               released ? "" : "conditions met but the object was not released");
    if (m4.triggered) {
        if (trace.outcome == Outcome::RuntimeError)
            m4.resolve(AssertionVerdict::Result::Fail, "attempt ended without a decision");
        else if (decision_step != -1 &&
                 (decision_step - sensing_done_step) * params.step_s > params.decision_window_s)
            m4.resolve(AssertionVerdict::Result::Fail, "decision after the window");
        else
            m4.resolve(AssertionVerdict::Result::Pass);
    }
    m5.resolve(trace.outcome == Outcome::RuntimeError ? AssertionVerdict::Result::Fail
                                                      : AssertionVerdict::Result::Pass,
               trace.outcome == Outcome::RuntimeError ? "no release/no-release/timeout verdict"
                                                      : "");
    m6.resolve(AssertionVerdict::Result::Pass);
    m7.resolve(AssertionVerdict::Result::Pass);
    m8.resolve(AssertionVerdict::Result::Pass);

    auto emit = [&](const char* id, const MonitorState& m) {
        AssertionVerdict v;
        v.monitor = id;
        v.triggered = m.triggered;
        v.trigger_step = m.trigger_step;
        v.result = m.triggered
                       ? m.result.value_or(AssertionVerdict::Result::Unresolved)
                       : AssertionVerdict::Result::Unresolved;
        v.detail = m.detail;
        verdicts.push_back(std::move(v));
    };
    emit("M1", m1);
    emit("Mgrip", mgrip);
    emit("M2", m2);
    emit("M3", m3);
    emit("M4", m4);
    emit("M5", m5);
    emit("M6", m6);
    emit("M7", m7);
    emit("M8", m8);
    return {std::move(trace), std::move(verdicts)};
}

// ---------------------------------------------------------------------------
// offline replay

/// Recomputes every verdict from the recorded trace by direct scans, sharing
/// no state with the online monitors. Used to cross-check them.
inline std::vector<AssertionVerdict> replay_verdicts(const TestTrace& trace,
                                                     const ScenarioParams& params) {
    std::vector<AssertionVerdict> out;
    using R = AssertionVerdict::Result;
    auto push = [&](const std::string& id, bool triggered, int at, R result,
                    const std::string& detail = "") {
        AssertionVerdict v;
        v.monitor = id;
        v.triggered = triggered;
        v.trigger_step = triggered ? at : -1;
        v.result = triggered ? result : R::Unresolved;
        v.detail = detail;
        out.push_back(std::move(v));
    };

    const int grasp_start = trace.event_step("grasp_start") != -1
                                ? trace.event_step("grasp_start")
                                : trace.event_step("runtime_error");
    const int grasped = trace.event_step("grasped");
    const int dropped = trace.event_step("object_dropped");
    const int sensing = trace.event_step("sensing_done");
    const int released = trace.event_step("released");
    const int decision = std::max(trace.event_step("decision_release"),
                                  trace.event_step("decision_no_release"));
    const bool runtime_error = trace.outcome == Outcome::RuntimeError;

    bool sensors_ok = false;
    if (sensing != -1) {
        const TraceStep* row = trace.at_event("sensing_done");
        sensors_ok = row->gaze_ok && row->location_tracked &&
                     row->pressure_force_n >= params.pressure_threshold_n;
    }

    // M1
    if (grasp_start == -1) {
        push("M1", false, -1, R::Unresolved);
    } else if (dropped != -1) {
        push("M1", true, grasp_start, R::Fail, "object contact lost before sensing");
    } else if (runtime_error) {
        push("M1", true, grasp_start, R::Unresolved, "aborted by runtime error");
    } else if (sensing == -1) {
        push("M1", true, grasp_start, R::Unresolved, "sensing never completed");
    } else if (!sensors_ok) {
        push("M1", true, grasp_start, R::Fail, "sensor conditions not met");
    } else {
        push("M1", true, grasp_start, released != -1 ? R::Pass : R::Fail,
             released != -1 ? "" : "object was not released");
    }
    // Mgrip
    if (grasped == -1)
        push("Mgrip", false, -1, R::Unresolved);
    else
        push("Mgrip", true, grasped, dropped == -1 ? R::Pass : R::Fail,
             dropped == -1 ? "" : "object fell from the hand");
    // M2 / M3
    if (sensing != -1 && !sensors_ok)
        push("M2", true, sensing, released == -1 ? R::Pass : R::Fail,
             released == -1 ? "" : "released without the conditions met");
    else
        push("M2", false, -1, R::Unresolved);
    if (sensing != -1 && sensors_ok)
        push("M3", true, sensing, released != -1 ? R::Pass : R::Fail,
             released != -1 ? "" : "conditions met but the object was not released");
    else
        push("M3", false, -1, R::Unresolved);
    // M4
    const int activated = trace.event_step("activated");
    if (activated == -1) {
        push("M4", false, -1, R::Unresolved);
    } else if (runtime_error) {
        push("M4", true, activated, R::Fail, "attempt ended without a decision");
    } else if (decision != -1 && sensing != -1 &&
               (decision - sensing) * params.step_s > params.decision_window_s) {
        push("M4", true, activated, R::Fail, "decision after the window");
    } else {
        push("M4", true, activated, R::Pass);
    }
    // M5
    push("M5", true, 0, runtime_error ? R::Fail : R::Pass,
         runtime_error ? "no release/no-release/timeout verdict" : "");
    // M6
    {
        bool triggered = false, failed = false;
        int at = -1;
        for (const auto& s : trace.steps) {
            if (s.robot_state == "graspObject" &&
                s.human_robot_distance_mm < params.close_threshold_mm) {
                if (!triggered) at = s.step;
                triggered = true;
                failed = true;
            }
        }
        if (triggered)
            push("M6", true, at, failed ? R::Fail : R::Pass,
                 failed ? "hand closed with the human too close" : "");
        else
            push("M6", false, -1, R::Unresolved);
    }
    // M7
    {
        bool failed = false;
        for (const auto& s : trace.steps)
            if (s.time_s < params.reset_window_s && s.hand_speed_mm_s > params.speed_limit_mm_s)
                failed = true;
        push("M7", true, 0, failed ? R::Fail : R::Pass, failed ? "overspeed during reset" : "");
    }
    // M8
    {
        bool triggered = false, failed = false;
        int at = -1;
        for (const auto& s : trace.steps) {
            if (s.human_robot_distance_mm < params.close_threshold_mm) {
                if (!triggered) at = s.step;
                triggered = true;
                if (s.hand_speed_mm_s >= params.speed_limit_mm_s) failed = true;
            }
        }
        if (triggered)
            push("M8", true, at, failed ? R::Fail : R::Pass, failed ? "overspeed inside 10 cm" : "");
        else
            push("M8", false, -1, R::Unresolved);
    }

    // keep the online emission order: M1, Mgrip, M2, M3, M4, M5, M6, M7, M8
    std::vector<std::string> order = {"M1", "Mgrip", "M2", "M3", "M4", "M5", "M6", "M7", "M8"};
    std::vector<AssertionVerdict> sorted;
    for (const auto& id : order)
        for (auto& v : out)
            if (v.monitor == id) sorted.push_back(v);
    return sorted;
}

// ---------------------------------------------------------------------------
// trace CSV

inline std::string trace_to_csv(const TestTrace& trace) {
    std::string out =
        "step,time_s,human_action,robot_state,gaze_ok,pressure_force_n,location_tracked,"
        "hand_speed_mm_s,human_robot_distance_mm,event\n";
    char buf[64];
    auto num = [&](double v) {
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    for (const auto& s : trace.steps) {
        out += std::to_string(s.step) + "," + num(s.time_s) + "," + s.human_action + "," +
               s.robot_state + "," + (s.gaze_ok ? "1" : "0") + "," + num(s.pressure_force_n) +
               "," + (s.location_tracked ? "1" : "0") + "," + num(s.hand_speed_mm_s) + "," +
               num(s.human_robot_distance_mm) + "," + s.event + "\n";
    }
    out += "outcome," + std::string(outcome_name(trace.outcome)) + "\n";
    return out;
}

}  // namespace assurekit

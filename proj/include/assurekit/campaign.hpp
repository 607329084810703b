#pragma once

#include <nlohmann/json.hpp>

#include "assurekit/scenario.hpp"
#include "assurekit/sim.hpp"

namespace assurekit {

struct CampaignConfig {
    GenerationStrategy strategy;
    std::size_t n = 500;
    std::uint64_t seed = 1;
    ScenarioParams params;
};

struct MonitorStats {
    std::int64_t covered = 0, passed = 0, failed = 0, unresolved = 0;
    /// Unresolved verdicts are excluded; a monitor with no resolved verdicts
    /// has no pass rate.
    std::optional<double> pass_rate() const {
        std::int64_t resolved = passed + failed;
        if (resolved == 0) return std::nullopt;
        return static_cast<double>(passed) / static_cast<double>(resolved);
    }
};

struct ModeStats {
    std::int64_t occurrences = 0, opportunities = 0;
    std::optional<double> rate() const {
        if (opportunities == 0) return std::nullopt;
        return static_cast<double>(occurrences) / static_cast<double>(opportunities);
    }
};

struct CampaignReport {
    std::size_t n_tests = 0;
    std::uint64_t master_seed = 0;
    std::string strategy;
    std::int64_t successes = 0;
    std::map<std::string, std::int64_t> outcomes;
    std::map<std::string, MonitorStats> monitors;
    std::map<std::string, ModeStats> failure_modes;
    std::vector<std::uint64_t> per_test_seeds;

    double success_rate() const {
        return static_cast<double>(successes) / static_cast<double>(n_tests);
    }
};

/// Optional per-test sink (trace dumps); called in test order.
using TraceSink = std::function<void(std::size_t index, const ConcreteTest&, const TestTrace&,
                                     const std::vector<AssertionVerdict>&)>;

/// Runs n seeded tests and aggregates monitor and failure-mode statistics.
/// Identical configs produce identical reports; aggregation is in test order.
inline CampaignReport run_campaign(const CampaignConfig& config, const TraceSink& sink = {}) {
    if (config.n < 1) throw InvalidParams("campaign needs at least one run");
    validate_params(config.params);

    CampaignReport report;
    report.n_tests = config.n;
    report.master_seed = config.seed;
    report.strategy = config.strategy.name;
    for (const char* id : {"M1", "Mgrip", "M2", "M3", "M4", "M5", "M6", "M7", "M8"})
        report.monitors[id];
    for (const char* mode : {"grip", "gaze_fn", "pressure_fn", "location_fn", "runtime_error"})
        report.failure_modes[mode];

    auto abstracts = generate_abstract_tests(config.strategy, config.n, config.seed);
    for (std::size_t i = 0; i < config.n; ++i) {
        std::uint64_t test_seed = derive_seed(config.seed, i);
        report.per_test_seeds.push_back(test_seed);
        ConcreteTest concrete = concretize(abstracts[i], config.params, test_seed);
        auto [trace, verdicts] = run_test(concrete, config.params);

        report.outcomes[outcome_name(trace.outcome)]++;
        if (trace.outcome == Outcome::Success) report.successes++;

        for (const auto& v : verdicts) {
            auto& m = report.monitors[v.monitor];
            if (!v.triggered) continue;
            m.covered++;
            switch (v.result) {
                case AssertionVerdict::Result::Pass: m.passed++; break;
                case AssertionVerdict::Result::Fail: m.failed++; break;
                case AssertionVerdict::Result::Unresolved: m.unresolved++; break;
            }
        }

        // failure-mode opportunity accounting: a grip opportunity needs the
        // object in hand; sensing opportunities need a completed sensing
        // phase with that component genuinely applied
        auto& runtime = report.failure_modes["runtime_error"];
        runtime.opportunities++;
        if (trace.outcome == Outcome::RuntimeError) runtime.occurrences++;

        if (trace.event_step("grasped") != -1) {
            auto& grip = report.failure_modes["grip"];
            grip.opportunities++;
            if (trace.outcome == Outcome::GripFailure) grip.occurrences++;
        }
        const TraceStep* sensed = trace.at_event("sensing_done");
        auto gpl = concrete.abstract.gpl();
        if (sensed && gpl) {
            if (gpl->gaze == GazeAction::Ok) {
                auto& m = report.failure_modes["gaze_fn"];
                m.opportunities++;
                if (!sensed->gaze_ok) m.occurrences++;
            }
            if (gpl->pressure == PressureAction::Pull) {
                auto& m = report.failure_modes["pressure_fn"];
                m.opportunities++;
                if (sensed->pressure_force_n < config.params.pressure_threshold_n)
                    m.occurrences++;
            }
            if (gpl->location == LocationAction::OnObject) {
                auto& m = report.failure_modes["location_fn"];
                m.opportunities++;
                if (!sensed->location_tracked) m.occurrences++;
            }
        }

        if (sink) sink(i, concrete, trace, verdicts);
    }
    return report;
}

// ---------------------------------------------------------------------------
// coverage table

struct CoverageRow {
    std::string requirement;
    std::string monitor;
    std::int64_t covered = 0, passed = 0, failed = 0, unresolved = 0;
    std::optional<double> pass_rate;
};

struct CoverageTable {
    std::vector<CoverageRow> rows;
};

/// Requirement-indexed view of the monitor statistics, one row per Req 1-8.
inline CoverageTable coverage_report(const CampaignReport& report) {
    CoverageTable table;
    const std::pair<const char*, const char*> layout[] = {
        {"1", "M1"}, {"2", "M2"}, {"3", "M3"}, {"4", "M4"},
        {"5", "M5"}, {"6", "M6"}, {"7", "M7"}, {"8", "M8"},
    };
    for (const auto& [req, mon] : layout) {
        CoverageRow row;
        row.requirement = req;
        row.monitor = mon;
        auto it = report.monitors.find(mon);
        if (it != report.monitors.end()) {
            row.covered = it->second.covered;
            row.passed = it->second.passed;
            row.failed = it->second.failed;
            row.unresolved = it->second.unresolved;
            row.pass_rate = it->second.pass_rate();
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline std::string coverage_to_csv(const CoverageTable& table) {
    std::string out = "Req,Covered,Passed,Failed,Pass rate\n";
    for (const auto& row : table.rows) {
        out += row.requirement + "," + std::to_string(row.covered) + "," +
               std::to_string(row.passed) + "," + std::to_string(row.failed) + ",";
        out += row.pass_rate ? format_double(*row.pass_rate) : std::string("-");
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON forms

inline nlohmann::ordered_json campaign_report_to_json(const CampaignReport& r) {
    nlohmann::ordered_json j;
    j["n_tests"] = r.n_tests;
    j["master_seed"] = r.master_seed;
    j["strategy"] = r.strategy;
    j["successes"] = r.successes;
    j["success_rate"] = r.success_rate();
    j["outcomes"] = nlohmann::ordered_json::object();
    for (const auto& [name, count] : r.outcomes) j["outcomes"][name] = count;
    j["monitors"] = nlohmann::ordered_json::object();
    for (const auto& [id, m] : r.monitors) {
        nlohmann::ordered_json mj;
        mj["covered"] = m.covered;
        mj["passed"] = m.passed;
        mj["failed"] = m.failed;
        mj["unresolved"] = m.unresolved;
        if (auto pr = m.pass_rate()) mj["pass_rate"] = *pr;
        j["monitors"][id] = std::move(mj);
    }
    j["failure_modes"] = nlohmann::ordered_json::object();
    for (const auto& [mode, s] : r.failure_modes) {
        nlohmann::ordered_json sj;
        sj["occ"] = s.occurrences;
        sj["opp"] = s.opportunities;
        if (auto rate = s.rate()) sj["rate"] = *rate;
        j["failure_modes"][mode] = std::move(sj);
    }
    j["per_test_seeds"] = r.per_test_seeds;
    return j;
}

inline nlohmann::ordered_json coverage_to_json(const CoverageTable& t) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json rj;
        rj["req"] = row.requirement;
        rj["monitor"] = row.monitor;
        rj["covered"] = row.covered;
        rj["passed"] = row.passed;
        rj["failed"] = row.failed;
        rj["unresolved"] = row.unresolved;
        if (row.pass_rate) rj["pass_rate"] = *row.pass_rate;
        rows.push_back(std::move(rj));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// campaign config JSON

inline nlohmann::ordered_json params_to_json(const ScenarioParams& p) {
    nlohmann::ordered_json j;
    j["step_s"] = p.step_s;
    j["timeout_s"] = p.timeout_s;
    j["decision_window_s"] = p.decision_window_s;
    j["force_lo_n"] = p.force_lo_n;
    j["force_hi_n"] = p.force_hi_n;
    j["pressure_threshold_n"] = p.pressure_threshold_n;
    j["track_loss_rate"] = p.track_loss_rate;
    j["grip_failure_rate"] = p.grip_failure_rate;
    j["motion_error_rate"] = p.motion_error_rate;
    j["reset_overspeed_rate"] = p.reset_overspeed_rate;
    j["gaze_cone_deg"] = p.gaze_cone_deg;
    j["approach_min_distance_mm"] = p.approach_min_distance_mm;
    j["close_threshold_mm"] = p.close_threshold_mm;
    j["speed_limit_mm_s"] = p.speed_limit_mm_s;
    j["reset_overspeed_mm_s"] = p.reset_overspeed_mm_s;
    j["normal_speed_mm_s"] = p.normal_speed_mm_s;
    j["reset_window_s"] = p.reset_window_s;
    return j;
}

inline ScenarioParams params_from_json(const nlohmann::json& j) {
    ScenarioParams p;
    auto take = [&](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw SchemaError(std::string("param '") + key + "' must be a number");
        field = j[key].get<double>();
    };
    take("step_s", p.step_s);
    take("timeout_s", p.timeout_s);
    take("decision_window_s", p.decision_window_s);
    take("force_lo_n", p.force_lo_n);
    take("force_hi_n", p.force_hi_n);
    take("pressure_threshold_n", p.pressure_threshold_n);
    take("track_loss_rate", p.track_loss_rate);
    take("grip_failure_rate", p.grip_failure_rate);
    take("motion_error_rate", p.motion_error_rate);
    take("reset_overspeed_rate", p.reset_overspeed_rate);
    take("gaze_cone_deg", p.gaze_cone_deg);
    take("approach_min_distance_mm", p.approach_min_distance_mm);
    take("close_threshold_mm", p.close_threshold_mm);
    take("speed_limit_mm_s", p.speed_limit_mm_s);
    take("reset_overspeed_mm_s", p.reset_overspeed_mm_s);
    take("normal_speed_mm_s", p.normal_speed_mm_s);
    take("reset_window_s", p.reset_window_s);
    return p;
}

inline CampaignConfig campaign_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("campaign config must be a JSON object");
    CampaignConfig c;
    if (j.contains("strategy")) {
        if (!j["strategy"].is_string()) throw SchemaError("strategy must be a string");
        c.strategy.name = j["strategy"].get<std::string>();
    }
    if (j.contains("weights")) {
        if (!j["weights"].is_object()) throw SchemaError("weights must be an object");
        for (const auto& [name, w] : j["weights"].items()) {
            if (!w.is_number()) throw SchemaError("weight '" + name + "' must be a number");
            c.strategy.weights[name] = w.get<double>();
        }
    }
    if (j.contains("n")) {
        if (!j["n"].is_number_integer() || j["n"].get<std::int64_t>() < 1)
            throw InvalidParams("n must be a positive integer");
        c.n = j["n"].get<std::size_t>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw SchemaError("seed must be an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("params")) c.params = params_from_json(j["params"]);
    return c;
}

inline nlohmann::ordered_json campaign_config_to_json(const CampaignConfig& c) {
    nlohmann::ordered_json j;
    j["strategy"] = c.strategy.name;
    if (!c.strategy.weights.empty()) {
        j["weights"] = nlohmann::ordered_json::object();
        for (const auto& [name, w] : c.strategy.weights) j["weights"][name] = w;
    }
    j["n"] = c.n;
    j["seed"] = c.seed;
    j["params"] = params_to_json(c.params);
    return j;
}

}  // namespace assurekit

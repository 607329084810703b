#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "assurekit/model.hpp"
#include "assurekit/scenario.hpp"

namespace assurekit {

// ---------------------------------------------------------------------------
// assurances

enum class Technique { Formal, Simulation, Experiment };
enum class AssuranceKind { Probability, Verdict, Rate };

inline const char* technique_name(Technique t) {
    switch (t) {
        case Technique::Formal: return "formal";
        case Technique::Simulation: return "simulation";
        case Technique::Experiment: return "experiment";
    }
    return "?";
}

inline Technique technique_from_name(const std::string& s) {
    if (s == "formal") return Technique::Formal;
    if (s == "simulation") return Technique::Simulation;
    if (s == "experiment") return Technique::Experiment;
    throw SchemaError("unknown technique '" + s + "'");
}

inline const char* assurance_kind_name(AssuranceKind k) {
    switch (k) {
        case AssuranceKind::Probability: return "probability";
        case AssuranceKind::Verdict: return "verdict";
        case AssuranceKind::Rate: return "rate";
    }
    return "?";
}

inline AssuranceKind assurance_kind_from_name(const std::string& s) {
    if (s == "probability") return AssuranceKind::Probability;
    if (s == "verdict") return AssuranceKind::Verdict;
    if (s == "rate") return AssuranceKind::Rate;
    throw SchemaError("unknown assurance kind '" + s + "'");
}

struct Interval {
    double lo = 0.0, hi = 1.0;
    double confidence = 0.95;
};

struct Provenance {
    std::string model_hash;   // or config hash for simulation assurances
    std::uint64_t seed = 0;
    std::int64_t n = 0;
    std::string tool_version;
};

/// One technique's recorded claim about one requirement.
struct Assurance {
    std::string id;
    std::string requirement;
    Technique technique = Technique::Formal;
    AssuranceKind kind = AssuranceKind::Probability;
    double value = 0.0;
    bool verdict = false;  // Verdict kind only
    std::optional<Interval> interval;
    std::string constraints;  // e.g. "typical use case"
    Provenance provenance;
    std::string created_at;  // empty unless the caller supplies a timestamp

    void validate() const {
        if (kind != AssuranceKind::Verdict && (value < 0.0 || value > 1.0))
            throw ProbabilityOutOfRange("assurance value " + format_double(value) +
                                        " outside [0,1]");
        if (interval && !(interval->lo <= value && value <= interval->hi))
            throw Error("assurance value outside its own interval");
    }
};

// ---------------------------------------------------------------------------
// confidence intervals

namespace detail {

/// Acklam's rational approximation of the standard normal quantile
/// (relative error below 1.2e-9; ample for confidence bands).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidCounts("quantile argument outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace detail

/// Modified-Wald (Agresti-Coull) binomial interval. The 95% level uses the
/// familiar +2/+4 form with z = 1.96; other levels use the normal quantile
/// with (k + z^2/2) / (n + z^2). Clipped to [0,1].
inline Interval interval(std::int64_t successes, std::int64_t n, double confidence = 0.95) {
    if (n < 1 || successes < 0 || successes > n)
        throw InvalidCounts("need 0 <= successes <= n with n >= 1");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidCounts("confidence must lie in (0,1)");
    double z, center, denom;
    if (std::abs(confidence - 0.95) < 1e-12) {
        z = 1.96;
        center = (static_cast<double>(successes) + 2.0) / (static_cast<double>(n) + 4.0);
        denom = static_cast<double>(n) + 4.0;
    } else {
        z = detail::inverse_normal_cdf(0.5 + confidence / 2.0);
        center = (static_cast<double>(successes) + z * z / 2.0) /
                 (static_cast<double>(n) + z * z);
        denom = static_cast<double>(n) + z * z;
    }
    double half = z * std::sqrt(center * (1.0 - center) / denom);
    Interval iv;
    iv.lo = std::max(0.0, center - half);
    iv.hi = std::min(1.0, center + half);
    iv.confidence = confidence;
    return iv;
}

// ---------------------------------------------------------------------------
// agreement

struct Consensus {
    double value = 0.0;
    std::string direction = "at least";  // range-based: min of the compared values
};

/// Fixed strings; hypotheses for the human, never auto-attributed.
inline std::vector<std::string> discrepancy_causes() {
    return {"system-model", "requirement-model", "tool"};
}

struct AgreementReport {
    std::string requirement;
    std::vector<Assurance> compared;
    std::vector<double> pairwise_differences;
    bool agree = false;
    double tolerance = 0.0;
    std::optional<Consensus> consensus;
    std::vector<std::string> suspected_causes;  // populated when disagreeing
};

/// Pairwise comparison at a tolerance; verdict kinds must match exactly,
/// probability/rate kinds within tolerance. The consensus is the strongest
/// lower bound every compared assurance supports.
inline AgreementReport compare(const std::vector<Assurance>& assurances, double tolerance = 0.03) {
    if (assurances.size() < 2)
        throw Error("compare needs at least two assurances");
    const std::string& req = assurances.front().requirement;
    // probability and rate measure the same [0,1] quantity; verdicts do not
    auto family = [](AssuranceKind k) { return k == AssuranceKind::Verdict ? 1 : 0; };
    int fam = family(assurances.front().kind);
    for (const auto& a : assurances) {
        if (a.requirement != req)
            throw MixedRequirements("comparing assurances for '" + req + "' and '" +
                                    a.requirement + "'");
        if (family(a.kind) != fam)
            throw MixedKinds("cannot compare verdict-kind with value-kind assurances");
        a.validate();
    }

    AgreementReport report;
    report.requirement = req;
    report.compared = assurances;
    report.tolerance = tolerance;
    if (fam == 1) {
        bool all_same = true;
        for (const auto& a : assurances) all_same = all_same && a.verdict == assurances[0].verdict;
        report.agree = all_same;
    } else {
        bool agree = true;
        for (std::size_t i = 0; i < assurances.size(); ++i) {
            for (std::size_t j = i + 1; j < assurances.size(); ++j) {
                double d = std::abs(assurances[i].value - assurances[j].value);
                report.pairwise_differences.push_back(d);
                if (d > tolerance) agree = false;
            }
        }
        report.agree = agree;
        Consensus c;
        c.value = assurances[0].value;
        for (const auto& a : assurances) c.value = std::min(c.value, a.value);
        report.consensus = c;
    }
    if (!report.agree) report.suspected_causes = discrepancy_causes();
    return report;
}

// ---------------------------------------------------------------------------
// calibration to model constants

struct FailureRate {
    std::string mode;
    std::int64_t occurrences = 0;
    std::int64_t opportunities = 0;
    bool observable = true;  // false when there was no opportunity at all
    double rate() const {
        return observable
                   ? static_cast<double>(occurrences) / static_cast<double>(opportunities)
                   : 0.0;
    }
};

struct FailureRates {
    std::vector<FailureRate> rates;
    const FailureRate* find(const std::string& mode) const {
        for (const auto& r : rates)
            if (r.mode == mode) return &r;
        return nullptr;
    }
};

struct CalibrationOptions {
    /// Rate adopted for the runtime-error mode when the experiments saw none;
    /// high-volume simulation put it at 1/500, and the conservative course is
    /// to carry that estimate rather than zero.
    double runtime_error_fallback = 0.002;
};

namespace detail {

/// Constants carry the printed-decimal convention: rates are rounded to nine
/// decimal places, and complements computed from the rounded value.
inline double literal_decimal(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9f", rate);
    return std::stod(buf);
}

}  // namespace detail

/// Derives failure rates (exact counts retained) and the constant bindings
/// for the formal model. Modes with zero opportunities are flagged as not
/// observable instead of silently becoming rate 0.
inline std::pair<FailureRates, ConstantSet> calibrate(const CalibrationDataset& dataset,
                                                      const CalibrationOptions& opts = {}) {
    FailureRates rates;
    for (const auto& [mode, mc] : dataset.modes) {
        FailureRate r;
        r.mode = mode;
        r.occurrences = mc.occurrences;
        r.opportunities = mc.opportunities;
        r.observable = mc.opportunities > 0;
        rates.rates.push_back(std::move(r));
    }

    ConstantSet constants;
    auto bind = [&](const std::string& base, const std::string& complement, double rate) {
        double lit = detail::literal_decimal(rate);
        constants[base] = Value::of_double(lit);
        constants[complement] = Value::of_double(1.0 - lit);
    };
    if (const auto* r = rates.find("grip")) bind("pGripperFailure", "pGripperOk", r->rate());
    if (const auto* r = rates.find("gaze_fn")) bind("pGazeFN", "pGazeTP", r->rate());
    if (const auto* r = rates.find("pressure_fn")) bind("pPressureFN", "pPressureTP", r->rate());
    if (const auto* r = rates.find("location_fn")) bind("pLocationFN", "pLocationTP", r->rate());
    if (const auto* r = rates.find("runtime_error")) {
        double rate = r->occurrences == 0 ? opts.runtime_error_fallback : r->rate();
        bind("pMotionFailure", "pMotionOk", rate);
    }
    return {std::move(rates), std::move(constants)};
}

// ---------------------------------------------------------------------------
// JSON forms + ledger

inline nlohmann::ordered_json assurance_to_json(const Assurance& a) {
    nlohmann::ordered_json j;
    j["id"] = a.id;
    j["requirement"] = a.requirement;
    j["technique"] = technique_name(a.technique);
    j["kind"] = assurance_kind_name(a.kind);
    if (a.kind == AssuranceKind::Verdict)
        j["verdict"] = a.verdict;
    j["value"] = a.value;
    if (a.interval) {
        j["interval"] = {{"lo", a.interval->lo},
                         {"hi", a.interval->hi},
                         {"confidence", a.interval->confidence}};
    }
    j["constraints"] = a.constraints;
    j["provenance"] = {{"model_hash", a.provenance.model_hash},
                       {"seed", a.provenance.seed},
                       {"n", a.provenance.n},
                       {"tool_version", a.provenance.tool_version}};
    j["created_at"] = a.created_at;
    return j;
}

inline Assurance assurance_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("id") || !j.contains("requirement") ||
        !j.contains("technique") || !j.contains("kind") || !j.contains("value"))
        throw SchemaError("assurance record needs id, requirement, technique, kind, value");
    Assurance a;
    a.id = j["id"].get<std::string>();
    a.requirement = j["requirement"].get<std::string>();
    a.technique = technique_from_name(j["technique"].get<std::string>());
    a.kind = assurance_kind_from_name(j["kind"].get<std::string>());
    a.value = j["value"].get<double>();
    if (j.contains("verdict")) a.verdict = j["verdict"].get<bool>();
    if (j.contains("interval")) {
        Interval iv;
        iv.lo = j["interval"]["lo"].get<double>();
        iv.hi = j["interval"]["hi"].get<double>();
        iv.confidence = j["interval"]["confidence"].get<double>();
        a.interval = iv;
    }
    if (j.contains("constraints")) a.constraints = j["constraints"].get<std::string>();
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        if (p.contains("model_hash")) a.provenance.model_hash = p["model_hash"].get<std::string>();
        if (p.contains("seed")) a.provenance.seed = p["seed"].get<std::uint64_t>();
        if (p.contains("n")) a.provenance.n = p["n"].get<std::int64_t>();
        if (p.contains("tool_version"))
            a.provenance.tool_version = p["tool_version"].get<std::string>();
    }
    if (j.contains("created_at")) a.created_at = j["created_at"].get<std::string>();
    a.validate();
    return a;
}

/// Append-only JSON-lines store of assurance records.
class Ledger {
  public:
    explicit Ledger(std::string path) : path_(std::move(path)) {}

    void append(const Assurance& a) {
        a.validate();
        std::ofstream out(path_, std::ios::app);
        if (!out) throw Error("cannot open ledger '" + path_ + "' for append");
        out << assurance_to_json(a).dump() << "\n";
        if (!out) throw Error("short write to ledger '" + path_ + "'");
    }

    std::vector<Assurance> read_all() const {
        std::vector<Assurance> out;
        std::ifstream in(path_);
        if (!in) return out;  // an absent ledger is an empty ledger
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                out.push_back(assurance_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception& e) {
                throw CorruptLedger("ledger '" + path_ + "' line " + std::to_string(line_no) +
                                    ": " + e.what());
            }
        }
        return out;
    }

    std::vector<Assurance> query(const std::optional<std::string>& requirement,
                                 const std::optional<Technique>& technique = std::nullopt) const {
        std::vector<Assurance> out;
        for (auto& a : read_all()) {
            if (requirement && a.requirement != *requirement) continue;
            if (technique && a.technique != *technique) continue;
            out.push_back(std::move(a));
        }
        return out;
    }

    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

inline nlohmann::ordered_json agreement_report_to_json(const AgreementReport& r) {
    nlohmann::ordered_json j;
    j["requirement"] = r.requirement;
    j["verdict"] = r.agree ? "agree" : "disagree";
    j["tolerance"] = r.tolerance;
    j["assurances"] = nlohmann::ordered_json::array();
    for (const auto& a : r.compared) j["assurances"].push_back(assurance_to_json(a));
    j["pairwise_differences"] = r.pairwise_differences;
    if (r.consensus) {
        j["consensus"] = {{"direction", r.consensus->direction}, {"value", r.consensus->value}};
        j["consensus_statement"] =
            "requirement " + r.requirement + ": " + r.consensus->direction + " " +
            format_double(r.consensus->value);
    }
    if (!r.suspected_causes.empty()) j["suspected_causes"] = r.suspected_causes;
    return j;
}

}  // namespace assurekit

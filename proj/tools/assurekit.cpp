// assurekit: model-check, simulate, calibrate and reconcile assurances for
// the object-handover scenario.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "assurekit/assure.hpp"
#include "assurekit/campaign.hpp"
#include "assurekit/check.hpp"
#include "assurekit/scenario.hpp"

namespace {

using namespace assurekit;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kToolVersion = "assurekit 1.0.0";

enum ExitStatus : int {
    kOk = 0,
    kBoundViolated = 1,
    kParseError = 2,
    kNondeterministic = 3,
    kDisagreement = 4,
    kInternalError = 5,
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// write-temp-then-rename keeps partially written outputs invisible
void atomic_write(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::size_t state_cap_from_env() {
    const char* cap = std::getenv("ASSUREKIT_STATE_CAP");
    if (!cap) return BuildOptions{}.state_cap;
    char* end = nullptr;
    unsigned long long v = std::strtoull(cap, &end, 10);
    if (end == cap || v == 0) throw InvalidParams("ASSUREKIT_STATE_CAP must be a positive integer");
    return static_cast<std::size_t>(v);
}

std::string created_at_from_env() {
    const char* ts = std::getenv("ASSUREKIT_CREATED_AT");
    return ts ? ts : "";
}

/// --const NAME=VAL literal, or --const @FILE with a calibrated-constants
/// JSON ({"constants": {...}} or a flat name-to-value object).
ConstantSet parse_const_flags(const Model& model, const std::vector<std::string>& flags) {
    std::map<std::string, Kind> kinds;
    for (const auto& c : model.constants) kinds[c.name] = c.kind;
    auto value_from_json = [&](const std::string& name, const json& v) {
        if (v.is_boolean()) return Value::of_bool(v.get<bool>());
        if (v.is_number_integer()) return Value::of_int(v.get<std::int64_t>());
        if (v.is_number()) return Value::of_double(v.get<double>());
        throw SchemaError("constant '" + name + "' has a non-scalar value");
    };
    ConstantSet from_files, from_literals;
    for (const auto& flag : flags) {
        if (!flag.empty() && flag.front() == '@') {
            json j = json::parse(read_file(flag.substr(1)));
            const json& map = j.is_object() && j.contains("constants") ? j["constants"] : j;
            if (!map.is_object()) throw SchemaError("constants file must hold an object");
            for (const auto& [name, v] : map.items())
                from_files[name] = value_from_json(name, v);
            continue;
        }
        auto eq = flag.find('=');
        if (eq == std::string::npos)
            throw SchemaError("--const expects NAME=VALUE or @FILE, got '" + flag + "'");
        std::string name = flag.substr(0, eq), text = flag.substr(eq + 1);
        auto it = kinds.find(name);
        if (it == kinds.end()) throw UnknownConstant("unknown constant '" + name + "'");
        Value v;
        if (it->second == Kind::Bool) {
            if (text == "true")
                v = Value::of_bool(true);
            else if (text == "false")
                v = Value::of_bool(false);
            else
                throw KindMismatch("constant '" + name + "' is bool, got '" + text + "'");
        } else if (it->second == Kind::Int) {
            v = Value::of_int(std::stoll(text));
        } else {
            v = Value::of_double(std::stod(text));
        }
        from_literals[name] = v;
    }
    // command-line literals take precedence over constants files
    for (const auto& [name, v] : from_literals) from_files[name] = v;
    return from_files;
}

struct LoadedModel {
    Model model;
    Chain chain;
    std::string hash;
};

LoadedModel load_model(const std::string& path, const std::vector<std::string>& const_flags,
                       bool uniform_scheduler) {
    Model model = parse_model(read_file(path), std::filesystem::path(path).stem().string());
    ConstantSet overrides = parse_const_flags(model, const_flags);
    if (!overrides.empty()) model = set_constants(model, overrides);
    BuildOptions opts;
    opts.policy = uniform_scheduler ? NondeterminismPolicy::Uniform : NondeterminismPolicy::Reject;
    opts.state_cap = state_cap_from_env();
    LoadedModel lm{model, build_chain(model, opts), fnv1a_hex(print_model(model))};
    return lm;
}

// ---------------------------------------------------------------------------
// check

int cmd_check(const std::string& model_path, const std::string& prop_path,
              const std::vector<std::string>& const_flags, const std::string& method,
              bool uniform_scheduler, const std::string& out_path, bool timing) {
    auto t0 = std::chrono::steady_clock::now();
    LoadedModel lm = load_model(model_path, const_flags, uniform_scheduler);
    auto t1 = std::chrono::steady_clock::now();
    double build_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    CheckOptions opts;
    opts.method = method == "exact" ? SolveMethod::Exact : SolveMethod::ValueIteration;

    ordered_json out;
    out["model"] = lm.model.name;
    out["model_hash"] = lm.hash;
    out["states"] = lm.chain.n_states();
    out["transitions"] = lm.chain.n_transitions();
    out["build_time_ms"] = timing ? build_ms : 0.0;
    out["results"] = ordered_json::array();

    bool any_bound_violated = false;
    for (const auto& line : parse_property_file(read_file(prop_path))) {
        auto c0 = std::chrono::steady_clock::now();
        ProbResult r = check(lm.chain, line.query, opts);
        auto c1 = std::chrono::steady_clock::now();
        ordered_json rec;
        rec["property"] = line.query.text;
        if (!line.annotation.empty()) rec["annotation"] = line.annotation;
        rec["mode"] = line.query.mode == PropertyQuery::Mode::Query ? "query" : "bound";
        rec["probability"] = r.probability;
        if (r.verdict) {
            rec["verdict"] = *r.verdict;
            if (!*r.verdict) any_bound_violated = true;
        }
        rec["solver"] = r.solver;
        rec["residual"] = r.residual;
        rec["states"] = lm.chain.n_states();
        rec["transitions"] = lm.chain.n_transitions();
        rec["wall_time_ms"] =
            timing ? std::chrono::duration<double, std::milli>(c1 - c0).count() : 0.0;
        out["results"].push_back(std::move(rec));
    }

    std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        atomic_write(out_path, text);
    return any_bound_violated ? kBoundViolated : kOk;
}

// ---------------------------------------------------------------------------
// simulate

std::string coverage_csv_path(const std::string& out_path) {
    std::filesystem::path p(out_path);
    p.replace_extension("");
    return p.string() + ".coverage.csv";
}

int cmd_simulate(const std::string& config_path, long long runs, long long seed,
                 const std::string& out_path, const std::string& traces_dir) {
    CampaignConfig config;
    if (!config_path.empty())
        config = campaign_config_from_json(json::parse(read_file(config_path)));
    if (runs >= 0) {
        if (runs == 0) throw InvalidParams("--runs must be positive");
        config.n = static_cast<std::size_t>(runs);
    }
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);

    TraceSink sink;
    if (!traces_dir.empty()) {
        std::filesystem::create_directories(traces_dir);
        sink = [&](std::size_t index, const ConcreteTest&, const TestTrace& trace,
                   const std::vector<AssertionVerdict>&) {
            char name[32];
            std::snprintf(name, sizeof(name), "test_%05zu.csv", index);
            atomic_write((std::filesystem::path(traces_dir) / name).string(),
                         trace_to_csv(trace));
        };
    }

    CampaignReport report = run_campaign(config, sink);
    CoverageTable coverage = coverage_report(report);

    ordered_json out;
    out["config"] = campaign_config_to_json(config);
    out["report"] = campaign_report_to_json(report);
    out["coverage"] = coverage_to_json(coverage);
    std::string text = out.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        atomic_write(out_path, text);
        atomic_write(coverage_csv_path(out_path), coverage_to_csv(coverage));
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// calibrate

int cmd_calibrate(const std::string& experiments_path, const std::string& out_path) {
    CalibrationDataset dataset = load_calibration(experiments_path);
    auto [rates, constants] = calibrate(dataset);

    ordered_json out;
    out["dataset"] = {{"tests", dataset.tests}, {"successes", dataset.successes}};
    out["rates"] = ordered_json::array();
    ordered_json not_observable = ordered_json::array();
    for (const auto& r : rates.rates) {
        ordered_json rj;
        rj["mode"] = r.mode;
        rj["occ"] = r.occurrences;
        rj["opp"] = r.opportunities;
        if (r.observable)
            rj["rate"] = r.rate();
        else
            rj["note"] = "not observable";
        out["rates"].push_back(std::move(rj));
        if (!r.observable) not_observable.push_back(r.mode);
    }
    out["constants"] = ordered_json::object();
    for (const auto& [name, v] : constants) {
        if (v.kind == Kind::Double)
            out["constants"][name] = v.d;
        else if (v.kind == Kind::Int)
            out["constants"][name] = v.i;
        else
            out["constants"][name] = v.b;
    }
    if (!not_observable.empty()) out["not_observable"] = std::move(not_observable);

    std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        atomic_write(out_path, text);
    return kOk;
}

// ---------------------------------------------------------------------------
// assure

int cmd_assure(const std::string& model_path, const std::string& prop_path,
               const std::string& config_path, long long runs, long long seed, double tolerance,
               const std::string& experiments_path, const std::string& ledger_path,
               const std::vector<std::string>& const_flags, const std::string& out_path) {
    LoadedModel lm = load_model(model_path, const_flags, false);

    auto reqs = requirement_library();
    if (!prop_path.empty()) {
        // property lines annotated "req <id>" replace the built-in queries
        for (const auto& line : parse_property_file(read_file(prop_path))) {
            if (line.annotation.rfind("req ", 0) != 0)
                throw SchemaError("assure property lines need a '// req <id>' annotation");
            std::string id = line.annotation.substr(4);
            bool found = false;
            for (auto& r : reqs) {
                if (r.id == id) {
                    r.property = line.query;
                    found = true;
                }
            }
            if (!found) throw SchemaError("property annotation names unknown requirement '" + id + "'");
        }
    }

    CampaignConfig config;
    if (!config_path.empty())
        config = campaign_config_from_json(json::parse(read_file(config_path)));
    if (runs > 0) config.n = static_cast<std::size_t>(runs);
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    CampaignReport campaign = run_campaign(config);
    std::string config_hash = fnv1a_hex(campaign_config_to_json(config).dump());

    CalibrationDataset experiments = load_calibration(experiments_path);

    Ledger ledger(ledger_path);
    std::string created_at = created_at_from_env();

    ordered_json out;
    out["model"] = lm.model.name;
    out["tolerance"] = tolerance;
    out["requirements"] = ordered_json::array();
    bool all_agree = true;

    for (const auto& req : reqs) {
        ordered_json rj;
        rj["id"] = req.id;
        rj["statement"] = req.statement;
        std::vector<Assurance> assurances;

        if (req.property) {
            try {
                ProbResult r = check(lm.chain, *req.property);
                Assurance a;
                a.id = req.id + "-formal";
                a.requirement = req.id;
                a.technique = Technique::Formal;
                a.kind = AssuranceKind::Probability;
                a.value = r.probability;
                a.constraints = "typical use case";
                a.provenance = {lm.hash, 0, 0, kToolVersion};
                a.created_at = created_at;
                assurances.push_back(a);
                if (r.verdict) rj["formal_bound_verdict"] = *r.verdict;
            } catch (const AtomResolutionError& e) {
                // the property names variables this model variant lacks
                rj["formal_skipped"] = e.what();
            }
        }

        std::optional<double> sim_value;
        std::optional<Interval> sim_interval;
        std::int64_t sim_n = 0;
        if (req.assurance_estimator == "success") {
            sim_value = campaign.success_rate();
            sim_n = static_cast<std::int64_t>(campaign.n_tests);
            sim_interval = interval(campaign.successes, sim_n);
        } else if (!req.assurance_estimator.empty()) {
            auto it = campaign.monitors.find(req.assurance_estimator);
            if (it != campaign.monitors.end()) {
                if (auto rate = it->second.pass_rate()) {
                    sim_value = *rate;
                    sim_n = it->second.passed + it->second.failed;
                    sim_interval = interval(it->second.passed, sim_n);
                }
            }
        }
        if (sim_value) {
            Assurance a;
            a.id = req.id + "-simulation";
            a.requirement = req.id;
            a.technique = Technique::Simulation;
            a.kind = AssuranceKind::Rate;
            a.value = *sim_value;
            a.interval = sim_interval;
            a.constraints = "typical use case";
            a.provenance = {config_hash, campaign.master_seed,
                            static_cast<std::int64_t>(campaign.n_tests), kToolVersion};
            a.created_at = created_at;
            assurances.push_back(a);
        }

        if (req.id == "1a" || req.id == "1b") {
            Assurance a;
            a.id = req.id + "-experiment";
            a.requirement = req.id;
            a.technique = Technique::Experiment;
            a.kind = AssuranceKind::Rate;
            a.value = static_cast<double>(experiments.successes) /
                      static_cast<double>(experiments.tests);
            a.interval = interval(experiments.successes, experiments.tests);
            a.constraints = "typical use case";
            a.provenance = {fnv1a_hex(experiments_path), 0, experiments.tests, kToolVersion};
            a.created_at = created_at;
            assurances.push_back(a);
        }

        for (const auto& a : assurances) ledger.append(a);

        rj["assurances"] = ordered_json::array();
        for (const auto& a : assurances) rj["assurances"].push_back(assurance_to_json(a));
        if (assurances.size() >= 2) {
            AgreementReport rep = compare(assurances, tolerance);
            rj["agreement"] = agreement_report_to_json(rep);
            if (!rep.agree) all_agree = false;
        }
        out["requirements"].push_back(std::move(rj));
    }

    out["all_agree"] = all_agree;
    std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        atomic_write(out_path, text);
    return all_agree ? kOk : kDisagreement;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"assurance-based verification toolkit for the handover scenario"};
    app.require_subcommand(1);

    // check
    auto* check_cmd = app.add_subcommand("check", "model-check properties against a model");
    std::string model_path, prop_path, method = "vi", out_path;
    std::vector<std::string> const_flags;
    bool uniform_scheduler = false, timing = false;
    check_cmd->add_option("--model", model_path, "model file (.gcm)")->required();
    check_cmd->add_option("--prop", prop_path, "property file (.qry)")->required();
    check_cmd->add_option("--const", const_flags, "NAME=VALUE override or @constants.json");
    check_cmd->add_option("--method", method, "solver: vi or exact")
        ->check(CLI::IsMember({"vi", "exact"}));
    check_cmd->add_flag("--uniform-scheduler", uniform_scheduler,
                        "mix nondeterministic alternatives uniformly instead of rejecting");
    check_cmd->add_option("--out", out_path, "write the result record to this file");
    check_cmd->add_flag("--timing", timing, "measure wall time (off by default: timing is "
                                            "the one nondeterministic output field)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run a seeded test campaign");
    std::string sim_config, sim_out, traces_dir;
    long long runs = -1, seed = -1;
    sim_cmd->add_option("--config", sim_config, "campaign config JSON");
    sim_cmd->add_option("--runs", runs, "number of tests");
    sim_cmd->add_option("--seed", seed, "master seed");
    sim_cmd->add_option("--out", sim_out, "write the campaign report here (+ .coverage.csv)");
    sim_cmd->add_option("--traces", traces_dir, "write one trace CSV per test into this directory");

    // calibrate
    auto* cal_cmd = app.add_subcommand("calibrate", "derive model constants from experiment data");
    std::string experiments_path, cal_out;
    cal_cmd->add_option("--experiments", experiments_path, "experiment dataset JSON")->required();
    cal_cmd->add_option("--out", cal_out, "write the constants file here");

    // assure
    auto* assure_cmd = app.add_subcommand("assure", "cross-check assurances from all techniques");
    std::string a_model, a_prop, a_config, a_experiments, a_ledger, a_out;
    std::vector<std::string> a_consts;
    long long a_runs = -1, a_seed = -1;
    double tolerance = 0.03;
    assure_cmd->add_option("--model", a_model, "model file (.gcm)")->required();
    assure_cmd->add_option("--prop", a_prop, "requirement properties (.qry with req annotations)");
    assure_cmd->add_option("--config", a_config, "campaign config JSON");
    assure_cmd->add_option("--runs", a_runs, "number of simulation tests");
    assure_cmd->add_option("--seed", a_seed, "campaign master seed");
    assure_cmd->add_option("--tolerance", tolerance, "agreement tolerance (default 0.03)");
    assure_cmd->add_option("--experiments", a_experiments, "experiment dataset JSON")->required();
    assure_cmd->add_option("--ledger", a_ledger, "assurance ledger (JSON lines)")->required();
    assure_cmd->add_option("--const", a_consts, "NAME=VALUE override or @constants.json");
    assure_cmd->add_option("--out", a_out, "write the agreement report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check_cmd)
            return cmd_check(model_path, prop_path, const_flags, method, uniform_scheduler,
                             out_path, timing);
        if (*sim_cmd) return cmd_simulate(sim_config, runs, seed, sim_out, traces_dir);
        if (*cal_cmd) return cmd_calibrate(experiments_path, cal_out);
        if (*assure_cmd)
            return cmd_assure(a_model, a_prop, a_config, a_runs, a_seed, tolerance, a_experiments,
                              a_ledger, a_consts, a_out);
    } catch (const NondeterministicState& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNondeterministic;
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const CountInconsistency& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const InvalidParams& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const InvalidWeights& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const UnknownConstant& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const KindMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const UnboundIdentifier& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const DuplicateName& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const UnsupportedPattern& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const ProbabilityOutOfRange& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const AtomResolutionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParseError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternalError;
    }
    return kInternalError;
}

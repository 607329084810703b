#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "assurekit/chain.hpp"
#include "assurekit/parse.hpp"
#include "assurekit/scenario.hpp"
#include "support.hpp"

using namespace assurekit;

TEST_CASE("a variable with no commands is a one-state absorbing chain", "[chain]") {
    Chain c = build_chain(parse_model("module m x : [0..5] init 3; endmodule"));
    REQUIRE(c.n_states() == 1);
    CHECK(c.absorbing[0] == 1);
    REQUIRE(c.rows[0].size() == 1);
    CHECK(c.rows[0][0].target == 0);
    CHECK(c.rows[0][0].prob == 1.0);
}

TEST_CASE("synchronised branches multiply", "[chain]") {
    Chain c = build_chain(parse_model(
        "module a x : [0..2] init 0; [tick] x=0 -> 0.3: (x'=1) + 0.7: (x'=2); endmodule\n"
        "module b y : [0..2] init 0; [tick] y=0 -> 0.5: (y'=1) + 0.5: (y'=2); endmodule\n"));
    REQUIRE(c.n_states() == 5);
    std::multiset<double> probs;
    for (const auto& tr : c.rows[c.initial]) probs.insert(tr.prob);
    CHECK(probs == std::multiset<double>{0.15, 0.15, 0.35, 0.35});
}

TEST_CASE("blocking synchronisation stalls a label until all parties enable it", "[chain]") {
    // b never enables [go], so the composed system has no move at all
    Chain c = build_chain(parse_model(
        "module a x : [0..1] init 0; [go] x=0 -> (x'=1); endmodule\n"
        "module b y : [0..1] init 1; [go] y=0 -> (y'=1); endmodule\n"));
    CHECK(c.n_states() == 1);
    CHECK(c.absorbing[0] == 1);
}

TEST_CASE("refined chain absorbs exactly in the four terminal shapes", "[chain]") {
    Model m = parse_model(testsupport::read_file(testsupport::repo_root() / "models" /
                                                 "handover_refined.gcm"));
    Chain c = build_chain(m);
    auto consts = evaluate_constants(m);
    std::set<std::int64_t> terminal_values = {
        consts.at("handoverSuccessful").as_int(), consts.at("handoverUnsuccessful").as_int(),
        consts.at("timedOut").as_int(), consts.at("motionError").as_int()};
    std::size_t robot_var = c.var_index.at("robotState");
    for (std::size_t s = 0; s < c.n_states(); ++s) {
        bool in_terminal_shape = terminal_values.count(c.states[s][robot_var]) > 0;
        CHECK(static_cast<bool>(c.absorbing[s]) == in_terminal_shape);
    }
}

TEST_CASE("all shipped models compose deterministically under reject", "[chain]") {
    for (const char* name : {"handover_baseline.gcm", "handover_sensors.gcm",
                             "handover_sensors_gripper.gcm", "handover_refined.gcm"}) {
        Model m = parse_model(testsupport::read_file(testsupport::repo_root() / "models" / name));
        BuildOptions opts;
        opts.policy = NondeterminismPolicy::Reject;
        Chain c = build_chain(m, opts);

        // row-stochastic within 1e-9, and every state reachable from initial
        std::vector<char> seen(c.n_states(), 0);
        std::vector<std::uint32_t> queue{static_cast<std::uint32_t>(c.initial)};
        seen[c.initial] = 1;
        while (!queue.empty()) {
            auto s = queue.back();
            queue.pop_back();
            double sum = 0.0;
            for (const auto& tr : c.rows[s]) {
                sum += tr.prob;
                if (!seen[tr.target]) {
                    seen[tr.target] = 1;
                    queue.push_back(tr.target);
                }
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
        CHECK(std::count(seen.begin(), seen.end(), 1) == static_cast<long>(c.n_states()));
    }
}

TEST_CASE("nondeterminism is rejected, or mixed under the uniform policy", "[chain]") {
    const char* text =
        "module m x : [0..2] init 0;"
        " [] x=0 -> (x'=1);"
        " [] x=0 -> (x'=2);"
        " endmodule";
    CHECK_THROWS_AS(build_chain(parse_model(text)), NondeterministicState);
    BuildOptions uniform;
    uniform.policy = NondeterminismPolicy::Uniform;
    Chain c = build_chain(parse_model(text), uniform);
    REQUIRE(c.rows[c.initial].size() == 2);
    CHECK(c.rows[c.initial][0].prob == 0.5);
    CHECK(c.rows[c.initial][1].prob == 0.5);
}

TEST_CASE("state-space cap", "[chain]") {
    BuildOptions opts;
    opts.state_cap = 100;
    CHECK_THROWS_AS(
        build_chain(parse_model("module m x : [0..100000] init 0;"
                                " [] x<100000 -> (x'=x+1); endmodule"),
                    opts),
        StateSpaceLimitExceeded);
}

TEST_CASE("branch probabilities must sum to one", "[chain]") {
    CHECK_THROWS_AS(
        build_chain(parse_model("module m x : [0..1] init 0;"
                                " [] x=0 -> 0.5: (x'=1) + 0.4: (x'=0); endmodule")),
        ModelError);
}

TEST_CASE("updates out of domain are rejected with a diagnostic", "[chain]") {
    CHECK_THROWS_AS(build_chain(parse_model("module m x : [0..3] init 0;"
                                            " [] x<4 -> (x'=x+1); endmodule")),
                    ModelError);
}

TEST_CASE("termination classification", "[chain]") {
    SECTION("the refined chain terminates") {
        Model m = parse_model(testsupport::read_file(testsupport::repo_root() / "models" /
                                                     "handover_refined.gcm"));
        CHECK(classify_terminal(build_chain(m)).terminating);
    }
    SECTION("a two-state loop is reported as the offending component") {
        Chain c = build_chain(parse_model("module m x : [0..1] init 0;"
                                          " [] x=0 -> (x'=1);"
                                          " [] x=1 -> (x'=0); endmodule"));
        auto report = classify_terminal(c);
        CHECK_FALSE(report.terminating);
        REQUIRE(report.offending.size() == 1);
        CHECK(report.offending[0].size() == 2);
    }
    SECTION("an explicit self-loop is absorbing") {
        Chain c = build_chain(parse_model("module m x : [0..1] init 0;"
                                          " [] x=0 -> (x'=0); endmodule"));
        CHECK(c.absorbing[0] == 1);
        CHECK(classify_terminal(c).terminating);
    }
}

// ---------------------------------------------------------------------------
// composition oracle: independent product construction over the full grid

namespace {

struct OracleModule {
    std::string var;
    std::int64_t domain;  // values 0..domain-1
    std::int64_t init = 0;
    // label ("" = unlabeled) -> guard value -> branches (prob, next value)
    std::map<std::string, std::map<std::int64_t, std::vector<std::pair<double, std::int64_t>>>>
        commands;
};

std::string oracle_model_text(const OracleModule& a, const OracleModule& b) {
    std::string out;
    auto emit = [&](const OracleModule& m) {
        out += "module m_" + m.var + "\n  " + m.var + " : [0.." +
               std::to_string(m.domain - 1) + "] init " + std::to_string(m.init) + ";\n";
        for (const auto& [label, by_value] : m.commands) {
            for (const auto& [value, branches] : by_value) {
                out += "  [" + label + "] " + m.var + "=" + std::to_string(value) + " -> ";
                for (std::size_t i = 0; i < branches.size(); ++i) {
                    if (i) out += " + ";
                    out += format_double(branches[i].first) + ": (" + m.var + "'=" +
                           std::to_string(branches[i].second) + ")";
                }
                out += ";\n";
            }
        }
        out += "endmodule\n";
    };
    emit(a);
    emit(b);
    return out;
}

OracleModule random_module(Rng& rng, const std::string& var,
                           const std::vector<std::string>& labels) {
    OracleModule m;
    m.var = var;
    m.domain = 2 + static_cast<std::int64_t>(rng.below(5));
    m.init = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m.domain)));
    for (const auto& label : labels) {
        for (std::int64_t v = 0; v < m.domain; ++v) {
            if (!rng.bernoulli(0.6)) continue;
            std::size_t fan = 1 + rng.below(2);
            std::vector<std::pair<double, std::int64_t>> branches;
            double left = 1.0;
            for (std::size_t k = 0; k < fan; ++k) {
                double p = k + 1 == fan ? left : left * (0.25 + 0.5 * rng.uniform01());
                branches.emplace_back(
                    p, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m.domain))));
                left -= p;
            }
            m.commands[label][v] = std::move(branches);
        }
    }
    return m;
}

/// Direct product construction over the full value grid; transition map keyed
/// by (a-value, b-value). Mirrors the uniform-mixing rule independently.
std::map<std::pair<std::int64_t, std::int64_t>,
         std::map<std::pair<std::int64_t, std::int64_t>, double>>
oracle_product(const OracleModule& a, const OracleModule& b,
               const std::vector<std::string>& labels) {
    std::map<std::pair<std::int64_t, std::int64_t>,
             std::map<std::pair<std::int64_t, std::int64_t>, double>>
        rows;
    for (std::int64_t va = 0; va < a.domain; ++va) {
        for (std::int64_t vb = 0; vb < b.domain; ++vb) {
            // collect alternatives: unlabeled from each side, joint per label
            struct Alt {
                std::vector<std::pair<double, std::pair<std::int64_t, std::int64_t>>> branches;
            };
            std::vector<Alt> alts;
            auto lookup = [](const OracleModule& m, const std::string& label, std::int64_t v)
                -> const std::vector<std::pair<double, std::int64_t>>* {
                auto li = m.commands.find(label);
                if (li == m.commands.end()) return nullptr;
                auto vi = li->second.find(v);
                if (vi == li->second.end()) return nullptr;
                return &vi->second;
            };
            if (const auto* br = lookup(a, "", va)) {
                Alt alt;
                for (const auto& [p, next] : *br) alt.branches.push_back({p, {next, vb}});
                alts.push_back(std::move(alt));
            }
            if (const auto* br = lookup(b, "", vb)) {
                Alt alt;
                for (const auto& [p, next] : *br) alt.branches.push_back({p, {va, next}});
                alts.push_back(std::move(alt));
            }
            for (const auto& label : labels) {
                if (label.empty()) continue;
                bool a_declares = a.commands.count(label) > 0;
                bool b_declares = b.commands.count(label) > 0;
                const auto* ba = lookup(a, label, va);
                const auto* bb = lookup(b, label, vb);
                if ((a_declares && !ba) || (b_declares && !bb)) continue;  // blocked
                if (!ba && !bb) continue;
                Alt alt;
                if (ba && bb) {
                    for (const auto& [pa, na] : *ba)
                        for (const auto& [pb, nb] : *bb)
                            alt.branches.push_back({pa * pb, {na, nb}});
                } else if (ba) {
                    for (const auto& [pa, na] : *ba) alt.branches.push_back({pa, {na, vb}});
                } else {
                    for (const auto& [pb, nb] : *bb) alt.branches.push_back({pb, {va, nb}});
                }
                alts.push_back(std::move(alt));
            }
            auto& row = rows[{va, vb}];
            if (alts.empty()) {
                row[{va, vb}] = 1.0;
                continue;
            }
            double w = 1.0 / static_cast<double>(alts.size());
            for (const auto& alt : alts)
                for (const auto& [p, next] : alt.branches)
                    if (p > 0.0) row[next] += w * p;
        }
    }
    return rows;
}

}  // namespace

TEST_CASE("composition agrees with a direct product oracle", "[chain]") {
    Rng rng(913);
    const std::vector<std::string> labels = {"", "sync", "step"};
    int checked_states = 0;
    for (int iter = 0; iter < 60; ++iter) {
        OracleModule a = random_module(rng, "x", labels);
        OracleModule b = random_module(rng, "y", labels);
        Model model = parse_model(oracle_model_text(a, b));
        BuildOptions opts;
        opts.policy = NondeterminismPolicy::Uniform;
        Chain chain = build_chain(model, opts);
        auto oracle = oracle_product(a, b, labels);

        std::size_t xi = chain.var_index.at("x"), yi = chain.var_index.at("y");
        for (std::size_t s = 0; s < chain.n_states(); ++s) {
            auto key = std::make_pair(chain.states[s][xi], chain.states[s][yi]);
            REQUIRE(oracle.count(key) == 1);
            const auto& expected = oracle.at(key);
            REQUIRE(chain.rows[s].size() == expected.size());
            for (const auto& tr : chain.rows[s]) {
                auto tkey = std::make_pair(chain.states[tr.target][xi],
                                           chain.states[tr.target][yi]);
                REQUIRE(expected.count(tkey) == 1);
                CHECK(tr.prob == Catch::Approx(expected.at(tkey)).margin(1e-12));
            }
            ++checked_states;
        }
    }
    CHECK(checked_states > 200);  // the oracle actually exercised something
}

TEST_CASE("chain dump carries states, rows and the absorbing set", "[chain]") {
    Chain c = build_chain(parse_model(
        "module m x : [0..1] init 0; [] x=0 -> 0.25: (x'=1) + 0.75: (x'=0); endmodule"));
    auto j = chain_to_json(c);
    CHECK(j["states"].size() == c.n_states());
    CHECK(j["rows"].size() == c.n_states());
    CHECK(j["stats"]["states"] == c.n_states());
    CHECK(j["absorbing"].size() == 1);
}

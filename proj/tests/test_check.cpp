#include <catch2/catch_amalgamated.hpp>

#include "assurekit/check.hpp"
#include "assurekit/parse.hpp"
#include "support.hpp"

using namespace assurekit;

namespace {

/// Random atom tables for a synthetic chain (no backing model).
AtomTable random_atoms(Rng& rng, const Chain& chain, const PathFormula& path) {
    AtomTable table(chain.n_states());
    for (auto& val : table) {
        val.phi = rng.bernoulli(0.5);
        val.psi = rng.bernoulli(0.5);
        for (std::size_t i = 0; i < path.eventualities.size(); ++i)
            val.eventualities.emplace_back(rng.bernoulli(0.4), rng.bernoulli(0.4));
    }
    return table;
}

PathFormula pattern_instance(Rng& rng, PathFormula::Pattern pattern) {
    PathFormula path;
    path.pattern = pattern;
    if (pattern == PathFormula::Pattern::GloballyAny) {
        std::size_t k = 1 + rng.below(3);
        for (std::size_t i = 0; i < k; ++i) {
            Eventuality ev;
            ev.is_until = rng.bernoulli(0.5);
            path.eventualities.push_back(ev);
        }
    }
    return path;
}

PropertyQuery query_of(PathFormula path) {
    PropertyQuery q;
    q.mode = PropertyQuery::Mode::Query;
    q.path = std::move(path);
    return q;
}

const PathFormula::Pattern kAllPatterns[] = {
    PathFormula::Pattern::Eventually, PathFormula::Pattern::Globally,
    PathFormula::Pattern::Response,   PathFormula::Pattern::NextSafety,
    PathFormula::Pattern::Until,      PathFormula::Pattern::GloballyAny,
};

}  // namespace

// ---------------------------------------------------------------------------
// monitor traces from the spec of each pattern

TEST_CASE("response monitor discharges its obligation", "[check]") {
    PathFormula path;
    path.pattern = PathFormula::Pattern::Response;
    Monitor mon = compile_monitor(path);
    AtomValuation neither, set_ob, discharge;
    set_ob.phi = true;
    discharge.psi = true;
    int m = mon.initial;
    m = mon.step(m, neither);
    m = mon.step(m, set_ob);
    CHECK(m == 1);  // obligation pending
    m = mon.step(m, discharge);
    CHECK(m == 0);
    CHECK(mon.lasso(m, discharge));
}

TEST_CASE("next-safety monitor rejects the forbidden successor", "[check]") {
    PathFormula path;
    path.pattern = PathFormula::Pattern::NextSafety;
    Monitor mon = compile_monitor(path);
    AtomValuation phi_only, psi_only;
    phi_only.phi = true;
    psi_only.psi = true;
    int m = mon.initial;
    m = mon.step(m, phi_only);
    m = mon.step(m, psi_only);
    CHECK_FALSE(mon.lasso(m, psi_only));
}

TEST_CASE("globally-any lasso rejects an unlisted terminal", "[check]") {
    PathFormula path;
    path.pattern = PathFormula::Pattern::GloballyAny;
    path.eventualities = {{false, nullptr, nullptr},   // F success
                          {false, nullptr, nullptr},   // F unsuccessful
                          {true, nullptr, nullptr}};   // F (wait U timedOut)
    Monitor mon = compile_monitor(path);
    AtomValuation motion_error;  // none of the three hold at the absorbing state
    motion_error.eventualities = {{false, false}, {false, false}, {false, false}};
    CHECK_FALSE(mon.lasso(mon.initial, motion_error));
    AtomValuation timed_out;
    timed_out.eventualities = {{false, false}, {false, false}, {false, true}};
    CHECK(mon.lasso(mon.initial, timed_out));
}

// ---------------------------------------------------------------------------
// reachability

TEST_CASE("certain reachability along a line", "[check]") {
    Chain c = build_chain(parse_model("module m x : [0..2] init 0;"
                                      " [] x<2 -> (x'=x+1); endmodule"));
    auto x = reachability_prob(c, {2});
    CHECK(x == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("one-step branch probability", "[check]") {
    Chain c = build_chain(parse_model(
        "const double pGripperFailure = 0.02;"
        "const double pGripperOk = 1 - pGripperFailure;"
        "module m x : [0..2] init 0;"
        " [] x=0 -> pGripperOk: (x'=1) + pGripperFailure: (x'=2); endmodule"));
    auto x = reachability_prob(c, {1});
    CHECK(x[c.initial] == 0.98);
}

TEST_CASE("value iteration and exact elimination agree on cyclic chains", "[check]") {
    Rng rng(417);
    for (int iter = 0; iter < 50; ++iter) {
        Chain c = testsupport::random_cyclic_chain(rng, 50);
        std::vector<std::uint32_t> targets;
        for (std::uint32_t s = 0; s < c.n_states(); ++s)
            if (c.absorbing[s] && rng.bernoulli(0.7)) targets.push_back(s);
        if (targets.empty()) targets.push_back(static_cast<std::uint32_t>(c.n_states() - 1));
        CheckOptions vi, exact;
        exact.method = SolveMethod::Exact;
        auto xv = reachability_prob(c, targets, vi);
        auto xe = reachability_prob(c, targets, exact);
        for (std::size_t s = 0; s < c.n_states(); ++s)
            CHECK(xv[s] == Catch::Approx(xe[s]).margin(1e-10));
    }
}

TEST_CASE("value iteration reports non-convergence at the sweep cap", "[check]") {
    Chain c;
    c.initial = 0;
    c.states = {{0}, {1}};
    c.rows = {{{0, 1.0 - 1e-7}, {1, 1e-7}}, {{1, 1.0}}};
    c.absorbing = {0, 1};
    CheckOptions opts;
    opts.max_sweeps = 10'000;
    CHECK_THROWS_AS(reachability_prob(c, {1}, opts), NumericalNonConvergence);
}

// ---------------------------------------------------------------------------
// the brute-force oracle vs the product checker

TEST_CASE("checker equals path enumeration on random chains, all patterns", "[check][oracle]") {
    Rng rng(20240);
    int runs = 0;
    double worst = 0.0;
    while (runs < 200) {
        Chain chain = testsupport::random_dag_chain(rng, 8);
        for (auto pattern : kAllPatterns) {
            PathFormula path = pattern_instance(rng, pattern);
            AtomTable atoms = random_atoms(rng, chain, path);
            double brute = brute_force_prob_with_atoms(chain, path, atoms, 1'000'000);
            double checked = check_with_atoms(chain, query_of(path), atoms).probability;
            worst = std::max(worst, std::abs(brute - checked));
            REQUIRE(std::abs(brute - checked) < 1e-12);
        }
        ++runs;
    }
    INFO("largest |check - brute| = " << worst);
    CHECK(runs == 200);
}

TEST_CASE("globally-any reduction lemma against the enumerator", "[check][oracle]") {
    // dedicated instances with many eventualities: the checker reduces
    // G(\/ E_i) to reachability of the accepting absorbing set, the oracle
    // evaluates the formula positionally
    Rng rng(555);
    for (int iter = 0; iter < 100; ++iter) {
        Chain chain = testsupport::random_dag_chain(rng, 8);
        PathFormula path = pattern_instance(rng, PathFormula::Pattern::GloballyAny);
        AtomTable atoms = random_atoms(rng, chain, path);
        double brute = brute_force_prob_with_atoms(chain, path, atoms, 1'000'000);
        double checked = check_with_atoms(chain, query_of(path), atoms).probability;
        REQUIRE(std::abs(brute - checked) < 1e-12);
    }
}

TEST_CASE("duality of globally and eventually", "[check]") {
    Rng rng(77);
    for (int iter = 0; iter < 100; ++iter) {
        Chain chain = testsupport::random_dag_chain(rng, 8);
        PathFormula globally;
        globally.pattern = PathFormula::Pattern::Globally;
        AtomTable atoms = random_atoms(rng, chain, globally);
        PathFormula eventually;
        eventually.pattern = PathFormula::Pattern::Eventually;
        AtomTable negated = atoms;
        for (auto& v : negated) v.phi = !v.phi;
        double pg = check_with_atoms(chain, query_of(globally), atoms).probability;
        double pf = check_with_atoms(chain, query_of(eventually), negated).probability;
        REQUIRE(std::abs(pg - (1.0 - pf)) < 1e-12);
    }
}

TEST_CASE("bound verdicts are consistent with the query value", "[check]") {
    Rng rng(4242);
    for (int iter = 0; iter < 100; ++iter) {
        Chain chain = testsupport::random_dag_chain(rng, 8);
        PathFormula path;
        path.pattern = PathFormula::Pattern::Eventually;
        AtomTable atoms = random_atoms(rng, chain, path);
        double p = check_with_atoms(chain, query_of(path), atoms).probability;
        PropertyQuery bound = query_of(path);
        bound.mode = PropertyQuery::Mode::Bound;
        bound.bound_op = BoundOp::Ge;
        bound.bound = rng.uniform01();
        auto r = check_with_atoms(chain, bound, atoms);
        REQUIRE(r.verdict.has_value());
        CHECK(*r.verdict == (p >= bound.bound - 1e-12));
    }
}

TEST_CASE("probability mass moved toward accepting terminals never lowers a query",
          "[check]") {
    Rng rng(888);
    int perturbed = 0;
    while (perturbed < 50) {
        Chain chain = testsupport::random_dag_chain(rng, 8);
        PathFormula path;
        path.pattern = PathFormula::Pattern::Eventually;
        AtomTable atoms = random_atoms(rng, chain, path);
        // an accepting absorbing target to enrich
        std::optional<std::uint32_t> accepting;
        for (std::uint32_t s = 0; s < chain.n_states(); ++s)
            if (chain.absorbing[s] && atoms[s].phi) accepting = s;
        if (!accepting) continue;
        // a transient row not already pointing only at the target
        std::optional<std::size_t> row;
        for (std::size_t s = 0; s < chain.n_states(); ++s) {
            if (chain.absorbing[s]) continue;
            for (auto& tr : chain.rows[s])
                if (tr.target != *accepting && tr.prob > 0.02) row = s;
        }
        if (!row) continue;
        double base = check_with_atoms(chain, query_of(path), atoms).probability;
        Chain shifted = chain;
        auto& r = shifted.rows[*row];
        for (auto& tr : r) {
            if (tr.target != *accepting && tr.prob > 0.02) {
                tr.prob -= 0.01;
                break;
            }
        }
        bool found = false;
        for (auto& tr : r) {
            if (tr.target == *accepting) {
                tr.prob += 0.01;
                found = true;
                break;
            }
        }
        if (!found) r.push_back({*accepting, 0.01});
        double richer = check_with_atoms(shifted, query_of(path), atoms).probability;
        REQUIRE(richer >= base - 1e-12);
        ++perturbed;
    }
}

TEST_CASE("non-terminating chains are refused", "[check]") {
    Chain c = build_chain(parse_model("module m x : [0..1] init 0;"
                                      " [] x=0 -> (x'=1);"
                                      " [] x=1 -> (x'=0); endmodule"));
    PropertyQuery q = parse_property("P=? [ F x=1 ]");
    CHECK_THROWS_AS(check(c, q), NonTerminatingChain);
}

TEST_CASE("path enumeration respects its cap and rejects transient cycles", "[check]") {
    Rng rng(31);
    Chain chain = testsupport::random_dag_chain(rng, 8);
    PathFormula path;
    path.pattern = PathFormula::Pattern::Eventually;
    AtomTable atoms = random_atoms(rng, chain, path);
    CHECK_THROWS_AS(brute_force_prob_with_atoms(chain, path, atoms, 0), PathCapExceeded);

    Chain looped;
    looped.initial = 0;
    looped.states = {{0}, {1}};
    looped.rows = {{{0, 0.5}, {1, 0.5}}, {{1, 1.0}}};
    looped.absorbing = {0, 1};
    looped.absorbing[0] = 0;
    AtomTable atoms2(2);
    CHECK_THROWS_AS(brute_force_prob_with_atoms(looped, path, atoms2, 1000), PathCapExceeded);
}

TEST_CASE("certain queries avoid the solver entirely", "[check]") {
    Chain c = build_chain(parse_model("module m x : [0..2] init 0;"
                                      " [] x<2 -> 0.5: (x'=x+1) + 0.5: (x'=2); endmodule"));
    PropertyQuery q = parse_property("P=? [ F x=2 ]");
    auto r = check(c, q);
    CHECK(r.probability == 1.0);
    CHECK(r.solver == "closed");
}

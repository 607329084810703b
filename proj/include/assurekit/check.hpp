#pragma once

#include <cmath>
#include <optional>
#include <unordered_map>
#include <vector>

#include "assurekit/monitor.hpp"

namespace assurekit {

enum class SolveMethod { ValueIteration, Exact };

struct CheckOptions {
    SolveMethod method = SolveMethod::ValueIteration;
    double vi_residual = 1e-12;
    std::size_t max_sweeps = 1'000'000;
};

struct SolveStats {
    std::string solver = "value-iteration";
    double residual = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

/// Jacobi value iteration for min-free reachability: x[s] = sum P(s,t) x[t],
/// x fixed at 1 on targets. Starting from 0 keeps unreachable states at 0.
inline std::vector<double> solve_reach_vi(const std::vector<std::vector<ChainTransition>>& rows,
                                          const std::vector<char>& is_target,
                                          double residual_tol, std::size_t max_sweeps,
                                          SolveStats& stats) {
    const std::size_t n = rows.size();
    std::vector<double> x(n, 0.0), next(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        if (is_target[s]) x[s] = next[s] = 1.0;
    double residual = 0.0;
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        residual = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (is_target[s]) continue;
            double v = 0.0;
            for (const auto& tr : rows[s]) v += tr.prob * x[tr.target];
            residual = std::max(residual, std::abs(v - x[s]));
            next[s] = v;
        }
        std::swap(x, next);
        if (residual < residual_tol) {
            stats.solver = "value-iteration";
            stats.residual = residual;
            stats.iterations = sweep;
            return x;
        }
    }
    throw NumericalNonConvergence("value iteration did not reach residual " +
                                  format_double(residual_tol) + " within " +
                                  std::to_string(max_sweeps) + " sweeps (residual " +
                                  format_double(residual) + ")");
}

/// Sparse Gauss-Jordan elimination on the transient submatrix:
/// x = Qx + b with b[s] = one-step probability into the target set.
inline std::vector<double> solve_reach_exact(const std::vector<std::vector<ChainTransition>>& rows,
                                             const std::vector<char>& is_target,
                                             SolveStats& stats) {
    const std::size_t n = rows.size();
    std::vector<double> x(n, 0.0);
    std::vector<double> b(n, 0.0);
    std::vector<std::unordered_map<std::uint32_t, double>> q(n);
    std::vector<std::unordered_map<std::uint32_t, char>> readers(n);  // k -> rows holding q[.][k]

    for (std::size_t s = 0; s < n; ++s) {
        if (is_target[s]) {
            x[s] = 1.0;
            continue;
        }
        for (const auto& tr : rows[s]) {
            if (is_target[tr.target]) {
                b[s] += tr.prob;
            } else if (tr.target == s) {
                q[s][static_cast<std::uint32_t>(s)] += tr.prob;
                readers[s][static_cast<std::uint32_t>(s)] = 1;
            } else {
                q[s][tr.target] += tr.prob;
                readers[tr.target][static_cast<std::uint32_t>(s)] = 1;
            }
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        if (is_target[k]) continue;
        auto ku = static_cast<std::uint32_t>(k);
        double self = 0.0;
        auto sit = q[k].find(ku);
        if (sit != q[k].end()) {
            self = sit->second;
            q[k].erase(sit);
        }
        double denom = 1.0 - self;
        if (denom < 1e-14) {
            // all remaining mass loops on itself: no escape, probability 0
            b[k] = 0.0;
            q[k].clear();
        } else {
            double inv = 1.0 / denom;
            b[k] *= inv;
            for (auto& [j, w] : q[k]) w *= inv;
        }
        // substitute row k into every row that references x[k]
        auto holders = std::move(readers[k]);
        readers[k].clear();
        for (const auto& [iu, _] : holders) {
            if (iu == ku) continue;
            auto& row = q[iu];
            auto it = row.find(ku);
            if (it == row.end()) continue;
            double w = it->second;
            row.erase(it);
            b[iu] += w * b[k];
            for (const auto& [j, wj] : q[k]) {
                row[j] += w * wj;
                readers[j][iu] = 1;
            }
        }
    }
    for (std::size_t s = 0; s < n; ++s)
        if (!is_target[s]) x[s] = b[s];
    stats.solver = "exact";
    stats.residual = 0.0;
    stats.iterations = 0;
    return x;
}

inline std::vector<double> solve_reach(const std::vector<std::vector<ChainTransition>>& rows,
                                       const std::vector<char>& is_target,
                                       const CheckOptions& opts, SolveStats& stats) {
    if (opts.method == SolveMethod::Exact)
        return solve_reach_exact(rows, is_target, stats);
    return solve_reach_vi(rows, is_target, opts.vi_residual, opts.max_sweeps, stats);
}

}  // namespace detail

/// x[s] = probability of reaching the target set from s.
inline std::vector<double> reachability_prob(const Chain& chain,
                                             const std::vector<std::uint32_t>& targets,
                                             const CheckOptions& opts = {},
                                             SolveStats* stats_out = nullptr) {
    std::vector<char> is_target(chain.n_states(), 0);
    for (std::uint32_t t : targets) {
        if (t >= chain.n_states()) throw Error("target state index out of range");
        is_target[t] = 1;
    }
    SolveStats stats;
    auto x = detail::solve_reach(chain.rows, is_target, opts, stats);
    if (stats_out) *stats_out = stats;
    return x;
}

// ---------------------------------------------------------------------------
// atom compilation

/// Per-state truth of the formula's atoms; the injection point for synthetic
/// chains in tests.
using AtomTable = std::vector<AtomValuation>;

inline AtomTable compile_atoms(const Chain& chain, const PathFormula& path) {
    resolve_atoms(path, chain);
    AtomTable table(chain.n_states());
    for (std::size_t s = 0; s < chain.n_states(); ++s) {
        Env env = chain.state_env(s);
        auto eval_atom = [&](const ExprPtr& e) -> bool {
            Value v = eval_expr(e, env);
            if (v.kind != Kind::Bool)
                throw AtomResolutionError("property atom is not boolean: " + print_expr(e));
            return v.b;
        };
        AtomValuation& val = table[s];
        if (path.phi) val.phi = eval_atom(path.phi);
        if (path.psi) val.psi = eval_atom(path.psi);
        for (const auto& ev : path.eventualities)
            val.eventualities.emplace_back(eval_atom(ev.phi), ev.psi ? eval_atom(ev.psi) : false);
    }
    return table;
}

// ---------------------------------------------------------------------------
// product construction + check

struct ProbResult {
    double probability = 0.0;
    std::optional<bool> verdict;  // present for Bound queries
    std::string solver;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::size_t product_states = 0;
    std::size_t product_transitions = 0;
};

/// Bound verdicts compare with an explicit tolerance, never exact equality.
inline bool bound_holds(BoundOp op, double p, double bound, double tol = 1e-12) {
    switch (op) {
        case BoundOp::Ge: return p >= bound - tol;
        case BoundOp::Le: return p <= bound + tol;
        case BoundOp::Gt: return p > bound + tol;
        case BoundOp::Lt: return p < bound - tol;
    }
    return false;
}

/// Core checking once atoms are fixed: builds the chain x monitor product and
/// computes the probability of reaching lasso-accepting absorbing
/// configurations.
inline ProbResult check_with_atoms(const Chain& chain, const PropertyQuery& query,
                                   const AtomTable& atoms, const CheckOptions& opts = {}) {
    auto termination = classify_terminal(chain);
    if (!termination.terminating)
        throw NonTerminatingChain("chain has " + std::to_string(termination.offending.size()) +
                                  " non-absorbing bottom component(s); properties are defined "
                                  "on terminating chains only");

    Monitor mon = compile_monitor(query.path);

    // product node = chain state * monitor state; monitor consumed the state
    auto key_of = [&](std::uint32_t s, int m) -> std::uint64_t {
        return (static_cast<std::uint64_t>(s) << 2) | static_cast<std::uint64_t>(m);
    };
    std::unordered_map<std::uint64_t, std::uint32_t> index;
    std::vector<std::pair<std::uint32_t, int>> nodes;
    std::vector<std::uint32_t> queue;
    auto intern = [&](std::uint32_t s, int m) -> std::uint32_t {
        std::uint64_t key = key_of(s, m);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        auto id = static_cast<std::uint32_t>(nodes.size());
        index.emplace(key, id);
        nodes.emplace_back(s, m);
        queue.push_back(id);
        return id;
    };

    std::uint32_t init_node =
        intern(static_cast<std::uint32_t>(chain.initial),
               mon.step(mon.initial, atoms[chain.initial]));

    std::vector<std::vector<ChainTransition>> rows;
    std::vector<char> terminal, accepting;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        std::uint32_t id = queue[qi];
        auto [s, m] = nodes[id];
        rows.resize(nodes.size());
        terminal.resize(nodes.size(), 0);
        accepting.resize(nodes.size(), 0);
        if (chain.absorbing[s]) {
            // the lasso predicate resolves the infinite repetition
            terminal[id] = 1;
            accepting[id] = mon.lasso(m, atoms[s]) ? 1 : 0;
            rows[id] = {{id, 1.0}};
            continue;
        }
        auto& row = rows[id];
        for (const auto& tr : chain.rows[s])
            row.push_back({intern(tr.target, mon.step(m, atoms[tr.target])), tr.prob});
    }
    rows.resize(nodes.size());
    terminal.resize(nodes.size(), 0);
    accepting.resize(nodes.size(), 0);

    ProbResult result;
    result.product_states = nodes.size();
    for (const auto& row : rows) result.product_transitions += row.size();

    std::size_t n_terminal = 0, n_accepting = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        n_terminal += terminal[i] ? 1 : 0;
        n_accepting += accepting[i] ? 1 : 0;
    }
    if (n_accepting == n_terminal || n_accepting == 0) {
        // a terminating chain reaches its absorbing set with probability one,
        // so an all-accepting (or empty) terminal set needs no solve
        result.probability = n_accepting == 0 ? 0.0 : 1.0;
        result.solver = "closed";
    } else {
        SolveStats stats;
        auto x = detail::solve_reach(rows, accepting, opts, stats);
        result.probability = x[init_node];
        result.solver = stats.solver;
        result.residual = stats.residual;
        result.iterations = stats.iterations;
    }
    if (query.mode == PropertyQuery::Mode::Bound)
        result.verdict = bound_holds(query.bound_op, result.probability, query.bound);
    return result;
}

/// Computes the probability (or bound verdict) of a query over a terminating
/// chain. The chain retains the model's variable and constant bindings, which
/// is what atom resolution needs.
inline ProbResult check(const Chain& chain, const PropertyQuery& query,
                        const CheckOptions& opts = {}) {
    return check_with_atoms(chain, query, compile_atoms(chain, query.path), opts);
}

// ---------------------------------------------------------------------------
// brute-force oracle

namespace detail {

/// Direct evaluation of the path formula on prefix . s^omega, by quantifier
/// scans over positions; deliberately shares nothing with Monitor.
inline bool path_satisfies(const PathFormula& path, const AtomTable& atoms,
                           const std::vector<std::uint32_t>& prefix) {
    const std::size_t k = prefix.size() - 1;  // index of the absorbing state
    auto phi = [&](std::size_t j) { return atoms[prefix[j]].phi; };
    auto psi = [&](std::size_t j) { return atoms[prefix[j]].psi; };

    switch (path.pattern) {
        case PathFormula::Pattern::Eventually:
            for (std::size_t j = 0; j <= k; ++j)
                if (phi(j)) return true;
            return false;
        case PathFormula::Pattern::Globally:
            for (std::size_t j = 0; j <= k; ++j)
                if (!phi(j)) return false;
            return true;
        case PathFormula::Pattern::Response: {
            // eventually-psi suffix table
            std::vector<char> fpsi(k + 2, 0);
            for (std::size_t j = k + 1; j-- > 0;)
                fpsi[j] = psi(j) || (j < k && fpsi[j + 1]);
            for (std::size_t j = 0; j <= k; ++j)
                if (phi(j) && !fpsi[j]) return false;
            return true;
        }
        case PathFormula::Pattern::NextSafety:
            for (std::size_t j = 0; j <= k; ++j) {
                std::size_t succ = j < k ? j + 1 : k;
                if (phi(j) && psi(succ)) return false;
            }
            return true;
        case PathFormula::Pattern::Until:
            for (std::size_t j = 0; j <= k; ++j) {
                if (psi(j)) return true;
                if (!phi(j)) return false;
            }
            return false;
        case PathFormula::Pattern::GloballyAny: {
            const std::size_t ne = path.eventualities.size();
            // holds[i][j]: eventuality i holds at position j
            std::vector<std::vector<char>> holds(ne, std::vector<char>(k + 1, 0));
            for (std::size_t i = 0; i < ne; ++i) {
                auto ephi = [&](std::size_t j) { return atoms[prefix[j]].eventualities[i].first; };
                auto epsi = [&](std::size_t j) { return atoms[prefix[j]].eventualities[i].second; };
                if (!path.eventualities[i].is_until) {
                    char seen = 0;
                    for (std::size_t j = k + 1; j-- > 0;) {
                        seen = seen || ephi(j);
                        holds[i][j] = seen;
                    }
                } else {
                    // until_at[j]: phi U psi holds at j on the lasso
                    std::vector<char> until_at(k + 1, 0);
                    until_at[k] = epsi(k);
                    for (std::size_t j = k; j-- > 0;)
                        until_at[j] = epsi(j) || (ephi(j) && until_at[j + 1]);
                    char seen = 0;
                    for (std::size_t j = k + 1; j-- > 0;) {
                        seen = seen || until_at[j];
                        holds[i][j] = seen;
                    }
                }
            }
            for (std::size_t j = 0; j <= k; ++j) {
                bool any = false;
                for (std::size_t i = 0; i < ne && !any; ++i) any = holds[i][j];
                if (!any) return false;
            }
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Enumerates every finite path to an absorbing state and sums the
/// probabilities of the satisfying ones. Independent oracle for check().
inline double brute_force_prob_with_atoms(const Chain& chain, const PathFormula& path,
                                          const AtomTable& atoms,
                                          std::size_t path_cap = 100'000) {
    std::vector<std::uint32_t> prefix;
    std::vector<char> on_path(chain.n_states(), 0);
    std::size_t paths = 0;
    double total = 0.0;

    std::function<void(std::uint32_t, double)> dfs = [&](std::uint32_t s, double p) {
        prefix.push_back(s);
        if (chain.absorbing[s]) {
            if (++paths > path_cap)
                throw PathCapExceeded("more than " + std::to_string(path_cap) +
                                      " finite paths to absorbing states");
            if (detail::path_satisfies(path, atoms, prefix)) total += p;
            prefix.pop_back();
            return;
        }
        if (on_path[s]) {
            throw PathCapExceeded(
                "transient cycle found; the chain has infinitely many finite paths");
        }
        on_path[s] = 1;
        for (const auto& tr : chain.rows[s]) dfs(tr.target, p * tr.prob);
        on_path[s] = 0;
        prefix.pop_back();
    };
    dfs(static_cast<std::uint32_t>(chain.initial), 1.0);
    return total;
}

inline double brute_force_prob(const Chain& chain, const PropertyQuery& query,
                               std::size_t path_cap = 100'000) {
    return brute_force_prob_with_atoms(chain, query.path, compile_atoms(chain, query.path),
                                       path_cap);
}

}  // namespace assurekit

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "assurekit/model.hpp"

namespace assurekit {

/// How to treat states with more than one enabled alternative.
enum class NondeterminismPolicy { Reject, Uniform };

/// Dense valuation of all declared variables, in declaration order.
/// Bools are stored as 0/1.
using StateValuation = std::vector<std::int64_t>;

struct VarInfo {
    std::string name;
    std::string module_name;
    bool is_bool = false;
    std::int64_t lo = 0, hi = 0;  // bools use 0..1
};

struct ChainTransition {
    std::uint32_t target;
    double prob;
};

/// Explicit-state DTMC built from a composed model. Immutable once built.
struct Chain {
    std::vector<VarInfo> vars;
    std::unordered_map<std::string, std::size_t> var_index;
    ConstantSet constants;

    std::vector<StateValuation> states;
    std::size_t initial = 0;
    std::vector<std::vector<ChainTransition>> rows;
    std::vector<char> absorbing;

    std::size_t n_states() const { return states.size(); }
    std::size_t n_transitions() const {
        std::size_t n = 0;
        for (const auto& row : rows) n += row.size();
        return n;
    }

    /// Environment resolving variables (from the given state) and constants.
    Env state_env(std::size_t state_index) const {
        const StateValuation& sv = states[state_index];
        return [this, &sv](const std::string& name) -> std::optional<Value> {
            auto vi = var_index.find(name);
            if (vi != var_index.end()) {
                const VarInfo& info = vars[vi->second];
                std::int64_t raw = sv[vi->second];
                return info.is_bool ? Value::of_bool(raw != 0) : Value::of_int(raw);
            }
            auto ci = constants.find(name);
            if (ci != constants.end()) return ci->second;
            return std::nullopt;
        };
    }

    std::string describe_state(std::size_t state_index) const {
        std::string out = "{";
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (i > 0) out += ", ";
            out += vars[i].name + "=";
            if (vars[i].is_bool)
                out += states[state_index][i] ? "true" : "false";
            else
                out += std::to_string(states[state_index][i]);
        }
        out += "}";
        return out;
    }
};

namespace detail {

struct ValuationHash {
    std::size_t operator()(const StateValuation& v) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::int64_t x : v) {
            std::uint64_t u = static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            u *= 0xff51afd7ed558ccdull;
            u ^= u >> 33;
            h ^= u;
        }
        return static_cast<std::size_t>(h);
    }
};

/// One module's command with branch probabilities already evaluated.
struct CompiledBranch {
    double prob;
    const std::vector<Assignment>* updates;
};

struct CompiledCommand {
    const ModuleDef* module;
    const Command* command;
    std::vector<CompiledBranch> branches;
};

/// An alternative is one unlabeled command, or one synchronised set of
/// commands (one per module declaring the label).
struct Alternative {
    std::string label;  // empty for an unlabeled command
    std::vector<const CompiledCommand*> parts;
};

}  // namespace detail

struct BuildOptions {
    NondeterminismPolicy policy = NondeterminismPolicy::Reject;
    std::size_t state_cap = 1'000'000;
};

/// Composes a model into its reachable explicit-state chain. States with no
/// enabled alternative get a probability-1 self-loop, realising the fixed
/// point of the underlying transition system.
inline Chain build_chain(const Model& model, const BuildOptions& opts = {}) {
    validate_model(model);

    Chain chain;
    chain.constants = evaluate_constants(model);
    Env const_env = [&](const std::string& n) -> std::optional<Value> {
        auto it = chain.constants.find(n);
        if (it == chain.constants.end()) return std::nullopt;
        return it->second;
    };

    for (const auto& mod : model.modules) {
        for (const auto& v : mod.vars) {
            VarInfo info;
            info.name = v.name;
            info.module_name = mod.name;
            info.is_bool = v.is_bool;
            if (v.is_bool) {
                info.lo = 0;
                info.hi = 1;
            } else {
                info.lo = eval_expr(v.lo, const_env).as_int();
                info.hi = eval_expr(v.hi, const_env).as_int();
            }
            chain.var_index.emplace(info.name, chain.vars.size());
            chain.vars.push_back(std::move(info));
        }
    }

    // Evaluate branch probabilities once: they are constant expressions.
    // Every command must have branch probabilities in [0,1] summing to 1.
    std::vector<detail::CompiledCommand> compiled;
    std::unordered_map<const ModuleDef*, std::vector<const detail::CompiledCommand*>> by_module;
    compiled.reserve(64);
    std::vector<std::pair<const ModuleDef*, const Command*>> flat;
    for (const auto& mod : model.modules)
        for (const auto& cmd : mod.commands) flat.emplace_back(&mod, &cmd);
    compiled.resize(flat.size());
    for (std::size_t k = 0; k < flat.size(); ++k) {
        auto& cc = compiled[k];
        cc.module = flat[k].first;
        cc.command = flat[k].second;
        double sum = 0.0;
        for (const auto& br : cc.command->branches) {
            double p = br.prob ? eval_expr(br.prob, const_env).as_double() : 1.0;
            if (p < -1e-12 || p > 1.0 + 1e-12)
                throw ModelError("branch probability " + format_double(p) +
                                 " outside [0,1] in module " + cc.module->name);
            sum += p;
            cc.branches.push_back({p, &br.updates});
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ModelError("branch probabilities sum to " + format_double(sum) +
                             " in module " + cc.module->name + ", command '[" +
                             cc.command->label + "] " + print_expr(cc.command->guard) + "'");
        by_module[cc.module].push_back(&cc);
    }

    // label -> modules declaring it (in declaration order)
    std::vector<std::string> label_order;
    std::unordered_map<std::string, std::vector<const ModuleDef*>> label_modules;
    for (const auto& mod : model.modules) {
        std::vector<std::string> seen;
        for (const auto& cmd : mod.commands) {
            if (cmd.label.empty()) continue;
            if (std::find(seen.begin(), seen.end(), cmd.label) != seen.end()) continue;
            seen.push_back(cmd.label);
            auto& mods = label_modules[cmd.label];
            if (mods.empty()) label_order.push_back(cmd.label);
            mods.push_back(&mod);
        }
    }

    // initial state
    StateValuation init;
    for (const auto& mod : model.modules) {
        for (const auto& v : mod.vars) {
            Value val = eval_expr(v.init, const_env);
            init.push_back(v.is_bool ? (val.as_bool() ? 1 : 0) : val.as_int());
        }
    }

    std::unordered_map<StateValuation, std::uint32_t, detail::ValuationHash> index;
    std::deque<std::uint32_t> queue;
    auto intern = [&](const StateValuation& sv) -> std::uint32_t {
        auto it = index.find(sv);
        if (it != index.end()) return it->second;
        if (chain.states.size() >= opts.state_cap)
            throw StateSpaceLimitExceeded("state space exceeds cap of " +
                                          std::to_string(opts.state_cap) + " states");
        std::uint32_t id = static_cast<std::uint32_t>(chain.states.size());
        chain.states.push_back(sv);
        index.emplace(sv, id);
        queue.push_back(id);
        return id;
    };
    chain.initial = intern(init);

    while (!queue.empty()) {
        std::uint32_t s = queue.front();
        queue.pop_front();
        StateValuation sv = chain.states[s];  // copy: chain.states may reallocate
        Env env = [&chain, &sv](const std::string& name) -> std::optional<Value> {
            auto vi = chain.var_index.find(name);
            if (vi != chain.var_index.end()) {
                const VarInfo& info = chain.vars[vi->second];
                std::int64_t raw = sv[vi->second];
                return info.is_bool ? Value::of_bool(raw != 0) : Value::of_int(raw);
            }
            auto ci = chain.constants.find(name);
            if (ci != chain.constants.end()) return ci->second;
            return std::nullopt;
        };

        auto enabled_in = [&](const ModuleDef* mod, const std::string& label) {
            std::vector<const detail::CompiledCommand*> hits;
            for (const auto* cc : by_module[mod])
                if (cc->command->label == label && eval_expr(cc->command->guard, env).as_bool())
                    hits.push_back(cc);
            return hits;
        };

        std::vector<detail::Alternative> alts;
        // unlabeled commands act alone
        for (const auto& mod : model.modules)
            for (const auto* cc : enabled_in(&mod, ""))
                alts.push_back({"", {cc}});
        // blocking synchronisation: a label fires only if every module
        // declaring it has an enabled command for it
        for (const auto& label : label_order) {
            const auto& mods = label_modules[label];
            std::vector<std::vector<const detail::CompiledCommand*>> choices;
            bool blocked = false;
            for (const auto* mod : mods) {
                auto hits = enabled_in(mod, label);
                if (hits.empty()) {
                    blocked = true;
                    break;
                }
                choices.push_back(std::move(hits));
            }
            if (blocked) continue;
            // cartesian product over per-module choices
            std::vector<std::size_t> pick(choices.size(), 0);
            while (true) {
                detail::Alternative alt;
                alt.label = label;
                for (std::size_t k = 0; k < choices.size(); ++k)
                    alt.parts.push_back(choices[k][pick[k]]);
                alts.push_back(std::move(alt));
                std::size_t k = 0;
                for (; k < choices.size(); ++k) {
                    if (++pick[k] < choices[k].size()) break;
                    pick[k] = 0;
                }
                if (k == choices.size()) break;
            }
        }

        if (alts.empty()) {
            chain.rows.resize(chain.states.size());
            chain.absorbing.resize(chain.states.size(), 0);
            chain.rows[s] = {{s, 1.0}};
            chain.absorbing[s] = 1;
            continue;
        }
        if (alts.size() > 1 && opts.policy == NondeterminismPolicy::Reject) {
            std::string msg = "nondeterministic state " + std::to_string(s) + " ";
            msg += "(enabled alternatives:";
            for (const auto& alt : alts) {
                msg += " [";
                msg += alt.label.empty() ? "<unlabeled>" : alt.label;
                msg += "]";
            }
            msg += ")\nstate: ";
            {
                // inline dump; chain.describe_state needs final vectors
                msg += "{";
                for (std::size_t i = 0; i < chain.vars.size(); ++i) {
                    if (i > 0) msg += ", ";
                    msg += chain.vars[i].name + "=" + std::to_string(sv[i]);
                }
                msg += "}";
            }
            throw NondeterministicState(msg);
        }
        double alt_weight = 1.0 / static_cast<double>(alts.size());

        std::unordered_map<std::uint32_t, double> row;
        for (const auto& alt : alts) {
            // cartesian product over branches of the participating commands
            std::vector<std::size_t> pick(alt.parts.size(), 0);
            while (true) {
                double p = alt_weight;
                StateValuation next = sv;
                std::vector<char> written(chain.vars.size(), 0);
                for (std::size_t k = 0; k < alt.parts.size(); ++k) {
                    const auto& br = alt.parts[k]->branches[pick[k]];
                    p *= br.prob;
                    for (const auto& as : *br.updates) {
                        std::size_t vi = chain.var_index.at(as.var);
                        if (written[vi])
                            throw ConflictingAssignment(
                                "synchronised modules both assign '" + as.var + "' on label [" +
                                alt.label + "]");
                        written[vi] = 1;
                        const VarInfo& info = chain.vars[vi];
                        // updates read the pre-transition state
                        Value val = eval_expr(as.value, env);
                        std::int64_t raw = info.is_bool ? (val.as_bool() ? 1 : 0) : val.as_int();
                        if (raw < info.lo || raw > info.hi)
                            throw ModelError("update drives '" + as.var + "' to " +
                                             std::to_string(raw) + ", outside [" +
                                             std::to_string(info.lo) + ".." +
                                             std::to_string(info.hi) + "]");
                        next[vi] = raw;
                    }
                }
                if (p > 0.0) row[intern(next)] += p;
                std::size_t k = 0;
                for (; k < alt.parts.size(); ++k) {
                    if (++pick[k] < alt.parts[k]->branches.size()) break;
                    pick[k] = 0;
                }
                if (k == alt.parts.size()) break;
            }
        }

        chain.rows.resize(chain.states.size());
        chain.absorbing.resize(chain.states.size(), 0);
        auto& out_row = chain.rows[s];
        out_row.reserve(row.size());
        for (const auto& [target, p] : row) out_row.push_back({target, p});
        std::sort(out_row.begin(), out_row.end(),
                  [](const ChainTransition& a, const ChainTransition& b) {
                      return a.target < b.target;
                  });
        double total = 0.0;
        for (const auto& tr : out_row) total += tr.prob;
        if (std::abs(total - 1.0) > 1e-9)
            throw ModelError("outgoing probabilities sum to " + format_double(total) +
                             " in state " + std::to_string(s));
        // a command that loops a state onto itself with probability 1 is as
        // absorbing as a state with no enabled command at all
        if (out_row.size() == 1 && out_row[0].target == s) chain.absorbing[s] = 1;
    }

    chain.rows.resize(chain.states.size());
    chain.absorbing.resize(chain.states.size(), 0);
    return chain;
}

// ---------------------------------------------------------------------------
// termination structure

struct TerminationReport {
    bool terminating = false;
    /// Bottom SCCs that are not single absorbing states.
    std::vector<std::vector<std::uint32_t>> offending;
};

/// Iterative Tarjan; recursion would overflow on long tick chains.
inline std::vector<std::vector<std::uint32_t>> strongly_connected_components(const Chain& chain) {
    const std::size_t n = chain.n_states();
    std::vector<std::int64_t> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::uint32_t> stack;
    std::vector<std::vector<std::uint32_t>> sccs;
    std::int64_t counter = 0;

    struct Frame {
        std::uint32_t v;
        std::size_t edge;
    };
    for (std::uint32_t root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.edge < chain.rows[f.v].size()) {
                std::uint32_t w = chain.rows[f.v][f.edge].target;
                ++f.edge;
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            std::uint32_t v = f.v;
            frames.pop_back();
            if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            if (low[v] == index[v]) {
                std::vector<std::uint32_t> comp;
                while (true) {
                    std::uint32_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                    if (w == v) break;
                }
                std::sort(comp.begin(), comp.end());
                sccs.push_back(std::move(comp));
            }
        }
    }
    return sccs;
}

/// A chain is terminating when every bottom SCC is a single absorbing state;
/// every run is then a finite prefix plus an infinite lasso.
inline TerminationReport classify_terminal(const Chain& chain) {
    auto sccs = strongly_connected_components(chain);
    std::vector<std::size_t> scc_of(chain.n_states());
    for (std::size_t c = 0; c < sccs.size(); ++c)
        for (std::uint32_t v : sccs[c]) scc_of[v] = c;

    TerminationReport report;
    report.terminating = true;
    for (std::size_t c = 0; c < sccs.size(); ++c) {
        bool bottom = true;
        for (std::uint32_t v : sccs[c]) {
            for (const auto& tr : chain.rows[v]) {
                if (scc_of[tr.target] != c) {
                    bottom = false;
                    break;
                }
            }
            if (!bottom) break;
        }
        if (!bottom) continue;
        bool singleton_absorbing = sccs[c].size() == 1 && chain.absorbing[sccs[c][0]];
        if (!singleton_absorbing) {
            report.terminating = false;
            report.offending.push_back(sccs[c]);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// debug dump

inline nlohmann::ordered_json chain_to_json(const Chain& chain) {
    nlohmann::ordered_json j;
    j["initial"] = chain.initial;
    j["states"] = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < chain.n_states(); ++s) {
        nlohmann::ordered_json sj;
        for (std::size_t i = 0; i < chain.vars.size(); ++i) {
            if (chain.vars[i].is_bool)
                sj[chain.vars[i].name] = chain.states[s][i] != 0;
            else
                sj[chain.vars[i].name] = chain.states[s][i];
        }
        j["states"].push_back(std::move(sj));
    }
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : chain.rows) {
        nlohmann::ordered_json rj = nlohmann::ordered_json::array();
        for (const auto& tr : row) rj.push_back({{"to", tr.target}, {"p", tr.prob}});
        j["rows"].push_back(std::move(rj));
    }
    nlohmann::ordered_json abs = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < chain.n_states(); ++s)
        if (chain.absorbing[s]) abs.push_back(s);
    j["absorbing"] = std::move(abs);
    j["stats"] = {{"states", chain.n_states()}, {"transitions", chain.n_transitions()}};
    return j;
}

}  // namespace assurekit

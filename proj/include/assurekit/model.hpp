#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "assurekit/expr.hpp"

namespace assurekit {

struct ConstantDef {
    std::string name;
    Kind kind = Kind::Double;
    ExprPtr value;
};

/// Bounded-int or bool module variable. lo/hi are null for bools.
struct VarDecl {
    std::string name;
    bool is_bool = false;
    ExprPtr lo, hi;
    ExprPtr init;
};

struct Assignment {
    std::string var;
    ExprPtr value;
};

struct Branch {
    ExprPtr prob;  // null means an implicit probability of 1
    std::vector<Assignment> updates;
};

struct Command {
    std::string label;  // empty = unlabeled, acts alone
    ExprPtr guard;
    std::vector<Branch> branches;
};

struct ModuleDef {
    std::string name;
    std::vector<VarDecl> vars;
    std::vector<Command> commands;
};

struct Model {
    std::string name;
    std::vector<ConstantDef> constants;
    std::vector<ModuleDef> modules;
};

/// Evaluated constant bindings, by name.
using ConstantSet = std::map<std::string, Value>;

// ---------------------------------------------------------------------------
// constant evaluation

/// Evaluates all constant definitions (they may reference one another).
inline ConstantSet evaluate_constants(const Model& m) {
    ConstantSet out;
    std::unordered_map<std::string, const ConstantDef*> defs;
    for (const auto& c : m.constants) defs[c.name] = &c;

    std::unordered_set<std::string> in_progress;
    std::function<Value(const std::string&)> resolve = [&](const std::string& name) -> Value {
        auto done = out.find(name);
        if (done != out.end()) return done->second;
        auto it = defs.find(name);
        if (it == defs.end()) throw UnboundIdentifier("unbound identifier '" + name + "'");
        if (!in_progress.insert(name).second)
            throw ModelError("cyclic constant definition involving '" + name + "'");
        Env env = [&](const std::string& n) -> std::optional<Value> { return resolve(n); };
        Value v = eval_expr(it->second->value, env);
        in_progress.erase(name);
        // int literals are accepted for double constants
        if (it->second->kind == Kind::Double && v.kind == Kind::Int)
            v = Value::of_double(static_cast<double>(v.i));
        if ((it->second->kind == Kind::Int && v.kind != Kind::Int) ||
            (it->second->kind == Kind::Double && v.kind != Kind::Double) ||
            (it->second->kind == Kind::Bool && v.kind != Kind::Bool))
            throw KindMismatch("constant '" + name + "' declared " +
                               kind_name(it->second->kind) + " but evaluates to " +
                               kind_name(v.kind));
        out.emplace(name, v);
        return v;
    };
    for (const auto& c : m.constants) resolve(c.name);
    return out;
}

// ---------------------------------------------------------------------------
// validation

namespace detail {

/// Names of constants that (transitively) feed some branch probability
/// expression. Overriding one of these outside [0,1] is rejected.
inline std::set<std::string> probability_constants(const Model& m) {
    // direct references from probability expressions
    std::set<std::string> direct;
    for (const auto& mod : m.modules)
        for (const auto& cmd : mod.commands)
            for (const auto& br : cmd.branches)
                if (br.prob) visit_idents(*br.prob, [&](const std::string& n) { direct.insert(n); });

    // reverse closure over constant definitions: if pGazeTP = 1-pGazeFN feeds a
    // probability, then pGazeFN is probability-typed as well
    std::unordered_map<std::string, std::vector<std::string>> deps;
    for (const auto& c : m.constants)
        visit_idents(*c.value, [&](const std::string& n) { deps[c.name].push_back(n); });

    std::set<std::string> result;
    std::vector<std::string> work(direct.begin(), direct.end());
    while (!work.empty()) {
        std::string n = work.back();
        work.pop_back();
        if (!result.insert(n).second) continue;
        auto it = deps.find(n);
        if (it != deps.end())
            for (const auto& d : it->second) work.push_back(d);
    }
    return result;
}

}  // namespace detail

/// Structural checks: global name uniqueness, identifier resolution, init
/// values inside domains, per-branch assignment uniqueness, per-module
/// variable ownership, probability expressions over constants only.
inline void validate_model(const Model& m) {
    std::unordered_set<std::string> names;
    auto claim = [&](const std::string& n, const char* what) {
        if (!names.insert(n).second)
            throw DuplicateName(std::string("duplicate name '") + n + "' (" + what + ")");
    };
    for (const auto& c : m.constants) claim(c.name, "constant");
    for (const auto& mod : m.modules) {
        claim(mod.name, "module");
        for (const auto& v : mod.vars) claim(v.name, "variable");
    }

    std::unordered_set<std::string> const_names;
    for (const auto& c : m.constants) const_names.insert(c.name);
    std::unordered_map<std::string, std::string> var_owner;
    for (const auto& mod : m.modules)
        for (const auto& v : mod.vars) var_owner[v.name] = mod.name;

    auto check_bound = [&](const ExprPtr& e, const std::string& where) {
        if (!e) return;
        visit_idents(*e, [&](const std::string& n) {
            if (!const_names.count(n) && !var_owner.count(n))
                throw UnboundIdentifier("unbound identifier '" + n + "' in " + where);
        });
    };
    auto check_consts_only = [&](const ExprPtr& e, const std::string& where) {
        if (!e) return;
        visit_idents(*e, [&](const std::string& n) {
            if (var_owner.count(n))
                throw ModelError("probability expression in " + where +
                                 " references state variable '" + n + "'");
            if (!const_names.count(n))
                throw UnboundIdentifier("unbound identifier '" + n + "' in " + where);
        });
    };

    for (const auto& c : m.constants) check_bound(c.value, "constant " + c.name);

    ConstantSet consts = evaluate_constants(m);
    Env const_env = [&](const std::string& n) -> std::optional<Value> {
        auto it = consts.find(n);
        if (it == consts.end()) return std::nullopt;
        return it->second;
    };

    for (const auto& mod : m.modules) {
        for (const auto& v : mod.vars) {
            check_bound(v.lo, "domain of " + v.name);
            check_bound(v.hi, "domain of " + v.name);
            check_bound(v.init, "init of " + v.name);
            Value init = eval_expr(v.init, const_env);
            if (v.is_bool) {
                if (init.kind != Kind::Bool)
                    throw KindMismatch("init of bool variable '" + v.name + "' is not bool");
            } else {
                std::int64_t lo = eval_expr(v.lo, const_env).as_int();
                std::int64_t hi = eval_expr(v.hi, const_env).as_int();
                if (lo > hi)
                    throw ModelError("empty domain [" + std::to_string(lo) + ".." +
                                     std::to_string(hi) + "] for '" + v.name + "'");
                std::int64_t iv = init.as_int();
                if (iv < lo || iv > hi)
                    throw ModelError("init value " + std::to_string(iv) + " of '" + v.name +
                                     "' outside domain [" + std::to_string(lo) + ".." +
                                     std::to_string(hi) + "]");
            }
        }
        for (std::size_t ci = 0; ci < mod.commands.size(); ++ci) {
            const auto& cmd = mod.commands[ci];
            std::string where = "module " + mod.name + ", command " + std::to_string(ci + 1);
            check_bound(cmd.guard, where + " guard");
            for (const auto& br : cmd.branches) {
                check_consts_only(br.prob, where);
                std::unordered_set<std::string> written;
                for (const auto& as : br.updates) {
                    auto owner = var_owner.find(as.var);
                    if (owner == var_owner.end())
                        throw UnboundIdentifier("assignment to unknown variable '" + as.var +
                                                "' in " + where);
                    if (owner->second != mod.name)
                        throw ModelError("module " + mod.name + " cannot assign variable '" +
                                         as.var + "' owned by module " + owner->second);
                    if (!written.insert(as.var).second)
                        throw ModelError("branch assigns variable '" + as.var + "' twice in " +
                                         where);
                    check_bound(as.value, where + " update");
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// set_constants

/// Returns a copy of the model with the named constants rebound to literal
/// values; constants defined as expressions over them re-evaluate.
inline Model set_constants(const Model& m, const ConstantSet& overrides) {
    if (overrides.empty()) return m;
    std::unordered_map<std::string, const ConstantDef*> defs;
    for (const auto& c : m.constants) defs[c.name] = &c;

    std::set<std::string> prob_consts = detail::probability_constants(m);

    Model out = m;
    for (const auto& [name, value] : overrides) {
        auto it = defs.find(name);
        if (it == defs.end()) throw UnknownConstant("unknown constant '" + name + "'");
        Kind declared = it->second->kind;
        Value v = value;
        if (declared == Kind::Double && v.kind == Kind::Int)
            v = Value::of_double(static_cast<double>(v.i));
        if ((declared == Kind::Int && v.kind != Kind::Int) ||
            (declared == Kind::Double && v.kind != Kind::Double) ||
            (declared == Kind::Bool && v.kind != Kind::Bool))
            throw KindMismatch("constant '" + name + "' is " + kind_name(declared) +
                               ", override is " + kind_name(v.kind));
        if (prob_consts.count(name) && v.kind == Kind::Double && (v.d < 0.0 || v.d > 1.0))
            throw ProbabilityOutOfRange("override " + name + "=" + format_double(v.d) +
                                        " outside [0,1] for a probability constant");
        for (auto& c : out.constants)
            if (c.name == name) c.value = Expr::lit(v);
    }
    validate_model(out);
    return out;
}

// ---------------------------------------------------------------------------
// canonical printing

/// Canonical text form; parse(print(parse(text))) == parse(text).
inline std::string print_model(const Model& m) {
    std::string out;
    for (const auto& c : m.constants) {
        out += "const ";
        out += kind_name(c.kind);
        out += " " + c.name + " = " + print_expr(c.value) + ";\n";
    }
    if (!m.constants.empty()) out += "\n";
    for (const auto& mod : m.modules) {
        out += "module " + mod.name + "\n";
        for (const auto& v : mod.vars) {
            out += "  " + v.name + " : ";
            if (v.is_bool)
                out += "bool";
            else
                out += "[" + print_expr(v.lo) + ".." + print_expr(v.hi) + "]";
            out += " init " + print_expr(v.init) + ";\n";
        }
        for (const auto& cmd : mod.commands) {
            out += "  [" + cmd.label + "] " + print_expr(cmd.guard) + " -> ";
            for (std::size_t bi = 0; bi < cmd.branches.size(); ++bi) {
                const auto& br = cmd.branches[bi];
                if (bi > 0) out += " + ";
                if (br.prob) out += print_expr(br.prob) + ": ";
                if (br.updates.empty()) {
                    out += "true";
                } else {
                    for (std::size_t ai = 0; ai < br.updates.size(); ++ai) {
                        if (ai > 0) out += " & ";
                        out += "(" + br.updates[ai].var + "'=" +
                               print_expr(br.updates[ai].value) + ")";
                    }
                }
            }
            out += ";\n";
        }
        out += "endmodule\n\n";
    }
    return out;
}

}  // namespace assurekit

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "assurekit/chain.hpp"
#include "assurekit/parse.hpp"

namespace assurekit {

/// One eventuality inside a GloballyAny disjunction: F phi, or F (phi U psi).
struct Eventuality {
    bool is_until = false;
    ExprPtr phi;
    ExprPtr psi;  // null unless is_until
};

/// The six supported path-formula patterns. phi/psi are boolean state
/// predicates over model variables and constants.
struct PathFormula {
    enum class Pattern {
        Eventually,   // F phi
        Globally,     // G phi
        Response,     // G (phi => F psi)
        NextSafety,   // G (phi => !X psi)
        Until,        // phi U psi
        GloballyAny,  // G (E1 | E2 | ...)
    };
    Pattern pattern = Pattern::Eventually;
    ExprPtr phi, psi;
    std::vector<Eventuality> eventualities;  // GloballyAny only
};

inline const char* pattern_name(PathFormula::Pattern p) {
    switch (p) {
        case PathFormula::Pattern::Eventually: return "Eventually";
        case PathFormula::Pattern::Globally: return "Globally";
        case PathFormula::Pattern::Response: return "Response";
        case PathFormula::Pattern::NextSafety: return "NextSafety";
        case PathFormula::Pattern::Until: return "Until";
        case PathFormula::Pattern::GloballyAny: return "GloballyAny";
    }
    return "?";
}

enum class BoundOp { Ge, Le, Gt, Lt };

struct PropertyQuery {
    enum class Mode { Query, Bound };
    Mode mode = Mode::Query;
    BoundOp bound_op = BoundOp::Ge;
    double bound = 0.0;
    PathFormula path;
    std::string text;  // source form, kept for reports
};

namespace detail {

// Intermediate temporal AST; classified into the six patterns afterwards.
struct TFormula;
using TPtr = std::shared_ptr<TFormula>;
struct TFormula {
    enum class Op { Atom, Not, And, Or, Implies, F, G, X, U };
    Op op = Op::Atom;
    ExprPtr atom;
    TPtr lhs, rhs;

    static TPtr make_atom(ExprPtr e) {
        auto t = std::make_shared<TFormula>();
        t->op = Op::Atom;
        t->atom = std::move(e);
        return t;
    }
    static TPtr unary(Op op, TPtr a) {
        auto t = std::make_shared<TFormula>();
        t->op = op;
        t->lhs = std::move(a);
        return t;
    }
    static TPtr binary(Op op, TPtr a, TPtr b) {
        auto t = std::make_shared<TFormula>();
        t->op = op;
        t->lhs = std::move(a);
        t->rhs = std::move(b);
        return t;
    }
};

inline bool is_temporal_free(const TFormula& t) {
    switch (t.op) {
        case TFormula::Op::Atom: return true;
        case TFormula::Op::F:
        case TFormula::Op::G:
        case TFormula::Op::X:
        case TFormula::Op::U: return false;
        default:
            return (!t.lhs || is_temporal_free(*t.lhs)) && (!t.rhs || is_temporal_free(*t.rhs));
    }
}

/// Rebuilds a pure (temporal-free) subtree as a boolean state predicate.
inline ExprPtr to_predicate(const TFormula& t) {
    switch (t.op) {
        case TFormula::Op::Atom: return t.atom;
        case TFormula::Op::Not: return Expr::unary(Expr::Op::Not, to_predicate(*t.lhs));
        case TFormula::Op::And:
            return Expr::binary(Expr::Op::And, to_predicate(*t.lhs), to_predicate(*t.rhs));
        case TFormula::Op::Or:
            return Expr::binary(Expr::Op::Or, to_predicate(*t.lhs), to_predicate(*t.rhs));
        case TFormula::Op::Implies:
            return Expr::binary(Expr::Op::Implies, to_predicate(*t.lhs), to_predicate(*t.rhs));
        default: throw UnsupportedPattern("temporal operator inside a state predicate");
    }
}

// Temporal grammar (F, G, X, U reserved within property brackets):
//   timplies := tor ('=>' timplies)?
//   tor      := tuntil ('|' tuntil)*
//   tuntil   := tand ('U' tand)?
//   tand     := tunary ('&' tunary)*
//   tunary   := ('!'|'F'|'G'|'X') tunary | tprimary
//   tprimary := '(' timplies ')' | comparison-expression
inline TPtr parse_tformula(TokenStream& ts);

inline bool is_temporal_ident(const TokenStream& ts, std::size_t ahead = 0) {
    return ts.is_ident("F", ahead) || ts.is_ident("G", ahead) || ts.is_ident("X", ahead) ||
           ts.is_ident("U", ahead);
}

inline TPtr parse_tprimary(TokenStream& ts) {
    if (ts.is_punct("(")) {
        ts.next();
        TPtr t = parse_tformula(ts);
        ts.expect_punct(")");
        return t;
    }
    // a bare comparison / arithmetic atom, handled by the expression parser
    return TFormula::make_atom(parse_rel(ts));
}

inline TPtr parse_tunary(TokenStream& ts) {
    if (ts.accept_punct("!")) return TFormula::unary(TFormula::Op::Not, parse_tunary(ts));
    if (ts.accept_ident("F")) return TFormula::unary(TFormula::Op::F, parse_tunary(ts));
    if (ts.accept_ident("G")) return TFormula::unary(TFormula::Op::G, parse_tunary(ts));
    if (ts.accept_ident("X")) return TFormula::unary(TFormula::Op::X, parse_tunary(ts));
    return parse_tprimary(ts);
}

inline TPtr parse_tand(TokenStream& ts) {
    TPtr t = parse_tunary(ts);
    while (ts.accept_punct("&")) t = TFormula::binary(TFormula::Op::And, t, parse_tunary(ts));
    return t;
}

inline TPtr parse_tuntil(TokenStream& ts) {
    TPtr t = parse_tand(ts);
    if (ts.accept_ident("U")) return TFormula::binary(TFormula::Op::U, t, parse_tand(ts));
    return t;
}

inline TPtr parse_tor(TokenStream& ts) {
    TPtr t = parse_tuntil(ts);
    while (ts.accept_punct("|")) t = TFormula::binary(TFormula::Op::Or, t, parse_tuntil(ts));
    return t;
}

inline TPtr parse_tformula(TokenStream& ts) {
    TPtr t = parse_tor(ts);
    if (ts.accept_punct("=>")) return TFormula::binary(TFormula::Op::Implies, t, parse_tformula(ts));
    return t;
}

[[noreturn]] inline void unsupported(const TFormula&) {
    throw UnsupportedPattern(
        "unsupported path formula; supported patterns: F phi | G phi | G (phi => F psi) | "
        "G (phi => !X psi) | phi U psi | G ((F phi | F (phi U psi)) | ...)");
}

/// Collects the disjuncts of a GloballyAny body; returns false if some
/// disjunct is not an eventuality of the two admitted shapes.
inline bool collect_eventualities(const TFormula& t, std::vector<Eventuality>& out) {
    if (t.op == TFormula::Op::Or)
        return collect_eventualities(*t.lhs, out) && collect_eventualities(*t.rhs, out);
    if (t.op != TFormula::Op::F) return false;
    const TFormula& body = *t.lhs;
    if (body.op == TFormula::Op::U) {
        if (!is_temporal_free(*body.lhs) || !is_temporal_free(*body.rhs)) return false;
        out.push_back({true, to_predicate(*body.lhs), to_predicate(*body.rhs)});
        return true;
    }
    if (!is_temporal_free(body)) return false;
    out.push_back({false, to_predicate(body), nullptr});
    return true;
}

inline PathFormula classify(const TFormula& t) {
    PathFormula pf;
    if (t.op == TFormula::Op::F) {
        if (!is_temporal_free(*t.lhs)) unsupported(t);
        pf.pattern = PathFormula::Pattern::Eventually;
        pf.phi = to_predicate(*t.lhs);
        return pf;
    }
    if (t.op == TFormula::Op::U) {
        if (!is_temporal_free(*t.lhs) || !is_temporal_free(*t.rhs)) unsupported(t);
        pf.pattern = PathFormula::Pattern::Until;
        pf.phi = to_predicate(*t.lhs);
        pf.psi = to_predicate(*t.rhs);
        return pf;
    }
    if (t.op != TFormula::Op::G) unsupported(t);
    const TFormula& body = *t.lhs;
    if (is_temporal_free(body)) {
        pf.pattern = PathFormula::Pattern::Globally;
        pf.phi = to_predicate(body);
        return pf;
    }
    if (body.op == TFormula::Op::Implies && is_temporal_free(*body.lhs)) {
        const TFormula& rhs = *body.rhs;
        if (rhs.op == TFormula::Op::F && is_temporal_free(*rhs.lhs)) {
            pf.pattern = PathFormula::Pattern::Response;
            pf.phi = to_predicate(*body.lhs);
            pf.psi = to_predicate(*rhs.lhs);
            return pf;
        }
        if (rhs.op == TFormula::Op::Not && rhs.lhs->op == TFormula::Op::X &&
            is_temporal_free(*rhs.lhs->lhs)) {
            pf.pattern = PathFormula::Pattern::NextSafety;
            pf.phi = to_predicate(*body.lhs);
            pf.psi = to_predicate(*rhs.lhs->lhs);
            return pf;
        }
        unsupported(t);
    }
    std::vector<Eventuality> evs;
    if (collect_eventualities(body, evs) && !evs.empty()) {
        pf.pattern = PathFormula::Pattern::GloballyAny;
        pf.eventualities = std::move(evs);
        return pf;
    }
    unsupported(t);
}

}  // namespace detail

/// Parses `P=? [ path ]` or `P>=b [ path ]` (and <=, >, <) into a typed query.
inline PropertyQuery parse_property(std::string_view text) {
    detail::TokenStream ts(detail::lex(text));
    PropertyQuery q;
    q.text = std::string(text);
    ts.expect_ident("P");
    if (ts.accept_punct("=?")) {
        q.mode = PropertyQuery::Mode::Query;
    } else {
        q.mode = PropertyQuery::Mode::Bound;
        if (ts.accept_punct(">="))
            q.bound_op = BoundOp::Ge;
        else if (ts.accept_punct("<="))
            q.bound_op = BoundOp::Le;
        else if (ts.accept_punct(">"))
            q.bound_op = BoundOp::Gt;
        else if (ts.accept_punct("<"))
            q.bound_op = BoundOp::Lt;
        else
            ts.fail("expected '=?', '>=', '<=', '>' or '<' after P");
        const auto& t = ts.peek();
        if (t.type == detail::Token::Type::Double)
            q.bound = t.double_value;
        else if (t.type == detail::Token::Type::Int)
            q.bound = static_cast<double>(t.int_value);
        else
            ts.fail("expected a probability bound");
        ts.next();
        if (q.bound < 0.0 || q.bound > 1.0)
            throw ProbabilityOutOfRange("probability bound " + format_double(q.bound) +
                                        " outside [0,1]");
    }
    ts.expect_punct("[");
    auto t = detail::parse_tformula(ts);
    ts.expect_punct("]");
    if (!ts.at_end()) ts.fail("trailing input after property");
    q.path = detail::classify(*t);
    return q;
}

/// Parses a .qry file: one query per line, // comments, blank lines ignored.
/// A comment on a query line is kept as that query's annotation.
struct PropertyLine {
    PropertyQuery query;
    std::string annotation;
};

inline std::vector<PropertyLine> parse_property_file(std::string_view text) {
    std::vector<PropertyLine> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        std::string annotation;
        std::size_t comment = line.find("//");
        if (comment != std::string_view::npos) {
            annotation = std::string(line.substr(comment + 2));
            while (!annotation.empty() && annotation.front() == ' ') annotation.erase(0, 1);
            while (!annotation.empty() &&
                   (annotation.back() == ' ' || annotation.back() == '\r'))
                annotation.pop_back();
            line = line.substr(0, comment);
        }
        std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string_view::npos) continue;
        std::size_t end = line.find_last_not_of(" \t\r");
        out.push_back({parse_property(line.substr(begin, end - begin + 1)), annotation});
    }
    return out;
}

/// Every atom identifier must resolve to a variable or constant of the model.
inline void resolve_atoms(const PathFormula& pf, const Chain& chain) {
    auto check = [&](const ExprPtr& e) {
        if (!e) return;
        visit_idents(*e, [&](const std::string& n) {
            if (!chain.var_index.count(n) && !chain.constants.count(n))
                throw AtomResolutionError("property atom references unknown identifier '" + n +
                                          "'");
        });
    };
    check(pf.phi);
    check(pf.psi);
    for (const auto& ev : pf.eventualities) {
        check(ev.phi);
        check(ev.psi);
    }
}

}  // namespace assurekit

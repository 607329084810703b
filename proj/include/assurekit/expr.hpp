#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "assurekit/errors.hpp"

namespace assurekit {

enum class Kind { Int, Double, Bool };

inline const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Int: return "int";
        case Kind::Double: return "double";
        case Kind::Bool: return "bool";
    }
    return "?";
}

/// A runtime value: integers stay exact, `/` always yields a double.
struct Value {
    Kind kind = Kind::Int;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;

    static Value of_int(std::int64_t v) { return Value{Kind::Int, v, 0.0, false}; }
    static Value of_double(double v) { return Value{Kind::Double, 0, v, false}; }
    static Value of_bool(bool v) { return Value{Kind::Bool, 0, 0.0, v}; }

    bool is_numeric() const { return kind != Kind::Bool; }

    double as_double() const {
        if (kind == Kind::Int) return static_cast<double>(i);
        if (kind == Kind::Double) return d;
        throw KindMismatch("expected a numeric value, got bool");
    }

    std::int64_t as_int() const {
        if (kind == Kind::Int) return i;
        throw KindMismatch("expected an int value");
    }

    bool as_bool() const {
        if (kind == Kind::Bool) return b;
        throw KindMismatch("expected a bool value, got " + std::string(kind_name(kind)));
    }

    bool operator==(const Value& o) const {
        if (kind == Kind::Bool || o.kind == Kind::Bool)
            return kind == o.kind && b == o.b;
        if (kind == Kind::Int && o.kind == Kind::Int) return i == o.i;
        return as_double() == o.as_double();
    }
};

/// Prints a double so that parsing the output recovers the identical bits.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    // keep a decimal marker so the literal re-parses as a double
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

inline std::string format_value(const Value& v) {
    switch (v.kind) {
        case Kind::Int: return std::to_string(v.i);
        case Kind::Double: return format_double(v.d);
        case Kind::Bool: return v.b ? "true" : "false";
    }
    return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression AST shared by the model language and property atoms.
struct Expr {
    enum class Op {
        Literal, Ident,
        Neg, Not,
        Add, Sub, Mul, Div,
        Lt, Le, Gt, Ge, Eq, Ne,
        And, Or, Implies
    };

    Op op = Op::Literal;
    Value literal;
    std::string name;  // Ident only
    ExprPtr lhs, rhs;

    static ExprPtr lit(Value v) {
        auto e = std::make_shared<Expr>();
        e->op = Op::Literal;
        e->literal = v;
        return e;
    }
    static ExprPtr ident(std::string n) {
        auto e = std::make_shared<Expr>();
        e->op = Op::Ident;
        e->name = std::move(n);
        return e;
    }
    static ExprPtr unary(Op op, ExprPtr a) {
        auto e = std::make_shared<Expr>();
        e->op = op;
        e->lhs = std::move(a);
        return e;
    }
    static ExprPtr binary(Op op, ExprPtr a, ExprPtr b) {
        auto e = std::make_shared<Expr>();
        e->op = op;
        e->lhs = std::move(a);
        e->rhs = std::move(b);
        return e;
    }
};

/// Identifier resolution hook used by eval_expr. Returns nullopt for unknowns.
using Env = std::function<std::optional<Value>(const std::string&)>;

namespace detail {

inline Value numeric_binop(Expr::Op op, const Value& a, const Value& b) {
    if (!a.is_numeric() || !b.is_numeric())
        throw KindMismatch("arithmetic on non-numeric operand");
    if (op == Expr::Op::Div) {
        double denom = b.as_double();
        if (denom == 0.0) throw DivisionByZero("division by zero");
        return Value::of_double(a.as_double() / denom);
    }
    if (a.kind == Kind::Int && b.kind == Kind::Int) {
        switch (op) {
            case Expr::Op::Add: return Value::of_int(a.i + b.i);
            case Expr::Op::Sub: return Value::of_int(a.i - b.i);
            case Expr::Op::Mul: return Value::of_int(a.i * b.i);
            default: break;
        }
    }
    double x = a.as_double(), y = b.as_double();
    switch (op) {
        case Expr::Op::Add: return Value::of_double(x + y);
        case Expr::Op::Sub: return Value::of_double(x - y);
        case Expr::Op::Mul: return Value::of_double(x * y);
        default: break;
    }
    throw Error("unreachable numeric op");
}

inline bool compare(Expr::Op op, const Value& a, const Value& b) {
    if (a.kind == Kind::Bool || b.kind == Kind::Bool) {
        if (a.kind != Kind::Bool || b.kind != Kind::Bool)
            throw KindMismatch("cannot compare bool with number");
        switch (op) {
            case Expr::Op::Eq: return a.b == b.b;
            case Expr::Op::Ne: return a.b != b.b;
            default: throw KindMismatch("ordered comparison on bool");
        }
    }
    if (a.kind == Kind::Int && b.kind == Kind::Int) {
        switch (op) {
            case Expr::Op::Lt: return a.i < b.i;
            case Expr::Op::Le: return a.i <= b.i;
            case Expr::Op::Gt: return a.i > b.i;
            case Expr::Op::Ge: return a.i >= b.i;
            case Expr::Op::Eq: return a.i == b.i;
            case Expr::Op::Ne: return a.i != b.i;
            default: break;
        }
    }
    double x = a.as_double(), y = b.as_double();
    switch (op) {
        case Expr::Op::Lt: return x < y;
        case Expr::Op::Le: return x <= y;
        case Expr::Op::Gt: return x > y;
        case Expr::Op::Ge: return x >= y;
        case Expr::Op::Eq: return x == y;
        case Expr::Op::Ne: return x != y;
        default: break;
    }
    throw Error("unreachable comparison");
}

}  // namespace detail

inline Value eval_expr(const Expr& e, const Env& env) {
    using Op = Expr::Op;
    switch (e.op) {
        case Op::Literal: return e.literal;
        case Op::Ident: {
            auto v = env(e.name);
            if (!v) throw UnboundIdentifier("unbound identifier '" + e.name + "'");
            return *v;
        }
        case Op::Neg: {
            Value a = eval_expr(*e.lhs, env);
            if (a.kind == Kind::Int) return Value::of_int(-a.i);
            return Value::of_double(-a.as_double());
        }
        case Op::Not: return Value::of_bool(!eval_expr(*e.lhs, env).as_bool());
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            return detail::numeric_binop(e.op, eval_expr(*e.lhs, env), eval_expr(*e.rhs, env));
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
        case Op::Eq:
        case Op::Ne:
            return Value::of_bool(detail::compare(e.op, eval_expr(*e.lhs, env), eval_expr(*e.rhs, env)));
        case Op::And:
            return Value::of_bool(eval_expr(*e.lhs, env).as_bool() && eval_expr(*e.rhs, env).as_bool());
        case Op::Or:
            return Value::of_bool(eval_expr(*e.lhs, env).as_bool() || eval_expr(*e.rhs, env).as_bool());
        case Op::Implies:
            return Value::of_bool(!eval_expr(*e.lhs, env).as_bool() || eval_expr(*e.rhs, env).as_bool());
    }
    throw Error("unreachable expr op");
}

inline Value eval_expr(const ExprPtr& e, const Env& env) { return eval_expr(*e, env); }

/// Calls fn for every identifier occurring in e.
inline void visit_idents(const Expr& e, const std::function<void(const std::string&)>& fn) {
    if (e.op == Expr::Op::Ident) fn(e.name);
    if (e.lhs) visit_idents(*e.lhs, fn);
    if (e.rhs) visit_idents(*e.rhs, fn);
}

namespace detail {

inline int precedence(Expr::Op op) {
    using Op = Expr::Op;
    switch (op) {
        case Op::Implies: return 1;
        case Op::Or: return 2;
        case Op::And: return 3;
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
        case Op::Eq:
        case Op::Ne: return 4;
        case Op::Add:
        case Op::Sub: return 5;
        case Op::Mul:
        case Op::Div: return 6;
        case Op::Neg:
        case Op::Not: return 7;
        default: return 8;
    }
}

inline const char* op_token(Expr::Op op) {
    using Op = Expr::Op;
    switch (op) {
        case Op::Add: return "+";
        case Op::Sub: return "-";
        case Op::Mul: return "*";
        case Op::Div: return "/";
        case Op::Lt: return "<";
        case Op::Le: return "<=";
        case Op::Gt: return ">";
        case Op::Ge: return ">=";
        case Op::Eq: return "=";
        case Op::Ne: return "!=";
        case Op::And: return "&";
        case Op::Or: return "|";
        case Op::Implies: return "=>";
        default: return "?";
    }
}

inline void print_expr_rec(const Expr& e, std::string& out, int parent_prec) {
    using Op = Expr::Op;
    int prec = precedence(e.op);
    bool paren = prec < parent_prec;
    if (e.op == Op::Literal) {
        out += format_value(e.literal);
        return;
    }
    if (e.op == Op::Ident) {
        out += e.name;
        return;
    }
    if (paren) out += "(";
    if (e.op == Op::Neg || e.op == Op::Not) {
        out += (e.op == Op::Neg) ? "-" : "!";
        print_expr_rec(*e.lhs, out, prec + 1);
    } else {
        print_expr_rec(*e.lhs, out, prec);
        out += op_token(e.op);
        // right operand gets one level higher so a-b-c prints left-assoc
        print_expr_rec(*e.rhs, out, prec + 1);
    }
    if (paren) out += ")";
}

}  // namespace detail

inline std::string print_expr(const Expr& e) {
    std::string out;
    detail::print_expr_rec(e, out, 0);
    return out;
}

inline std::string print_expr(const ExprPtr& e) { return print_expr(*e); }

}  // namespace assurekit

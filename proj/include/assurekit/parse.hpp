#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "assurekit/model.hpp"

namespace assurekit {

namespace detail {

struct Token {
    enum class Type { Ident, Int, Double, Punct, End };
    Type type = Type::End;
    std::string text;
    std::int64_t int_value = 0;
    double double_value = 0.0;
    int line = 1, column = 1;
};

/// Tokenizes model/property source. `//` comments run to end of line.
inline std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (i < src.size() && src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.type = Token::Type::Ident;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            bool is_double = false;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            // '..' is the range separator, a lone '.' continues a double literal
            if (j < src.size() && src[j] == '.' && !(j + 1 < src.size() && src[j + 1] == '.')) {
                is_double = true;
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    is_double = true;
                    j = k;
                    while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                }
            }
            std::string text(src.substr(i, j - i));
            t.text = text;
            if (is_double) {
                t.type = Token::Type::Double;
                t.double_value = std::stod(text);
            } else {
                t.type = Token::Type::Int;
                t.int_value = std::stoll(text);
            }
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        // multi-char punctuation first
        static const char* two_char[] = {"->", "..", "<=", ">=", "!=", "=>", "=?"};
        bool matched = false;
        for (const char* p : two_char) {
            if (src.substr(i, 2) == p) {
                t.type = Token::Type::Punct;
                t.text = p;
                advance(2);
                out.push_back(std::move(t));
                matched = true;
                break;
            }
        }
        if (matched) continue;
        static const std::string one_char = "()[];:'+-*/&|!=<>,";
        if (one_char.find(c) != std::string::npos) {
            t.type = Token::Type::Punct;
            t.text = std::string(1, c);
            advance(1);
            out.push_back(std::move(t));
            continue;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
    }
    Token end;
    end.type = Token::Type::End;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

/// Token cursor shared by the model and property parsers.
class TokenStream {
  public:
    explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t idx = pos_ + ahead;
        if (idx >= tokens_.size()) idx = tokens_.size() - 1;
        return tokens_[idx];
    }
    const Token& next() {
        const Token& t = peek();
        if (t.type != Token::Type::End) ++pos_;
        return t;
    }
    bool at_end() const { return peek().type == Token::Type::End; }

    bool is_punct(const char* p, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.type == Token::Type::Punct && t.text == p;
    }
    bool is_ident(const char* name, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.type == Token::Type::Ident && t.text == name;
    }
    bool accept_punct(const char* p) {
        if (!is_punct(p)) return false;
        next();
        return true;
    }
    bool accept_ident(const char* name) {
        if (!is_ident(name)) return false;
        next();
        return true;
    }
    void expect_punct(const char* p) {
        if (!accept_punct(p)) fail(std::string("expected '") + p + "'");
    }
    void expect_ident(const char* name) {
        if (!accept_ident(name)) fail(std::string("expected '") + name + "'");
    }
    std::string expect_name() {
        const Token& t = peek();
        if (t.type != Token::Type::Ident) fail("expected an identifier");
        return next().text;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        std::string got = t.type == Token::Type::End ? "end of input" : "'" + t.text + "'";
        throw SyntaxError(msg + ", got " + got, t.line, t.column);
    }

  private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

// Expression grammar, lowest precedence first:
//   implies := or ('=>' implies)?
//   or      := and ('|' and)*
//   and     := rel ('&' rel)*
//   rel     := sum (('='|'!='|'<'|'<='|'>'|'>=') sum)?
//   sum     := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := ('-'|'!') unary | primary
//   primary := literal | ident | '(' implies ')'
inline ExprPtr parse_expr(TokenStream& ts);

inline ExprPtr parse_primary(TokenStream& ts) {
    const Token& t = ts.peek();
    if (t.type == Token::Type::Int) {
        ts.next();
        return Expr::lit(Value::of_int(t.int_value));
    }
    if (t.type == Token::Type::Double) {
        ts.next();
        return Expr::lit(Value::of_double(t.double_value));
    }
    if (t.type == Token::Type::Ident) {
        if (t.text == "true") {
            ts.next();
            return Expr::lit(Value::of_bool(true));
        }
        if (t.text == "false") {
            ts.next();
            return Expr::lit(Value::of_bool(false));
        }
        ts.next();
        return Expr::ident(t.text);
    }
    if (ts.accept_punct("(")) {
        ExprPtr e = parse_expr(ts);
        ts.expect_punct(")");
        return e;
    }
    ts.fail("expected an expression");
}

inline ExprPtr parse_unary(TokenStream& ts) {
    if (ts.accept_punct("-")) return Expr::unary(Expr::Op::Neg, parse_unary(ts));
    if (ts.accept_punct("!")) return Expr::unary(Expr::Op::Not, parse_unary(ts));
    return parse_primary(ts);
}

inline ExprPtr parse_term(TokenStream& ts) {
    ExprPtr e = parse_unary(ts);
    while (true) {
        if (ts.accept_punct("*"))
            e = Expr::binary(Expr::Op::Mul, e, parse_unary(ts));
        else if (ts.accept_punct("/"))
            e = Expr::binary(Expr::Op::Div, e, parse_unary(ts));
        else
            return e;
    }
}

inline ExprPtr parse_sum(TokenStream& ts) {
    ExprPtr e = parse_term(ts);
    while (true) {
        if (ts.accept_punct("+"))
            e = Expr::binary(Expr::Op::Add, e, parse_term(ts));
        else if (ts.accept_punct("-"))
            e = Expr::binary(Expr::Op::Sub, e, parse_term(ts));
        else
            return e;
    }
}

inline ExprPtr parse_rel(TokenStream& ts) {
    ExprPtr e = parse_sum(ts);
    Expr::Op op;
    if (ts.is_punct("="))
        op = Expr::Op::Eq;
    else if (ts.is_punct("!="))
        op = Expr::Op::Ne;
    else if (ts.is_punct("<="))
        op = Expr::Op::Le;
    else if (ts.is_punct(">="))
        op = Expr::Op::Ge;
    else if (ts.is_punct("<"))
        op = Expr::Op::Lt;
    else if (ts.is_punct(">"))
        op = Expr::Op::Gt;
    else
        return e;
    ts.next();
    return Expr::binary(op, e, parse_sum(ts));
}

inline ExprPtr parse_and(TokenStream& ts) {
    ExprPtr e = parse_rel(ts);
    while (ts.accept_punct("&")) e = Expr::binary(Expr::Op::And, e, parse_rel(ts));
    return e;
}

inline ExprPtr parse_or(TokenStream& ts) {
    ExprPtr e = parse_and(ts);
    while (ts.accept_punct("|")) e = Expr::binary(Expr::Op::Or, e, parse_and(ts));
    return e;
}

inline ExprPtr parse_expr(TokenStream& ts) {
    ExprPtr e = parse_or(ts);
    if (ts.accept_punct("=>")) return Expr::binary(Expr::Op::Implies, e, parse_expr(ts));
    return e;
}

inline Kind parse_kind(TokenStream& ts) {
    if (ts.accept_ident("int")) return Kind::Int;
    if (ts.accept_ident("double")) return Kind::Double;
    if (ts.accept_ident("bool")) return Kind::Bool;
    ts.fail("expected 'int', 'double' or 'bool'");
}

// update := '(' NAME ''' '=' expr ')'
inline Assignment parse_update(TokenStream& ts) {
    ts.expect_punct("(");
    Assignment a;
    a.var = ts.expect_name();
    ts.expect_punct("'");
    ts.expect_punct("=");
    a.value = parse_expr(ts);
    ts.expect_punct(")");
    return a;
}

// branch := [prob ':'] ('true' | update ('&' update)*)
inline Branch parse_branch(TokenStream& ts) {
    Branch br;
    // '(' NAME ''' starts an update; anything else must be a probability
    bool starts_update =
        ts.is_punct("(") && ts.peek(1).type == Token::Type::Ident && ts.is_punct("'", 2);
    if (ts.is_ident("true")) {
        ts.next();
        return br;
    }
    if (!starts_update) {
        br.prob = parse_expr(ts);
        ts.expect_punct(":");
        if (ts.accept_ident("true")) return br;
    }
    br.updates.push_back(parse_update(ts));
    while (ts.accept_punct("&")) br.updates.push_back(parse_update(ts));
    return br;
}

inline Command parse_command(TokenStream& ts) {
    Command cmd;
    ts.expect_punct("[");
    if (!ts.is_punct("]")) cmd.label = ts.expect_name();
    ts.expect_punct("]");
    cmd.guard = parse_expr(ts);
    ts.expect_punct("->");
    cmd.branches.push_back(parse_branch(ts));
    while (ts.accept_punct("+")) cmd.branches.push_back(parse_branch(ts));
    ts.expect_punct(";");
    return cmd;
}

inline ModuleDef parse_module(TokenStream& ts) {
    ModuleDef mod;
    mod.name = ts.expect_name();
    while (!ts.is_ident("endmodule")) {
        if (ts.at_end()) ts.fail("expected 'endmodule'");
        if (ts.is_punct("[")) {
            mod.commands.push_back(parse_command(ts));
            continue;
        }
        VarDecl v;
        v.name = ts.expect_name();
        ts.expect_punct(":");
        if (ts.accept_ident("bool")) {
            v.is_bool = true;
        } else {
            ts.expect_punct("[");
            v.lo = parse_expr(ts);
            ts.expect_punct("..");
            v.hi = parse_expr(ts);
            ts.expect_punct("]");
        }
        ts.expect_ident("init");
        v.init = parse_expr(ts);
        ts.expect_punct(";");
        mod.vars.push_back(std::move(v));
    }
    ts.expect_ident("endmodule");
    return mod;
}

}  // namespace detail

/// Parses guarded-command model text and validates the result.
inline Model parse_model(std::string_view text, std::string name = "") {
    detail::TokenStream ts(detail::lex(text));
    Model m;
    m.name = std::move(name);
    while (!ts.at_end()) {
        if (ts.accept_ident("const")) {
            ConstantDef c;
            c.kind = detail::parse_kind(ts);
            c.name = ts.expect_name();
            ts.expect_punct("=");
            c.value = detail::parse_expr(ts);
            ts.expect_punct(";");
            m.constants.push_back(std::move(c));
            continue;
        }
        if (ts.accept_ident("module")) {
            m.modules.push_back(detail::parse_module(ts));
            continue;
        }
        ts.fail("expected 'const' or 'module'");
    }
    validate_model(m);
    return m;
}

/// Parses a standalone expression (used for CLI --const values and tests).
inline ExprPtr parse_expression(std::string_view text) {
    detail::TokenStream ts(detail::lex(text));
    ExprPtr e = detail::parse_expr(ts);
    if (!ts.at_end()) ts.fail("trailing input after expression");
    return e;
}

}  // namespace assurekit

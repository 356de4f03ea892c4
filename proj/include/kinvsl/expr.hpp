#pragma once

// Closed-form expression language: parsing, evaluation and exact symbolic
// differentiation.  The grammar is deliberately small; it only has to cover
// coefficient functions, transform data and test functions:
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          // right associative, binds above '-'
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//
// Identifiers are [a-z_][a-z0-9_]*; `x` is the variable, every other
// identifier is either a function name (exp, ln, sqrt, sin, cos, tan, atan)
// or a named parameter.

#include "kinvsl/core.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kinvsl {

enum class NodeKind { number, var, param, neg, add, sub, mul, div, pow, call };

enum class Func { exp, ln, sqrt, sin, cos, tan, atan };

inline const char* func_name(Func f) {
    switch (f) {
        case Func::exp: return "exp";
        case Func::ln: return "ln";
        case Func::sqrt: return "sqrt";
        case Func::sin: return "sin";
        case Func::cos: return "cos";
        case Func::tan: return "tan";
        case Func::atan: return "atan";
    }
    return "?";
}

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

/// Immutable AST node; Expr values share structure freely.
struct ExprNode {
    NodeKind kind;
    double value = 0.0;     // number
    std::string name;       // param
    Func func = Func::exp;  // call
    Expr a, b;              // children

    explicit ExprNode(NodeKind k) : kind(k) {}
};

inline Expr make_number(double v) {
    auto n = std::make_shared<ExprNode>(NodeKind::number);
    n->value = v;
    return n;
}

inline Expr make_var() { return std::make_shared<ExprNode>(NodeKind::var); }

inline Expr make_param(std::string name) {
    auto n = std::make_shared<ExprNode>(NodeKind::param);
    n->name = std::move(name);
    return n;
}

inline bool is_number(const Expr& e, double v) {
    return e->kind == NodeKind::number && e->value == v;
}

inline bool is_const(const Expr& e) { return e->kind == NodeKind::number; }

// Smart constructors fold constants and drop algebraic no-ops so that
// derivative trees stay small under repeated differentiation.

inline Expr make_neg(Expr a) {
    if (is_const(a)) return make_number(-a->value);
    if (a->kind == NodeKind::neg) return a->a;
    auto n = std::make_shared<ExprNode>(NodeKind::neg);
    n->a = std::move(a);
    return n;
}

inline Expr make_add(Expr a, Expr b) {
    if (is_number(a, 0)) return b;
    if (is_number(b, 0)) return a;
    if (is_const(a) && is_const(b)) return make_number(a->value + b->value);
    auto n = std::make_shared<ExprNode>(NodeKind::add);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr make_sub(Expr a, Expr b) {
    if (is_number(b, 0)) return a;
    if (is_number(a, 0)) return make_neg(std::move(b));
    if (is_const(a) && is_const(b)) return make_number(a->value - b->value);
    auto n = std::make_shared<ExprNode>(NodeKind::sub);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr make_mul(Expr a, Expr b) {
    if (is_number(a, 0) || is_number(b, 0)) return make_number(0);
    if (is_number(a, 1)) return b;
    if (is_number(b, 1)) return a;
    if (is_const(a) && is_const(b)) return make_number(a->value * b->value);
    auto n = std::make_shared<ExprNode>(NodeKind::mul);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr make_div(Expr a, Expr b) {
    if (is_number(a, 0) && !is_number(b, 0)) return make_number(0);
    if (is_number(b, 1)) return a;
    if (is_const(a) && is_const(b) && b->value != 0)
        return make_number(a->value / b->value);
    auto n = std::make_shared<ExprNode>(NodeKind::div);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr make_pow(Expr a, Expr b) {
    if (is_number(b, 1)) return a;
    if (is_number(b, 0)) return make_number(1);
    if (is_number(a, 1)) return make_number(1);
    if (is_const(a) && is_const(b)) {
        double v = std::pow(a->value, b->value);
        if (std::isfinite(v)) return make_number(v);
    }
    auto n = std::make_shared<ExprNode>(NodeKind::pow);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline Expr make_call(Func f, Expr a) {
    auto n = std::make_shared<ExprNode>(NodeKind::call);
    n->func = f;
    n->a = std::move(a);
    return n;
}

// ---------------------------------------------------------------------------
// Parsing

struct ParseError : InputError {
    std::size_t pos;
    ParseError(std::size_t p, const std::string& what)
        : InputError("parse error at position " + std::to_string(p) + ": " + what), pos(p) {}
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr parse() {
        auto e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError(pos_, "unexpected trailing input; expected operator or end");
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    Expr parse_expr() {
        auto e = parse_term();
        for (;;) {
            if (accept('+'))
                e = make_add(e, parse_term());
            else if (accept('-'))
                e = make_sub(e, parse_term());
            else
                return e;
        }
    }

    Expr parse_term() {
        auto e = parse_unary();
        for (;;) {
            if (accept('*'))
                e = make_mul(e, parse_unary());
            else if (accept('/'))
                e = make_div(e, parse_unary());
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return make_neg(parse_unary());
        return parse_power();
    }

    Expr parse_power() {
        auto base = parse_atom();
        if (accept('^')) return make_pow(base, parse_unary());
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size())
            throw ParseError(pos_, "expected number, identifier or '('");
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            if (!accept(')')) throw ParseError(pos_, "expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::islower(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(pos_, std::string("unexpected character '") + c +
                                   "'; expected number, identifier or '('");
    }

    Expr parse_number() {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double v = 0;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc{}) throw ParseError(pos_, "malformed number");
        pos_ = static_cast<std::size_t>(ptr - src_.data());
        return make_number(v);
    }

    Expr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::islower(static_cast<unsigned char>(c)) ||
                std::isdigit(static_cast<unsigned char>(c)) || c == '_')
                ++pos_;
            else
                break;
        }
        std::string name(src_.substr(start, pos_ - start));
        if (peek() == '(') {
            accept('(');
            auto arg = parse_expr();
            if (!accept(')')) throw ParseError(pos_, "expected ')' closing call");
            if (name == "exp") return make_call(Func::exp, arg);
            if (name == "ln") return make_call(Func::ln, arg);
            if (name == "sqrt") return make_call(Func::sqrt, arg);
            if (name == "sin") return make_call(Func::sin, arg);
            if (name == "cos") return make_call(Func::cos, arg);
            if (name == "tan") return make_call(Func::tan, arg);
            if (name == "atan") return make_call(Func::atan, arg);
            throw ParseError(start, "unknown function '" + name + "'");
        }
        if (name == "x") return make_var();
        return make_param(std::move(name));
    }
};

} // namespace detail

/// Parse `source` into an AST.  Throws ParseError with the source position.
inline Expr parse(std::string_view source) { return detail::Parser(source).parse(); }

// ---------------------------------------------------------------------------
// Evaluation

using ParamMap = std::map<std::string, double>;

inline double eval(const Expr& e, double x, const ParamMap* params = nullptr) {
    switch (e->kind) {
        case NodeKind::number: return e->value;
        case NodeKind::var: return x;
        case NodeKind::param: {
            if (params) {
                auto it = params->find(e->name);
                if (it != params->end()) return it->second;
            }
            throw InputError("unknown identifier '" + e->name + "'");
        }
        case NodeKind::neg: return -eval(e->a, x, params);
        case NodeKind::add: return eval(e->a, x, params) + eval(e->b, x, params);
        case NodeKind::sub: return eval(e->a, x, params) - eval(e->b, x, params);
        case NodeKind::mul: return eval(e->a, x, params) * eval(e->b, x, params);
        case NodeKind::div: return eval(e->a, x, params) / eval(e->b, x, params);
        case NodeKind::pow: return std::pow(eval(e->a, x, params), eval(e->b, x, params));
        case NodeKind::call: {
            double u = eval(e->a, x, params);
            switch (e->func) {
                case Func::exp: return std::exp(u);
                case Func::ln: return std::log(u);
                case Func::sqrt: return std::sqrt(u);
                case Func::sin: return std::sin(u);
                case Func::cos: return std::cos(u);
                case Func::tan: return std::tan(u);
                case Func::atan: return std::atan(u);
            }
        }
    }
    throw Error("corrupt expression node");
}

/// Replace every parameter node by its bound numeric value.
inline Expr substitute_params(const Expr& e, const ParamMap& params) {
    switch (e->kind) {
        case NodeKind::number:
        case NodeKind::var: return e;
        case NodeKind::param: {
            auto it = params.find(e->name);
            if (it == params.end()) throw InputError("unknown identifier '" + e->name + "'");
            return make_number(it->second);
        }
        case NodeKind::neg: return make_neg(substitute_params(e->a, params));
        case NodeKind::add:
            return make_add(substitute_params(e->a, params), substitute_params(e->b, params));
        case NodeKind::sub:
            return make_sub(substitute_params(e->a, params), substitute_params(e->b, params));
        case NodeKind::mul:
            return make_mul(substitute_params(e->a, params), substitute_params(e->b, params));
        case NodeKind::div:
            return make_div(substitute_params(e->a, params), substitute_params(e->b, params));
        case NodeKind::pow:
            return make_pow(substitute_params(e->a, params), substitute_params(e->b, params));
        case NodeKind::call: return make_call(e->func, substitute_params(e->a, params));
    }
    throw Error("corrupt expression node");
}

/// Composition: substitute `inner` for the variable of `e`.
inline Expr compose(const Expr& e, const Expr& inner) {
    switch (e->kind) {
        case NodeKind::number:
        case NodeKind::param: return e;
        case NodeKind::var: return inner;
        case NodeKind::neg: return make_neg(compose(e->a, inner));
        case NodeKind::add: return make_add(compose(e->a, inner), compose(e->b, inner));
        case NodeKind::sub: return make_sub(compose(e->a, inner), compose(e->b, inner));
        case NodeKind::mul: return make_mul(compose(e->a, inner), compose(e->b, inner));
        case NodeKind::div: return make_div(compose(e->a, inner), compose(e->b, inner));
        case NodeKind::pow: return make_pow(compose(e->a, inner), compose(e->b, inner));
        case NodeKind::call: return make_call(e->func, compose(e->a, inner));
    }
    throw Error("corrupt expression node");
}

inline void collect_params(const Expr& e, std::set<std::string>& out) {
    switch (e->kind) {
        case NodeKind::param: out.insert(e->name); return;
        case NodeKind::number:
        case NodeKind::var: return;
        default:
            if (e->a) collect_params(e->a, out);
            if (e->b) collect_params(e->b, out);
    }
}

inline std::set<std::string> free_params(const Expr& e) {
    std::set<std::string> out;
    collect_params(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Symbolic differentiation

inline Expr differentiate(const Expr& e) {
    switch (e->kind) {
        case NodeKind::number:
        case NodeKind::param: return make_number(0);
        case NodeKind::var: return make_number(1);
        case NodeKind::neg: return make_neg(differentiate(e->a));
        case NodeKind::add: return make_add(differentiate(e->a), differentiate(e->b));
        case NodeKind::sub: return make_sub(differentiate(e->a), differentiate(e->b));
        case NodeKind::mul:
            return make_add(make_mul(differentiate(e->a), e->b),
                            make_mul(e->a, differentiate(e->b)));
        case NodeKind::div:
            return make_div(make_sub(make_mul(differentiate(e->a), e->b),
                                     make_mul(e->a, differentiate(e->b))),
                            make_pow(e->b, make_number(2)));
        case NodeKind::pow: {
            const Expr& f = e->a;
            const Expr& g = e->b;
            Expr df = differentiate(f);
            Expr dg = differentiate(g);
            if (is_number(dg, 0)) {
                // d f^c = c f^(c-1) f', valid for any sign of f
                return make_mul(make_mul(g, make_pow(f, make_sub(g, make_number(1)))), df);
            }
            if (is_number(df, 0)) {
                // d a^g = a^g ln(a) g'
                return make_mul(make_mul(e, make_call(Func::ln, f)), dg);
            }
            // general: f^g (g' ln f + g f'/f)
            return make_mul(e, make_add(make_mul(dg, make_call(Func::ln, f)),
                                        make_mul(g, make_div(df, f))));
        }
        case NodeKind::call: {
            Expr du = differentiate(e->a);
            switch (e->func) {
                case Func::exp: return make_mul(e, du);
                case Func::ln: return make_div(du, e->a);
                case Func::sqrt: return make_div(du, make_mul(make_number(2), e));
                case Func::sin: return make_mul(make_call(Func::cos, e->a), du);
                case Func::cos: return make_neg(make_mul(make_call(Func::sin, e->a), du));
                case Func::tan:
                    return make_mul(make_add(make_number(1), make_pow(e, make_number(2))), du);
                case Func::atan:
                    return make_div(du, make_add(make_number(1), make_pow(e->a, make_number(2))));
            }
        }
    }
    throw Error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// Printing (diagnostics only; output re-parses to an equivalent tree)

inline void print_expr(std::ostream& os, const Expr& e, int parent_prec = 0);

inline int node_prec(const Expr& e) {
    switch (e->kind) {
        case NodeKind::add:
        case NodeKind::sub: return 1;
        case NodeKind::mul:
        case NodeKind::div: return 2;
        case NodeKind::neg: return 3;
        case NodeKind::pow: return 4;
        default: return 5;
    }
}

inline void print_expr(std::ostream& os, const Expr& e, int parent_prec) {
    int prec = node_prec(e);
    bool paren = prec < parent_prec;
    if (paren) os << '(';
    switch (e->kind) {
        case NodeKind::number: os << e->value; break;
        case NodeKind::var: os << 'x'; break;
        case NodeKind::param: os << e->name; break;
        case NodeKind::neg:
            os << '-';
            print_expr(os, e->a, prec + 1);
            break;
        case NodeKind::add:
            print_expr(os, e->a, prec);
            os << '+';
            print_expr(os, e->b, prec + 1);
            break;
        case NodeKind::sub:
            print_expr(os, e->a, prec);
            os << '-';
            print_expr(os, e->b, prec + 1);
            break;
        case NodeKind::mul:
            print_expr(os, e->a, prec);
            os << '*';
            print_expr(os, e->b, prec + 1);
            break;
        case NodeKind::div:
            print_expr(os, e->a, prec);
            os << '/';
            print_expr(os, e->b, prec + 1);
            break;
        case NodeKind::pow:
            print_expr(os, e->a, prec + 1);
            os << '^';
            print_expr(os, e->b, prec);
            break;
        case NodeKind::call:
            os << func_name(e->func) << '(';
            print_expr(os, e->a, 0);
            os << ')';
            break;
    }
    if (paren) os << ')';
}

inline std::string to_string(const Expr& e) {
    std::ostringstream os;
    print_expr(os, e);
    return os.str();
}

} // namespace kinvsl

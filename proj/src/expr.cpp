#include "dop/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

#include "dop/errors.hpp"

namespace dop {

namespace {

ExprPtr make_num(double v) {
    auto e = std::make_shared<Expr>();
    e->op = Expr::Op::number;
    e->number = v;
    return e;
}

ExprPtr make_var(char c) {
    auto e = std::make_shared<Expr>();
    e->op = Expr::Op::variable;
    e->variable = c;
    return e;
}

ExprPtr make_node(Expr::Op op, ExprPtr a, ExprPtr b = nullptr) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
}

struct FunctionInfo {
    Expr::Op op;
    int arity;
};

const std::map<std::string, FunctionInfo>& function_table() {
    static const std::map<std::string, FunctionInfo> table = {
        {"abs", {Expr::Op::f_abs, 1}},  {"min", {Expr::Op::f_min, 2}},
        {"max", {Expr::Op::f_max, 2}},  {"exp", {Expr::Op::f_exp, 1}},
        {"sin", {Expr::Op::f_sin, 1}},  {"cos", {Expr::Op::f_cos, 1}},
        {"sqrt", {Expr::Op::f_sqrt, 1}},
    };
    return table;
}

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    ExprPtr run() {
        ExprPtr e = parse_sum();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c))
            throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    ExprPtr parse_sum() {
        ExprPtr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = make_node(Expr::Op::add, e, parse_term());
            else if (accept('-'))
                e = make_node(Expr::Op::sub, e, parse_term());
            else
                return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_unary();
        for (;;) {
            if (accept('*'))
                e = make_node(Expr::Op::mul, e, parse_unary());
            else if (accept('/'))
                e = make_node(Expr::Op::div, e, parse_unary());
            else
                return e;
        }
    }

    ExprPtr parse_unary() {
        if (accept('-')) return make_node(Expr::Op::neg, parse_unary());
        return parse_power();
    }

    // ^ binds tighter than unary minus; its exponent re-enters at the unary
    // level so x^-2 parses, and recursion keeps it right-associative.
    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (accept('^')) return make_node(Expr::Op::pow, base, parse_unary());
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    ExprPtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark; // bare 'e' belongs to the next token, not this number
            }
        }
        const std::string text = src_.substr(start, pos_ - start);
        if (text == ".") throw ParseError("malformed number", start);
        try {
            return make_num(std::stod(text));
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + text + "'", start);
        }
    }

    ExprPtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name = src_.substr(start, pos_ - start);
        if (name == "x" || name == "y" || name == "t") return make_var(name[0]);

        auto it = function_table().find(name);
        if (it == function_table().end())
            throw ParseError("unknown identifier '" + name + "'", start);

        expect('(');
        ExprPtr a = parse_sum();
        ExprPtr b;
        if (it->second.arity == 2) {
            expect(',');
            b = parse_sum();
        }
        expect(')');
        return make_node(it->second.op, a, b);
    }

    const std::string& src_;
    std::size_t pos_ = 0;
};

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("domain error: non-finite result of ") + what);
    return v;
}

int precedence(Expr::Op op) {
    switch (op) {
        case Expr::Op::add:
        case Expr::Op::sub: return 1;
        case Expr::Op::mul:
        case Expr::Op::div: return 2;
        case Expr::Op::neg: return 3;
        case Expr::Op::pow: return 4;
        default: return 6;
    }
}

void print_rec(const Expr& e, std::string& out, int min_prec) {
    const int p = precedence(e.op);
    const bool parens = p < min_prec;
    if (parens) out += '(';
    switch (e.op) {
        case Expr::Op::number: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", e.number);
            out += buf;
            break;
        }
        case Expr::Op::variable: out += e.variable; break;
        case Expr::Op::add:
        case Expr::Op::sub:
            print_rec(*e.lhs, out, 1);
            out += e.op == Expr::Op::add ? " + " : " - ";
            print_rec(*e.rhs, out, 2);
            break;
        case Expr::Op::mul:
        case Expr::Op::div:
            print_rec(*e.lhs, out, 2);
            out += e.op == Expr::Op::mul ? "*" : "/";
            print_rec(*e.rhs, out, 3);
            break;
        case Expr::Op::neg:
            out += '-';
            print_rec(*e.lhs, out, 3);
            break;
        case Expr::Op::pow:
            print_rec(*e.lhs, out, 5);
            out += '^';
            print_rec(*e.rhs, out, 3);
            break;
        case Expr::Op::f_abs:
        case Expr::Op::f_exp:
        case Expr::Op::f_sin:
        case Expr::Op::f_cos:
        case Expr::Op::f_sqrt: {
            const char* name = e.op == Expr::Op::f_abs   ? "abs"
                               : e.op == Expr::Op::f_exp ? "exp"
                               : e.op == Expr::Op::f_sin ? "sin"
                               : e.op == Expr::Op::f_cos ? "cos"
                                                          : "sqrt";
            out += name;
            out += '(';
            print_rec(*e.lhs, out, 0);
            out += ')';
            break;
        }
        case Expr::Op::f_min:
        case Expr::Op::f_max:
            out += e.op == Expr::Op::f_min ? "min(" : "max(";
            print_rec(*e.lhs, out, 0);
            out += ", ";
            print_rec(*e.rhs, out, 0);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

void vars_rec(const Expr& e, VarsUsed& v) {
    if (e.op == Expr::Op::variable) {
        if (e.variable == 'x') v.x = true;
        if (e.variable == 'y') v.y = true;
        if (e.variable == 't') v.t = true;
    }
    if (e.lhs) vars_rec(*e.lhs, v);
    if (e.rhs) vars_rec(*e.rhs, v);
}

} // namespace

ExprPtr parse(const std::string& src) {
    return Parser(src).run();
}

double eval(const Expr& e, const EvalEnv& env) {
    switch (e.op) {
        case Expr::Op::number: return e.number;
        case Expr::Op::variable: {
            const std::optional<double>& slot =
                e.variable == 'x' ? env.x : (e.variable == 'y' ? env.y : env.t);
            if (!slot)
                throw EvalError(std::string("unbound variable '") + e.variable + "'");
            return *slot;
        }
        case Expr::Op::add: return checked(eval(*e.lhs, env) + eval(*e.rhs, env), "+");
        case Expr::Op::sub: return checked(eval(*e.lhs, env) - eval(*e.rhs, env), "-");
        case Expr::Op::mul: return checked(eval(*e.lhs, env) * eval(*e.rhs, env), "*");
        case Expr::Op::div: {
            const double d = eval(*e.rhs, env);
            if (d == 0.0) throw EvalError("domain error: division by zero");
            return checked(eval(*e.lhs, env) / d, "/");
        }
        case Expr::Op::pow: {
            const double a = eval(*e.lhs, env);
            const double b = eval(*e.rhs, env);
            if (a == 0.0 && b == 0.0) return 1.0;
            return checked(std::pow(a, b), "^");
        }
        case Expr::Op::neg: return -eval(*e.lhs, env);
        case Expr::Op::f_abs: return std::abs(eval(*e.lhs, env));
        case Expr::Op::f_min: return std::min(eval(*e.lhs, env), eval(*e.rhs, env));
        case Expr::Op::f_max: return std::max(eval(*e.lhs, env), eval(*e.rhs, env));
        case Expr::Op::f_exp: return checked(std::exp(eval(*e.lhs, env)), "exp");
        case Expr::Op::f_sin: return std::sin(eval(*e.lhs, env));
        case Expr::Op::f_cos: return std::cos(eval(*e.lhs, env));
        case Expr::Op::f_sqrt: {
            const double a = eval(*e.lhs, env);
            if (a < 0.0) throw EvalError("domain error: sqrt of negative");
            return std::sqrt(a);
        }
    }
    throw EvalError("corrupt expression node");
}

std::string print(const Expr& e) {
    std::string out;
    print_rec(e, out, 0);
    return out;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.op != b.op) return false;
    if (a.op == Expr::Op::number) {
        // bit-level comparison keeps round-trip checks strict
        return a.number == b.number || (a.number != a.number && b.number != b.number);
    }
    if (a.op == Expr::Op::variable) return a.variable == b.variable;
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    if (a.lhs && !equal(*a.lhs, *b.lhs)) return false;
    if (a.rhs && !equal(*a.rhs, *b.rhs)) return false;
    return true;
}

VarsUsed variables_used(const Expr& e) {
    VarsUsed v;
    vars_rec(e, v);
    return v;
}

} // namespace dop

#pragma once

#include <memory>
#include <optional>
#include <string>

namespace dop {

/// Immutable arithmetic expression tree over variables {x, y, t}, the binary
/// operators + - * / ^, unary minus, and the functions
/// abs, min, max, exp, sin, cos, sqrt.
struct Expr {
    enum class Op {
        number,
        variable,
        add,
        sub,
        mul,
        div,
        pow,
        neg,
        f_abs,
        f_min,
        f_max,
        f_exp,
        f_sin,
        f_cos,
        f_sqrt
    };

    Op op = Op::number;
    double number = 0.0;
    char variable = 'x';
    std::shared_ptr<const Expr> lhs;
    std::shared_ptr<const Expr> rhs;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Variable bindings for evaluation; unbound variables referenced by the
/// expression raise EvalError.
struct EvalEnv {
    std::optional<double> x;
    std::optional<double> y;
    std::optional<double> t;
};

/// Recursive-descent parse with conventional precedence
/// (^ above unary minus above * / above + -), left associativity except ^
/// which is right-associative. Whitespace insensitive.
/// Throws ParseError (with byte offset) on syntax errors and unknown
/// identifiers.
ExprPtr parse(const std::string& src);

/// IEEE double evaluation. 0^0 is defined as 1. Division by zero, sqrt of a
/// negative, and any non-finite intermediate raise EvalError.
double eval(const Expr& e, const EvalEnv& env);

/// Canonical text form; parse(print(e)) reproduces the tree.
std::string print(const Expr& e);

/// Structural tree equality.
bool equal(const Expr& a, const Expr& b);

struct VarsUsed {
    bool x = false;
    bool y = false;
    bool t = false;
};

VarsUsed variables_used(const Expr& e);

} // namespace dop

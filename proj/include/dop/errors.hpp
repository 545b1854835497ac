#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace dop {

namespace detail {
inline std::string compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
} // namespace detail

/// Raised when an expression fails to parse; carries the byte offset of the
/// first offending character.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")")
        , offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Raised when expression evaluation hits an unbound variable or a domain
/// error (division by zero, sqrt of a negative, ...).
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised by iterative solvers that fail to reach their tolerance.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& msg, int iterations, double final_residual)
        : std::runtime_error(msg + " (iterations=" + std::to_string(iterations) +
                             ", final residual=" + detail::compact(final_residual) + ")")
        , iterations_(iterations)
        , final_residual_(final_residual) {}

    int iterations() const { return iterations_; }
    double final_residual() const { return final_residual_; }

private:
    int iterations_;
    double final_residual_;
};

/// Raised on malformed run configurations (bad JSON, invalid problem data).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dop

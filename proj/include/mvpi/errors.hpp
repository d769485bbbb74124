#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvpi/ext_real.hpp"

namespace mvpi {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model, policy or argument shape.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Inconsistent solver configuration, detected before any computation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Direction of a monotone iteration; decides the meaning of a truncated iterate.
enum class BoundDirection {
    none,        ///< contraction iteration, two-sided error bound
    decreasing,  ///< iterates decrease to the limit, so any iterate is an upper bound
    increasing   ///< iterates increase to the limit, so any iterate is a lower bound
};

const char* to_string(BoundDirection d) noexcept;

/**
 * Iteration cap reached before the stopping rule fired.
 *
 * The last iterate is carried along; its meaning as a bound on the
 * unreached limit is given by direction().
 */
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<ExtReal> last_iterate,
                     BoundDirection direction, double last_residual)
        : Error(what), last_(std::move(last_iterate)), direction_(direction),
          residual_(last_residual) {}

    const std::vector<ExtReal>& last_iterate() const noexcept { return last_; }
    BoundDirection direction() const noexcept { return direction_; }
    double last_residual() const noexcept { return residual_; }

private:
    std::vector<ExtReal> last_;
    BoundDirection direction_;
    double residual_;
};

/// Text parse failure with a 1-based location.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace mvpi

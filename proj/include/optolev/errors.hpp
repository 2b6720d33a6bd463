// Error types shared by every module.
#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace optolev {

inline std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r);
    return buf;
}

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical parameters outside their admissible domain (non-positive, non-finite, overdamped, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A model could not be assembled from otherwise valid parameters.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, overflow, or a numerical range problem.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A simulated trajectory or filter left the representable range.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : NumericError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Iterative solver or fit that did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what + " (last residual " + format_residual(last_residual) + ")"),
          residual_(last_residual) {}
    double last_residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Grid-based filter whose posterior reached the grid boundary.
class GridDomainError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace optolev

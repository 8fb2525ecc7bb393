#pragma once

#include <stdexcept>
#include <string>

namespace adsrc {

/// Invalid configuration or malformed input (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: solver breakdown, non-convergence, singularity (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Iterative solver did not reach the requested tolerance.
class SolverError : public NumericalError {
public:
    SolverError(const std::string& msg, double achieved_residual)
        : NumericalError(msg), achieved_residual(achieved_residual) {}
    double achieved_residual;
};

/// Direct factorization hit a (numerically) singular pivot.
class FactorizationError : public NumericalError {
public:
    explicit FactorizationError(const std::string& msg) : NumericalError(msg) {}
};

/// Filesystem / serialization failure (CLI exit code 4).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adsrc

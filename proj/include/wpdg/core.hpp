/// @file core.hpp
/// @brief Shared scalar/index types, error classes, and small helpers.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace wpdg {

using index_t = std::int64_t;
using Vector = std::vector<double>;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violated precondition (dimension mismatch, invalid argument, ...).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// A matrix claimed symmetric positive definite failed a pivot test.
class NotPositiveDefiniteError : public Error {
public:
    explicit NotPositiveDefiniteError(const std::string& msg) : Error(msg) {}
};

/// The coupling block Y^T A Z is singular; the deflation projectors
/// are not well defined.
class SingularCouplingBlockError : public Error {
public:
    explicit SingularCouplingBlockError(const std::string& msg) : Error(msg) {}
};

/// An operator declared hpd produced a negative self inner product.
class HpdViolationError : public Error {
public:
    explicit HpdViolationError(const std::string& msg) : Error(msg) {}
};

/// NaN/Inf appeared inside an iterative recurrence.
class NumericalFailureError : public Error {
public:
    explicit NumericalFailureError(const std::string& msg) : Error(msg) {}
};

class NotEnoughEigenpairsError : public Error {
public:
    explicit NotEnoughEigenpairsError(const std::string& msg) : Error(msg) {}
};

/// Fewer than two Ritz values could be extracted.
class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    long line_number;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Deterministic RNG used everywhere a seed is taken.
using Rng = std::mt19937_64;

inline Vector random_vector(index_t n, Rng& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(static_cast<std::size_t>(n));
    for (auto& x : v) x = dist(rng);
    return v;
}

} // namespace wpdg

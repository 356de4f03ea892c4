#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kinvsl {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Open interval (a, b); either end may be infinite.
struct Interval {
    double a = -inf;
    double b = inf;

    bool contains(double x) const { return x > a && x < b; }
    bool finite() const { return std::isfinite(a) && std::isfinite(b); }
    double length() const { return b - a; }
};

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a numeric routine cannot meet its contract (no bracket,
/// iteration cap, step underflow, ...).
struct NumericError : Error {
    using Error::Error;
};

/// Thrown on malformed input (expression syntax, bad problem spec).
struct InputError : Error {
    using Error::Error;
};

inline double sqr(double v) { return v * v; }

/// Relative residual with the guard denominator 1 + |lhs| + |rhs|.
inline double rel_residual(double lhs, double rhs) {
    return std::abs(lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs));
}

} // namespace kinvsl

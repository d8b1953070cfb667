#pragma once
// Shared constants, error types, and tiny helpers.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace oddcat {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

// Configuration/domain problems: bad user input, unphysical parameters.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failures: internal inconsistencies, degenerate linear algebra,
// non-positive herald probability, failed physicality checks.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline double sq(double v) { return v * v; }

inline bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Relative closeness with an absolute floor for values near zero.
inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace oddcat

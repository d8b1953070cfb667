#pragma once
// Special functions for the Fock-space machinery: oscillator eigenfunctions,
// generalized Laguerre recurrences, factorial helpers, and Gauss-Hermite
// quadrature rules (Golub-Welsch on the Jacobi matrix).

#include <cmath>
#include <vector>

#include "common.hpp"
#include "linalg.hpp"

namespace oddcat {

inline double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(257, 0.0);
        for (int i = 1; i <= 256; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    return table[static_cast<size_t>(n)];
}

// Harmonic-oscillator eigenfunctions psi_0..psi_nmax at x, for the convention
// [x,p]=i, vacuum variance 1/2 (psi_0(x) = pi^{-1/4} e^{-x^2/2}).
inline void oscillator_psi(int nmax, double x, std::vector<double>& out) {
    out.resize(static_cast<size_t>(nmax) + 1);
    out[0] = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
    if (nmax >= 1) out[1] = std::sqrt(2.0) * x * out[0];
    for (int n = 2; n <= nmax; ++n)
        out[static_cast<size_t>(n)] = x * std::sqrt(2.0 / n) * out[static_cast<size_t>(n - 1)] -
                                      std::sqrt((n - 1.0) / n) * out[static_cast<size_t>(n - 2)];
}

// L_n^k(z) for n = 0..nmax (three-term recurrence).
inline void laguerre_table(int nmax, int k, double z, std::vector<double>& out) {
    out.resize(static_cast<size_t>(nmax) + 1);
    out[0] = 1.0;
    if (nmax >= 1) out[1] = 1.0 + k - z;
    for (int n = 1; n < nmax; ++n)
        out[static_cast<size_t>(n + 1)] =
            ((2.0 * n + 1.0 + k - z) * out[static_cast<size_t>(n)] -
             (n + static_cast<double>(k)) * out[static_cast<size_t>(n - 1)]) /
            (n + 1.0);
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule for \int e^{-x^2} f(x) dx: nodes are eigenvalues of the
// symmetric tridiagonal Jacobi matrix, weights from first eigenvector rows.
inline QuadratureRule gauss_hermite(int n) {
    std::vector<double> m(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i + 1 < n; ++i) {
        const double b = std::sqrt((i + 1) / 2.0);
        m[static_cast<size_t>(i) * n + i + 1] = b;
        m[static_cast<size_t>(i + 1) * n + i] = b;
    }
    std::vector<double> vecs;
    auto eig = jacobi_eigensym(std::move(m), n, &vecs);
    QuadratureRule rule;
    rule.nodes = eig;
    rule.weights.resize(static_cast<size_t>(n));
    const double sqrt_pi = std::sqrt(pi);
    for (int j = 0; j < n; ++j)
        rule.weights[static_cast<size_t>(j)] = sqrt_pi * sq(vecs[static_cast<size_t>(j)]);
    // enforce the exact +/- symmetry of the rule
    for (int j = 0; j < n / 2; ++j) {
        const int k = n - 1 - j;
        const double node = 0.5 * (rule.nodes[static_cast<size_t>(k)] - rule.nodes[static_cast<size_t>(j)]);
        rule.nodes[static_cast<size_t>(j)] = -node;
        rule.nodes[static_cast<size_t>(k)] = node;
        const double w = 0.5 * (rule.weights[static_cast<size_t>(j)] + rule.weights[static_cast<size_t>(k)]);
        rule.weights[static_cast<size_t>(j)] = w;
        rule.weights[static_cast<size_t>(k)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<size_t>(n / 2)] = 0.0;
    return rule;
}

inline const QuadratureRule& gauss_hermite_cached(int n) {
    static thread_local std::vector<std::pair<int, QuadratureRule>> cache;
    for (auto& e : cache)
        if (e.first == n) return e.second;
    cache.emplace_back(n, gauss_hermite(n));
    return cache.back().second;
}

// Golden-section maximization on [lo, hi]; returns (argmax, max).
template <typename F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double xtol) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = f(c1), f2 = f(c2);
    while (b - a > xtol) {
        if (f1 < f2) {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + gr * (b - a);
            f2 = f(c2);
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - gr * (b - a);
            f1 = f(c1);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

}  // namespace oddcat

#pragma once
// Fock-basis representation: conversion from the polynomial-Gaussian Wigner
// form via Gauss-Hermite quadrature (exact for the polynomial integrand),
// Wigner kernels of |m><n| through Laguerre recurrences, cat states, and the
// ideal single-mode photon-subtracted squeezed vacuum.

#include <complex>
#include <vector>

#include "common.hpp"
#include "conditional_state.hpp"
#include "linalg.hpp"
#include "special.hpp"

namespace oddcat {

struct FockMatrix {
    int nmax = 12;
    std::vector<std::complex<double>> m;  // (nmax+1)^2 row-major

    explicit FockMatrix(int nmax_ = 12)
        : nmax(nmax_), m(static_cast<size_t>(nmax_ + 1) * (nmax_ + 1), {0.0, 0.0}) {}

    int dim() const { return nmax + 1; }
    std::complex<double>& at(int i, int j) { return m[static_cast<size_t>(i) * dim() + j]; }
    std::complex<double> at(int i, int j) const { return m[static_cast<size_t>(i) * dim() + j]; }

    double trace_real() const {
        double t = 0;
        for (int i = 0; i < dim(); ++i) t += at(i, i).real();
        return t;
    }

    double hermiticity_violation() const {
        double w = 0;
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j <= i; ++j)
                w = std::max(w, std::abs(at(i, j) - std::conj(at(j, i))));
        return w;
    }

    std::vector<double> eigenvalues() const { return hermitian_eigenvalues(m, dim()); }

    std::vector<double> populations() const {
        std::vector<double> p(static_cast<size_t>(dim()));
        for (int i = 0; i < dim(); ++i) p[static_cast<size_t>(i)] = at(i, i).real();
        return p;
    }

    double odd_mass() const {
        double s = 0;
        for (int i = 1; i < dim(); i += 2) s += at(i, i).real();
        return s;
    }
};

// Wigner kernel of |m><n| WITHOUT the common e^{-(x^2+p^2)} factor:
// (1/pi)(-1)^n sqrt(n!/m!) (sqrt2 (x-ip))^{m-n} L_n^{m-n}(2(x^2+p^2)), m >= n.
inline std::complex<double> wigner_kernel_poly(int m, int n, double x, double p) {
    if (m < n) return std::conj(wigner_kernel_poly(n, m, x, p));
    const int d = m - n;
    const double z = 2.0 * (x * x + p * p);
    std::vector<double> lag;
    laguerre_table(n, d, z, lag);
    const double pref = (1.0 / pi) * ((n % 2) ? -1.0 : 1.0) *
                        std::exp(0.5 * (log_factorial(n) - log_factorial(m)));
    const std::complex<double> w2 = std::sqrt(2.0) * std::complex<double>(x, -p);
    std::complex<double> pw{1.0, 0.0};
    for (int i = 0; i < d; ++i) pw *= w2;
    return pref * pw * lag[static_cast<size_t>(n)];
}

// rho_mn = 2 pi \int W(z) conj(W_{|m><n|}(z)) dz, evaluated by 2D
// Gauss-Hermite after whitening the combined Gaussian e^{-z^T H z},
// H = sigma^{-1}/2 + I. Exact for the polynomial integrand.
inline FockMatrix fock_from_state(const ConditionalState& st, int nmax = 12, int gh_order = 40) {
    const Mat2 h = st.sigma.inverse() * 0.5 + Mat2::identity();
    const Mat2 hs = sqrt_spd2(h);
    const Mat2 whiten = hs.inverse();  // z = whiten * y
    const double detfac = 1.0 / std::sqrt(h.det());
    const double gauss_norm = 1.0 / (two_pi * std::sqrt(st.sigma.det()));

    const auto& rule = gauss_hermite_cached(gh_order);
    FockMatrix rho(nmax);
    std::vector<double> lag;

    for (int i = 0; i < gh_order; ++i) {
        for (int j = 0; j < gh_order; ++j) {
            const double y1 = rule.nodes[static_cast<size_t>(i)];
            const double y2 = rule.nodes[static_cast<size_t>(j)];
            const double x = whiten.a * y1 + whiten.b * y2;
            const double p = whiten.c * y1 + whiten.d * y2;
            const double wq = rule.weights[static_cast<size_t>(i)] *
                              rule.weights[static_cast<size_t>(j)] * (st.A.quad(x, p) + st.c);
            const double z = 2.0 * (x * x + p * p);
            const std::complex<double> w2c = std::sqrt(2.0) * std::complex<double>(x, p);  // conj
            std::complex<double> pw{1.0, 0.0};
            for (int d = 0; d <= nmax; ++d) {
                laguerre_table(nmax - d, d, z, lag);
                for (int n = 0; n + d <= nmax; ++n) {
                    const int mm = n + d;
                    const double pref = (1.0 / pi) * ((n % 2) ? -1.0 : 1.0) *
                                        std::exp(0.5 * (log_factorial(n) - log_factorial(mm)));
                    rho.at(mm, n) += wq * pref * pw * lag[static_cast<size_t>(n)];
                }
                pw *= w2c;
            }
        }
    }
    const double scale = two_pi * gauss_norm * detfac;
    for (auto& v : rho.m) v *= scale;
    // fill the upper triangle from Hermitian symmetry
    for (int mm = 0; mm <= nmax; ++mm)
        for (int n = mm + 1; n <= nmax; ++n) rho.at(mm, n) = std::conj(rho.at(n, mm));
    return rho;
}

inline double w00_from_fock(const FockMatrix& rho) {
    double s = 0;
    for (int n = 0; n < rho.dim(); ++n) s += ((n % 2) ? -1.0 : 1.0) * rho.at(n, n).real();
    return s / pi;
}

// W(x,p) = sum_mn rho_mn W_{|m><n|}(x,p)
inline double wigner_from_fock(const FockMatrix& rho, double x, double p) {
    const double e = std::exp(-(x * x + p * p));
    std::complex<double> s{0.0, 0.0};
    for (int mm = 0; mm < rho.dim(); ++mm)
        for (int n = 0; n < rho.dim(); ++n)
            s += rho.at(mm, n) * wigner_kernel_poly(mm, n, x, p);
    return s.real() * e;
}

// normalized odd cat |alpha> - |-alpha>: c_n = 2 e^{-a^2/2} a^n / sqrt(n!),
// odd n only, normalization 1/sqrt(2(1 - e^{-2 a^2})).
inline std::vector<double> cat_coeffs(double alpha, int nmax) {
    std::vector<double> c(static_cast<size_t>(nmax) + 1, 0.0);
    for (int n = 1; n <= nmax; n += 2)
        c[static_cast<size_t>(n)] = 2.0 * std::exp(-0.5 * alpha * alpha) *
                                    std::exp(n * std::log(alpha) - 0.5 * log_factorial(n));
    const double norm = std::sqrt(2.0 * (1.0 - std::exp(-2.0 * alpha * alpha)));
    for (auto& v : c) v /= norm;
    return c;
}

// <psi| rho |psi> for a real pure state given by Fock coefficients
inline double fidelity_pure(const FockMatrix& rho, const std::vector<double>& coeffs) {
    std::complex<double> f{0.0, 0.0};
    const int n = std::min<int>(rho.dim(), static_cast<int>(coeffs.size()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            f += coeffs[static_cast<size_t>(i)] * rho.at(i, j) * coeffs[static_cast<size_t>(j)];
    return f.real();
}

inline double cat_fidelity(const FockMatrix& rho, double alpha) {
    return fidelity_pure(rho, cat_coeffs(alpha, rho.nmax));
}

// maximize cat fidelity over amplitude; bracket covers all relevant states
inline std::pair<double, double> best_cat(const FockMatrix& rho, double lo = 0.1, double hi = 3.0,
                                          double xtol = 1e-4) {
    return golden_max([&](double a) { return cat_fidelity(rho, a); }, lo, hi, xtol);
}

// a S(r) |0>: c_{2m-1} prop. lambda^m sqrt((2m)!) sqrt(2m) / (2^m m!),
// lambda = tanh r. Pure reference state of the single-mode theory.
inline std::vector<double> ideal_subtracted_sv_lambda(double lambda, int nmax = 25) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw config_error("lambda must lie in (0,1)");
    std::vector<double> c(static_cast<size_t>(nmax) + 1, 0.0);
    double norm2 = 0.0;
    for (int n = 1; n <= nmax; n += 2) {
        const int mm = (n + 1) / 2;  // n = 2m - 1
        const double lg = mm * std::log(lambda) + 0.5 * log_factorial(2 * mm) -
                          mm * std::log(2.0) - log_factorial(mm) + 0.5 * std::log(2.0 * mm);
        c[static_cast<size_t>(n)] = std::exp(lg);
        norm2 += sq(c[static_cast<size_t>(n)]);
    }
    const double norm = std::sqrt(norm2);
    for (auto& v : c) v /= norm;
    return c;
}

inline std::vector<double> ideal_subtracted_sv(double r, int nmax = 25) {
    if (!(r > 0.0)) throw config_error("squeezing parameter must be positive");
    return ideal_subtracted_sv_lambda(std::tanh(r), nmax);
}

inline FockMatrix pure_state_matrix(const std::vector<double>& coeffs) {
    FockMatrix rho(static_cast<int>(coeffs.size()) - 1);
    for (int i = 0; i < rho.dim(); ++i)
        for (int j = 0; j < rho.dim(); ++j)
            rho.at(i, j) = coeffs[static_cast<size_t>(i)] * coeffs[static_cast<size_t>(j)];
    return rho;
}

}  // namespace oddcat

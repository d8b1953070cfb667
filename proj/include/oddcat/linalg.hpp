#pragma once
// Small dense linear algebra: fixed 2x2/4x4 helpers used by the covariance
// calculus, plus a cyclic Jacobi eigensolver for the few places that need
// spectra of small symmetric (or Hermitian, via real embedding) matrices.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "common.hpp"

namespace oddcat {

struct Mat2 {
    // row-major: [a b; c d]
    double a = 0, b = 0, c = 0, d = 0;

    static Mat2 identity() { return {1, 0, 0, 1}; }
    static Mat2 zero() { return {0, 0, 0, 0}; }

    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }
    Mat2 transpose() const { return {a, c, b, d}; }

    Mat2 inverse() const {
        const double dd = det();
        if (std::abs(dd) < 1e-300) throw numeric_error("Mat2::inverse: singular matrix");
        return {d / dd, -b / dd, -c / dd, a / dd};
    }

    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
    Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }

    // quadratic form v^T M v with v = (x, y)
    double quad(double x, double y) const { return a * x * x + (b + c) * x * y + d * y * y; }
};

inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

using Mat4 = std::array<double, 16>;

inline double& at(Mat4& m, int i, int j) { return m[4 * i + j]; }
inline double at(const Mat4& m, int i, int j) { return m[4 * i + j]; }

inline Mat4 mat4_identity() {
    Mat4 m{};
    for (int i = 0; i < 4; ++i) at(m, i, i) = 1.0;
    return m;
}

inline Mat2 block2(const Mat4& m, int bi, int bj) {
    return {at(m, 2 * bi, 2 * bj), at(m, 2 * bi, 2 * bj + 1),
            at(m, 2 * bi + 1, 2 * bj), at(m, 2 * bi + 1, 2 * bj + 1)};
}

inline void set_block2(Mat4& m, int bi, int bj, const Mat2& b) {
    at(m, 2 * bi, 2 * bj) = b.a;
    at(m, 2 * bi, 2 * bj + 1) = b.b;
    at(m, 2 * bi + 1, 2 * bj) = b.c;
    at(m, 2 * bi + 1, 2 * bj + 1) = b.d;
}

inline double max_asymmetry(const Mat4& m) {
    double w = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < i; ++j) w = std::max(w, std::abs(at(m, i, j) - at(m, j, i)));
    return w;
}

// Cyclic Jacobi for symmetric matrices; returns eigenvalues ascending.
// `vecs` (optional) receives eigenvectors as columns.
inline std::vector<double> jacobi_eigensym(std::vector<double> m, int n,
                                           std::vector<double>* vecs = nullptr) {
    std::vector<double> v;
    if (vecs) {
        v.assign(static_cast<size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;
    }
    auto M = [&](int i, int j) -> double& { return m[static_cast<size_t>(i) * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += sq(M(i, j));
        if (off < 1e-28 * n * n) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = M(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (M(q, q) - M(p, p)) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double mip = M(i, p), miq = M(i, q);
                    M(i, p) = c * mip - s * miq;
                    M(i, q) = s * mip + c * miq;
                }
                for (int i = 0; i < n; ++i) {
                    const double mpi = M(p, i), mqi = M(q, i);
                    M(p, i) = c * mpi - s * mqi;
                    M(q, i) = s * mpi + c * mqi;
                }
                if (vecs) {
                    for (int i = 0; i < n; ++i) {
                        const double vip = v[static_cast<size_t>(i) * n + p];
                        const double viq = v[static_cast<size_t>(i) * n + q];
                        v[static_cast<size_t>(i) * n + p] = c * vip - s * viq;
                        v[static_cast<size_t>(i) * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
    }
    // sort ascending, permuting eigenvector columns alongside
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = M(i, i);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (eig[order[j]] < eig[order[i]]) std::swap(order[i], order[j]);
    std::vector<double> sorted(n);
    for (int i = 0; i < n; ++i) sorted[i] = eig[order[i]];
    if (vecs) {
        vecs->assign(static_cast<size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                (*vecs)[static_cast<size_t>(i) * n + j] = v[static_cast<size_t>(i) * n + order[j]];
    }
    return sorted;
}

// Eigenvalues of a Hermitian matrix via the real symmetric embedding
// [[Re, -Im], [Im, Re]]; each eigenvalue appears twice, so take every other.
inline std::vector<double> hermitian_eigenvalues(const std::vector<std::complex<double>>& h, int n) {
    std::vector<double> m(static_cast<size_t>(2 * n) * (2 * n), 0.0);
    auto M = [&](int i, int j) -> double& { return m[static_cast<size_t>(i) * 2 * n + j]; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto z = h[static_cast<size_t>(i) * n + j];
            M(i, j) = z.real();
            M(i + n, j + n) = z.real();
            M(i + n, j) = z.imag();
            M(i, j + n) = -z.imag();
        }
    }
    auto all = jacobi_eigensym(std::move(m), 2 * n);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = all[static_cast<size_t>(2 * i)];
    return out;
}

// Symmetric square root of a positive-definite 2x2 matrix.
inline Mat2 sqrt_spd2(const Mat2& m) {
    // closed form: sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det))
    const double dd = m.det();
    if (dd <= 0) throw numeric_error("sqrt_spd2: matrix not positive definite");
    const double s = std::sqrt(dd);
    const double t = std::sqrt(m.trace() + 2 * s);
    if (!(t > 0)) throw numeric_error("sqrt_spd2: matrix not positive definite");
    return {(m.a + s) / t, m.b / t, m.c / t, (m.d + s) / t};
}

}  // namespace oddcat

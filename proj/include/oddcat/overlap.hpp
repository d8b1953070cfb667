#pragma once
// Closed-form overlap integrals between exponential-family temporal modes and
// two-sided exponential correlation kernels. Modes are piecewise
// (c0 + c1 t) e^{rate t} functions; convolving with a kernel term stays in the
// family, so O(C,f,g) = <f, C*g> reduces to sums of elementary integrals
// \int t^k e^{a t} dt evaluated in cancellation-safe form.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "common.hpp"
#include "correlation_kernel.hpp"

namespace oddcat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ExpPiece {
    double c0 = 0, c1 = 0;  // (c0 + c1 t) e^{rate t}
    double rate = 0;
    double lo = -kInf, hi = kInf;  // support [lo, hi)
};

struct PiecewiseExp {
    std::vector<ExpPiece> pieces;

    double eval(double t) const {
        double v = 0;
        for (const auto& p : pieces)
            if (t >= p.lo && t < p.hi) v += (p.c0 + p.c1 * t) * std::exp(p.rate * t);
        return v;
    }

    PiecewiseExp scaled(double s) const {
        PiecewiseExp out = *this;
        for (auto& p : out.pieces) {
            p.c0 *= s;
            p.c1 *= s;
        }
        return out;
    }
};

namespace detail {

// sinh(z)/z, (z cosh z - sinh z)/z^2, ((z^2+2) sinh z - 2 z cosh z)/z^3.
// The direct forms cancel as z^3 against z near the origin, so below |z| = 1
// each is summed from its (same-sign) power series to machine convergence;
// above, the closed forms are well conditioned.
inline double sinhc(double z) {
    if (std::abs(z) >= 1.0) return std::sinh(z) / z;
    const double z2 = z * z;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 24; ++k) {
        term *= z2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}
inline double g1(double z) {
    if (std::abs(z) >= 1.0) return (z * std::cosh(z) - std::sinh(z)) / (z * z);
    const double z2 = z * z;
    double term = z / 3.0, sum = term;
    for (int k = 1; k < 24; ++k) {
        term *= z2 / ((2.0 * k) * (2.0 * k + 3.0));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}
inline double g2(double z) {
    if (std::abs(z) >= 1.0)
        return ((z * z + 2.0) * std::sinh(z) - 2.0 * z * std::cosh(z)) / (z * z * z);
    const double z2 = z * z;
    double term = 1.0 / 3.0, sum = term;
    for (int m = 0; m < 24; ++m) {
        term *= z2 * ((2.0 * m + 3.0) * (m + 2.0)) /
                ((2.0 * m + 1.0) * (m + 1.0) * (2.0 * m + 4.0) * (2.0 * m + 5.0));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

// Moments E_k = \int_L^R t^k e^{a t} dt, k = 0..2, with infinite endpoints
// allowed when the integrand decays.
struct Moments {
    double e0 = 0, e1 = 0, e2 = 0;
};

inline Moments exp_moments(double a, double L, double R) {
    Moments out;
    if (!(L < R)) return out;
    const bool lo_inf = L == -kInf, hi_inf = R == kInf;
    if (lo_inf && hi_inf) throw numeric_error("exp_moments: divergent (both endpoints infinite)");
    if (hi_inf) {
        if (!(a < 0)) throw numeric_error("exp_moments: divergent at +inf");
        const double e = std::exp(a * L);
        out.e0 = -e / a;
        out.e1 = e * (1.0 - a * L) / (a * a);
        out.e2 = -e * (a * a * L * L - 2.0 * a * L + 2.0) / (a * a * a);
        return out;
    }
    if (lo_inf) {
        if (!(a > 0)) throw numeric_error("exp_moments: divergent at -inf");
        const double e = std::exp(a * R);
        out.e0 = e / a;
        out.e1 = e * (a * R - 1.0) / (a * a);
        out.e2 = e * (a * a * R * R - 2.0 * a * R + 2.0) / (a * a * a);
        return out;
    }
    const double m = 0.5 * (L + R), d = 0.5 * (R - L), z = a * d;
    const double em = std::exp(a * m);
    const double m0 = 2.0 * d * sinhc(z);
    const double m1 = 2.0 * d * d * g1(z);
    const double m2 = 2.0 * d * d * d * g2(z);
    out.e0 = em * m0;
    out.e1 = em * (m * m0 + m1);
    out.e2 = em * (m * m * m0 + 2.0 * m * m1 + m2);
    return out;
}

}  // namespace detail

// \int f g dt for two piecewise-exponential functions.
inline double inner(const PiecewiseExp& f, const PiecewiseExp& g) {
    std::vector<double> cuts;
    for (const auto* pw : {&f, &g})
        for (const auto& p : pw->pieces) {
            if (p.lo != -kInf) cuts.push_back(p.lo);
            if (p.hi != kInf) cuts.push_back(p.hi);
        }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<double> edges;
    edges.push_back(-kInf);
    for (double c : cuts) edges.push_back(c);
    edges.push_back(kInf);

    double total = 0;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        const double A = edges[i], B = edges[i + 1];
        if (!(A < B)) continue;
        for (const auto& pf : f.pieces) {
            if (pf.lo > A || pf.hi < B) continue;
            for (const auto& pg : g.pieces) {
                if (pg.lo > A || pg.hi < B) continue;
                const auto mo = detail::exp_moments(pf.rate + pg.rate, A, B);
                total += pf.c0 * pg.c0 * mo.e0 + (pf.c0 * pg.c1 + pf.c1 * pg.c0) * mo.e1 +
                         pf.c1 * pg.c1 * mo.e2;
            }
        }
    }
    return total;
}

// (C * g)(s) = \int C(s - t) g(t) dt, expanded back into exponential pieces.
// Near-degenerate rate pairs (|beta -+ r| below ~1e-7 r) are split by a tiny
// deterministic nudge so the partial-fraction coefficients stay conditioned.
inline PiecewiseExp convolve(const CorrelationKernel& kern, const PiecewiseExp& g) {
    PiecewiseExp h;
    for (const auto& term : kern.terms) {
        for (const auto& p : g.pieces) {
            double r = term.rate;
            const double beta = p.rate;
            if (std::abs(beta - r) < 1e-7 * r || std::abs(beta + r) < 1e-7 * r)
                r *= 1.0 + 2e-7;
            const double ap = beta + r, am = beta - r;
            const double ck = term.coef;
            const double L = p.lo, R = p.hi;

            // region s < L: e^{r s} \int (c0 + c1 t) e^{(beta - r) t}
            if (L != -kInf) {
                const auto mo = detail::exp_moments(am, L, R);
                h.pieces.push_back({ck * (p.c0 * mo.e0 + p.c1 * mo.e1), 0.0, r, -kInf, L});
            }
            // region s >= R: e^{-r s} \int (c0 + c1 t) e^{(beta + r) t}
            if (R != kInf) {
                const auto mo = detail::exp_moments(ap, L, R);
                h.pieces.push_back({ck * (p.c0 * mo.e0 + p.c1 * mo.e1), 0.0, -r, R, kInf});
            }
            // region L <= s < R: antiderivative bookkeeping. With
            // F+(t) = \int^t (c0+c1 u) e^{ap u} du and F-(t) likewise at am:
            //   h_in = e^{-rs} (F+(s) - F+(L)) + e^{rs} (F-(R) - F-(s))
            // The F(s) parts collapse onto rate-beta pieces.
            {
                if (L == -kInf && !(ap > 0)) throw numeric_error("convolve: divergent piece at -inf");
                if (R == kInf && !(am < 0)) throw numeric_error("convolve: divergent piece at +inf");
                // rate-beta piece: c0 (1/ap - 1/am) + c1 [ s (1/ap - 1/am) + (1/am^2 - 1/ap^2) ]
                const double inv_p = 1.0 / ap, inv_m = 1.0 / am;
                const double d0 = p.c0 * (inv_p - inv_m) + p.c1 * (inv_m * inv_m - inv_p * inv_p);
                const double d1 = p.c1 * (inv_p - inv_m);
                h.pieces.push_back({ck * d0, ck * d1, beta, L, R});
                if (L != -kInf) {
                    // -F+(L) e^{-r s}
                    const double fpl = std::exp(ap * L) * (p.c0 * inv_p + p.c1 * (L * inv_p - inv_p * inv_p));
                    h.pieces.push_back({-ck * fpl, 0.0, -r, L, R});
                }
                if (R != kInf) {
                    // +F-(R) e^{+r s}
                    const double fmr = std::exp(am * R) * (p.c0 * inv_m + p.c1 * (R * inv_m - inv_m * inv_m));
                    h.pieces.push_back({ck * fmr, 0.0, r, L, R});
                }
            }
        }
    }
    return h;
}

// O(C, f, g) = \iint f(s) C(s - t) g(t) ds dt.
inline double kernel_overlap(const CorrelationKernel& kern, const PiecewiseExp& f,
                             const PiecewiseExp& g) {
    if (kern.empty()) return 0.0;
    kern.validate();
    return inner(f, convolve(kern, g));
}

}  // namespace oddcat

#pragma once
// Derivative-free and least-squares optimizers: Nelder-Mead with an
// evaluation cap and restart, and a small Levenberg-Marquardt for curve fits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "common.hpp"
#include "linalg.hpp"

namespace oddcat {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
    // best-so-far trace: (evaluation count, point, value)
    struct TracePoint {
        int eval;
        std::vector<double> x;
        double value;
    };
    std::vector<TracePoint> trace;
};

// Minimizes f over the box [lo, hi]^n (out-of-box points get +inf).
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, const std::vector<double>& lo,
                                    const std::vector<double>& hi, int max_evals = 500,
                                    double ftol = 1e-10, double xtol_rel = 1e-6) {
    const size_t n = start.size();
    NelderMeadResult res;
    int evals = 0;

    auto eval = [&](const std::vector<double>& x) {
        for (size_t i = 0; i < n; ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return 1e300;
        ++evals;
        const double v = f(x);
        if (res.trace.empty() || v < res.trace.back().value)
            res.trace.push_back({evals, x, v});
        return v;
    };

    struct Vertex {
        std::vector<double> x;
        double v;
    };
    std::vector<Vertex> simplex;

    auto init_simplex = [&](const std::vector<double>& x0) {
        simplex.clear();
        simplex.push_back({x0, eval(x0)});
        for (size_t i = 0; i < n; ++i) {
            auto x = x0;
            const double span = hi[i] - lo[i];
            double step = 0.08 * span;
            if (x[i] + step > hi[i]) step = -step;
            x[i] += step;
            simplex.push_back({x, eval(x)});
        }
    };

    for (size_t i = 0; i < n; ++i) start[i] = std::clamp(start[i], lo[i], hi[i]);
    init_simplex(start);
    bool restarted = false;

    while (evals < max_evals) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
        const double fbest = simplex.front().v, fworst = simplex.back().v;
        double xspread = 0;
        for (size_t i = 0; i < n; ++i) {
            double mn = simplex[0].x[i], mx = simplex[0].x[i];
            for (const auto& s : simplex) {
                mn = std::min(mn, s.x[i]);
                mx = std::max(mx, s.x[i]);
            }
            xspread = std::max(xspread, (mx - mn) / std::max(1.0, std::abs(simplex[0].x[i])));
        }
        // relative spread with an absolute floor so objectives whose optimum
        // sits at exactly zero can still trigger the test
        if (std::abs(fworst - fbest) < ftol * (std::abs(fbest) + std::abs(fworst) + 1e-10) &&
            xspread < xtol_rel) {
            if (restarted) {
                res.converged = true;
                break;
            }
            // restart once from the incumbent with a fresh simplex
            restarted = true;
            auto xb = simplex.front().x;
            init_simplex(xb);
            continue;
        }

        std::vector<double> centroid(n, 0.0);
        for (size_t s = 0; s + 1 < simplex.size(); ++s)
            for (size_t i = 0; i < n; ++i) centroid[i] += simplex[s].x[i] / static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex.back().x[i] - centroid[i]);
            return x;
        };

        const auto xr = blend(-1.0);
        const double fr = eval(xr);
        if (fr < simplex.front().v) {
            const auto xe = blend(-2.0);
            const double fe = eval(xe);
            if (fe < fr)
                simplex.back() = {xe, fe};
            else
                simplex.back() = {xr, fr};
        } else if (fr < simplex[simplex.size() - 2].v) {
            simplex.back() = {xr, fr};
        } else {
            const auto xc = blend(fr < simplex.back().v ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < std::min(fr, simplex.back().v)) {
                simplex.back() = {xc, fc};
            } else {
                for (size_t s = 1; s < simplex.size(); ++s) {
                    for (size_t i = 0; i < n; ++i)
                        simplex[s].x[i] = 0.5 * (simplex[s].x[i] + simplex[0].x[i]);
                    simplex[s].v = eval(simplex[s].x);
                }
            }
        }
    }

    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.v < b.v; });
    res.x = simplex.front().x;
    res.value = simplex.front().v;
    res.evaluations = evals;
    return res;
}

struct LmResult {
    std::vector<double> params;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> covariance;  // p x p, row-major (sigma^2 (J^T J)^{-1})
};

// Levenberg-Marquardt on residuals r(p) (minimizes |r|^2). The Jacobian is
// centered-difference: forward differences are blind to inward descent when
// a parameter sits on a clamped boundary of the residual function, and the
// problems here are tiny (2 parameters) so the extra evaluations are free.
inline LmResult levenberg_marquardt(
    const std::function<std::vector<double>(const std::vector<double>&)>& residuals,
    std::vector<double> p, int max_iters = 200, double gtol = 1e-12, double ftol = 1e-12) {
    const size_t np = p.size();
    auto r = residuals(p);
    const size_t nr = r.size();
    auto chi2_of = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return s;
    };
    double chi2 = chi2_of(r);
    double lambda = 1e-3;
    LmResult out;

    std::vector<double> jac(nr * np);
    auto fill_jacobian = [&](const std::vector<double>& at) {
        for (size_t j = 0; j < np; ++j) {
            auto pl = at, pr = at;
            const double h = 1e-6 * std::max(1e-3, std::abs(at[j]));
            pl[j] -= h;
            pr[j] += h;
            const auto rl = residuals(pl);
            const auto rr = residuals(pr);
            for (size_t i = 0; i < nr; ++i) jac[i * np + j] = (rr[i] - rl[i]) / (2.0 * h);
        }
    };
    for (int iter = 0; iter < max_iters; ++iter) {
        fill_jacobian(p);
        // normal equations
        std::vector<double> jtj(np * np, 0.0), jtr(np, 0.0);
        for (size_t i = 0; i < nr; ++i)
            for (size_t a = 0; a < np; ++a) {
                jtr[a] += jac[i * np + a] * r[i];
                for (size_t b = 0; b < np; ++b) jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
            }
        double gmax = 0;
        for (size_t a = 0; a < np; ++a) gmax = std::max(gmax, std::abs(jtr[a]));
        if (gmax < gtol) {
            out.converged = true;
            out.iterations = iter;
            break;
        }

        bool stepped = false;
        for (int tries = 0; tries < 30 && !stepped; ++tries) {
            auto aug = jtj;
            for (size_t a = 0; a < np; ++a) aug[a * np + a] += lambda * jtj[a * np + a];
            // solve aug * dp = jtr by Gaussian elimination
            std::vector<double> mat = aug, rhs = jtr, dp(np, 0.0);
            bool singular = false;
            for (size_t col = 0; col < np; ++col) {
                size_t piv = col;
                for (size_t row = col + 1; row < np; ++row)
                    if (std::abs(mat[row * np + col]) > std::abs(mat[piv * np + col])) piv = row;
                if (std::abs(mat[piv * np + col]) < 1e-300) {
                    singular = true;
                    break;
                }
                if (piv != col) {
                    for (size_t k = 0; k < np; ++k) std::swap(mat[piv * np + k], mat[col * np + k]);
                    std::swap(rhs[piv], rhs[col]);
                }
                for (size_t row = col + 1; row < np; ++row) {
                    const double f = mat[row * np + col] / mat[col * np + col];
                    for (size_t k = col; k < np; ++k) mat[row * np + k] -= f * mat[col * np + k];
                    rhs[row] -= f * rhs[col];
                }
            }
            if (singular) {
                lambda *= 10;
                continue;
            }
            for (size_t col = np; col-- > 0;) {
                double s = rhs[col];
                for (size_t k = col + 1; k < np; ++k) s -= mat[col * np + k] * dp[k];
                dp[col] = s / mat[col * np + col];
            }
            auto pnew = p;
            for (size_t a = 0; a < np; ++a) pnew[a] -= dp[a];
            const auto rnew = residuals(pnew);
            const double cnew = chi2_of(rnew);
            if (cnew < chi2) {
                p = pnew;
                r = rnew;
                // declare convergence on a small improvement only in the
                // Gauss-Newton regime; a heavily damped step is short by
                // construction and says nothing about stationarity
                if (chi2 - cnew < ftol * (1.0 + chi2) && lambda <= 1e-2) out.converged = true;
                chi2 = cnew;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
            } else {
                lambda *= 10;
            }
        }
        out.iterations = iter + 1;
        // no damped step improves chi2: stationary for practical purposes
        if (!stepped) out.converged = true;
        if (!stepped || out.converged) break;
    }

    out.params = p;
    out.chi2 = chi2;
    // covariance estimate: sigma^2 (J^T J)^{-1} with sigma^2 = chi2 / dof
    if (nr > np) {
        std::vector<double> jtj(np * np, 0.0);
        fill_jacobian(p);
        for (size_t i = 0; i < nr; ++i)
            for (size_t a = 0; a < np; ++a)
                for (size_t b = 0; b < np; ++b) jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
        // invert (np small)
        if (np == 2) {
            const double det = jtj[0] * jtj[3] - jtj[1] * jtj[2];
            if (std::abs(det) > 1e-300) {
                const double s2 = chi2 / static_cast<double>(nr - np);
                out.covariance = {s2 * jtj[3] / det, -s2 * jtj[1] / det, -s2 * jtj[2] / det,
                                  s2 * jtj[0] / det};
            }
        }
    }
    return out;
}

}  // namespace oddcat

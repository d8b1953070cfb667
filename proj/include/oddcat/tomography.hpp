#pragma once
// Unbinned iterative maximum-likelihood reconstruction with the detector
// efficiency folded into the measurement operators (reconstruct-through-loss).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "common.hpp"
#include "datasynth.hpp"
#include "fock.hpp"
#include "linalg.hpp"
#include "special.hpp"

namespace oddcat {

namespace detail {

// Hermite functions without the Gaussian: phi_n(y) = psi_n(y) e^{y^2/2}.
// Same recurrence as psi_n, polynomial growth, safe at large |y|.
inline void hermite_part(int nmax, double y, std::vector<double>& out) {
    out.resize(static_cast<size_t>(nmax) + 1);
    out[0] = std::pow(pi, -0.25);
    if (nmax >= 1) out[1] = std::sqrt(2.0) * y * out[0];
    for (int n = 2; n <= nmax; ++n)
        out[static_cast<size_t>(n)] = y * std::sqrt(2.0 / n) * out[static_cast<size_t>(n - 1)] -
                                      std::sqrt((n - 1.0) / n) * out[static_cast<size_t>(n - 2)];
}

inline double pairwise_sum(const double* v, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

}  // namespace detail

// Matrix elements <m| Pi(x, theta; eta) |n> = e^{i(m-n)theta} G_mn(x; eta)
// with a real symmetric radial part, cached on a uniform x-grid and read back
// through 4-point Lagrange interpolation (exact quadrature outside the grid).
class QuadraturePovm {
  public:
    QuadraturePovm(int nmax, double eta, double x_max = 6.0, double spacing = 0.01,
                   int gh_order = 40)
        : nmax_(nmax), eta_(eta), x_max_(x_max), spacing_(spacing), gh_order_(gh_order) {
        if (nmax < 0) throw config_error("povm: n_max must be non-negative");
        if (!(eta > 0.0 && eta <= 1.0)) throw config_error("povm: eta must lie in (0,1]");
        if (!(spacing > 0.0 && x_max > 1.0)) throw config_error("povm: bad grid spec");
        ngrid_ = 2 * static_cast<int>(std::round(x_max / spacing)) + 1;
        table_.resize(static_cast<size_t>(ngrid_) * npack());
        std::vector<double> col(npack());
        for (int k = 0; k < ngrid_; ++k) {
            exact_column(grid_x(k), col.data());
            std::copy(col.begin(), col.end(), table_.begin() + static_cast<size_t>(k) * npack());
        }
        const double resid = completeness_residual();
        if (resid > 1e-4)
            throw numeric_error("povm grid too coarse: completeness residual " +
                                std::to_string(resid));
    }

    int nmax() const { return nmax_; }
    int dim() const { return nmax_ + 1; }
    double eta() const { return eta_; }
    size_t npack() const { return static_cast<size_t>(nmax_ + 1) * (nmax_ + 2) / 2; }
    static size_t pack_index(int m, int n) {  // requires m <= n
        return static_cast<size_t>(n) * (n + 1) / 2 + m;
    }

    // radial part by direct quadrature (no table)
    void exact_column(double x, double* out) const {
        if (eta_ > 1.0 - 1e-12) {
            oscillator_psi(nmax_, x, psi_);
            for (int n = 0; n <= nmax_; ++n)
                for (int m = 0; m <= n; ++m)
                    out[pack_index(m, n)] = psi_[static_cast<size_t>(m)] * psi_[static_cast<size_t>(n)];
            return;
        }
        // G_mn(x) = integral psi_m(y) psi_n(y) N(x - sqrt(eta) y; (1-eta)/2) dy.
        // Completing the square leaves a polynomial integral, exact under
        // Gauss-Hermite of sufficient order.
        const double v = 0.5 * (1.0 - eta_);
        const double a = 1.0 + 0.5 * eta_ / v;
        const double b = std::sqrt(eta_) * x / (2.0 * v * a);
        const double c = x * x / (2.0 * v) - a * b * b;
        const double pref = std::exp(-c) / std::sqrt(two_pi * v * a);
        const auto& rule = gauss_hermite_cached(gh_order_);
        for (size_t i = 0; i < npack(); ++i) out[i] = 0.0;
        for (size_t q = 0; q < rule.nodes.size(); ++q) {
            const double y = b + rule.nodes[q] / std::sqrt(a);
            detail::hermite_part(nmax_, y, psi_);
            const double w = rule.weights[q];
            for (int n = 0; n <= nmax_; ++n) {
                const double wn = w * psi_[static_cast<size_t>(n)];
                for (int m = 0; m <= n; ++m)
                    out[pack_index(m, n)] += wn * psi_[static_cast<size_t>(m)];
            }
        }
        for (size_t i = 0; i < npack(); ++i) out[i] *= pref;
    }

    // radial part through the cached table
    void column(double x, double* out) const {
        if (std::abs(x) > x_max_) {
            exact_column(x, out);
            return;
        }
        double cell = (x + x_max_) / spacing_;
        int k = static_cast<int>(std::floor(cell));
        k = std::clamp(k, 1, ngrid_ - 3);
        const double t = cell - k;
        const double lm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        const double l0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        const double l1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        const double l2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        const double* r0 = row(k - 1);
        const double* r1 = row(k);
        const double* r2 = row(k + 1);
        const double* r3 = row(k + 2);
        for (size_t i = 0; i < npack(); ++i)
            out[i] = lm1 * r0[i] + l0 * r1[i] + l1 * r2[i] + l2 * r3[i];
    }

    double element(int m, int n, double x) const {
        std::vector<double> col(npack());
        column(x, col.data());
        return m <= n ? col[pack_index(m, n)] : col[pack_index(n, m)];
    }

    // full complex POVM element matrix at (x, theta)
    FockMatrix matrix_at(double x, double theta, bool exact = false) const {
        std::vector<double> col(npack());
        if (exact)
            exact_column(x, col.data());
        else
            column(x, col.data());
        FockMatrix pim(nmax_);
        for (int n = 0; n <= nmax_; ++n)
            for (int m = 0; m <= n; ++m) {
                const double g = col[pack_index(m, n)];
                const double d = (m - n) * theta;
                pim.at(m, n) = {g * std::cos(d), g * std::sin(d)};
                pim.at(n, m) = std::conj(pim.at(m, n));
            }
        return pim;
    }

    // max over (m,n) of |integral G_mn dx - delta_mn| (trapezoid on the grid)
    double completeness_residual() const {
        double worst = 0.0;
        for (int n = 0; n <= nmax_; ++n)
            for (int m = 0; m <= n; ++m) {
                const size_t idx = pack_index(m, n);
                double s = 0.0;
                for (int k = 0; k < ngrid_; ++k) {
                    const double w = (k == 0 || k == ngrid_ - 1) ? 0.5 : 1.0;
                    s += w * table_[static_cast<size_t>(k) * npack() + idx];
                }
                s *= spacing_;
                worst = std::max(worst, std::abs(s - (m == n ? 1.0 : 0.0)));
            }
        return worst;
    }

  private:
    const double* row(int k) const { return table_.data() + static_cast<size_t>(k) * npack(); }
    double grid_x(int k) const { return -x_max_ + k * spacing_; }

    int nmax_;
    double eta_;
    double x_max_;
    double spacing_;
    int gh_order_;
    int ngrid_;
    std::vector<double> table_;
    mutable std::vector<double> psi_;
};

inline QuadraturePovm build_povm(int nmax, double eta, double x_max = 6.0, double spacing = 0.01) {
    return QuadraturePovm(nmax, eta, x_max, spacing);
}

// ---------------------------------------------------------------- likelihood

// (1/N) sum_j log Tr(Pi_j rho); -inf sentinel on a non-positive probability.
inline double likelihood(const FockMatrix& rho, const QuadratureDataset& ds,
                         const QuadraturePovm& povm, size_t* bad_records = nullptr) {
    if (rho.nmax != povm.nmax()) throw config_error("likelihood: basis size mismatch");
    const int d = povm.dim();
    std::vector<double> col(povm.npack());
    std::vector<double> logs;
    logs.reserve(ds.size());
    size_t bad = 0;
    for (const auto& rec : ds.records) {
        povm.column(rec.x, col.data());
        double p = 0.0;
        for (int n = 0; n < d; ++n) {
            p += col[QuadraturePovm::pack_index(n, n)] * rho.at(n, n).real();
            for (int m = 0; m < n; ++m) {
                const double dth = (n - m) * rec.theta;
                const std::complex<double> r = rho.at(m, n);
                p += 2.0 * col[QuadraturePovm::pack_index(m, n)] *
                     (std::cos(dth) * r.real() - std::sin(dth) * r.imag());
            }
        }
        if (!(p > 0.0)) {
            ++bad;
            continue;
        }
        logs.push_back(std::log(p));
    }
    if (bad_records) *bad_records = bad;
    if (bad > 0) return -std::numeric_limits<double>::infinity();
    return detail::pairwise_sum(logs.data(), logs.size()) / static_cast<double>(logs.size());
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructOptions {
    int max_iterations = 2000;
    double rel_tol = 1e-10;
    double dilution = 0.1;     // step blend used when a full R rho R step backslides
    double prob_floor = 1e-14;  // records below this are excluded for the iteration
};

struct ReconstructionResult {
    FockMatrix rho{0};
    std::vector<double> ll_trace;  // average log-likelihood of the iterate
    int iterations = 0;
    bool converged = false;
    int diluted_steps = 0;
    size_t excluded_records = 0;  // at the final iteration
    double max_negativity = 0.0;  // most negative eigenvalue before the final clip
    double trace_deficit = 0.0;   // total negative mass removed by the clip
};

namespace detail {

// packed Hermitian accessors: upper triangle m <= n, S real part, A imag part
struct PackedHermitian {
    int d;
    std::vector<double> s, a;
    explicit PackedHermitian(int dim)
        : d(dim), s(static_cast<size_t>(dim) * (dim + 1) / 2, 0.0),
          a(static_cast<size_t>(dim) * (dim + 1) / 2, 0.0) {}

    static size_t idx(int m, int n) { return QuadraturePovm::pack_index(m, n); }

    void from_matrix(const FockMatrix& rho) {
        for (int n = 0; n < d; ++n)
            for (int m = 0; m <= n; ++m) {
                s[idx(m, n)] = rho.at(m, n).real();
                a[idx(m, n)] = rho.at(m, n).imag();
            }
    }

    FockMatrix to_matrix() const {
        FockMatrix rho(d - 1);
        for (int n = 0; n < d; ++n)
            for (int m = 0; m <= n; ++m) {
                rho.at(m, n) = {s[idx(m, n)], a[idx(m, n)]};
                rho.at(n, m) = std::conj(rho.at(m, n));
            }
        return rho;
    }
};

inline FockMatrix matmul(const FockMatrix& x, const FockMatrix& y) {
    FockMatrix out(x.nmax);
    const int d = x.dim();
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const std::complex<double> xik = x.at(i, k);
            if (xik == std::complex<double>{0.0, 0.0}) continue;
            for (int j = 0; j < d; ++j) out.at(i, j) += xik * y.at(k, j);
        }
    return out;
}

inline void normalize_trace(FockMatrix& rho) {
    const double tr = rho.trace_real();
    if (!(tr > 0.0)) throw numeric_error("reconstruction: non-positive trace");
    for (auto& v : rho.m) v /= tr;
}

// eigen-clip through the real symmetric embedding [[S,-A],[A,S]]; each
// complex eigenpair appears twice, so summing outer products at half weight
// rebuilds rho exactly.
inline void clip_negative(FockMatrix& rho, double& max_neg, double& deficit) {
    const int d = rho.dim();
    const int n2 = 2 * d;
    std::vector<double> m(static_cast<size_t>(n2) * n2, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const auto v = rho.at(i, j);
            m[static_cast<size_t>(i) * n2 + j] = v.real();
            m[static_cast<size_t>(i) * n2 + d + j] = -v.imag();
            m[static_cast<size_t>(d + i) * n2 + j] = v.imag();
            m[static_cast<size_t>(d + i) * n2 + d + j] = v.real();
        }
    std::vector<double> vecs;
    const auto vals = jacobi_eigensym(std::move(m), n2, &vecs);
    max_neg = vals.front();
    deficit = 0.0;
    FockMatrix out(rho.nmax);
    for (int k = 0; k < n2; ++k) {
        if (vals[static_cast<size_t>(k)] < 0.0) {
            deficit += -vals[static_cast<size_t>(k)] * 0.5;
            continue;
        }
        const double w = 0.5 * vals[static_cast<size_t>(k)];
        for (int i = 0; i < d; ++i) {
            const std::complex<double> zi{vecs[static_cast<size_t>(i) * n2 + k],
                                          vecs[static_cast<size_t>(d + i) * n2 + k]};
            for (int j = 0; j < d; ++j) {
                const std::complex<double> zj{vecs[static_cast<size_t>(j) * n2 + k],
                                              vecs[static_cast<size_t>(d + j) * n2 + k]};
                out.at(i, j) += w * zi * std::conj(zj);
            }
        }
    }
    normalize_trace(out);
    rho = out;
}

}  // namespace detail

// Iterates rho <- N[R rho R], R = (1/N) sum_j Pi_j / Tr(Pi_j rho), from the
// maximally mixed state, with a diluted fallback step when the full step
// lowers the likelihood. Deterministic for a fixed (dataset, options).
inline ReconstructionResult reconstruct(const QuadratureDataset& ds, const QuadraturePovm& povm,
                                        const ReconstructOptions& opt = {}) {
    if (ds.size() < 1000) throw config_error("reconstruct: need at least 1000 records");
    const int d = povm.dim();
    const size_t np = povm.npack();
    const size_t n = ds.size();

    // Per-record measurement vectors: U = G_mn cos((m-n)theta),
    // V = G_mn sin((m-n)theta), packed over m <= n (Re/Im of the upper
    // triangle of Pi).
    std::vector<double> meas(2 * np * n);
    {
        std::vector<double> col(np), cs(static_cast<size_t>(d)), sn(static_cast<size_t>(d));
        for (size_t j = 0; j < n; ++j) {
            const auto& rec = ds.records[j];
            povm.column(rec.x, col.data());
            cs[0] = 1.0;
            sn[0] = 0.0;
            if (d > 1) {
                cs[1] = std::cos(rec.theta);
                sn[1] = std::sin(rec.theta);
                for (int k = 2; k < d; ++k) {  // Chebyshev recurrence on angle multiples
                    cs[static_cast<size_t>(k)] = 2.0 * cs[1] * cs[static_cast<size_t>(k - 1)] -
                                                 cs[static_cast<size_t>(k - 2)];
                    sn[static_cast<size_t>(k)] = 2.0 * cs[1] * sn[static_cast<size_t>(k - 1)] -
                                                 sn[static_cast<size_t>(k - 2)];
                }
            }
            double* u = meas.data() + 2 * np * j;
            double* v = u + np;
            for (int nn = 0; nn < d; ++nn)
                for (int mm = 0; mm <= nn; ++mm) {
                    const size_t idx = QuadraturePovm::pack_index(mm, nn);
                    u[idx] = col[idx] * cs[static_cast<size_t>(nn - mm)];
                    v[idx] = -col[idx] * sn[static_cast<size_t>(nn - mm)];
                }
        }
    }

    // state in packed form, with off-diagonal weight 2 folded in so that
    // Tr(Pi rho) is a plain dot product
    detail::PackedHermitian rho_p(d);
    FockMatrix rho(povm.nmax());
    for (int i = 0; i < d; ++i) rho.at(i, i) = 1.0 / d;

    std::vector<double> shat(np), ahat(np), rs(np), ra(np), logs(n);
    auto fold_state = [&](const FockMatrix& r) {
        rho_p.from_matrix(r);
        for (int nn = 0; nn < d; ++nn)
            for (int mm = 0; mm <= nn; ++mm) {
                const size_t idx = QuadraturePovm::pack_index(mm, nn);
                const double w = (mm == nn) ? 1.0 : 2.0;
                shat[idx] = w * rho_p.s[idx];
                ahat[idx] = w * rho_p.a[idx];
            }
    };

    // log-likelihood of the current fold, accumulating R of the same state
    auto sweep = [&](std::vector<double>& us, std::vector<double>& ua, size_t& excluded) {
        std::fill(us.begin(), us.end(), 0.0);
        std::fill(ua.begin(), ua.end(), 0.0);
        excluded = 0;
        size_t nl = 0;
        for (size_t j = 0; j < n; ++j) {
            const double* u = meas.data() + 2 * np * j;
            const double* v = u + np;
            double p = 0.0;
            for (size_t i = 0; i < np; ++i) p += u[i] * shat[i] + v[i] * ahat[i];
            if (p < opt.prob_floor) {
                ++excluded;
                continue;
            }
            logs[nl++] = std::log(p);
            const double w = 1.0 / p;
            for (size_t i = 0; i < np; ++i) {
                us[i] += w * u[i];
                ua[i] += w * v[i];
            }
        }
        if (nl == 0) throw numeric_error("reconstruction: all records excluded");
        return detail::pairwise_sum(logs.data(), nl) / static_cast<double>(nl);
    };

    auto unpack_r = [&](const std::vector<double>& us, const std::vector<double>& ua,
                        size_t excluded) {
        FockMatrix R(povm.nmax());
        const double inv_n = 1.0 / static_cast<double>(n - excluded);
        for (int nn = 0; nn < d; ++nn)
            for (int mm = 0; mm <= nn; ++mm) {
                const size_t idx = QuadraturePovm::pack_index(mm, nn);
                R.at(mm, nn) = {inv_n * us[idx], inv_n * ua[idx]};
                R.at(nn, mm) = std::conj(R.at(mm, nn));
            }
        return R;
    };

    // Each iteration costs one data sweep: the candidate's sweep both scores
    // it and accumulates the R needed for the following step.
    std::vector<double> rs2(np), ra2(np);
    ReconstructionResult res;
    fold_state(rho);
    size_t excluded = 0;
    double ll = sweep(rs, ra, excluded);
    res.ll_trace.push_back(ll);
    res.excluded_records = excluded;
    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        const FockMatrix R = unpack_r(rs, ra, excluded);
        FockMatrix cand = detail::matmul(detail::matmul(R, rho), R);
        detail::normalize_trace(cand);
        fold_state(cand);
        size_t excl2 = 0;
        double ll_c = sweep(rs2, ra2, excl2);
        if (ll_c < ll) {
            // fall back to (I + eps R) rho (I + eps R), shrinking eps until
            // the likelihood stops decreasing
            double eps = opt.dilution;
            for (int attempt = 0; attempt < 7; ++attempt) {
                FockMatrix step(povm.nmax());
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        step.at(i, j) = (i == j ? 1.0 : 0.0) + eps * R.at(i, j);
                cand = detail::matmul(detail::matmul(step, rho), step);
                detail::normalize_trace(cand);
                fold_state(cand);
                ll_c = sweep(rs2, ra2, excl2);
                if (ll_c >= ll) break;
                eps *= 0.5;
            }
            ++res.diluted_steps;
        }
        rho = cand;
        rs.swap(rs2);
        ra.swap(ra2);
        excluded = excl2;
        const double ll_prev = ll;
        ll = ll_c;
        res.ll_trace.push_back(ll);
        res.excluded_records = excluded;
        res.iterations = iter;
        if (std::abs(ll - ll_prev) < opt.rel_tol * std::abs(ll)) {
            res.converged = true;
            break;
        }
    }

    detail::clip_negative(rho, res.max_negativity, res.trace_deficit);
    res.rho = rho;
    return res;
}

}  // namespace oddcat

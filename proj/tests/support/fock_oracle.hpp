#pragma once
// Independent oracle for the heralded-state Fock matrix. Works in the
// position representation instead of the engine's phase-space route:
//
//   rho_mn = <m|rho|n> = \iint psi_m(x) psi_n(x') <x|rho|x'> dx dx'
//   <x|rho|x'> = \int W((x+x')/2, p) e^{i p (x-x')} dp
//
// with W(z) = N(z; Sigma) (z^T Q z + c0). Every integral is a Gaussian
// moment, so the whole chain is closed form up to polynomial bookkeeping:
// no quadrature rule and no Laguerre kernels anywhere. The heralding
// polynomial itself is rebuilt here from textbook Gaussian regression
// (conditional mean/covariance of the trigger mode given the signal mode)
// rather than from the engine's matrix identities.

#include <complex>
#include <stdexcept>
#include <vector>

#include <oddcat/covariance.hpp>

namespace testsupport {

using cd = std::complex<double>;

// W(z) = N(z; [s_xx s_xp; s_xp s_pp]) * (q_xx x^2 + 2 q_xp x p + q_pp p^2 + c0)
struct WignerPoly {
    double s_xx = 0.5, s_xp = 0.0, s_pp = 0.5;
    double q_xx = 0.0, q_xp = 0.0, q_pp = 0.0;
    double c0 = 1.0;
};

namespace opoly {

using PolyU = std::vector<cd>;             // coeff[i] u^i
using PolyUV = std::vector<std::vector<cd>>;  // coeff[j][i] u^i v^j

inline PolyU u_mul(const PolyU& a, const PolyU& b) {
    PolyU out(a.size() + b.size() - 1, cd{0.0, 0.0});
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline void u_axpy(PolyU& acc, const PolyU& a, cd s) {
    if (acc.size() < a.size()) acc.resize(a.size(), cd{0.0, 0.0});
    for (size_t i = 0; i < a.size(); ++i) acc[i] += s * a[i];
}

inline PolyUV uv_mul(const PolyUV& a, const PolyUV& b) {
    PolyUV out(a.size() + b.size() - 1);
    for (size_t ja = 0; ja < a.size(); ++ja)
        for (size_t jb = 0; jb < b.size(); ++jb) {
            if (a[ja].empty() || b[jb].empty()) continue;
            u_axpy(out[ja + jb], u_mul(a[ja], b[jb]), cd{1.0, 0.0});
        }
    for (auto& row : out)
        if (row.empty()) row.assign(1, cd{0.0, 0.0});
    return out;
}

// orthonormal oscillator polynomials: psi_k(y) = h_k(y) e^{-y^2/2}
inline std::vector<std::vector<double>> hermite_polys(int nmax) {
    std::vector<std::vector<double>> h(static_cast<size_t>(nmax) + 1);
    h[0] = {std::pow(3.14159265358979323846, -0.25)};
    if (nmax >= 1) h[1] = {0.0, std::sqrt(2.0) * h[0][0]};
    for (int k = 2; k <= nmax; ++k) {
        const auto& p1 = h[static_cast<size_t>(k - 1)];
        const auto& p2 = h[static_cast<size_t>(k - 2)];
        std::vector<double> cur(static_cast<size_t>(k) + 1, 0.0);
        const double f1 = std::sqrt(2.0 / k), f2 = std::sqrt((k - 1.0) / k);
        for (size_t i = 0; i < p1.size(); ++i) cur[i + 1] += f1 * p1[i];
        for (size_t i = 0; i < p2.size(); ++i) cur[i] -= f2 * p2[i];
        h[static_cast<size_t>(k)] = std::move(cur);
    }
    return h;
}

// h_k(u + sgn * v / 2) expanded over u^i v^j
inline PolyUV compose_half(const std::vector<double>& h, double sgn) {
    const size_t deg = h.size() - 1;
    // binomial table
    std::vector<std::vector<double>> binom(deg + 1);
    for (size_t t = 0; t <= deg; ++t) {
        binom[t].assign(t + 1, 1.0);
        for (size_t j = 1; j < t; ++j) binom[t][j] = binom[t - 1][j - 1] + binom[t - 1][j];
    }
    PolyUV out(deg + 1);
    for (auto& row : out) row.assign(deg + 1, cd{0.0, 0.0});
    for (size_t t = 0; t < h.size(); ++t) {
        if (h[t] == 0.0) continue;
        double vfac = 1.0;
        for (size_t j = 0; j <= t; ++j) {
            out[j][t - j] += cd{h[t] * binom[t][j] * vfac, 0.0};
            vfac *= 0.5 * sgn;
        }
    }
    return out;
}

}  // namespace opoly

// Full Fock matrix (row-major, dim nmax+1) of a polynomial-Gaussian Wigner
// function, evaluated entirely in closed form.
inline std::vector<cd> fock_matrix_oracle(const WignerPoly& w, int nmax) {
    const double pi = 3.14159265358979323846;
    const double det = w.s_xx * w.s_pp - w.s_xp * w.s_xp;
    if (!(det > 0.0) || !(w.s_xx > 0.0)) throw std::invalid_argument("oracle: bad sigma");
    // Sigma^{-1} = [[ia, ib], [ib, id]]
    const double ia = w.s_pp / det, ib = -w.s_xp / det, id = w.s_xx / det;

    const double alpha_u = 0.5 * ia - ib * ib / (2.0 * id) + 1.0;
    const double beta_v = 1.0 / (2.0 * id) + 0.25;
    const double gamma_c = ib / id;
    const double alpha_t = alpha_u + gamma_c * gamma_c / (4.0 * beta_v);

    // conditional "mean" of p in the Fourier variable: m = mu_u u + mu_v v
    const cd mu_u{-ib / id, 0.0};
    const cd mu_v{0.0, 1.0 / id};

    // herald polynomial in (u, v) after integrating out p
    opoly::PolyUV poly1(3);
    for (auto& row : poly1) row.assign(3, cd{0.0, 0.0});
    poly1[0][2] = cd{w.q_xx, 0.0} + 2.0 * w.q_xp * mu_u + w.q_pp * mu_u * mu_u;  // u^2
    poly1[1][1] = 2.0 * w.q_xp * mu_v + 2.0 * w.q_pp * mu_u * mu_v;              // u v
    poly1[2][0] = w.q_pp * mu_v * mu_v;                                          // v^2
    poly1[0][0] = cd{w.q_pp / id + w.c0, 0.0};

    const auto herm = opoly::hermite_polys(nmax);

    // moments of v under e^{-beta_v v^2 - i gamma_c u v}: polynomials in u
    const int vmax = 2 * nmax + 2;
    const cd mu1{0.0, -gamma_c / (2.0 * beta_v)};
    std::vector<opoly::PolyU> vmom(static_cast<size_t>(vmax) + 1);
    vmom[0] = {cd{1.0, 0.0}};
    if (vmax >= 1) vmom[1] = {cd{0.0, 0.0}, mu1};
    for (int k = 2; k <= vmax; ++k) {
        opoly::PolyU m(static_cast<size_t>(k) + 1, cd{0.0, 0.0});
        const auto& m1 = vmom[static_cast<size_t>(k - 1)];
        for (size_t i = 0; i < m1.size(); ++i) m[i + 1] += mu1 * m1[i];
        opoly::u_axpy(m, vmom[static_cast<size_t>(k - 2)], cd{(k - 1.0) / (2.0 * beta_v), 0.0});
        vmom[static_cast<size_t>(k)] = std::move(m);
    }

    // even Gaussian moments \int u^{2t} e^{-alpha_t u^2} du
    const int umax = 2 * nmax + 4;
    std::vector<double> umom(static_cast<size_t>(umax) + 1, 0.0);
    umom[0] = std::sqrt(pi / alpha_t);
    for (int j = 2; j <= umax; j += 2)
        umom[static_cast<size_t>(j)] = umom[static_cast<size_t>(j - 2)] * (j - 1.0) / (2.0 * alpha_t);

    const double pref = (1.0 / (2.0 * pi * std::sqrt(det))) * std::sqrt(2.0 * pi / id) *
                        std::sqrt(pi / beta_v);

    const int dim = nmax + 1;
    std::vector<cd> rho(static_cast<size_t>(dim) * dim, cd{0.0, 0.0});
    for (int m = 0; m <= nmax; ++m) {
        const auto hm = opoly::compose_half(herm[static_cast<size_t>(m)], +1.0);
        for (int n = 0; n <= nmax; ++n) {
            const auto hn = opoly::compose_half(herm[static_cast<size_t>(n)], -1.0);
            const auto p = opoly::uv_mul(opoly::uv_mul(hm, hn), poly1);
            // fold the v moments, then the u moments
            opoly::PolyU folded;
            for (size_t j = 0; j < p.size(); ++j)
                for (size_t i = 0; i < p[j].size(); ++i) {
                    if (p[j][i] == cd{0.0, 0.0}) continue;
                    opoly::PolyU term = vmom[j];
                    for (auto& c : term) c *= p[j][i];
                    // shift by u^i
                    opoly::PolyU shifted(term.size() + i, cd{0.0, 0.0});
                    for (size_t t = 0; t < term.size(); ++t) shifted[t + i] = term[t];
                    opoly::u_axpy(folded, shifted, cd{1.0, 0.0});
                }
            cd val{0.0, 0.0};
            for (size_t i = 0; i < folded.size(); i += 2) val += folded[i] * umom[i];
            rho[static_cast<size_t>(m) * dim + n] = pref * val;
        }
    }
    return rho;
}

// Herald polynomial from the joint covariance, by Gaussian regression:
// E[z_t | z_s] = G z_s with G = S_ts S_ss^{-1}, Var[z_t | z_s] = S_c, and
// the photon-number weight (<|z_t|^2 | z_s> - 1)/2 mixed with the dark floor.
inline WignerPoly herald_oracle(const oddcat::TwoModeCovariance& cov, double dark) {
    double S[4][4];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) S[i][j] = 0.5 * oddcat::at(cov.gamma, i, j);

    const double a = S[2][2], b = S[2][3], d = S[3][3];
    const double det = a * d - b * b;
    if (!(det > 0.0)) throw std::invalid_argument("herald_oracle: singular signal block");
    const double inv[2][2] = {{d / det, -b / det}, {-b / det, a / det}};

    double G[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) G[i][j] = S[i][2] * inv[0][j] + S[i][3] * inv[1][j];

    double tr_sc = 0.0;
    for (int i = 0; i < 2; ++i) tr_sc += S[i][i] - (G[i][0] * S[2][i] + G[i][1] * S[3][i]);

    double gtg[2][2];
    for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) gtg[j][l] = G[0][j] * G[0][l] + G[1][j] * G[1][l];

    double tr_gtg_s = 0.0;
    for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) tr_gtg_s += gtg[j][l] * S[2 + l][2 + j];

    const double p_click = 0.5 * (tr_sc + tr_gtg_s - 1.0);
    if (!(p_click > 0.0)) throw std::invalid_argument("herald_oracle: no excess trigger photons");

    WignerPoly w;
    w.s_xx = S[2][2];
    w.s_xp = S[2][3];
    w.s_pp = S[3][3];
    const double f = (1.0 - dark) / (2.0 * p_click);
    w.q_xx = f * gtg[0][0];
    w.q_xp = f * gtg[0][1];
    w.q_pp = f * gtg[1][1];
    w.c0 = (1.0 - dark) * (tr_sc - 1.0) / (2.0 * p_click) + dark;
    return w;
}

inline double herald_click_probability(const oddcat::TwoModeCovariance& cov) {
    double S[4][4];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) S[i][j] = 0.5 * oddcat::at(cov.gamma, i, j);
    const double a = S[2][2], b = S[2][3], d = S[3][3];
    const double det = a * d - b * b;
    const double inv[2][2] = {{d / det, -b / det}, {-b / det, a / det}};
    double G[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) G[i][j] = S[i][2] * inv[0][j] + S[i][3] * inv[1][j];
    double tr_sc = 0.0;
    for (int i = 0; i < 2; ++i) tr_sc += S[i][i] - (G[i][0] * S[2][i] + G[i][1] * S[3][i]);
    double tr_gtg_s = 0.0;
    for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l) {
            const double gtg = G[0][j] * G[0][l] + G[1][j] * G[1][l];
            tr_gtg_s += gtg * S[2 + l][2 + j];
        }
    return 0.5 * (tr_sc + tr_gtg_s - 1.0);
}

}  // namespace testsupport

#pragma once
// Heralded single-mode state: annihilation on the trigger mode followed by a
// trace over the trigger. For a zero-mean Gaussian input the result is an
// (at most quadratic) polynomial times the unconditioned signal Gaussian,
// optionally mixed with that Gaussian for false heralds.

#include <cmath>

#include "common.hpp"
#include "covariance.hpp"
#include "linalg.hpp"

namespace oddcat {

struct ConditionalState {
    // W(z) = N(z; sigma) * (z^T A z + c), normalized: Tr(A sigma) + c = 1
    Mat2 sigma;  // Wigner covariance of the Gaussian factor (vacuum = 1/2 I)
    Mat2 A;
    double c = 1.0;
    double click_probability = 0.0;  // mean trigger-mode photon number
    double dark_weight = 0.0;

    double normalization() const { return (A * sigma).trace() + c; }

    double wigner(double x, double p) const {
        const Mat2 inv = sigma.inverse();
        const double gauss =
            std::exp(-0.5 * inv.quad(x, p)) / (two_pi * std::sqrt(sigma.det()));
        return gauss * (A.quad(x, p) + c);
    }

    double wigner_origin() const { return c / (two_pi * std::sqrt(sigma.det())); }

    // second-moment matrix <z z^T> = sigma + 2 sigma A sigma (Wick)
    Mat2 second_moments() const { return sigma + 2.0 * (sigma * A * sigma); }

    double mean_photons() const { return 0.5 * (second_moments().trace() - 1.0); }

    // 1D marginal along the quadrature x_theta: p(q) = N(q; var) (beta q^2 + delta)
    struct Marginal {
        double var;
        double beta;
        double delta;
    };
    Marginal marginal_along(double theta) const {
        const double ex = std::cos(theta), ep = std::sin(theta);
        // v = sigma e
        const double vx = sigma.a * ex + sigma.b * ep;
        const double vp = sigma.c * ex + sigma.d * ep;
        const double var = ex * vx + ep * vp;
        const double beta = (A.a * vx * vx + (A.b + A.c) * vx * vp + A.d * vp * vp) / sq(var);
        // conditional covariance of z given e^T z
        const Mat2 vv{vx * vx, vx * vp, vp * vx, vp * vp};
        const Mat2 cond = sigma - vv * (1.0 / var);
        const double delta = (A * cond).trace() + c;
        return {var, beta, delta};
    }
};

inline ConditionalState subtract_photon(const TwoModeCovariance& cov, double dark_fraction) {
    if (!(dark_fraction >= 0.0 && dark_fraction <= 1.0))
        throw config_error("dark_fraction must lie in [0,1]");
    if (!is_physical(cov)) throw numeric_error("subtract_photon: unphysical covariance");

    // Wigner covariance blocks, vacuum = 1/2: trigger = mode 0, signal = mode 1
    const Mat2 stt = block2(cov.gamma, 0, 0) * 0.5;
    const Mat2 sts = block2(cov.gamma, 0, 1) * 0.5;
    const Mat2 sst = block2(cov.gamma, 1, 0) * 0.5;
    const Mat2 sss = block2(cov.gamma, 1, 1) * 0.5;

    const Mat2 sss_inv = sss.inverse();
    // conditioning a photon-number herald: W'(z_s) prop. N(z_s; sss) (z^T A z + c)
    const Mat2 a_raw = (sss_inv * sst * sts * sss_inv) * 0.5;
    const Mat2 cond_tt = stt - sts * sss_inv * sst;
    const double c_raw = 0.5 * (cond_tt.trace() - 1.0);
    const double p_click = 0.5 * (stt.trace() - 1.0);

    // herald probability identity: P = c + Tr(A sigma)
    const double p_check = c_raw + (a_raw * sss).trace();
    if (std::abs(p_check - p_click) > 1e-10 * std::max(1.0, std::abs(p_click)))
        throw numeric_error("subtract_photon: conditioning identity violated");
    if (!(p_click > 0.0)) throw numeric_error("degenerate herald: click probability <= 0");

    ConditionalState st;
    st.sigma = sss;
    st.A = a_raw * ((1.0 - dark_fraction) / p_click);
    st.c = (1.0 - dark_fraction) * c_raw / p_click + dark_fraction;
    st.click_probability = p_click;
    st.dark_weight = dark_fraction;
    return st;
}

inline ConditionalState conditional_state_for(const OpoModel& model, const TemporalMode& signal) {
    const auto trig = TemporalMode::trigger_exponential(model.trigger_filter_hwhm_hz, 0.0);
    const auto cov = assemble_covariance(model, trig, signal);
    return subtract_photon(cov, model.dark_fraction);
}

// Paper-style signal mode for a click at t=0: double-exponential ansatz
// centered one filter group delay before the click.
inline TemporalMode default_signal_mode(const OpoModel& model, double gamma_hz = 9e6,
                                        double kappa_hz = 48e6) {
    return TemporalMode::ansatz(gamma_hz, kappa_hz,
                                -trigger_group_delay(model.trigger_filter_hwhm_hz));
}

}  // namespace oddcat

#pragma once
// Square-normalized temporal mode functions: the causal trigger-filter
// exponential, the double-exponential signal ansatz, and custom sampled
// shapes (piecewise linear).

#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "overlap.hpp"

namespace oddcat {

struct TemporalMode {
    enum class Family { trigger_exp, ansatz, sampled };

    Family family = Family::ansatz;
    double gamma_hz = 9e6;   // ansatz slow rate (Hz)
    double kappa_hz = 48e6;  // ansatz fast rate / trigger filter HWHM (Hz)
    double center = 0.0;     // trigger: click time t_c; ansatz: mode center (s)
    double norm = 1.0;       // multiplicative normalization constant

    // sampled family
    double grid_t0 = 0.0, grid_dt = 0.0;
    std::vector<double> samples;

    // u(t), including normalization
    double value(double t) const {
        switch (family) {
            case Family::trigger_exp: {
                const double a = two_pi * kappa_hz;
                return t <= center ? norm * std::exp(-a * (center - t)) : 0.0;
            }
            case Family::ansatz: {
                const double g = two_pi * gamma_hz, q = two_pi * kappa_hz;
                const double at = std::abs(t - center);
                return norm * (kappa_hz * std::exp(-g * at) - gamma_hz * std::exp(-q * at));
            }
            case Family::sampled: {
                if (samples.size() < 2) return 0.0;
                const double u = (t - grid_t0) / grid_dt;
                if (u < 0 || u > static_cast<double>(samples.size() - 1)) return 0.0;
                const size_t i = std::min(static_cast<size_t>(u), samples.size() - 2);
                const double w = u - static_cast<double>(i);
                return norm * ((1.0 - w) * samples[i] + w * samples[i + 1]);
            }
        }
        return 0.0;
    }

    PiecewiseExp pieces() const {
        PiecewiseExp out;
        switch (family) {
            case Family::trigger_exp: {
                const double a = two_pi * kappa_hz;
                out.pieces.push_back({norm * std::exp(-a * center), 0.0, a, -kInf, center});
                break;
            }
            case Family::ansatz: {
                const double g = two_pi * gamma_hz, q = two_pi * kappa_hz;
                const double c = center;
                // left of center: e^{+g t}, e^{+q t}; right: e^{-g t}, e^{-q t}
                out.pieces.push_back({norm * kappa_hz * std::exp(-g * c), 0.0, g, -kInf, c});
                out.pieces.push_back({-norm * gamma_hz * std::exp(-q * c), 0.0, q, -kInf, c});
                out.pieces.push_back({norm * kappa_hz * std::exp(g * c), 0.0, -g, c, kInf});
                out.pieces.push_back({-norm * gamma_hz * std::exp(q * c), 0.0, -q, c, kInf});
                break;
            }
            case Family::sampled: {
                for (size_t i = 0; i + 1 < samples.size(); ++i) {
                    const double t0 = grid_t0 + grid_dt * static_cast<double>(i);
                    const double t1 = t0 + grid_dt;
                    const double v0 = norm * samples[i], v1 = norm * samples[i + 1];
                    const double slope = (v1 - v0) / grid_dt;
                    out.pieces.push_back({v0 - slope * t0, slope, 0.0, t0, t1});
                }
                break;
            }
        }
        return out;
    }

    double norm_squared_raw() const {
        TemporalMode raw = *this;
        raw.norm = 1.0;
        const auto p = raw.pieces();
        return inner(p, p);
    }

    void check_normalized() const {
        const auto p = pieces();
        const double n2 = inner(p, p);
        if (std::abs(n2 - 1.0) > 1e-10)
            throw numeric_error("temporal mode is not square-normalized");
    }

    static TemporalMode trigger_exponential(double filter_hwhm_hz, double t_click) {
        if (!(filter_hwhm_hz > 0)) throw config_error("trigger filter bandwidth must be positive");
        TemporalMode m;
        m.family = Family::trigger_exp;
        m.kappa_hz = filter_hwhm_hz;
        m.center = t_click;
        m.norm = std::sqrt(2.0 * two_pi * filter_hwhm_hz);
        return m;
    }

    static TemporalMode ansatz(double gamma_hz, double kappa_hz, double center = 0.0) {
        if (!(gamma_hz > 0) || !(kappa_hz > 0)) throw config_error("ansatz rates must be positive");
        TemporalMode m;
        m.family = Family::ansatz;
        // The shape degenerates to zero at gamma == kappa and the piecewise
        // representation cancels catastrophically: the normalization integral
        // loses ~(rate/sep)^2 ulps. A 1% split keeps it good to ~1e-12 while
        // perturbing the (already arbitrary) near-degenerate shape only at
        // the percent level.
        const double sep = 1e-2 * std::max(gamma_hz, kappa_hz);
        if (std::abs(kappa_hz - gamma_hz) < sep)
            kappa_hz = gamma_hz + (kappa_hz >= gamma_hz ? sep : -sep);
        m.gamma_hz = gamma_hz;
        m.kappa_hz = kappa_hz;
        m.center = center;
        m.norm = 1.0;
        m.norm = 1.0 / std::sqrt(m.norm_squared_raw());
        return m;
    }

    static TemporalMode sampled(double t0, double dt, std::vector<double> values) {
        if (values.size() < 2 || !(dt > 0)) throw config_error("sampled mode needs >= 2 points");
        TemporalMode m;
        m.family = Family::sampled;
        m.grid_t0 = t0;
        m.grid_dt = dt;
        m.samples = std::move(values);
        m.norm = 1.0;
        const double n2 = m.norm_squared_raw();
        if (!(n2 > 0)) throw config_error("sampled mode has zero norm");
        m.norm = 1.0 / std::sqrt(n2);
        return m;
    }
};

// Group delay of the lumped Lorentzian trigger filter: the click lags the
// subtraction event by 1/(2 pi kappa_f), so the signal mode is centered
// that far before the click time.
inline double trigger_group_delay(double filter_hwhm_hz) {
    return 1.0 / (two_pi * filter_hwhm_hz);
}

}  // namespace oddcat

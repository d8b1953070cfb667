#pragma once
// Excess two-time quadrature correlations of the OPO output, represented as
// finite sums of two-sided exponentials c * exp(-r|tau|). The vacuum
// delta(tau)/2 floor is carried implicitly.

#include <cmath>
#include <utility>
#include <vector>

#include "common.hpp"
#include "opo_model.hpp"

namespace oddcat {

struct CorrelationKernel {
    struct Term {
        double coef;      // may be negative (squeezed quadrature)
        double rate;      // rad/s, strictly positive
    };
    std::vector<Term> terms;
    bool vacuum_floor_implicit = true;

    void validate() const {
        for (const auto& t : terms)
            if (!(t.rate > 0.0)) throw numeric_error("kernel rate must be positive");
    }

    double operator()(double tau) const {
        double v = 0.0;
        for (const auto& t : terms) v += t.coef * std::exp(-t.rate * std::abs(tau));
        return v;
    }

    double at_zero() const {
        double v = 0.0;
        for (const auto& t : terms) v += t.coef;
        return v;
    }

    // Fourier transform of the excess part: sum of 2 c r / (r^2 + w^2)
    double fourier(double omega) const {
        double v = 0.0;
        for (const auto& t : terms) v += 2.0 * t.coef * t.rate / (sq(t.rate) + sq(omega));
        return v;
    }

    bool empty() const { return terms.empty(); }
};

// Below-threshold quadrature kernels for amplitude decay k and drive eps
// (both rad/s): C_X = (k eps/(k-eps)) e^{-(k-eps)|tau|},
//               C_P = -(k eps/(k+eps)) e^{-(k+eps)|tau|}.
inline std::pair<CorrelationKernel, CorrelationKernel> quadrature_kernels(double x, double k) {
    if (!(x >= 0.0) || x >= 1.0) throw config_error("pump parameter out of range (threshold)");
    CorrelationKernel cx, cp;
    if (x > 0.0) {
        const double eps = x * k;
        cx.terms.push_back({k * eps / (k - eps), k - eps});
        cp.terms.push_back({-k * eps / (k + eps), k + eps});
    }
    return {cx, cp};
}

inline std::pair<CorrelationKernel, CorrelationKernel> output_kernels(const OpoModel& m) {
    m.validate();
    return quadrature_kernels(m.pump_parameter, m.parametric_rate());
}

// Kernel of the quadrature at homodyne angle theta:
// C_theta = cos^2(theta) C_X + sin^2(theta) C_P.
inline CorrelationKernel kernel_at_angle(const CorrelationKernel& cx, const CorrelationKernel& cp,
                                         double theta) {
    const double wx = sq(std::cos(theta)), wp = sq(std::sin(theta));
    CorrelationKernel out;
    for (const auto& t : cx.terms)
        if (wx != 0.0) out.terms.push_back({wx * t.coef, t.rate});
    for (const auto& t : cp.terms)
        if (wp != 0.0) out.terms.push_back({wp * t.coef, t.rate});
    return out;
}

// Spectral density relative to vacuum: S = 1 + 2 eta * FT[C](omega).
inline double spectrum_rel(const CorrelationKernel& kern, double omega, double eta) {
    return 1.0 + 2.0 * eta * kern.fourier(omega);
}

// (squeezed dB, antisqueezed dB) at angular frequency omega.
inline std::pair<double, double> squeezing_spectrum(const OpoModel& m, double omega, double eta_t) {
    if (!(eta_t >= 0.0 && eta_t <= 1.0)) throw config_error("eta_t must lie in [0,1]");
    auto [cx, cp] = output_kernels(m);
    const double s_anti = spectrum_rel(cx, omega, eta_t);
    const double s_sq = spectrum_rel(cp, omega, eta_t);
    return {10.0 * std::log10(s_sq), 10.0 * std::log10(s_anti)};
}

}  // namespace oddcat

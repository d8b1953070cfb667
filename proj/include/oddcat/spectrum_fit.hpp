#pragma once
// Fit of measured squeezing / antisqueezing spectra (dB relative to shot
// noise) to the single-pole cavity model, over pump amplitude and total
// detection efficiency.

#include <cmath>
#include <vector>

#include "common.hpp"
#include "opo_model.hpp"
#include "optimize.hpp"

namespace oddcat {

struct SpectrumData {
    std::vector<double> freq_hz;
    std::vector<double> squeezed_db;
    std::vector<double> antisqueezed_db;
};

struct SpectrumFitResult {
    double pump = 0.0;        // x
    double efficiency = 0.0;  // eta_t
    double gain = 1.0;        // parametric gain implied by x
    double pump_err = 0.0;
    double efficiency_err = 0.0;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;  // efficiency ~ 0: pump is unidentifiable
};

// Relative spectra at sideband angular frequency w for pump x, rate k:
//   S_anti = 1 + 4 eta k e / ((k-e)^2 + w^2),  S_sq = 1 - 4 eta k e / ((k+e)^2 + w^2)
inline std::pair<double, double> spectrum_pair_db(double x, double eta, double k, double freq_hz) {
    const double e = x * k;
    const double w = two_pi * freq_hz;
    const double anti = 1.0 + eta * 4.0 * k * e / (sq(k - e) + w * w);
    const double sqz = 1.0 - eta * 4.0 * k * e / (sq(k + e) + w * w);
    return {10.0 * std::log10(sqz), 10.0 * std::log10(anti)};
}

inline SpectrumFitResult fit_spectrum(const SpectrumData& data, double cavity_hwhm_hz,
                                      double pump0 = 0.2, double eta0 = 0.5) {
    if (data.freq_hz.empty() || data.freq_hz.size() != data.squeezed_db.size() ||
        data.freq_hz.size() != data.antisqueezed_db.size())
        throw config_error("fit_spectrum: empty or mismatched data arrays");
    const double k = two_pi * 2.0 * cavity_hwhm_hz;

    auto residuals = [&](const std::vector<double>& p) {
        const double x = std::clamp(p[0], 0.0, 0.999999);
        const double eta = std::clamp(p[1], 0.0, 1.0);
        std::vector<double> r;
        r.reserve(2 * data.freq_hz.size() + 2);
        for (size_t i = 0; i < data.freq_hz.size(); ++i) {
            const auto [sdb, adb] = spectrum_pair_db(x, eta, k, data.freq_hz[i]);
            r.push_back(sdb - data.squeezed_db[i]);
            r.push_back(adb - data.antisqueezed_db[i]);
        }
        // pull steps that leave the box back toward it; a bare clamp creates
        // a flat plateau whose zero Jacobian strands the fit on the boundary
        r.push_back(100.0 * std::abs(p[0] - x));
        r.push_back(100.0 * std::abs(p[1] - eta));
        return r;
    };

    const auto lm = levenberg_marquardt(residuals, {pump0, eta0});

    SpectrumFitResult out;
    out.pump = std::clamp(lm.params[0], 0.0, 0.999999);
    out.efficiency = std::clamp(lm.params[1], 0.0, 1.0);
    out.gain = pump_to_gain(out.pump);
    out.chi2 = lm.chi2;
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    if (lm.covariance.size() == 4) {
        out.pump_err = std::sqrt(std::max(0.0, lm.covariance[0]));
        out.efficiency_err = std::sqrt(std::max(0.0, lm.covariance[3]));
    }
    // With no measurable squeezing the pump direction is flat and the fit is
    // ill-posed; flag it instead of reporting a meaningless pump value.
    out.degenerate = out.efficiency < 1e-4 || !std::isfinite(out.pump_err) || out.pump_err > 10.0;
    return out;
}

}  // namespace oddcat

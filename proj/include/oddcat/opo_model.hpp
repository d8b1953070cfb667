#pragma once
// Physical parameters of the cw OPO source and the tap/filter chain.

#include <cmath>

#include "common.hpp"

namespace oddcat {

struct OpoModel {
    double pump_parameter = 0.0;        // x = drive / amplitude decay, 0 <= x < 1
    double cavity_hwhm_hz = 4.4e6;      // bare cavity half width (Hz)
    double eta_opo = 1.0;               // escape efficiency
    double eta_pr = 1.0;                // propagation efficiency, signal path
    double eta_hom = 1.0;               // homodyne visibility^2
    double eta_det = 1.0;               // photodiode quantum efficiency
    double bs_reflectivity = 0.05;      // |rho|^2 tapped to the trigger arm
    double trigger_filter_hwhm_hz = 48e6;  // lumped Lorentzian trigger filter (Hz)
    double dark_fraction = 0.0;         // probability a herald is uncorrelated with the field

    void validate() const {
        if (!(pump_parameter >= 0.0) || pump_parameter >= 1.0)
            throw config_error("pump_parameter must satisfy 0 <= x < 1 (below threshold)");
        if (!(cavity_hwhm_hz > 0.0) || !(trigger_filter_hwhm_hz > 0.0))
            throw config_error("bandwidths must be positive");
        for (double e : {eta_opo, eta_pr, eta_hom, eta_det})
            if (!(e >= 0.0 && e <= 1.0)) throw config_error("efficiencies must lie in [0,1]");
        if (!(bs_reflectivity >= 0.0 && bs_reflectivity <= 1.0))
            throw config_error("bs_reflectivity must lie in [0,1]");
        if (!(dark_fraction >= 0.0 && dark_fraction <= 1.0))
            throw config_error("dark_fraction must lie in [0,1]");
    }

    // Amplitude decay rate of the parametric interaction (rad/s). The
    // bandwidth the squeezed output sees is the full cavity width, i.e.
    // twice the bare-cavity HWHM.
    double parametric_rate() const { return two_pi * 2.0 * cavity_hwhm_hz; }

    double drive_rate() const { return pump_parameter * parametric_rate(); }

    double bs_transmittivity() const { return 1.0 - bs_reflectivity; }

    // efficiency entering the signal-mode covariance block
    double eta_signal() const { return eta_opo * eta_pr * eta_hom; }
    // efficiency entering the trigger-mode covariance block; trigger-arm
    // optical losses only rescale the click rate, not the state shape
    double eta_trigger() const { return eta_opo; }

    static OpoModel ideal(double gain);
    static OpoModel paper(double gain);
};

// Pump parameter from the DC power gain of a resonant seed,
// G = ((1+x)/(1-x))^2, and its inverse.
inline double gain_to_pump(double gain) {
    if (!(gain >= 1.0)) throw config_error("gain must be >= 1");
    const double s = std::sqrt(gain);
    return (s - 1.0) / (s + 1.0);
}

inline double pump_to_gain(double x) {
    if (!(x >= 0.0) || x >= 1.0) throw config_error("pump parameter must satisfy 0 <= x < 1");
    return sq((1.0 + x) / (1.0 - x));
}

// Mean photon flux of the OPO output beam (photons/s); equals
// (C_X(0) + C_P(0)) / 2 of the excess quadrature kernels.
inline double photon_flux(const OpoModel& m) {
    m.validate();
    const double k = m.parametric_rate();
    const double e = m.drive_rate();
    if (e == 0.0) return 0.0;
    return k * e * e / (k * k - e * e);
}

inline OpoModel OpoModel::ideal(double gain) {
    OpoModel m;
    m.pump_parameter = gain_to_pump(gain);
    m.cavity_hwhm_hz = 4.4e6;
    m.bs_reflectivity = 0.05;
    m.trigger_filter_hwhm_hz = 48e6;
    return m;
}

inline OpoModel OpoModel::paper(double gain) {
    OpoModel m = ideal(gain);
    m.eta_pr = 0.66;        // lumped propagation + mode-matching losses
    m.eta_det = 0.85;
    m.dark_fraction = 0.105;  // false heralds: APD darks + trigger-channel admixture
    return m;
}

}  // namespace oddcat

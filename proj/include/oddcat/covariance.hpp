#pragma once
// Joint covariance of the trigger and signal temporal modes, in the scaling
// gamma_ij = 2 Re<y_i y_j>, vacuum = identity, ordering (x_t, p_t, x_s, p_s).

#include <cmath>
#include <utility>

#include "common.hpp"
#include "correlation_kernel.hpp"
#include "linalg.hpp"
#include "opo_model.hpp"
#include "overlap.hpp"
#include "temporal_mode.hpp"

namespace oddcat {

struct TwoModeCovariance {
    Mat4 gamma = mat4_identity();
};

inline double det4(const Mat4& m) {
    // expansion by 2x2 complementary minors (fine at this size)
    auto minor3 = [&](int r0, int r1, int r2, int c0, int c1, int c2) {
        return at(m, r0, c0) * (at(m, r1, c1) * at(m, r2, c2) - at(m, r1, c2) * at(m, r2, c1)) -
               at(m, r0, c1) * (at(m, r1, c0) * at(m, r2, c2) - at(m, r1, c2) * at(m, r2, c0)) +
               at(m, r0, c2) * (at(m, r1, c0) * at(m, r2, c1) - at(m, r1, c1) * at(m, r2, c0));
    };
    return at(m, 0, 0) * minor3(1, 2, 3, 1, 2, 3) - at(m, 0, 1) * minor3(1, 2, 3, 0, 2, 3) +
           at(m, 0, 2) * minor3(1, 2, 3, 0, 1, 3) - at(m, 0, 3) * minor3(1, 2, 3, 0, 1, 2);
}

// Symplectic eigenvalues of gamma/2 (vacuum -> 1/2, 1/2), via the two-mode
// invariants Delta = det A + det B + 2 det C.
inline std::pair<double, double> symplectic_eigenvalues(const TwoModeCovariance& cov) {
    const Mat2 A = block2(cov.gamma, 0, 0) * 0.5;
    const Mat2 B = block2(cov.gamma, 1, 1) * 0.5;
    const Mat2 C = block2(cov.gamma, 0, 1) * 0.5;
    const double delta = A.det() + B.det() + 2.0 * C.det();
    Mat4 half = cov.gamma;
    for (auto& v : half) v *= 0.5;
    const double d4 = det4(half);
    const double disc = std::max(0.0, delta * delta - 4.0 * d4);
    const double s = std::sqrt(disc);
    const double hi = std::sqrt(std::max(0.0, (delta + s) / 2.0));
    const double lo = std::sqrt(std::max(0.0, (delta - s) / 2.0));
    return {lo, hi};
}

inline bool is_physical(const TwoModeCovariance& cov, double tol = 1e-9) {
    if (max_asymmetry(cov.gamma) > 1e-9) return false;
    const auto [lo, hi] = symplectic_eigenvalues(cov);
    (void)hi;
    return lo >= 0.5 - tol;
}

inline TwoModeCovariance assemble_covariance(const OpoModel& model, const TemporalMode& trigger,
                                             const TemporalMode& signal) {
    model.validate();
    trigger.check_normalized();
    signal.check_normalized();
    if (trigger.family == TemporalMode::Family::trigger_exp) {
        // causal: no support after the click
        if (trigger.value(trigger.center + 1e-12) != 0.0)
            throw numeric_error("trigger mode must vanish after the click");
    }

    const auto [cx, cp] = output_kernels(model);
    const auto fp = trigger.pieces();
    const auto up = signal.pieces();

    const double rho2 = model.bs_reflectivity;
    const double tau2 = model.bs_transmittivity();
    const double rho_tau = std::sqrt(rho2 * tau2);
    const double eta_t = model.eta_trigger();
    const double eta_s = model.eta_signal();

    TwoModeCovariance cov;
    const double off_x = kernel_overlap(cx, fp, fp), off_p = kernel_overlap(cp, fp, fp);
    const double ouu_x = kernel_overlap(cx, up, up), ouu_p = kernel_overlap(cp, up, up);
    const double ofu_x = kernel_overlap(cx, fp, up), ofu_p = kernel_overlap(cp, fp, up);

    at(cov.gamma, 0, 0) = 1.0 + 2.0 * rho2 * eta_t * off_x;
    at(cov.gamma, 1, 1) = 1.0 + 2.0 * rho2 * eta_t * off_p;
    at(cov.gamma, 2, 2) = 1.0 + 2.0 * tau2 * eta_s * ouu_x;
    at(cov.gamma, 3, 3) = 1.0 + 2.0 * tau2 * eta_s * ouu_p;
    at(cov.gamma, 0, 2) = at(cov.gamma, 2, 0) = 2.0 * rho_tau * std::sqrt(eta_t * eta_s) * ofu_x;
    at(cov.gamma, 1, 3) = at(cov.gamma, 3, 1) = 2.0 * rho_tau * std::sqrt(eta_t * eta_s) * ofu_p;

    if (!is_physical(cov))
        throw numeric_error("assembled covariance violates the uncertainty bound");
    return cov;
}

}  // namespace oddcat

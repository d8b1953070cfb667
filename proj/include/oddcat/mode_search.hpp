#pragma once
// Search over the two-parameter signal-mode ansatz (rise rate gamma, decay
// rate kappa) for the temporal mode that extracts the best conditional state.

#include <string>

#include "conditional_state.hpp"
#include "fock.hpp"
#include "optimize.hpp"

namespace oddcat {

enum class ModeObjective {
    wigner_origin,    // minimize W(0,0)
    cat_fidelity,     // maximize best-amplitude odd-cat fidelity
    photon_fidelity,  // maximize <1|rho|1>
};

inline ModeObjective mode_objective_from_string(const std::string& s) {
    if (s == "wigner" || s == "wigner_origin" || s == "w00") return ModeObjective::wigner_origin;
    if (s == "cat" || s == "cat_fidelity") return ModeObjective::cat_fidelity;
    if (s == "photon" || s == "photon_fidelity") return ModeObjective::photon_fidelity;
    throw config_error("unknown mode objective: " + s);
}

struct ModeSearchResult {
    double gamma_hz = 0.0;
    double kappa_hz = 0.0;
    double objective_value = 0.0;  // value of the chosen figure of merit at the optimum
    double best_cat_alpha = 0.0;   // filled for the cat objective
    int evaluations = 0;
    bool converged = false;
    bool hit_eval_cap = false;
    std::vector<NelderMeadResult::TracePoint> trace;
};

// Searches (gamma, kappa) in MHz over [1, 100] x [1, 500]. The objective is
// wrapped so Nelder-Mead always minimizes; covariance assembly failures
// (unphysical corner cases) are treated as bad points, not errors.
inline ModeSearchResult optimize_mode_function(const OpoModel& model, ModeObjective objective,
                                               double gamma0_mhz = 9.0, double kappa0_mhz = 48.0,
                                               int max_evals = 500, int fock_nmax = 12) {
    auto score = [&](const std::vector<double>& g) -> double {
        const double gamma = g[0] * 1e6, kappa = g[1] * 1e6;
        try {
            const auto mode = default_signal_mode(model, gamma, kappa);
            const auto st = conditional_state_for(model, mode);
            if (objective == ModeObjective::wigner_origin) return st.wigner_origin();
            const auto rho = fock_from_state(st, fock_nmax);
            if (objective == ModeObjective::cat_fidelity) return -best_cat(rho).second;
            return -rho.at(1, 1).real();
        } catch (const numeric_error&) {
            return 1e6;
        }
        return 1e6;
    };

    const auto nm = nelder_mead(score, {gamma0_mhz, kappa0_mhz}, {1.0, 1.0}, {100.0, 500.0},
                                max_evals);

    ModeSearchResult out;
    out.gamma_hz = nm.x[0] * 1e6;
    out.kappa_hz = nm.x[1] * 1e6;
    out.evaluations = nm.evaluations;
    out.converged = nm.converged;
    out.hit_eval_cap = !nm.converged && nm.evaluations >= max_evals;
    out.trace = nm.trace;

    const auto mode = default_signal_mode(model, out.gamma_hz, out.kappa_hz);
    const auto st = conditional_state_for(model, mode);
    if (objective == ModeObjective::wigner_origin) {
        out.objective_value = st.wigner_origin();
    } else {
        const auto rho = fock_from_state(st, fock_nmax);
        if (objective == ModeObjective::cat_fidelity) {
            const auto [alpha, fid] = best_cat(rho);
            out.objective_value = fid;
            out.best_cat_alpha = alpha;
        } else {
            out.objective_value = rho.at(1, 1).real();
        }
    }
    return out;
}

}  // namespace oddcat

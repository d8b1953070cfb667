// Squeezing spectra two ways: the closed form, and a Welch estimate from a
// synthesized homodyne noise trace drawn from the same model.

#include <cstdio>

#include <oddcat/datasynth.hpp>
#include <oddcat/opo_model.hpp>

using namespace oddcat;

int main() {
    const auto m = OpoModel::paper(2.3);
    const double eta_t = m.eta_signal() * m.eta_det;

    const double fs = 200e6;
    Rng rng_anti(11), rng_sq(12);
    const auto psd_anti =
        welch_psd(homodyne_noise_trace(m, 0.0, 0.004, fs, eta_t, rng_anti), 4096, fs);
    const auto psd_sq =
        welch_psd(homodyne_noise_trace(m, 0.5 * pi, 0.004, fs, eta_t, rng_sq), 4096, fs);

    std::printf("total efficiency %.3f\n", eta_t);
    std::printf("  f [MHz]   squeezed dB (model / trace)   antisqueezed dB (model / trace)\n");
    for (size_t k = 4; k < psd_sq.freq_hz.size(); k *= 2) {
        const double f = psd_sq.freq_hz[k];
        if (f > 50e6) break;
        const auto [sq_db, anti_db] = squeezing_spectrum(m, two_pi * f, eta_t);
        std::printf("  %7.3f   %+6.2f / %+6.2f              %+6.2f / %+6.2f\n", f / 1e6, sq_db,
                    10.0 * std::log10(psd_sq.power_rel[k]), anti_db,
                    10.0 * std::log10(psd_anti.power_rel[k]));
    }
    return 0;
}

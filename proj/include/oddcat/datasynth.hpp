#pragma once
// Synthetic acquisition: heralded quadrature records under a scanned LO
// phase, raw 1000-point segments with an embedded temporal mode, vacuum
// calibration draws, and continuous homodyne noise traces.

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "conditional_state.hpp"
#include "correlation_kernel.hpp"
#include "fft.hpp"
#include "rng.hpp"
#include "temporal_mode.hpp"

namespace oddcat {

struct calibration_error : config_error {
    using config_error::config_error;
};

// ---------------------------------------------------------------- phase plan

struct PhasePlan {
    enum class Kind { linear_scan, fixed };
    Kind kind = Kind::linear_scan;
    double scan_rate = pi;       // rad/s, LO phase ramp
    double fixed_theta = 0.0;
    double jitter_sigma = 0.0;   // per-record Gaussian phase jitter (rad)
    double click_rate_hz = 1e4;  // used only when no click times are supplied

    static PhasePlan scan(double rate = pi) { return {Kind::linear_scan, rate, 0.0, 0.0, 1e4}; }
    static PhasePlan fixed(double theta) { return {Kind::fixed, 0.0, theta, 0.0, 1e4}; }

    double theta_at(double t_seconds, Rng& rng) const {
        double th = (kind == Kind::fixed) ? fixed_theta : scan_rate * t_seconds;
        if (jitter_sigma > 0.0) th += jitter_sigma * rng.normal();
        th = std::fmod(th, two_pi);
        return th < 0.0 ? th + two_pi : th;
    }
};

// ---------------------------------------------------------------- click times

struct ClickEvent {
    double time_s;
    bool dark;  // APD dark count, not field-correlated. Never exported to data.
};

// Homogeneous Poisson superposition of field clicks (rate = tap fraction x
// trigger-path efficiency x photon flux) and dark clicks.
inline std::vector<ClickEvent> click_times(const OpoModel& m, double duration_s,
                                           double trigger_path_efficiency = 0.25,
                                           double dark_rate_hz = 160.0, Rng* rng = nullptr) {
    if (!(duration_s > 0.0)) throw config_error("click_times: duration must be positive");
    if (!(trigger_path_efficiency > 0.0 && trigger_path_efficiency <= 1.0))
        throw config_error("click_times: trigger path efficiency must lie in (0,1]");
    m.validate();
    Rng local(12345);
    Rng& r = rng ? *rng : local;
    const double rate_signal = m.bs_reflectivity * trigger_path_efficiency * photon_flux(m);
    const double rate_total = rate_signal + dark_rate_hz;
    std::vector<ClickEvent> out;
    out.reserve(static_cast<size_t>(rate_total * duration_s * 1.1) + 16);
    double t = 0.0;
    while (true) {
        t += r.exponential(rate_total);
        if (t >= duration_s) break;
        out.push_back({t, r.uniform() * rate_total < dark_rate_hz});
    }
    return out;
}

inline double expected_click_rate(const OpoModel& m, double trigger_path_efficiency = 0.25,
                                  double dark_rate_hz = 160.0) {
    return m.bs_reflectivity * trigger_path_efficiency * photon_flux(m) + dark_rate_hz;
}

inline double dark_fraction_of(const std::vector<ClickEvent>& clicks) {
    if (clicks.empty()) return 0.0;
    size_t nd = 0;
    for (const auto& c : clicks) nd += c.dark ? 1 : 0;
    return static_cast<double>(nd) / static_cast<double>(clicks.size());
}

// Keep exactly n events, stride-thinned across the full span (the DAQ stores
// a bounded number of segments per scan regardless of the raw click rate).
inline std::vector<ClickEvent> thin_clicks(const std::vector<ClickEvent>& clicks, size_t n) {
    if (clicks.size() < n) throw calibration_error("thin_clicks: fewer clicks than records requested");
    std::vector<ClickEvent> out;
    out.reserve(n);
    for (size_t j = 0; j < n; ++j) out.push_back(clicks[j * clicks.size() / n]);
    return out;
}

// ---------------------------------------------------------------- quadratures

struct QuadratureRecord {
    double theta;
    double x;
};

struct QuadratureDataset {
    std::vector<QuadratureRecord> records;
    double vacuum_scale = 1.0;  // multiplicative calibration already applied to x
    // provenance
    uint64_t seed = 0;
    std::string model_hash;
    double mode_gamma_hz = 0.0;
    double mode_kappa_hz = 0.0;
    double eta_det_applied = 1.0;
    double effective_dark_fraction = 0.0;

    size_t size() const { return records.size(); }
};

// Exact draw from the marginal p(q) = N(q; var) (beta q^2 + delta),
// beta*var + delta = 1: mixture of a Gaussian (weight delta) and a
// sign-symmetrized 3-d radius (weight beta*var; q^2-weighted Gaussian).
inline double sample_marginal(const ConditionalState::Marginal& m, Rng& rng) {
    if (!(m.var > 0.0) || m.beta < -1e-12 || m.delta < -1e-9)
        throw numeric_error("sample_marginal: marginal is not a valid density");
    const double w_poly = std::clamp(m.beta * m.var, 0.0, 1.0);
    const double sigma = std::sqrt(m.var);
    if (rng.uniform() < w_poly) {
        const double n1 = rng.normal(), n2 = rng.normal(), n3 = rng.normal();
        const double r = sigma * std::sqrt(n1 * n1 + n2 * n2 + n3 * n3);
        return rng.uniform() < 0.5 ? -r : r;
    }
    return sigma * rng.normal();
}

// Detector quantum efficiency applied per sample: x -> sqrt(eta) x + vacuum.
inline double apply_detector(double x, double eta_det, Rng& rng) {
    if (eta_det >= 1.0) return x;
    return std::sqrt(eta_det) * x + std::sqrt((1.0 - eta_det) * 0.5) * rng.normal();
}

// n heralded records. theta_j comes from the phase plan at the j-th click
// time (supplied, or an internal Poisson stream at plan.click_rate_hz);
// x_j is an exact marginal draw, optionally smeared by detector efficiency.
// Record j uses substream (seed, j): order-independent and bit-reproducible.
inline QuadratureDataset sample_quadratures(const ConditionalState& st, size_t n,
                                            const PhasePlan& plan, uint64_t seed,
                                            double eta_det = 1.0,
                                            const std::vector<double>* times_s = nullptr) {
    if (times_s && times_s->size() < n)
        throw config_error("sample_quadratures: fewer click times than records");
    std::vector<double> internal;
    if (!times_s && plan.kind == PhasePlan::Kind::linear_scan) {
        Rng tr = Rng::substream(seed, 0xC11C);
        internal.reserve(n);
        double t = 0.0;
        for (size_t j = 0; j < n; ++j) {
            t += tr.exponential(plan.click_rate_hz);
            internal.push_back(t);
        }
        times_s = &internal;
    }
    QuadratureDataset ds;
    ds.seed = seed;
    ds.eta_det_applied = eta_det;
    ds.effective_dark_fraction = st.dark_weight;
    ds.records.reserve(n);
    for (size_t j = 0; j < n; ++j) {
        Rng rng = Rng::substream(seed, j);
        const double t = times_s ? (*times_s)[j] : 0.0;
        const double theta = plan.theta_at(t, rng);
        double x = sample_marginal(st.marginal_along(theta), rng);
        x = apply_detector(x, eta_det, rng);
        ds.records.push_back({theta, x});
    }
    return ds;
}

inline ConditionalState::Marginal vacuum_marginal() { return {0.5, 0.0, 1.0}; }

// LO-only records for calibration runs.
inline QuadratureDataset sample_vacuum(size_t n, const PhasePlan& plan, uint64_t seed) {
    QuadratureDataset ds;
    ds.seed = seed;
    ds.records.reserve(n);
    Rng tr = Rng::substream(seed, 0xC11C);
    double t = 0.0;
    for (size_t j = 0; j < n; ++j) {
        Rng rng = Rng::substream(seed, j);
        t += tr.exponential(plan.click_rate_hz);
        const double theta = plan.theta_at(t, rng);
        ds.records.push_back({theta, sample_marginal(vacuum_marginal(), rng)});
    }
    return ds;
}

// scale = sqrt(0.5 / var): maps the measured vacuum variance onto the 1/2
// convention. Applied multiplicatively to subsequent datasets.
inline double calibrate_vacuum(const QuadratureDataset& vac) {
    if (vac.size() < 1000)
        throw calibration_error("calibrate_vacuum: need at least 1000 vacuum records");
    double s2 = 0.0;
    for (const auto& r : vac.records) s2 += r.x * r.x;
    s2 /= static_cast<double>(vac.size());
    if (!(s2 > 0.0)) throw numeric_error("calibrate_vacuum: non-positive variance");
    return std::sqrt(0.5 / s2);
}

inline void apply_scale(QuadratureDataset& ds, double scale) {
    for (auto& r : ds.records) r.x *= scale;
    ds.vacuum_scale *= scale;
}

// ---------------------------------------------------------------- segments

// 1000 samples spanning 2 us around the click (500 MS/s): sample i sits at
// t = (i - 500) * 2 ns relative to the click.
struct SegmentGrid {
    static constexpr int n = 1000;
    static constexpr double dt = 2e-9;
    static constexpr int click_index = 500;
    static double time_of(int i) { return (i - click_index) * dt; }
};

struct RawSegment {
    int64_t timestamp_ns = 0;
    uint64_t index = 0;
    uint64_t flags = 0;  // bit 0: vacuum calibration segment
    std::vector<double> samples;  // stored as f32 on disk; double in memory
};

// Mode sampled on the segment grid and discretely normalized (sum u^2 = 1).
inline std::vector<double> discretize_mode(const TemporalMode& mode) {
    std::vector<double> u(SegmentGrid::n);
    double n2 = 0.0;
    for (int i = 0; i < SegmentGrid::n; ++i) {
        u[static_cast<size_t>(i)] = mode.value(SegmentGrid::time_of(i));
        n2 += sq(u[static_cast<size_t>(i)]);
    }
    if (!(n2 > 0.0)) throw numeric_error("discretize_mode: mode vanishes on the segment grid");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& v : u) v *= inv;
    return u;
}

inline double matched_filter(const std::vector<double>& mode_d, const RawSegment& seg) {
    if (mode_d.size() != seg.samples.size())
        throw config_error("matched_filter: mode / segment length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < mode_d.size(); ++i) s += mode_d[i] * seg.samples[i];
    return s;
}

// Draws stationary Gaussian vectors with per-sample covariance
//   K_ij = delta_ij / 2 + eta * dt * C_theta(t_i - t_j)
// by circulant embedding. The X / P kernel spectra enter linearly, so the
// embedding eigenvalues at any homodyne angle are a two-term combination of
// two precomputed transforms.
class ColoredNoise {
  public:
    ColoredNoise(const OpoModel& model, double eta, size_t n_samples, double dt)
        : n_(n_samples), dt_(dt), nfft_(next_pow2(2 * n_samples)), eta_(eta) {
        auto [cx, cp] = output_kernels(model);
        lam_x_ = kernel_eigenvalues(cx);
        lam_p_ = kernel_eigenvalues(cp);
    }

    // White vacuum floor only (x = 0 or calibration runs).
    ColoredNoise(size_t n_samples, double dt)
        : n_(n_samples), dt_(dt), nfft_(next_pow2(2 * n_samples)), eta_(0.0) {
        lam_x_.assign(nfft_, 0.0);
        lam_p_.assign(nfft_, 0.0);
    }

    size_t size() const { return n_; }

    std::vector<double> draw(double theta, Rng& rng) const {
        const double wx = sq(std::cos(theta)), wp = sq(std::sin(theta));
        std::vector<std::complex<double>> z(nfft_);
        const size_t half = nfft_ / 2;
        for (size_t k = 0; k <= half; ++k) {
            const double lam =
                std::max(0.0, 0.5 + eta_ * dt_ * (wx * lam_x_[k] + wp * lam_p_[k]));
            if (k == 0 || k == half) {
                z[k] = std::sqrt(lam) * rng.normal();
            } else {
                const double s = std::sqrt(0.5 * lam);
                z[k] = {s * rng.normal(), s * rng.normal()};
                z[nfft_ - k] = std::conj(z[k]);
            }
        }
        fft_inplace(z, true);
        const double scale = std::sqrt(static_cast<double>(nfft_));
        std::vector<double> out(n_);
        for (size_t i = 0; i < n_; ++i) out[i] = scale * z[i].real();
        return out;
    }

  private:
    // DFT of the symmetrized kernel sequence C(m dt); real by symmetry.
    std::vector<double> kernel_eigenvalues(const CorrelationKernel& kern) const {
        std::vector<std::complex<double>> c(nfft_, 0.0);
        for (size_t m = 0; m <= nfft_ / 2; ++m) {
            const double v = kern(static_cast<double>(m) * dt_);
            c[m] = v;
            if (m != 0 && m != nfft_ / 2) c[nfft_ - m] = v;
        }
        fft_inplace(c, false);
        std::vector<double> lam(nfft_);
        for (size_t k = 0; k < nfft_; ++k) lam[k] = c[k].real();
        return lam;
    }

    size_t n_;
    double dt_;
    size_t nfft_;
    double eta_;
    std::vector<double> lam_x_, lam_p_;
};

// Builds heralded segments: the quadrature value rides on the discrete mode,
// and the complement is stationary noise projected orthogonal to the mode so
// the matched filter returns x_value identically. This approximates the true
// conditional out-of-mode statistics by the unconditional process.
class SegmentSynthesizer {
  public:
    SegmentSynthesizer(const OpoModel& model, const TemporalMode& mode)
        : mode_d_(discretize_mode(mode)),
          noise_(model, model.eta_signal(), SegmentGrid::n, SegmentGrid::dt) {}

    // vacuum-complement variant (white noise floor only)
    explicit SegmentSynthesizer(const TemporalMode& mode)
        : mode_d_(discretize_mode(mode)), noise_(SegmentGrid::n, SegmentGrid::dt) {}

    const std::vector<double>& discrete_mode() const { return mode_d_; }

    RawSegment operator()(double x_value, double theta, Rng& rng) const {
        RawSegment seg;
        seg.samples = noise_.draw(theta, rng);
        double along = 0.0;
        for (size_t i = 0; i < seg.samples.size(); ++i) along += mode_d_[i] * seg.samples[i];
        for (size_t i = 0; i < seg.samples.size(); ++i)
            seg.samples[i] += (x_value - along) * mode_d_[i];
        return seg;
    }

  private:
    std::vector<double> mode_d_;
    ColoredNoise noise_;
};

inline RawSegment synthesize_segment(double x_value, double theta, const SegmentSynthesizer& synth,
                                     Rng& rng) {
    return synth(x_value, theta, rng);
}

// Calibration segment: bare vacuum noise, no embedded mode (matched-filter
// outputs over an ensemble are N(0, 1/2)).
inline RawSegment vacuum_segment(Rng& rng) {
    RawSegment seg;
    seg.flags = 1;
    seg.samples.resize(SegmentGrid::n);
    const double s = std::sqrt(0.5);
    for (auto& v : seg.samples) v = s * rng.normal();
    return seg;
}

// ---------------------------------------------------------------- noise traces

// Stationary homodyne trace whose PSD matches the closed-form quadrature
// spectrum at the given phase; frequency-domain synthesis via the same
// circulant machinery as segments.
inline std::vector<double> homodyne_noise_trace(const OpoModel& model, double phase,
                                                double duration_s, double sample_rate_hz,
                                                double eta_t, Rng& rng) {
    if (!(sample_rate_hz >= 20.0 * model.cavity_hwhm_hz))
        throw config_error("homodyne_noise_trace: sample rate must be >= 20x cavity HWHM");
    const size_t n = static_cast<size_t>(duration_s * sample_rate_hz);
    if (n < 2) throw config_error("homodyne_noise_trace: trace too short");
    ColoredNoise noise(model, eta_t, n, 1.0 / sample_rate_hz);
    return noise.draw(phase, rng);
}

struct WelchSpectrum {
    std::vector<double> freq_hz;
    std::vector<double> power_rel;  // relative to the vacuum floor (1/2 per sample)
};

// Hann-windowed Welch average with 50% overlap, normalized so iid N(0, 1/2)
// input gives power_rel = 1.
inline WelchSpectrum welch_psd(const std::vector<double>& trace, size_t nfft,
                               double sample_rate_hz) {
    if (!is_pow2(nfft) || nfft < 8) throw config_error("welch_psd: nfft must be a power of two");
    if (trace.size() < nfft) throw config_error("welch_psd: trace shorter than nfft");
    std::vector<double> win(nfft);
    double w2 = 0.0;
    for (size_t i = 0; i < nfft; ++i) {
        win[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) /
                                       static_cast<double>(nfft - 1)));
        w2 += sq(win[i]);
    }
    WelchSpectrum out;
    out.freq_hz.resize(nfft / 2 + 1);
    out.power_rel.assign(nfft / 2 + 1, 0.0);
    size_t nseg = 0;
    for (size_t start = 0; start + nfft <= trace.size(); start += nfft / 2, ++nseg) {
        std::vector<std::complex<double>> a(nfft);
        for (size_t i = 0; i < nfft; ++i) a[i] = trace[start + i] * win[i];
        fft_inplace(a, false);
        for (size_t k = 0; k <= nfft / 2; ++k) out.power_rel[k] += std::norm(a[k]);
    }
    const double norm = 1.0 / (static_cast<double>(nseg) * w2 * 0.5);
    for (size_t k = 0; k <= nfft / 2; ++k) {
        out.freq_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(nfft);
        out.power_rel[k] *= norm;
    }
    return out;
}

}  // namespace oddcat

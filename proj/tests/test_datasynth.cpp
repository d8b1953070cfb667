// Synthetic-acquisition checks: exact marginal sampling laws, reproducibility,
// click statistics, segment synthesis, and spectral content of noise traces.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <oddcat/conditional_state.hpp>
#include <oddcat/covariance.hpp>
#include <oddcat/datasynth.hpp>
#include <oddcat/opo_model.hpp>
#include <oddcat/rng.hpp>
#include <oddcat/spectrum_fit.hpp>

#include "support/stats.hpp"

using namespace oddcat;

namespace {

// CDF of N(q; var) (beta q^2 + delta): Gaussian part plus the q^2-weighted
// Gaussian integral v [Phi(u) - u e^{-u^2}/sqrt(pi)], u = q/sqrt(2v)
std::function<double(double)> marginal_cdf(const ConditionalState::Marginal& m) {
    return [m](double q) {
        const double u = q / std::sqrt(2.0 * m.var);
        const double phi = 0.5 * (1.0 + std::erf(u));
        const double g = phi - u * std::exp(-u * u) / std::sqrt(pi);
        return m.delta * phi + m.beta * m.var * g;
    };
}

ConditionalState paper_state(double gain) {
    const auto m = OpoModel::paper(gain);
    const auto trig = TemporalMode::trigger_exponential(m.trigger_filter_hwhm_hz, 0.0);
    const auto sig = TemporalMode::ansatz(9e6, 48e6, -trigger_group_delay(m.trigger_filter_hwhm_hz));
    return subtract_photon(assemble_covariance(m, trig, sig), m.dark_fraction);
}

}  // namespace

TEST_CASE("vacuum records sit on the half-unit shot-noise floor") {
    const size_t n = 200000;
    const auto ds = sample_vacuum(n, PhasePlan::scan(), 99);
    REQUIRE(ds.size() == n);
    double mean = 0.0, s2 = 0.0;
    for (const auto& r : ds.records) mean += r.x;
    mean /= static_cast<double>(n);
    for (const auto& r : ds.records) s2 += sq(r.x - mean);
    s2 /= static_cast<double>(n);
    CHECK(std::abs(mean) < 3.0 * std::sqrt(0.5 / n));
    CHECK(std::abs(s2 - 0.5) < 3.0 * 0.5 * std::sqrt(2.0 / n));

    // phases cover the full circle uniformly (16-bin chi^2, 15 dof)
    std::vector<int> bins(16, 0);
    double tmin = 10.0, tmax = -1.0;
    for (const auto& r : ds.records) {
        tmin = std::min(tmin, r.theta);
        tmax = std::max(tmax, r.theta);
        ++bins[static_cast<size_t>(std::min(15.0, r.theta / two_pi * 16.0))];
    }
    CHECK(tmin < 0.01);
    CHECK(tmax > two_pi - 0.01);
    const double expect = n / 16.0;
    double chi2 = 0.0;
    for (int b : bins) chi2 += sq(b - expect) / expect;
    CHECK(chi2 < 37.7);  // p ~ 1e-3 for the fixed seed

    // calibration: measured variance maps back onto 1/2
    const double scale = calibrate_vacuum(ds);
    CHECK(scale == Catch::Approx(std::sqrt(0.5 / s2)).epsilon(1e-6));
    auto scaled = ds;
    apply_scale(scaled, scale);
    CHECK(calibrate_vacuum(scaled) == Catch::Approx(1.0).margin(1e-3));
    CHECK(scaled.vacuum_scale == Catch::Approx(scale));

    const auto tiny = sample_vacuum(999, PhasePlan::scan(), 1);
    CHECK_THROWS_AS(calibrate_vacuum(tiny), calibration_error);
}

TEST_CASE("marginal sampler reproduces the single-photon quadrature law") {
    // |1>: p(q) = 2 q^2 N(q; 1/2), i.e. var 1/2, beta 2, delta 0
    const ConditionalState::Marginal m{0.5, 2.0, 0.0};
    Rng rng(314);
    const size_t n = 60000;
    std::vector<double> q(n);
    for (auto& v : q) v = sample_marginal(m, rng);

    CHECK(testsupport::ks_pvalue(q, marginal_cdf(m)) > 0.01);

    // the distribution dips to zero at the origin
    const auto cdf = marginal_cdf(m);
    const double p_in = cdf(0.25) - cdf(-0.25);
    size_t hits = 0;
    for (double v : q) hits += std::abs(v) < 0.25 ? 1 : 0;
    const double frac = static_cast<double>(hits) / static_cast<double>(n);
    CHECK(std::abs(frac - p_in) < 3.0 * std::sqrt(p_in * (1.0 - p_in) / n));

    // second moment <q^2> = 3/2; Var(q^2) = <q^4> - <q^2>^2 = 15/4 - 9/4
    double s2 = 0.0;
    for (double v : q) s2 += v * v;
    s2 /= static_cast<double>(n);
    CHECK(s2 == Catch::Approx(1.5).margin(3.0 * std::sqrt(1.5 / n)));

    CHECK_THROWS_AS(sample_marginal({-0.5, 2.0, 0.0}, rng), numeric_error);
}

TEST_CASE("marginal sampler matches the heralded state at a generic angle") {
    const auto st = paper_state(2.3);
    const auto m = st.marginal_along(0.7);
    CHECK(m.beta * m.var + m.delta == Catch::Approx(1.0).margin(1e-10));
    Rng rng(4242);
    std::vector<double> q(40000);
    for (auto& v : q) v = sample_marginal(m, rng);
    CHECK(testsupport::ks_pvalue(q, marginal_cdf(m)) > 0.01);
}

TEST_CASE("detector efficiency mixes in the vacuum floor") {
    Rng rng(5);
    CHECK(apply_detector(1.37, 1.0, rng) == 1.37);
    const double eta = 0.85, x0 = 0.9;
    const size_t n = 40000;
    double mean = 0.0, s2 = 0.0;
    std::vector<double> xs(n);
    for (auto& v : xs) {
        v = apply_detector(x0, eta, rng);
        mean += v;
    }
    mean /= static_cast<double>(n);
    for (double v : xs) s2 += sq(v - mean);
    s2 /= static_cast<double>(n);
    const double vwant = (1.0 - eta) * 0.5;
    CHECK(mean == Catch::Approx(std::sqrt(eta) * x0).margin(3.0 * std::sqrt(vwant / n)));
    CHECK(s2 == Catch::Approx(vwant).margin(3.0 * vwant * std::sqrt(2.0 / n)));
}

TEST_CASE("datasets are bit-reproducible and record-order independent") {
    const auto st = paper_state(2.3);
    const auto plan = PhasePlan::scan();
    const auto a = sample_quadratures(st, 500, plan, 777, 0.85);
    const auto b = sample_quadratures(st, 500, plan, 777, 0.85);
    REQUIRE(a.size() == b.size());
    for (size_t j = 0; j < a.size(); ++j) {
        CHECK(a.records[j].theta == b.records[j].theta);
        CHECK(a.records[j].x == b.records[j].x);
    }
    // each record draws from its own substream: prefixes agree across sizes
    const auto c = sample_quadratures(st, 200, plan, 777, 0.85);
    for (size_t j = 0; j < c.size(); ++j) {
        CHECK(a.records[j].theta == c.records[j].theta);
        CHECK(a.records[j].x == c.records[j].x);
    }
    const auto d = sample_quadratures(st, 500, plan, 778, 0.85);
    size_t diff = 0;
    for (size_t j = 0; j < d.size(); ++j) diff += (d.records[j].x != a.records[j].x) ? 1 : 0;
    CHECK(diff > 450);

    CHECK(a.seed == 777);
    CHECK(a.eta_det_applied == 0.85);
    CHECK(a.effective_dark_fraction == Catch::Approx(st.dark_weight));
}

TEST_CASE("phase plans place each record") {
    const auto st = paper_state(1.8);
    const auto fix = sample_quadratures(st, 300, PhasePlan::fixed(0.8), 11);
    for (const auto& r : fix.records) CHECK(r.theta == 0.8);

    // supplied click times drive a jitter-free linear scan deterministically
    std::vector<double> times;
    for (int j = 0; j < 300; ++j) times.push_back(0.003 * j);
    auto plan = PhasePlan::scan(2.5);
    const auto ds = sample_quadratures(st, 300, plan, 12, 1.0, &times);
    for (size_t j = 0; j < ds.size(); ++j) {
        double want = std::fmod(2.5 * times[j], two_pi);
        CHECK(ds.records[j].theta == Catch::Approx(want).margin(1e-12));
    }
    CHECK_THROWS_AS(sample_quadratures(st, 301, plan, 12, 1.0, &times), config_error);

    // per-record phase jitter
    auto jplan = PhasePlan::fixed(0.8);
    jplan.jitter_sigma = 0.01;
    const auto js = sample_quadratures(st, 4000, jplan, 13);
    double m1 = 0.0, m2 = 0.0;
    for (const auto& r : js.records) m1 += r.theta;
    m1 /= static_cast<double>(js.size());
    for (const auto& r : js.records) m2 += sq(r.theta - m1);
    m2 /= static_cast<double>(js.size());
    CHECK(m1 == Catch::Approx(0.8).margin(0.001));
    CHECK(std::sqrt(m2) == Catch::Approx(0.01).epsilon(0.1));
}

TEST_CASE("click stream statistics follow the Poisson model") {
    const auto m = OpoModel::paper(2.3);
    const double tpe = 0.25, dark = 160.0, dur = 0.3;
    const double rate = expected_click_rate(m, tpe, dark);
    CHECK(rate == Catch::Approx(m.bs_reflectivity * tpe * photon_flux(m) + dark).epsilon(1e-12));

    Rng rng(2718);
    const auto clicks = click_times(m, dur, tpe, dark, &rng);
    const double nexp = rate * dur;
    CHECK(std::abs(static_cast<double>(clicks.size()) - nexp) < 3.5 * std::sqrt(nexp));
    for (size_t i = 1; i < clicks.size(); ++i) CHECK(clicks[i].time_s > clicks[i - 1].time_s);
    CHECK(clicks.back().time_s < dur);

    const double dfrac = dark_fraction_of(clicks);
    const double dwant = dark / rate;
    CHECK(std::abs(dfrac - dwant) <
          4.0 * std::sqrt(dwant * (1.0 - dwant) / static_cast<double>(clicks.size())));

    const auto kept = thin_clicks(clicks, 1000);
    REQUIRE(kept.size() == 1000);
    for (size_t i = 1; i < kept.size(); ++i) CHECK(kept[i].time_s > kept[i - 1].time_s);
    CHECK(kept.back().time_s > 0.5 * dur);  // thinning spans the scan
    CHECK_THROWS_AS(thin_clicks(kept, 2000), calibration_error);

    Rng rng2(1);
    const auto clean = click_times(m, 0.02, tpe, 0.0, &rng2);
    CHECK(dark_fraction_of(clean) == 0.0);

    CHECK_THROWS_AS(click_times(m, -1.0, tpe, dark), config_error);
    CHECK_THROWS_AS(click_times(m, 1.0, 0.0, dark), config_error);
    CHECK_THROWS_AS(click_times(m, 1.0, 1.5, dark), config_error);
}

TEST_CASE("segments return the embedded quadrature through the matched filter") {
    const auto model = OpoModel::paper(2.3);
    const auto mode =
        TemporalMode::ansatz(9e6, 48e6, -trigger_group_delay(model.trigger_filter_hwhm_hz));
    const SegmentSynthesizer synth(model, mode);

    double n2 = 0.0;
    for (double v : synth.discrete_mode()) n2 += v * v;
    CHECK(n2 == Catch::Approx(1.0).margin(1e-12));
    CHECK(SegmentGrid::time_of(SegmentGrid::click_index) == 0.0);
    CHECK(SegmentGrid::time_of(501) == Catch::Approx(2e-9));

    Rng rng(31415);
    for (double x : {-1.2, 0.3, 2.0})
        for (double theta : {0.0, 1.1}) {
            const auto seg = synth(x, theta, rng);
            REQUIRE(seg.samples.size() == static_cast<size_t>(SegmentGrid::n));
            CHECK(matched_filter(synth.discrete_mode(), seg) == Catch::Approx(x).margin(1e-10));
        }

    RawSegment bad;
    bad.samples.resize(10);
    CHECK_THROWS_AS(matched_filter(synth.discrete_mode(), bad), config_error);

    // calibration segments: matched filter over vacuum draws is N(0, 1/2)
    Rng vr(2);
    double s2 = 0.0;
    const int nv = 4000;
    for (int i = 0; i < nv; ++i) {
        const auto seg = vacuum_segment(vr);
        CHECK(seg.flags == 1);
        s2 += sq(matched_filter(synth.discrete_mode(), seg));
    }
    s2 /= nv;
    CHECK(std::abs(s2 - 0.5) < 3.0 * 0.5 * std::sqrt(2.0 / nv));
}

TEST_CASE("out-of-mode segment content follows the stationary kernel") {
    const auto model = OpoModel::paper(2.3);
    const auto mode =
        TemporalMode::ansatz(9e6, 48e6, -trigger_group_delay(model.trigger_filter_hwhm_hz));
    const SegmentSynthesizer synth(model, mode);
    const auto& u = synth.discrete_mode();
    const size_t n = u.size();

    // two random unit filters orthogonal to the mode and to each other
    Rng gr(606);
    std::vector<std::vector<double>> g(2, std::vector<double>(n));
    for (auto& v : g[0]) v = gr.normal();
    for (auto& v : g[1]) v = gr.normal();
    auto project_out = [&](std::vector<double>& w, const std::vector<double>& dir) {
        double d = 0.0, nn = 0.0;
        for (size_t i = 0; i < n; ++i) {
            d += w[i] * dir[i];
            nn += dir[i] * dir[i];
        }
        for (size_t i = 0; i < n; ++i) w[i] -= d / nn * dir[i];
    };
    auto normalize = [&](std::vector<double>& w) {
        double nn = 0.0;
        for (double v : w) nn += v * v;
        for (auto& v : w) v /= std::sqrt(nn);
    };
    project_out(g[0], u);
    normalize(g[0]);
    project_out(g[1], u);
    project_out(g[1], g[0]);
    normalize(g[1]);

    // analytic covariance under K_ij = delta_ij/2 + eta dt C_theta(ti - tj)
    const auto [cx, cp] = output_kernels(model);
    const double theta = 0.0, eta = model.eta_signal(), dt = SegmentGrid::dt;
    std::vector<double> kern_row(n);
    for (size_t d = 0; d < n; ++d) kern_row[d] = cx(static_cast<double>(d) * dt);
    auto quad_form = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0.0, s = 0.0;
        for (size_t i = 0; i < n; ++i) dot += a[i] * b[i];
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                s += a[i] * b[j] * kern_row[static_cast<size_t>(std::abs(static_cast<int>(i) -
                                                                         static_cast<int>(j)))];
        return 0.5 * dot + eta * dt * s;
    };
    const double v00 = quad_form(g[0], g[0]);
    const double v11 = quad_form(g[1], g[1]);
    const double v01 = quad_form(g[0], g[1]);

    Rng rng(515);
    const int trials = 3000;
    double s00 = 0.0, s11 = 0.0, s01 = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto seg = synth(0.4, theta, rng);
        double y0 = 0.0, y1 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            y0 += g[0][i] * seg.samples[i];
            y1 += g[1][i] * seg.samples[i];
        }
        s00 += y0 * y0;
        s11 += y1 * y1;
        s01 += y0 * y1;
    }
    s00 /= trials;
    s11 /= trials;
    s01 /= trials;
    CHECK(std::abs(s00 - v00) < 5.0 * v00 * std::sqrt(2.0 / trials));
    CHECK(std::abs(s11 - v11) < 5.0 * v11 * std::sqrt(2.0 / trials));
    CHECK(std::abs(s01 - v01) < 5.0 * std::sqrt((v00 * v11 + v01 * v01) / trials));

    // white-complement variant: orthogonal filters see the bare vacuum floor
    const SegmentSynthesizer white(mode);
    Rng wr(516);
    double w2 = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto seg = white(0.4, theta, wr);
        double y = 0.0;
        for (size_t i = 0; i < n; ++i) y += g[0][i] * seg.samples[i];
        w2 += y * y;
    }
    w2 /= trials;
    CHECK(std::abs(w2 - 0.5) < 5.0 * 0.5 * std::sqrt(2.0 / trials));
}

TEST_CASE("noise traces realize the closed-form homodyne spectra") {
    const auto model = OpoModel::paper(2.3);
    const double fs = 1e8, eta_t = 0.561, dur = 0.008;
    const double k = model.parametric_rate();

    Rng rng(90125);
    const auto anti_trace = homodyne_noise_trace(model, 0.0, dur, fs, eta_t, rng);
    const auto sq_trace = homodyne_noise_trace(model, pi / 2, dur, fs, eta_t, rng);
    const auto anti = welch_psd(anti_trace, 8192, fs);
    const auto sqz = welch_psd(sq_trace, 8192, fs);

    auto band_mean = [](const WelchSpectrum& s, double f0) {
        double acc = 0.0;
        int cnt = 0;
        for (size_t i = 0; i < s.freq_hz.size(); ++i)
            if (std::abs(s.freq_hz[i] - f0) < 0.08 * f0) {
                acc += s.power_rel[i];
                ++cnt;
            }
        return acc / cnt;
    };
    for (double f0 : {1.5e6, 3e6, 8e6}) {
        const auto [sdb, adb] = spectrum_pair_db(model.pump_parameter, eta_t, k, f0);
        CHECK(band_mean(anti, f0) ==
              Catch::Approx(std::pow(10.0, adb / 10.0)).epsilon(0.09));
        CHECK(band_mean(sqz, f0) ==
              Catch::Approx(std::pow(10.0, sdb / 10.0)).epsilon(0.09));
    }
    // squeezing below / antisqueezing above the floor where the cavity acts
    CHECK(band_mean(sqz, 1.5e6) < 0.8);
    CHECK(band_mean(anti, 1.5e6) > 1.4);

    // eta 0: flat shot-noise floor at unit relative power
    Rng vr(777);
    const auto flat = homodyne_noise_trace(model, 0.3, 0.003, fs, 0.0, vr);
    const auto fps = welch_psd(flat, 4096, fs);
    double mean = 0.0;
    int cnt = 0;
    for (size_t i = 5; i + 5 < fps.power_rel.size(); ++i) {
        mean += fps.power_rel[i];
        ++cnt;
    }
    mean /= cnt;
    CHECK(mean == Catch::Approx(1.0).margin(0.01));

    CHECK_THROWS_AS(homodyne_noise_trace(model, 0.0, 1e-3, 10.0 * model.cavity_hwhm_hz, 0.5, vr),
                    config_error);
    CHECK_THROWS_AS(welch_psd(flat, 1000, fs), config_error);
    std::vector<double> shorttrace(100, 0.0);
    CHECK_THROWS_AS(welch_psd(shorttrace, 4096, fs), config_error);
}

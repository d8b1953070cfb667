#pragma once
// Command implementations behind the oddcat tool. Each command resolves its
// configuration, writes a manifest into the output directory before doing any
// work, then emits its artifacts. Exit codes: 0 success, 2 configuration
// error, 3 numerical failure, 4 finished-with-warnings (no convergence).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "conditional_state.hpp"
#include "datasynth.hpp"
#include "fock.hpp"
#include "io.hpp"
#include "mode_search.hpp"
#include "opo_model.hpp"
#include "rng.hpp"
#include "spectrum_fit.hpp"
#include "tomography.hpp"

namespace oddcat {

// ---------------------------------------------------------------- run config

struct CliOptions {
    std::string config_path;
    std::string out_dir;    // overrides run.out_dir when set
    std::string data_path;  // reconstruct / fit-spectrum input
    std::string rho_path;   // wigner input
    std::string objective = "wigner";
    bool has_seed = false;
    uint64_t seed = 0;
    bool has_n_max = false;
    int n_max = 12;
    bool has_eta_det = false;
    double eta_det = 1.0;
    int repeat = 1;
    int max_evals = 500;
    double extent = 5.0;
    int points = 101;
};

struct RunConfig {
    // [opo]
    double pump_parameter = gain_to_pump(2.3);
    double gain = 2.3;
    double cavity_hwhm_hz = 4.4e6;
    double eta_opo = 1.0;
    double eta_pr = 1.0;
    double eta_hom = 1.0;
    double eta_det = 1.0;
    double bs_reflectivity = 0.05;
    double trigger_filter_hwhm_hz = 48e6;
    double dark_fraction = 0.0;
    // [mode]
    double gamma_hz = 9e6;
    double kappa_hz = 48e6;
    double electronics_delay_s = 0.0;
    // [data]
    long long n_records = 20000;
    double trigger_path_efficiency = 0.25;
    double dark_rate_hz = 160.0;
    double scan_rate = pi;  // rad/s
    double phase_jitter_sigma = 0.0;
    double acquisition_s = 3.0;
    long long n_vacuum = 20000;
    bool write_segments = false;
    // [tomography]
    int n_max = 12;
    int max_iterations = 2000;
    double tol = 1e-10;
    // [run]
    uint64_t seed = 1;
    std::string out_dir = ".";

    static const std::vector<std::string>& known_keys() {
        static const std::vector<std::string> keys = {
            "opo.gain", "opo.pump_parameter", "opo.cavity_hwhm_hz", "opo.eta_opo", "opo.eta_pr",
            "opo.eta_hom", "opo.eta_det", "opo.bs_reflectivity", "opo.trigger_filter_hwhm_hz",
            "opo.dark_fraction", "mode.gamma_hz", "mode.kappa_hz", "mode.electronics_delay_s",
            "data.n_records", "data.trigger_path_efficiency", "data.dark_rate_hz",
            "data.scan_rate", "data.phase_jitter_sigma", "data.acquisition_s", "data.n_vacuum",
            "data.write_segments", "tomography.n_max", "tomography.max_iterations",
            "tomography.tol", "run.seed", "run.out_dir"};
        return keys;
    }

    static RunConfig load(const CliOptions& opts) {
        RunConfig cfg;
        if (!opts.config_path.empty()) {
            const IniFile ini = IniFile::parse_file(opts.config_path);
            for (const auto& [key, value] : ini.flattened()) {
                (void)value;
                const auto& known = known_keys();
                if (std::find(known.begin(), known.end(), key) == known.end())
                    throw config_error(opts.config_path + ": unknown key " + key);
            }
            if (ini.has("opo", "gain") && ini.has("opo", "pump_parameter"))
                throw config_error(opts.config_path +
                                   ": give opo.gain or opo.pump_parameter, not both");
            if (ini.has("opo", "gain")) {
                cfg.gain = ini.get_double("opo", "gain", cfg.gain);
                cfg.pump_parameter = gain_to_pump(cfg.gain);
            } else if (ini.has("opo", "pump_parameter")) {
                cfg.pump_parameter = ini.get_double("opo", "pump_parameter", cfg.pump_parameter);
                cfg.gain = pump_to_gain(cfg.pump_parameter);
            }
            cfg.cavity_hwhm_hz = ini.get_double("opo", "cavity_hwhm_hz", cfg.cavity_hwhm_hz);
            cfg.eta_opo = ini.get_double("opo", "eta_opo", cfg.eta_opo);
            cfg.eta_pr = ini.get_double("opo", "eta_pr", cfg.eta_pr);
            cfg.eta_hom = ini.get_double("opo", "eta_hom", cfg.eta_hom);
            cfg.eta_det = ini.get_double("opo", "eta_det", cfg.eta_det);
            cfg.bs_reflectivity = ini.get_double("opo", "bs_reflectivity", cfg.bs_reflectivity);
            cfg.trigger_filter_hwhm_hz =
                ini.get_double("opo", "trigger_filter_hwhm_hz", cfg.trigger_filter_hwhm_hz);
            cfg.dark_fraction = ini.get_double("opo", "dark_fraction", cfg.dark_fraction);
            cfg.gamma_hz = ini.get_double("mode", "gamma_hz", cfg.gamma_hz);
            cfg.kappa_hz = ini.get_double("mode", "kappa_hz", cfg.kappa_hz);
            cfg.electronics_delay_s =
                ini.get_double("mode", "electronics_delay_s", cfg.electronics_delay_s);
            cfg.n_records = ini.get_int("data", "n_records", cfg.n_records);
            cfg.trigger_path_efficiency =
                ini.get_double("data", "trigger_path_efficiency", cfg.trigger_path_efficiency);
            cfg.dark_rate_hz = ini.get_double("data", "dark_rate_hz", cfg.dark_rate_hz);
            cfg.scan_rate = ini.get_double("data", "scan_rate", cfg.scan_rate);
            cfg.phase_jitter_sigma =
                ini.get_double("data", "phase_jitter_sigma", cfg.phase_jitter_sigma);
            cfg.acquisition_s = ini.get_double("data", "acquisition_s", cfg.acquisition_s);
            cfg.n_vacuum = ini.get_int("data", "n_vacuum", cfg.n_vacuum);
            cfg.write_segments = ini.get_bool("data", "write_segments", cfg.write_segments);
            cfg.n_max = static_cast<int>(ini.get_int("tomography", "n_max", cfg.n_max));
            cfg.max_iterations =
                static_cast<int>(ini.get_int("tomography", "max_iterations", cfg.max_iterations));
            cfg.tol = ini.get_double("tomography", "tol", cfg.tol);
            cfg.seed = static_cast<uint64_t>(ini.get_int("run", "seed",
                                                         static_cast<long long>(cfg.seed)));
            cfg.out_dir = ini.get_string("run", "out_dir", cfg.out_dir);
        }
        if (opts.has_seed) cfg.seed = opts.seed;
        if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
        if (opts.has_n_max) cfg.n_max = opts.n_max;
        if (opts.has_eta_det) cfg.eta_det = opts.eta_det;
        cfg.validate();
        return cfg;
    }

    void validate() const {
        model();  // throws on inconsistent optical parameters
        if (n_records < 1) throw config_error("data.n_records must be positive");
        if (n_vacuum < 1000) throw config_error("data.n_vacuum must be at least 1000");
        if (!(acquisition_s > 0.0)) throw config_error("data.acquisition_s must be positive");
        if (!(gamma_hz > 0.0 && kappa_hz > 0.0))
            throw config_error("mode rates must be positive");
        if (n_max < 1 || n_max > 60) throw config_error("tomography.n_max out of range");
        if (max_iterations < 1) throw config_error("tomography.max_iterations must be positive");
        if (!(tol > 0.0)) throw config_error("tomography.tol must be positive");
    }

    OpoModel model() const {
        OpoModel m;
        m.pump_parameter = pump_parameter;
        m.cavity_hwhm_hz = cavity_hwhm_hz;
        m.eta_opo = eta_opo;
        m.eta_pr = eta_pr;
        m.eta_hom = eta_hom;
        m.eta_det = eta_det;
        m.bs_reflectivity = bs_reflectivity;
        m.trigger_filter_hwhm_hz = trigger_filter_hwhm_hz;
        m.dark_fraction = dark_fraction;
        m.validate();
        return m;
    }

    TemporalMode signal_mode(const OpoModel& m) const {
        return TemporalMode::ansatz(gamma_hz, kappa_hz,
                                    -trigger_group_delay(m.trigger_filter_hwhm_hz) +
                                        electronics_delay_s);
    }

    // every key with its final value (defaults and flag overrides applied)
    std::map<std::string, std::string> resolved() const {
        std::map<std::string, std::string> r;
        r["opo.gain"] = format_double(gain);
        r["opo.pump_parameter"] = format_double(pump_parameter);
        r["opo.cavity_hwhm_hz"] = format_double(cavity_hwhm_hz);
        r["opo.eta_opo"] = format_double(eta_opo);
        r["opo.eta_pr"] = format_double(eta_pr);
        r["opo.eta_hom"] = format_double(eta_hom);
        r["opo.eta_det"] = format_double(eta_det);
        r["opo.bs_reflectivity"] = format_double(bs_reflectivity);
        r["opo.trigger_filter_hwhm_hz"] = format_double(trigger_filter_hwhm_hz);
        r["opo.dark_fraction"] = format_double(dark_fraction);
        r["mode.gamma_hz"] = format_double(gamma_hz);
        r["mode.kappa_hz"] = format_double(kappa_hz);
        r["mode.electronics_delay_s"] = format_double(electronics_delay_s);
        r["data.n_records"] = std::to_string(n_records);
        r["data.trigger_path_efficiency"] = format_double(trigger_path_efficiency);
        r["data.dark_rate_hz"] = format_double(dark_rate_hz);
        r["data.scan_rate"] = format_double(scan_rate);
        r["data.phase_jitter_sigma"] = format_double(phase_jitter_sigma);
        r["data.acquisition_s"] = format_double(acquisition_s);
        r["data.n_vacuum"] = std::to_string(n_vacuum);
        r["data.write_segments"] = write_segments ? "true" : "false";
        r["tomography.n_max"] = std::to_string(n_max);
        r["tomography.max_iterations"] = std::to_string(max_iterations);
        r["tomography.tol"] = format_double(tol);
        r["run.seed"] = std::to_string(seed);
        r["run.out_dir"] = out_dir;
        return r;
    }
};

// ---------------------------------------------------------------- plumbing

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline void write_manifest(const RunConfig& cfg, const std::string& command,
                           const std::vector<std::string>& input_paths) {
    std::filesystem::create_directories(cfg.out_dir);
    std::map<std::string, std::string> hashes;
    for (const auto& p : input_paths)
        if (!p.empty()) hashes[p] = git_blob_hash(read_file(p));
    const ordered_json j = make_manifest(command, cfg.resolved(), hashes);
    write_file(out_path(cfg, "manifest.json"), j.dump(2) + "\n");
}

// ---------------------------------------------------------------- synthesis

struct SynthResult {
    QuadratureDataset ds;
    std::vector<ClickEvent> kept;
    ConditionalState state;       // what the data were drawn from (pre-detector)
    OpoModel model_effective;     // model with the realized dark fraction
    double empirical_dark = 0.0;  // label fraction in the kept click stream
    size_t raw_clicks = 0;
};

// Full acquisition chain: Poisson herald stream over the scan, stride-thinned
// to the record budget, conditional state with the realized dark fraction,
// exact marginal draws smeared by the detector, vacuum-calibrated scale.
inline SynthResult synthesize_dataset(const RunConfig& cfg, uint64_t seed) {
    const OpoModel m = cfg.model();
    if (cfg.scan_rate * cfg.acquisition_s < two_pi)
        throw config_error("LO scan covers less than a full phase turn; "
                           "raise data.acquisition_s or data.scan_rate");
    SynthResult out;
    Rng click_rng = Rng::substream(seed, 0xA001);
    const auto clicks = click_times(m, cfg.acquisition_s, cfg.trigger_path_efficiency,
                                    cfg.dark_rate_hz, &click_rng);
    out.raw_clicks = clicks.size();
    out.kept = thin_clicks(clicks, static_cast<size_t>(cfg.n_records));
    out.empirical_dark = dark_fraction_of(out.kept);

    // the conditioning uses whichever dark fraction is worse: the realized
    // label fraction or the configured floor
    out.model_effective = m;
    out.model_effective.dark_fraction = std::max(out.empirical_dark, m.dark_fraction);
    out.state = conditional_state_for(out.model_effective, cfg.signal_mode(m));

    PhasePlan plan = PhasePlan::scan(cfg.scan_rate);
    plan.jitter_sigma = cfg.phase_jitter_sigma;
    std::vector<double> times;
    times.reserve(out.kept.size());
    for (const auto& c : out.kept) times.push_back(c.time_s);
    out.ds = sample_quadratures(out.state, static_cast<size_t>(cfg.n_records), plan, seed,
                                m.eta_det, &times);

    const auto vac = sample_vacuum(static_cast<size_t>(cfg.n_vacuum), plan,
                                   derive_seed(seed, 0xB002));
    apply_scale(out.ds, calibrate_vacuum(vac));
    out.ds.model_hash = model_hash(m);
    out.ds.mode_gamma_hz = cfg.gamma_hz;
    out.ds.mode_kappa_hz = cfg.kappa_hz;
    return out;
}

inline std::vector<RawSegment> synthesize_segments(const RunConfig& cfg, const SynthResult& sr,
                                                   uint64_t seed) {
    const OpoModel m = cfg.model();
    const SegmentSynthesizer synth(sr.model_effective, cfg.signal_mode(m));
    Rng rng = Rng::substream(seed, 0x5E6);
    std::vector<RawSegment> segs;
    segs.reserve(sr.ds.size() + 1000);
    for (size_t j = 0; j < sr.ds.size(); ++j) {
        // segments hold the raw (uncalibrated) chain; undo the dataset scale
        const double x_raw = sr.ds.records[j].x / sr.ds.vacuum_scale;
        RawSegment seg = synth(x_raw, sr.ds.records[j].theta, rng);
        seg.timestamp_ns = static_cast<int64_t>(std::llround(sr.kept[j].time_s * 1e9));
        seg.index = j;
        segs.push_back(std::move(seg));
    }
    const size_t n_vac = std::min<size_t>(static_cast<size_t>(cfg.n_vacuum), 1000);
    for (size_t j = 0; j < n_vac; ++j) {
        RawSegment seg = vacuum_segment(rng);
        seg.index = sr.ds.size() + j;
        segs.push_back(std::move(seg));
    }
    return segs;
}

// ---------------------------------------------------------------- commands

inline int cmd_simulate(const RunConfig& cfg, const CliOptions& opts) {
    write_manifest(cfg, "simulate", {opts.config_path});
    const OpoModel m = cfg.model();
    const auto mode = cfg.signal_mode(m);
    const auto st = conditional_state_for(m, mode);
    const auto rho = fock_from_state(st, cfg.n_max);
    const auto [alpha, fid] = best_cat(rho);
    const double eta_t = m.eta_signal() * m.eta_det;
    const auto [sq_db, anti_db] = squeezing_spectrum(m, 0.0, eta_t);
    const auto mom = st.second_moments();

    ordered_json j;
    j["model"] = model_to_json(m);
    j["model_hash"] = model_hash(m);
    j["mode"] = {{"gamma_hz", cfg.gamma_hz},
                 {"kappa_hz", cfg.kappa_hz},
                 {"center_s", -trigger_group_delay(m.trigger_filter_hwhm_hz) +
                                  cfg.electronics_delay_s}};
    j["photon_flux_per_s"] = photon_flux(m);
    j["expected_click_rate_hz"] =
        expected_click_rate(m, cfg.trigger_path_efficiency, cfg.dark_rate_hz);
    j["state"] = {{"wigner_origin", st.wigner_origin()},
                  {"mean_photons", st.mean_photons()},
                  {"click_probability", st.click_probability},
                  {"dark_weight", st.dark_weight},
                  {"second_moments", {{"xx", mom.a}, {"xp", mom.b}, {"pp", mom.d}}}};
    j["fock"] = {{"n_max", cfg.n_max},
                 {"populations", rho.populations()},
                 {"odd_mass", rho.odd_mass()},
                 {"wigner_origin", w00_from_fock(rho)}};
    j["best_cat"] = {{"alpha", alpha}, {"fidelity", fid}};
    j["spectrum_zero_hz"] = {{"efficiency", eta_t},
                             {"squeezed_db", sq_db},
                             {"antisqueezed_db", anti_db}};
    write_file(out_path(cfg, "state.json"), j.dump(2) + "\n");
    write_file(out_path(cfg, "rho_model.json"), fock_to_json(rho).dump(2) + "\n");
    std::printf("wrote %s and rho_model.json (W(0,0) = %s)\n",
                out_path(cfg, "state.json").c_str(), format_double(st.wigner_origin()).c_str());
    return 0;
}

inline int cmd_synth_data(const RunConfig& cfg, const CliOptions& opts) {
    write_manifest(cfg, "synth-data", {opts.config_path});
    const SynthResult sr = synthesize_dataset(cfg, cfg.seed);
    write_dataset(out_path(cfg, "data.csv"), sr.ds);

    ordered_json j;
    j["records"] = sr.ds.size();
    j["raw_clicks"] = sr.raw_clicks;
    j["empirical_dark_fraction"] = sr.empirical_dark;
    j["effective_dark_fraction"] = sr.model_effective.dark_fraction;
    j["vacuum_scale"] = sr.ds.vacuum_scale;
    j["phase_span_rad"] = cfg.scan_rate * (sr.kept.back().time_s - sr.kept.front().time_s);
    j["state"] = {{"wigner_origin", sr.state.wigner_origin()},
                  {"mean_photons", sr.state.mean_photons()}};
    write_file(out_path(cfg, "synth.json"), j.dump(2) + "\n");

    if (cfg.write_segments) {
        const auto segs = synthesize_segments(cfg, sr, cfg.seed);
        write_file(out_path(cfg, "segments.bin"), segments_to_bytes(segs));
    }
    std::printf("wrote %s (%zu records, dark fraction %s)\n", out_path(cfg, "data.csv").c_str(),
                sr.ds.size(), format_double(sr.model_effective.dark_fraction).c_str());
    return 0;
}

inline int cmd_reconstruct(const RunConfig& cfg, const CliOptions& opts) {
    write_manifest(cfg, "reconstruct", {opts.config_path, opts.data_path});
    if (!opts.data_path.empty() && opts.repeat != 1)
        throw config_error("--repeat regenerates synthetic datasets; "
                           "it cannot be combined with --data");
    if (opts.repeat < 1) throw config_error("--repeat must be at least 1");

    ReconstructOptions ropt;
    ropt.max_iterations = cfg.max_iterations;
    ropt.rel_tol = cfg.tol;

    double eta_pov = cfg.eta_det;
    std::vector<QuadratureDataset> datasets;
    double model_w00 = 0.0;
    bool have_model_w00 = false;
    if (!opts.data_path.empty()) {
        datasets.push_back(read_dataset_csv(opts.data_path));
        if (!opts.has_eta_det) eta_pov = datasets.front().eta_det_applied;
    } else {
        for (int i = 0; i < opts.repeat; ++i) {
            const uint64_t s = (i == 0) ? cfg.seed : derive_seed(cfg.seed, static_cast<uint64_t>(i));
            SynthResult sr = synthesize_dataset(cfg, s);
            if (i == 0) {
                model_w00 = sr.state.wigner_origin();
                have_model_w00 = true;
            }
            datasets.push_back(std::move(sr.ds));
        }
    }

    const QuadraturePovm povm = build_povm(cfg.n_max, eta_pov);
    FockMatrix rho_sum(cfg.n_max);
    ordered_json runs = ordered_json::array();
    bool all_converged = true;
    std::vector<double> trace0;
    for (size_t i = 0; i < datasets.size(); ++i) {
        const auto res = reconstruct(datasets[i], povm, ropt);
        for (size_t k = 0; k < rho_sum.m.size(); ++k) rho_sum.m[k] += res.rho.m[k];
        if (i == 0) trace0 = res.ll_trace;
        all_converged = all_converged && res.converged;
        ordered_json r;
        r["seed"] = datasets[i].seed;
        r["wigner_origin"] = w00_from_fock(res.rho);
        r["log_likelihood"] = res.ll_trace.back();
        r["iterations"] = res.iterations;
        r["converged"] = res.converged;
        r["diluted_steps"] = res.diluted_steps;
        r["excluded_records"] = res.excluded_records;
        r["max_negativity"] = res.max_negativity;
        r["trace_deficit"] = res.trace_deficit;
        runs.push_back(r);
    }
    const double inv = 1.0 / static_cast<double>(datasets.size());
    for (auto& v : rho_sum.m) v *= inv;
    const auto [alpha, fid] = best_cat(rho_sum);

    ordered_json j;
    j["n_max"] = cfg.n_max;
    j["eta"] = eta_pov;
    j["repeat"] = datasets.size();
    j["runs"] = runs;
    j["average"] = {{"wigner_origin", w00_from_fock(rho_sum)},
                    {"populations", rho_sum.populations()},
                    {"odd_mass", rho_sum.odd_mass()},
                    {"best_cat", {{"alpha", alpha}, {"fidelity", fid}}}};
    if (have_model_w00) j["model"] = {{"wigner_origin", model_w00}};
    write_file(out_path(cfg, "recon.json"), j.dump(2) + "\n");
    write_file(out_path(cfg, "rho.json"), fock_to_json(rho_sum).dump(2) + "\n");
    write_file(out_path(cfg, "ll_trace.csv"), likelihood_trace_csv(trace0));
    std::printf("reconstructed %zu run(s): W(0,0) = %s%s\n", datasets.size(),
                format_double(w00_from_fock(rho_sum)).c_str(),
                all_converged ? "" : " [iteration cap hit]");
    return all_converged ? 0 : 4;
}

inline SpectrumData read_spectrum_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) ||
        (line != "freq_hz,squeezed_db,antisqueezed_db" &&
         line != "freq_hz,squeezed_db,antisqueezed_db\r"))
        throw config_error(path + ": expected header 'freq_hz,squeezed_db,antisqueezed_db'");
    SpectrumData sd;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        double f = 0.0, s = 0.0, a = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &f, &s, &a) != 3)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected three columns");
        sd.freq_hz.push_back(f);
        sd.squeezed_db.push_back(s);
        sd.antisqueezed_db.push_back(a);
    }
    if (sd.freq_hz.empty()) throw config_error(path + ": no data rows");
    return sd;
}

inline std::string spectrum_to_csv(const SpectrumData& sd) {
    std::string out = "freq_hz,squeezed_db,antisqueezed_db\n";
    for (size_t i = 0; i < sd.freq_hz.size(); ++i)
        out += format_double(sd.freq_hz[i]) + "," + format_double(sd.squeezed_db[i]) + "," +
               format_double(sd.antisqueezed_db[i]) + "\n";
    return out;
}

// Welch spectra of two synthetic homodyne traces (squeezed quadrature at
// theta = pi/2, antisqueezed at 0), read off near log-spaced frequencies.
inline SpectrumData synthesize_spectrum(const RunConfig& cfg, uint64_t seed) {
    const OpoModel m = cfg.model();
    const double eta_t = m.eta_signal() * m.eta_det;
    const double fs = 200e6;
    const double duration = 0.008;
    const size_t nfft = 8192;
    const int reps = 3;  // independent trace pairs, averaged for variance
    WelchSpectrum psd_anti, psd_sq;
    for (int r = 0; r < reps; ++r) {
        Rng rng_anti = Rng::substream(seed, 0x50EC + 2 * static_cast<uint64_t>(r));
        Rng rng_sq = Rng::substream(seed, 0x50ED + 2 * static_cast<uint64_t>(r));
        const auto pa =
            welch_psd(homodyne_noise_trace(m, 0.0, duration, fs, eta_t, rng_anti), nfft, fs);
        const auto ps =
            welch_psd(homodyne_noise_trace(m, 0.5 * pi, duration, fs, eta_t, rng_sq), nfft, fs);
        if (r == 0) {
            psd_anti = pa;
            psd_sq = ps;
        } else {
            for (size_t k = 0; k < pa.power_rel.size(); ++k) {
                psd_anti.power_rel[k] += pa.power_rel[k];
                psd_sq.power_rel[k] += ps.power_rel[k];
            }
        }
    }
    const double inv_reps = 1.0 / reps;
    for (auto& v : psd_anti.power_rel) v *= inv_reps;
    for (auto& v : psd_sq.power_rel) v *= inv_reps;

    SpectrumData sd;
    const double f_lo = 2e5, f_hi = 3e7;
    const int n_pts = 24;
    const double df = fs / static_cast<double>(nfft);
    for (int i = 0; i < n_pts; ++i) {
        const double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / (n_pts - 1));
        // average bins within +-4% of the target: enough to beat down Welch
        // noise without smearing the Lorentzian knee
        const size_t k0 = static_cast<size_t>(std::max(1.0, std::floor(0.96 * f / df)));
        const size_t k1 = std::min(psd_sq.power_rel.size() - 1,
                                   static_cast<size_t>(std::ceil(1.04 * f / df)));
        double ps = 0.0, pa = 0.0, fm = 0.0;
        for (size_t k = k0; k <= k1; ++k) {
            ps += psd_sq.power_rel[k];
            pa += psd_anti.power_rel[k];
            fm += psd_sq.freq_hz[k];
        }
        const double nb = static_cast<double>(k1 - k0 + 1);
        sd.freq_hz.push_back(fm / nb);
        sd.squeezed_db.push_back(10.0 * std::log10(ps / nb));
        sd.antisqueezed_db.push_back(10.0 * std::log10(pa / nb));
    }
    return sd;
}

inline int cmd_fit_spectrum(const RunConfig& cfg, const CliOptions& opts) {
    write_manifest(cfg, "fit-spectrum", {opts.config_path, opts.data_path});
    const SpectrumData sd = opts.data_path.empty() ? synthesize_spectrum(cfg, cfg.seed)
                                                   : read_spectrum_csv(opts.data_path);
    const auto fit = fit_spectrum(sd, cfg.cavity_hwhm_hz);

    ordered_json j;
    j["pump_parameter"] = fit.pump;
    j["gain"] = fit.gain;
    j["efficiency"] = fit.efficiency;
    j["pump_err"] = fit.pump_err;
    j["efficiency_err"] = fit.efficiency_err;
    j["chi2"] = fit.chi2;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["degenerate"] = fit.degenerate;
    write_file(out_path(cfg, "spectrum_fit.json"), j.dump(2) + "\n");
    write_file(out_path(cfg, "spectrum.csv"), spectrum_to_csv(sd));
    std::printf("fit: pump %s, efficiency %s%s\n", format_double(fit.pump).c_str(),
                format_double(fit.efficiency).c_str(),
                fit.degenerate ? " [degenerate: pump unidentifiable]" : "");
    return (fit.degenerate || !fit.converged) ? 4 : 0;
}

inline int cmd_optimize_mode(const RunConfig& cfg, const CliOptions& opts) {
    write_manifest(cfg, "optimize-mode", {opts.config_path});
    const OpoModel m = cfg.model();
    const auto objective = mode_objective_from_string(opts.objective);
    const auto res = optimize_mode_function(m, objective, cfg.gamma_hz / 1e6, cfg.kappa_hz / 1e6,
                                            opts.max_evals, cfg.n_max);

    ordered_json j;
    j["objective"] = opts.objective;
    j["gamma_hz"] = res.gamma_hz;
    j["kappa_hz"] = res.kappa_hz;
    j["objective_value"] = res.objective_value;
    if (objective == ModeObjective::cat_fidelity) j["best_cat_alpha"] = res.best_cat_alpha;
    j["evaluations"] = res.evaluations;
    j["converged"] = res.converged;
    write_file(out_path(cfg, "mode_search.json"), j.dump(2) + "\n");

    std::string csv = "evaluation,gamma_mhz,kappa_mhz,value\n";
    for (const auto& t : res.trace)
        csv += std::to_string(t.eval) + "," + format_double(t.x[0]) + "," +
               format_double(t.x[1]) + "," + format_double(t.value) + "\n";
    write_file(out_path(cfg, "mode_search_trace.csv"), csv);
    std::printf("best mode: gamma %.3f MHz, kappa %.3f MHz (objective %s)%s\n",
                res.gamma_hz / 1e6, res.kappa_hz / 1e6,
                format_double(res.objective_value).c_str(),
                res.converged ? "" : " [evaluation cap hit]");
    return res.converged ? 0 : 4;
}

inline int cmd_wigner(const RunConfig& cfg, const CliOptions& opts) {
    write_manifest(cfg, "wigner", {opts.config_path, opts.rho_path});
    if (opts.points < 2 || !(opts.extent > 0.0))
        throw config_error("wigner: need points >= 2 and a positive extent");
    std::string csv;
    if (!opts.rho_path.empty()) {
        const auto rho = fock_from_json(ordered_json::parse(read_file(opts.rho_path)));
        csv = wigner_grid_csv(rho, opts.extent, opts.points);
    } else {
        const OpoModel m = cfg.model();
        const auto st = conditional_state_for(m, cfg.signal_mode(m));
        csv = "x,p,w\n";
        for (int i = 0; i < opts.points; ++i) {
            const double x = -opts.extent + 2.0 * opts.extent * i / (opts.points - 1);
            for (int k = 0; k < opts.points; ++k) {
                const double p = -opts.extent + 2.0 * opts.extent * k / (opts.points - 1);
                csv += format_double(x) + "," + format_double(p) + "," +
                       format_double(st.wigner(x, p)) + "\n";
            }
        }
    }
    write_file(out_path(cfg, "wigner.csv"), csv);
    std::printf("wrote %s (%d x %d grid)\n", out_path(cfg, "wigner.csv").c_str(), opts.points,
                opts.points);
    return 0;
}

// ---------------------------------------------------------------- dispatch

inline int dispatch(const std::string& command, const CliOptions& opts) {
    try {
        const RunConfig cfg = RunConfig::load(opts);
        if (command == "simulate") return cmd_simulate(cfg, opts);
        if (command == "synth-data") return cmd_synth_data(cfg, opts);
        if (command == "reconstruct") return cmd_reconstruct(cfg, opts);
        if (command == "fit-spectrum") return cmd_fit_spectrum(cfg, opts);
        if (command == "optimize-mode") return cmd_optimize_mode(cfg, opts);
        if (command == "wigner") return cmd_wigner(cfg, opts);
        throw config_error("unknown command: " + command);
    } catch (const config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

}  // namespace oddcat

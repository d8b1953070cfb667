#pragma once
// File formats: key-value config, dataset CSV + JSON sidecar, Fock-matrix
// JSON, Wigner grids, raw-segment binary, run manifests. Everything written
// here is deterministic for fixed inputs (no timestamps, fixed float
// formatting) so re-runs are byte-identical.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "common.hpp"
#include "datasynth.hpp"
#include "fock.hpp"
#include "opo_model.hpp"

namespace oddcat {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------- formatting

// Shortest decimal string that round-trips the double (deterministic and
// locale-independent).
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// ---------------------------------------------------------------- ini config

// Flat [section] key = value text. '#' and ';' start comments. Keys keep
// their source line for error diagnostics.
class IniFile {
  public:
    IniFile() = default;

    static IniFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    static IniFile parse(const std::string& text, const std::string& name = "<string>") {
        IniFile ini;
        ini.name_ = name;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto cut = line.find_first_of("#;");
            if (cut != std::string::npos) line.erase(cut);
            const std::string t = trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw config_error(name + ":" + std::to_string(lineno) +
                                       ": malformed section header");
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error(name + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty())
                throw config_error(name + ":" + std::to_string(lineno) + ": empty key");
            ini.values_[section + "." + key] = {val, lineno};
        }
        return ini;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) != 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const auto it = values_.find(section + "." + key);
        return it == values_.end() ? fallback : it->second.text;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        return parse_double(it->second, section + "." + key);
    }

    long long get_int(const std::string& section, const std::string& key,
                      long long fallback) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        char* end = nullptr;
        const long long v = std::strtoll(it->second.text.c_str(), &end, 10);
        if (end == it->second.text.c_str() || *end != '\0')
            throw config_error(where(it->second) + ": key " + section + "." + key +
                               " is not an integer: '" + it->second.text + "'");
        return v;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second.text;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw config_error(where(it->second) + ": key " + section + "." + key +
                           " is not a boolean: '" + v + "'");
    }

    // every key as section.key -> value, sorted (for manifests)
    std::map<std::string, std::string> flattened() const {
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : values_) out[k] = v.text;
        return out;
    }

  private:
    struct Entry {
        std::string text;
        int line;
    };

    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r\n");
        return s.substr(a, b - a + 1);
    }

    std::string where(const Entry& e) const { return name_ + ":" + std::to_string(e.line); }

    double parse_double(const Entry& e, const std::string& fullkey) const {
        char* end = nullptr;
        const double v = std::strtod(e.text.c_str(), &end);
        if (end == e.text.c_str() || *end != '\0')
            throw config_error(where(e) + ": key " + fullkey + " is not a number: '" + e.text +
                               "'");
        return v;
    }

    std::string name_;
    std::map<std::string, Entry> values_;
};

// ---------------------------------------------------------------- sha-1

// Git-style blob hash: sha1("blob <len>\0" + content), hex.
namespace detail {

class Sha1 {
  public:
    void update(const unsigned char* data, size_t len) {
        total_ += len;
        while (len > 0) {
            const size_t take = std::min(len, size_t{64} - fill_);
            std::memcpy(block_ + fill_, data, take);
            fill_ += take;
            data += take;
            len -= take;
            if (fill_ == 64) {
                process();
                fill_ = 0;
            }
        }
    }

    std::string hex_digest() {
        const uint64_t bits = total_ * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        const unsigned char zero = 0;
        while (fill_ != 56) update(&zero, 1);
        unsigned char lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(lenb, 8);
        char out[41];
        for (int i = 0; i < 5; ++i) std::snprintf(out + 8 * i, 9, "%08x", h_[i]);
        return std::string(out, 40);
    }

  private:
    static uint32_t rol(uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void process() {
        uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (uint32_t(block_[4 * i]) << 24) | (uint32_t(block_[4 * i + 1]) << 16) |
                   (uint32_t(block_[4 * i + 2]) << 8) | uint32_t(block_[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
        for (int i = 0; i < 80; ++i) {
            uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDC;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6;
            }
            const uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = t;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
    }

    uint32_t h_[5] = {0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0};
    unsigned char block_[64];
    size_t fill_ = 0;
    uint64_t total_ = 0;
};

}  // namespace detail

inline std::string sha1_hex(const std::string& data) {
    detail::Sha1 h;
    h.update(reinterpret_cast<const unsigned char*>(data.data()), data.size());
    return h.hex_digest();
}

inline std::string git_blob_hash(const std::string& content) {
    detail::Sha1 h;
    const std::string header = "blob " + std::to_string(content.size()) + '\0';
    h.update(reinterpret_cast<const unsigned char*>(header.data()), header.size());
    h.update(reinterpret_cast<const unsigned char*>(content.data()), content.size());
    return h.hex_digest();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write file: " + path);
    out << content;
}

// ---------------------------------------------------------------- model json

inline ordered_json model_to_json(const OpoModel& m) {
    ordered_json j;
    j["pump_parameter"] = m.pump_parameter;
    j["cavity_hwhm_hz"] = m.cavity_hwhm_hz;
    j["eta_opo"] = m.eta_opo;
    j["eta_pr"] = m.eta_pr;
    j["eta_hom"] = m.eta_hom;
    j["eta_det"] = m.eta_det;
    j["bs_reflectivity"] = m.bs_reflectivity;
    j["trigger_filter_hwhm_hz"] = m.trigger_filter_hwhm_hz;
    j["dark_fraction"] = m.dark_fraction;
    return j;
}

inline OpoModel model_from_json(const ordered_json& j) {
    OpoModel m;
    m.pump_parameter = j.at("pump_parameter").get<double>();
    m.cavity_hwhm_hz = j.at("cavity_hwhm_hz").get<double>();
    m.eta_opo = j.at("eta_opo").get<double>();
    m.eta_pr = j.at("eta_pr").get<double>();
    m.eta_hom = j.at("eta_hom").get<double>();
    m.eta_det = j.at("eta_det").get<double>();
    m.bs_reflectivity = j.at("bs_reflectivity").get<double>();
    m.trigger_filter_hwhm_hz = j.at("trigger_filter_hwhm_hz").get<double>();
    m.dark_fraction = j.at("dark_fraction").get<double>();
    return m;
}

inline std::string model_hash(const OpoModel& m) { return git_blob_hash(model_to_json(m).dump()); }

inline ordered_json convention_json() {
    ordered_json j;
    j["vacuum_variance"] = 0.5;
    j["wigner_normalization"] = "integral over phase space equals one";
    j["quadrature_ordering"] = "x_trigger, p_trigger, x_signal, p_signal";
    return j;
}

// ---------------------------------------------------------------- dataset io

inline std::string dataset_to_csv(const QuadratureDataset& ds) {
    std::string out = "theta_rad,x\n";
    for (const auto& r : ds.records)
        out += format_double(r.theta) + "," + format_double(r.x) + "\n";
    return out;
}

inline ordered_json dataset_sidecar(const QuadratureDataset& ds) {
    ordered_json j;
    j["records"] = ds.records.size();
    j["seed"] = ds.seed;
    j["model_hash"] = ds.model_hash;
    j["mode_gamma_hz"] = ds.mode_gamma_hz;
    j["mode_kappa_hz"] = ds.mode_kappa_hz;
    j["eta_det_applied"] = ds.eta_det_applied;
    j["effective_dark_fraction"] = ds.effective_dark_fraction;
    j["vacuum_scale"] = ds.vacuum_scale;
    j["convention"] = convention_json();
    return j;
}

inline void write_dataset(const std::string& csv_path, const QuadratureDataset& ds) {
    write_file(csv_path, dataset_to_csv(ds));
    ordered_json j = dataset_sidecar(ds);
    write_file(csv_path + ".json", j.dump(2) + "\n");
}

inline QuadratureDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw config_error("empty dataset file: " + path);
    if (line != "theta_rad,x" && line != "theta_rad,x\r")
        throw config_error(path + ": expected header 'theta_rad,x'");
    QuadratureDataset ds;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected two columns");
        char* end = nullptr;
        const double theta = std::strtod(line.c_str(), &end);
        const double x = std::strtod(line.c_str() + comma + 1, nullptr);
        (void)end;
        ds.records.push_back({theta, x});
    }
    // sidecar is optional on read; restore provenance when present
    std::ifstream sc(path + ".json");
    if (sc) {
        ordered_json j = ordered_json::parse(sc, nullptr, true);
        ds.seed = j.value("seed", uint64_t{0});
        ds.model_hash = j.value("model_hash", std::string{});
        ds.mode_gamma_hz = j.value("mode_gamma_hz", 0.0);
        ds.mode_kappa_hz = j.value("mode_kappa_hz", 0.0);
        ds.eta_det_applied = j.value("eta_det_applied", 1.0);
        ds.effective_dark_fraction = j.value("effective_dark_fraction", 0.0);
        ds.vacuum_scale = j.value("vacuum_scale", 1.0);
    }
    return ds;
}

// ---------------------------------------------------------------- fock json

inline ordered_json fock_to_json(const FockMatrix& rho) {
    ordered_json re = ordered_json::array(), im = ordered_json::array();
    for (int i = 0; i < rho.dim(); ++i) {
        ordered_json rrow = ordered_json::array(), irow = ordered_json::array();
        for (int j = 0; j < rho.dim(); ++j) {
            rrow.push_back(rho.at(i, j).real());
            irow.push_back(rho.at(i, j).imag());
        }
        re.push_back(rrow);
        im.push_back(irow);
    }
    ordered_json j;
    j["n_max"] = rho.nmax;
    j["convention"] = convention_json();
    j["real"] = re;
    j["imag"] = im;
    return j;
}

inline FockMatrix fock_from_json(const ordered_json& j) {
    const int nmax = j.at("n_max").get<int>();
    FockMatrix rho(nmax);
    const auto& re = j.at("real");
    const auto& im = j.at("imag");
    for (int a = 0; a < rho.dim(); ++a)
        for (int b = 0; b < rho.dim(); ++b)
            rho.at(a, b) = {re.at(a).at(b).get<double>(), im.at(a).at(b).get<double>()};
    return rho;
}

// ---------------------------------------------------------------- grids, traces

inline std::string wigner_grid_csv(const FockMatrix& rho, double extent, int points) {
    if (points < 2 || !(extent > 0.0)) throw config_error("wigner grid: bad extent/points");
    std::string out = "x,p,w\n";
    for (int i = 0; i < points; ++i) {
        const double x = -extent + 2.0 * extent * i / (points - 1);
        for (int j = 0; j < points; ++j) {
            const double p = -extent + 2.0 * extent * j / (points - 1);
            out += format_double(x) + "," + format_double(p) + "," +
                   format_double(wigner_from_fock(rho, x, p)) + "\n";
        }
    }
    return out;
}

inline std::string likelihood_trace_csv(const std::vector<double>& trace) {
    std::string out = "iteration,log_likelihood\n";
    for (size_t i = 0; i < trace.size(); ++i)
        out += std::to_string(i) + "," + format_double(trace[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------- segments io

// Record layout (little-endian): int64 click timestamp [ns], uint64 segment
// index, uint64 flags, then 1000 float32 samples. 24-byte header + 4000 bytes.
namespace detail {

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline uint64_t get_u64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
}

inline void put_f32(std::string& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline float get_f32(const unsigned char* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

}  // namespace detail

inline std::string segments_to_bytes(const std::vector<RawSegment>& segs) {
    std::string out;
    out.reserve(segs.size() * (24 + 4 * SegmentGrid::n));
    for (const auto& s : segs) {
        if (s.samples.size() != SegmentGrid::n)
            throw config_error("segment must hold exactly 1000 samples");
        detail::put_u64(out, static_cast<uint64_t>(s.timestamp_ns));
        detail::put_u64(out, s.index);
        detail::put_u64(out, s.flags);
        for (double v : s.samples) detail::put_f32(out, static_cast<float>(v));
    }
    return out;
}

inline std::vector<RawSegment> segments_from_bytes(const std::string& bytes) {
    const size_t rec = 24 + 4 * SegmentGrid::n;
    if (bytes.size() % rec != 0) throw config_error("segment file length is not a whole record");
    std::vector<RawSegment> out(bytes.size() / rec);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (auto& s : out) {
        s.timestamp_ns = static_cast<int64_t>(detail::get_u64(p));
        s.index = detail::get_u64(p + 8);
        s.flags = detail::get_u64(p + 16);
        s.samples.resize(SegmentGrid::n);
        for (int i = 0; i < SegmentGrid::n; ++i) s.samples[i] = detail::get_f32(p + 24 + 4 * i);
        p += rec;
    }
    return out;
}

// ---------------------------------------------------------------- manifest

// Written before any computation: the fully-resolved configuration plus
// content hashes of every input file. No clocks, no hostnames — a re-run
// with the same inputs produces the same manifest byte for byte.
inline ordered_json make_manifest(const std::string& command,
                                  const std::map<std::string, std::string>& resolved_config,
                                  const std::map<std::string, std::string>& input_hashes) {
    ordered_json j;
    j["command"] = command;
    ordered_json cfg;
    for (const auto& [k, v] : resolved_config) cfg[k] = v;
    j["config"] = cfg;
    ordered_json in;
    for (const auto& [k, v] : input_hashes) in[k] = v;
    j["inputs"] = in;
    return j;
}

}  // namespace oddcat

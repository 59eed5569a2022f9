#pragma once

// Scenario file ingestion. The format is sectioned key/value text:
//
//   [system]
//   m = 10
//   n_s = 16
//   n_id = 4
//   n_eh = 4
//   theta_deg = 60           # or theta_rad
//   alpha = 1e-8             # or "re,im"
//   frame_length = 256
//   power_dbm = 40           # or power_watts
//   noise_sense_dbm = -80    # or noise_sense_watts
//   noise_id_dbm = -80       # or noise_id_watts
//
//   [channel_id]             # likewise [channel_eh]
//   type = rayleigh          # los | rayleigh | explicit
//   path_loss_db = 120
//   seed = 7                 # rayleigh
//   angle_deg = 12           # los (or angle_rad)
//   row0 = 1,0 0,1 ...       # explicit, one rowK per receive antenna
//
// Powers arrive in dBm and path losses in dB; everything is converted to
// Watts before any computation. Seeded Rayleigh generation uses a local
// Box-Muller over mt19937_64 so a fixed seed is deterministic across
// platforms and standard-library versions.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cre/model.hpp"

namespace cre {

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct KeyValue {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct Section {
    std::map<std::string, KeyValue> entries;
};

// Deterministic standard complex Gaussian stream (CSCG, unit variance).
class CscgStream {
public:
    explicit CscgStream(std::uint64_t seed) : rng_(seed) {}

    cplx next() {
        // Box-Muller on uniforms built from the top 53 bits.
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));  // variance 1/2 per part
        return cplx(r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2));
    }

private:
    double uniform() { return (rng_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 rng_;
};

}  // namespace detail

struct ScenarioFile {
    std::map<std::string, detail::Section> sections;
    std::string path;

    static ScenarioFile parse(std::istream& in, const std::string& path = "<stream>") {
        ScenarioFile f;
        f.path = path;
        std::string line;
        std::string current;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(path + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
                current = detail::trim(line.substr(1, line.size() - 2));
                f.sections[current];
                continue;
            }
            size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            if (current.empty())
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": key outside any section");
            std::string key = detail::trim(line.substr(0, eq));
            f.sections[current].entries[key] =
                detail::KeyValue{detail::trim(line.substr(eq + 1)), lineno, false};
        }
        return f;
    }

    static ScenarioFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open scenario file: " + path);
        return parse(in, path);
    }

    const detail::Section& section(const std::string& name) const {
        auto it = sections.find(name);
        if (it == sections.end())
            throw ConfigError(path + ": missing section [" + name + "]");
        return it->second;
    }

    std::optional<std::string> get(const std::string& sec, const std::string& key) const {
        auto sit = sections.find(sec);
        if (sit == sections.end()) return std::nullopt;
        auto kit = sit->second.entries.find(key);
        if (kit == sit->second.entries.end()) return std::nullopt;
        kit->second.used = true;
        return kit->second.value;
    }

    std::string require(const std::string& sec, const std::string& key) const {
        auto v = get(sec, key);
        if (!v)
            throw ConfigError(path + ": [" + sec + "] missing required key '" + key + "'");
        return *v;
    }
};

namespace detail {

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (trim(s.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": cannot parse number '" + s + "'");
}

inline int parse_int(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (trim(s.substr(pos)).empty()) return static_cast<int>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(where + ": cannot parse integer '" + s + "'");
}

// "re,im" or a bare real.
inline cplx parse_complex(const std::string& s, const std::string& where) {
    size_t comma = s.find(',');
    if (comma == std::string::npos) return cplx(parse_double(s, where), 0.0);
    return cplx(parse_double(trim(s.substr(0, comma)), where),
                parse_double(trim(s.substr(comma + 1)), where));
}

inline double power_field(const ScenarioFile& f, const std::string& sec,
                          const std::string& base) {
    auto dbm = f.get(sec, base + "_dbm");
    auto watts = f.get(sec, base + "_watts");
    if (dbm && watts)
        throw ConfigError(f.path + ": [" + sec + "] give " + base +
                          " in dBm or Watts, not both");
    if (dbm) return dbm_to_watts(parse_double(*dbm, base + "_dbm"));
    if (watts) return parse_double(*watts, base + "_watts");
    throw ConfigError(f.path + ": [" + sec + "] missing " + base +
                      "_dbm or " + base + "_watts");
}

inline double angle_field(const ScenarioFile& f, const std::string& sec,
                          const std::string& base, std::optional<double> fallback = {}) {
    auto rad = f.get(sec, base + "_rad");
    auto deg = f.get(sec, base + "_deg");
    if (rad && deg)
        throw ConfigError(f.path + ": [" + sec + "] give " + base +
                          " in radians or degrees, not both");
    if (rad) return parse_double(*rad, base + "_rad");
    if (deg) return parse_double(*deg, base + "_deg") * M_PI / 180.0;
    if (fallback) return *fallback;
    throw ConfigError(f.path + ": [" + sec + "] missing " + base + "_rad or " +
                      base + "_deg");
}

inline cmat parse_channel(const ScenarioFile& f, const std::string& sec,
                          int rows, int cols) {
    const std::string type = f.require(sec, "type");
    const double loss_db =
        parse_double(f.get(sec, "path_loss_db").value_or("0"), "path_loss_db");
    const double amp = std::pow(10.0, -loss_db / 20.0);
    if (type == "los") {
        if (rows != 1)
            throw ConfigError(f.path + ": [" + sec + "] los channel requires 1 receive antenna");
        const double ang = angle_field(f, sec, "angle");
        cmat h(1, cols);
        h.row(0) = amp * steering(cols, ang).transpose();
        return h;
    }
    if (type == "rayleigh") {
        const std::uint64_t seed = static_cast<std::uint64_t>(
            parse_int(f.require(sec, "seed"), sec + ".seed"));
        CscgStream g(seed);
        cmat h(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) h(i, j) = amp * g.next();
        return h;
    }
    if (type == "explicit") {
        cmat h(rows, cols);
        for (int i = 0; i < rows; ++i) {
            const std::string key = "row" + std::to_string(i);
            std::istringstream row(f.require(sec, key));
            for (int j = 0; j < cols; ++j) {
                std::string tok;
                if (!(row >> tok))
                    throw ConfigError(f.path + ": [" + sec + "] " + key +
                                      " needs " + std::to_string(cols) + " entries");
                h(i, j) = amp * parse_complex(tok, sec + "." + key);
            }
        }
        return h;
    }
    throw ConfigError(f.path + ": [" + sec + "] unknown channel type '" + type + "'");
}

}  // namespace detail

inline ScenarioConfig load_scenario(const ScenarioFile& f) {
    ScenarioConfig cfg;
    const std::string sys = "system";
    f.section(sys);
    cfg.tx_antennas = detail::parse_int(f.require(sys, "m"), "m");
    cfg.sense_rx_antennas = detail::parse_int(f.require(sys, "n_s"), "n_s");
    cfg.id_rx_antennas = detail::parse_int(f.require(sys, "n_id"), "n_id");
    cfg.eh_rx_antennas = detail::parse_int(f.require(sys, "n_eh"), "n_eh");
    cfg.target_angle = detail::angle_field(f, sys, "theta", 0.0);
    cfg.reflection = detail::parse_complex(f.require(sys, "alpha"), "alpha");
    cfg.frame_length = detail::parse_int(f.require(sys, "frame_length"), "frame_length");
    cfg.power_budget = detail::power_field(f, sys, "power");
    cfg.sigma2_sense = detail::power_field(f, sys, "noise_sense");
    cfg.sigma2_id = detail::power_field(f, sys, "noise_id");
    cfg.h_id = detail::parse_channel(f, "channel_id", cfg.id_rx_antennas, cfg.tx_antennas);
    cfg.h_eh = detail::parse_channel(f, "channel_eh", cfg.eh_rx_antennas, cfg.tx_antennas);
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    return load_scenario(ScenarioFile::load(path));
}

}  // namespace cre

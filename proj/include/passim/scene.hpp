// SPDX-License-Identifier: Apache-2.0
//
// passim — pinching-antenna system simulation and channel estimation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PASSIM_SCENE_HPP
#define PASSIM_SCENE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "rng.hpp"

namespace passim {

enum class CouplingMode { uniform_power, unit };

/// Full scenario description: service region, waveguide, activation grid,
/// antenna/user counts, propagation statistics and pilot budget.
struct SystemConfig {
    double D_x = 20.0;    // region x-extent [m]; also the waveguide length
    double D_y = 20.0;    // region y-extent [m]
    double d = 5.0;       // waveguide height [m]
    double L = 0.1;       // antenna length, lower placement bound [m]
    int Q = 200;          // discrete activation positions
    int N = 16;           // active pinching antennas
    int K = 4;            // user equipments
    double f_c = 28e9;    // carrier frequency [Hz]
    double n_e = 1.4;     // effective refractive index of the waveguide
    int S_scat = 6;       // scatterers per UE link
    double p_los = 0.8;   // per-antenna LoS Bernoulli parameter
    double sigma_s_sq = 1.0; // scatterer gain variance
    int T = 4;            // pilot slots
    double snr_db = 10.0; // transmit SNR [dB]
    double feed_x = 0.0;  // waveguide feed x-coordinate [m]
    CouplingMode coupling_mode = CouplingMode::uniform_power;
    std::uint64_t seed = 1;

    double wavelength() const { return kSpeedOfLight / f_c; }
    double guided_wavelength() const { return wavelength() / n_e; }

    void validate() const {
        if (!(L > 0.0) || !(L < D_x))
            throw ConfigError("SystemConfig: require 0 < L < D_x, got L=" + std::to_string(L) +
                              ", D_x=" + std::to_string(D_x));
        if (Q < 2)
            throw ConfigError("SystemConfig: require Q >= 2, got Q=" + std::to_string(Q));
        if (N < 1 || N > Q)
            throw ConfigError("SystemConfig: require 1 <= N <= Q, got N=" + std::to_string(N) +
                              ", Q=" + std::to_string(Q));
        if (!(d > 0.0))
            throw ConfigError("SystemConfig: require d > 0");
        if (!(D_y > 0.0))
            throw ConfigError("SystemConfig: require D_y > 0");
        if (!(f_c > 0.0))
            throw ConfigError("SystemConfig: require f_c > 0");
        if (!(n_e >= 1.0))
            throw ConfigError("SystemConfig: require n_e >= 1");
        if (T < 1)
            throw ConfigError("SystemConfig: require T >= 1");
        if (!(p_los >= 0.0 && p_los <= 1.0))
            throw ConfigError("SystemConfig: require 0 <= p_los <= 1");
        if (S_scat < 0)
            throw ConfigError("SystemConfig: require S_scat >= 0");
        if (!(sigma_s_sq >= 0.0))
            throw ConfigError("SystemConfig: require sigma_s_sq >= 0");
        if (K < 1)
            throw ConfigError("SystemConfig: require K >= 1");
        if (!(wavelength() > 0.0) || !(guided_wavelength() > 0.0))
            throw ConfigError("SystemConfig: derived wavelengths must be positive");
    }
};

struct Position3D {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline double distance(const Position3D &a, const Position3D &b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Active-antenna placement: x-coordinates on the waveguide plus their
/// 1-based grid indices. Entries are strictly increasing.
struct PinchingLayout {
    std::vector<double> pa_x;
    std::vector<int> grid_indices;

    std::size_t size() const { return pa_x.size(); }
    Position3D antenna_position(std::size_t n, const SystemConfig &cfg) const {
        return {pa_x[n], 0.0, cfg.d};
    }
};

/// The feasible activation set: Q uniformly spaced positions from L to D_x.
inline std::vector<double> feasible_positions(const SystemConfig &cfg) {
    cfg.validate();
    std::vector<double> s(static_cast<std::size_t>(cfg.Q));
    const double step = (cfg.D_x - cfg.L) / (cfg.Q - 1);
    for (int q = 0; q < cfg.Q; ++q)
        s[static_cast<std::size_t>(q)] = cfg.L + step * q;
    s.back() = cfg.D_x; // exact endpoint
    return s;
}

/// Draws N distinct grid indices (partial Fisher–Yates), sorted ascending.
inline PinchingLayout sample_layout(const SystemConfig &cfg, std::uint64_t rng_seed) {
    cfg.validate();
    const auto grid = feasible_positions(cfg);
    Rng rng(rng_seed);

    std::vector<int> idx(static_cast<std::size_t>(cfg.Q));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < cfg.N; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.Q - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(cfg.N));
    std::sort(idx.begin(), idx.end());

    PinchingLayout layout;
    layout.pa_x.reserve(idx.size());
    layout.grid_indices.reserve(idx.size());
    for (int q : idx) {
        layout.pa_x.push_back(grid[static_cast<std::size_t>(q)]);
        layout.grid_indices.push_back(q + 1);
    }
    return layout;
}

/// K user positions uniform over the service rectangle (z = 0).
inline std::vector<Position3D> sample_ues(const SystemConfig &cfg, std::uint64_t rng_seed) {
    cfg.validate();
    Rng rng(rng_seed);
    std::vector<Position3D> ues(static_cast<std::size_t>(cfg.K));
    for (auto &u : ues) {
        u.x = rng.uniform(0.0, cfg.D_x);
        u.y = rng.uniform(0.0, cfg.D_y);
        u.z = 0.0;
    }
    return ues;
}

// --- configuration file I/O ------------------------------------------------
//
// Human-readable "key = value" lines; '#' starts a comment. Unknown and
// duplicate keys are rejected by name.

namespace detail {

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception &) {
        throw ConfigError("invalid numeric value '" + v + "' for key '" + key + "'");
    }
}

inline long long parse_int(const std::string &key, const std::string &v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception &) {
        throw ConfigError("invalid integer value '" + v + "' for key '" + key + "'");
    }
}

} // namespace detail

inline void apply_config_entry(SystemConfig &cfg, const std::string &key, const std::string &value) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "D_x") cfg.D_x = parse_double(key, value);
    else if (key == "D_y") cfg.D_y = parse_double(key, value);
    else if (key == "d") cfg.d = parse_double(key, value);
    else if (key == "L") cfg.L = parse_double(key, value);
    else if (key == "Q") cfg.Q = static_cast<int>(parse_int(key, value));
    else if (key == "N") cfg.N = static_cast<int>(parse_int(key, value));
    else if (key == "K") cfg.K = static_cast<int>(parse_int(key, value));
    else if (key == "f_c") cfg.f_c = parse_double(key, value);
    else if (key == "n_e") cfg.n_e = parse_double(key, value);
    else if (key == "S_scat") cfg.S_scat = static_cast<int>(parse_int(key, value));
    else if (key == "p_los") cfg.p_los = parse_double(key, value);
    else if (key == "sigma_s_sq") cfg.sigma_s_sq = parse_double(key, value);
    else if (key == "T") cfg.T = static_cast<int>(parse_int(key, value));
    else if (key == "snr_db") cfg.snr_db = parse_double(key, value);
    else if (key == "feed_x") cfg.feed_x = parse_double(key, value);
    else if (key == "coupling_mode") {
        if (value == "uniform_power") cfg.coupling_mode = CouplingMode::uniform_power;
        else if (value == "unit") cfg.coupling_mode = CouplingMode::unit;
        else throw ConfigError("invalid coupling_mode '" + value + "' (expected uniform_power or unit)");
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

inline SystemConfig parse_system_config(std::istream &in) {
    SystemConfig cfg;
    std::vector<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("malformed configuration line " + std::to_string(lineno) + ": '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError("duplicate configuration key '" + key + "'");
        seen.push_back(key);
        apply_config_entry(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

inline SystemConfig parse_system_config(const std::string &text) {
    std::istringstream in(text);
    return parse_system_config(in);
}

inline std::string serialize_system_config(const SystemConfig &cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "D_x = " << cfg.D_x << "\n"
        << "D_y = " << cfg.D_y << "\n"
        << "d = " << cfg.d << "\n"
        << "L = " << cfg.L << "\n"
        << "Q = " << cfg.Q << "\n"
        << "N = " << cfg.N << "\n"
        << "K = " << cfg.K << "\n"
        << "f_c = " << cfg.f_c << "\n"
        << "n_e = " << cfg.n_e << "\n"
        << "S_scat = " << cfg.S_scat << "\n"
        << "p_los = " << cfg.p_los << "\n"
        << "sigma_s_sq = " << cfg.sigma_s_sq << "\n"
        << "T = " << cfg.T << "\n"
        << "snr_db = " << cfg.snr_db << "\n"
        << "feed_x = " << cfg.feed_x << "\n"
        << "coupling_mode = " << (cfg.coupling_mode == CouplingMode::uniform_power ? "uniform_power" : "unit")
        << "\n"
        << "seed = " << cfg.seed << "\n";
    return out.str();
}

/// Fingerprint of the canonical serialization; echoed into result files.
inline std::uint64_t config_hash(const SystemConfig &cfg) {
    return fnv1a64(serialize_system_config(cfg));
}

} // namespace passim

#endif // PASSIM_SCENE_HPP

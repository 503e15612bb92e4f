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

#ifndef PASSIM_PILOTS_HPP
#define PASSIM_PILOTS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "channel.hpp"
#include "common.hpp"
#include "rng.hpp"
#include "scene.hpp"

namespace passim {

// Per-record sub-stream indices (see derive_seed). Regenerating any record
// only requires its stored seed.
inline constexpr std::uint64_t kStreamLayout = 10;
inline constexpr std::uint64_t kStreamUe = 11;
inline constexpr std::uint64_t kStreamChannel = 12;
inline constexpr std::uint64_t kStreamNoise = 13;
inline constexpr std::uint64_t kStreamSnr = 14;

inline double noise_variance_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

/// Row-major dense matrices used for network inputs/labels.
struct RealMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct ComplexMatrix {
    std::size_t rows = 0, cols = 0;
    ComplexVector data;

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, cplx{0.0, 0.0}) {}
    cplx &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    cplx at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Scalar per-slot observations at the waveguide output.
struct PilotObservation {
    ComplexVector y_tilde; // length T
    double snr_db = 0.0;
    double noise_var = 0.0;
};

/// One training/test sample. Column convention: Y_bar holds real parts in
/// columns [0, T) and imaginary parts in [T, 2T); H_bar holds (re, im).
struct DatasetRecord {
    std::vector<double> pa_x;  // N antenna x-coordinates
    RealMatrix Y_bar;          // N x 2T
    RealMatrix H_bar;          // N x 2
    double snr_db = 0.0;
    int N = 0;
    int T = 0;
    std::uint64_t seed = 0;
};

struct DatasetMeta {
    std::uint64_t N_s = 0;
    SystemConfig cfg;
    std::uint32_t format_version = 1;
    std::uint64_t creation_seed = 0;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<DatasetRecord> records;
};

/// SNR assignment while generating records: a fixed value (evaluation sets)
/// or a per-record uniform draw from [lo, hi] (training sets).
struct SnrSpec {
    enum class Mode { fixed, range };
    Mode mode = Mode::fixed;
    double fixed_db = 0.0;
    double lo_db = -10.0;
    double hi_db = 20.0;

    static SnrSpec fixed(double db) { return {Mode::fixed, db, 0.0, 0.0}; }
    static SnrSpec range(double lo, double hi) { return {Mode::range, 0.0, lo, hi}; }
};

/// Orthogonal pilot transmission for one UE with unit pilot symbols:
/// y_t = g^T h + n_t, n_t ~ CN(0, sigma_n^2), sigma_n^2 = 10^(-snr_db/10).
inline PilotObservation transmit_pilots(const ChannelRealization &real, const SystemConfig &cfg,
                                        std::uint64_t rng_seed) {
    cplx z{0.0, 0.0};
    for (std::size_t n = 0; n < real.g.size(); ++n)
        z += real.g[n] * real.h[n];

    PilotObservation obs;
    obs.snr_db = cfg.snr_db;
    obs.noise_var = noise_variance_from_snr_db(cfg.snr_db);
    obs.y_tilde.resize(static_cast<std::size_t>(cfg.T));
    Rng rng(rng_seed);
    for (auto &y : obs.y_tilde)
        y = z + rng.cnormal(obs.noise_var);
    return obs;
}

/// Observation lifting: the rank-1 outer product Y = g * y^T (N x T).
inline ComplexMatrix lift_observation(const PilotObservation &obs, const ComplexVector &g) {
    ComplexMatrix out(g.size(), obs.y_tilde.size());
    for (std::size_t n = 0; n < g.size(); ++n)
        for (std::size_t t = 0; t < obs.y_tilde.size(); ++t)
            out.at(n, t) = g[n] * obs.y_tilde[t];
    return out;
}

/// Lossless real/imaginary split: N x T complex -> N x 2T real.
inline RealMatrix to_real(const ComplexMatrix &in) {
    RealMatrix out(in.rows, 2 * in.cols);
    for (std::size_t r = 0; r < in.rows; ++r)
        for (std::size_t c = 0; c < in.cols; ++c) {
            out.at(r, c) = in.at(r, c).real();
            out.at(r, c + in.cols) = in.at(r, c).imag();
        }
    return out;
}

inline ComplexMatrix from_real(const RealMatrix &in) {
    ComplexMatrix out(in.rows, in.cols / 2);
    for (std::size_t r = 0; r < in.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.at(r, c) = cplx{in.at(r, c), in.at(r, c + out.cols)};
    return out;
}

/// Channel label as an N x 2 real matrix, columns (re, im).
inline RealMatrix to_real_label(const ComplexVector &h) {
    RealMatrix out(h.size(), 2);
    for (std::size_t n = 0; n < h.size(); ++n) {
        out.at(n, 0) = h[n].real();
        out.at(n, 1) = h[n].imag();
    }
    return out;
}

inline ComplexVector from_real_label(const RealMatrix &in) {
    ComplexVector h(in.rows);
    for (std::size_t n = 0; n < in.rows; ++n)
        h[n] = cplx{in.at(n, 0), in.at(n, 1)};
    return h;
}

/// Generates record `index` of a dataset. Every random draw comes from
/// sub-streams of derive_seed(base_seed, index), so records are independent
/// of generation order.
inline DatasetRecord generate_record(const SystemConfig &cfg, std::uint64_t base_seed,
                                     std::uint64_t index, const SnrSpec &snr = {}) {
    const std::uint64_t rec_seed = derive_seed(base_seed, index);

    const PinchingLayout layout = sample_layout(cfg, derive_seed(rec_seed, kStreamLayout));
    const Position3D ue = sample_ues(cfg, derive_seed(rec_seed, kStreamUe)).front();
    const ChannelRealization real = compose_channel(layout, ue, cfg, derive_seed(rec_seed, kStreamChannel));

    SystemConfig rec_cfg = cfg;
    if (snr.mode == SnrSpec::Mode::range) {
        Rng snr_rng(derive_seed(rec_seed, kStreamSnr));
        rec_cfg.snr_db = snr_rng.uniform(snr.lo_db, snr.hi_db);
    } else {
        rec_cfg.snr_db = snr.fixed_db;
    }

    const PilotObservation obs = transmit_pilots(real, rec_cfg, derive_seed(rec_seed, kStreamNoise));

    DatasetRecord rec;
    rec.pa_x = layout.pa_x;
    rec.Y_bar = to_real(lift_observation(obs, real.g));
    rec.H_bar = to_real_label(real.h);
    rec.snr_db = rec_cfg.snr_db;
    rec.N = cfg.N;
    rec.T = cfg.T;
    rec.seed = rec_seed;
    return rec;
}

/// Rebuilds a record's lifted observation from its stored fields only; used
/// to verify internal consistency of stored data.
inline RealMatrix reconstruct_observation(const DatasetRecord &rec, const SystemConfig &cfg) {
    PinchingLayout layout;
    layout.pa_x = rec.pa_x;
    layout.grid_indices.assign(rec.pa_x.size(), 0); // indices are not needed below

    ChannelRealization real;
    real.layout = layout;
    real.g = inwaveguide_channel(layout, cfg);
    real.h = from_real_label(rec.H_bar);

    SystemConfig rec_cfg = cfg;
    rec_cfg.snr_db = rec.snr_db;
    const PilotObservation obs = transmit_pilots(real, rec_cfg, derive_seed(rec.seed, kStreamNoise));
    return to_real(lift_observation(obs, real.g));
}

/// Builds N_s records in index order. The emit callback receives (index,
/// record); build_dataset below collects them into memory.
inline DatasetMeta
for_each_record(const SystemConfig &cfg, std::uint64_t n_samples, std::uint64_t base_seed,
                const SnrSpec &snr,
                const std::function<void(std::uint64_t, const DatasetRecord &)> &emit) {
    cfg.validate();
    if (n_samples < 1)
        throw ConfigError("build_dataset: N_s must be >= 1");
    for (std::uint64_t i = 0; i < n_samples; ++i)
        emit(i, generate_record(cfg, base_seed, i, snr));
    DatasetMeta meta;
    meta.N_s = n_samples;
    meta.cfg = cfg;
    meta.creation_seed = base_seed;
    return meta;
}

inline Dataset build_dataset(const SystemConfig &cfg, std::uint64_t n_samples,
                             std::uint64_t base_seed, const SnrSpec &snr = {}) {
    Dataset ds;
    ds.records.reserve(n_samples);
    ds.meta = for_each_record(cfg, n_samples, base_seed, snr,
                              [&](std::uint64_t, const DatasetRecord &rec) { ds.records.push_back(rec); });
    return ds;
}

} // namespace passim

#endif // PASSIM_PILOTS_HPP

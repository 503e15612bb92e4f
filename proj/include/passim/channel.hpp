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

#ifndef PASSIM_CHANNEL_HPP
#define PASSIM_CHANNEL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "common.hpp"
#include "rng.hpp"
#include "scene.hpp"

namespace passim {

// Sub-stream indices hung off a compose_channel seed (see derive_seed).
inline constexpr std::uint64_t kStreamLosMask = 1;
inline constexpr std::uint64_t kStreamScatterers = 2;

/// Free-space gain constant of the LoS model. Single definition point: kept
/// exactly as 4*pi*f_c/c.
inline double path_gain_constant(double f_c) {
    return 4.0 * std::numbers::pi * f_c / kSpeedOfLight;
}

/// Waveguide-to-antenna power coupling amplitude. uniform_power splits the
/// guided power evenly (sum of squares = 1); unit is a debugging mode.
inline double coupling_amplitude(const SystemConfig &cfg) {
    return cfg.coupling_mode == CouplingMode::uniform_power ? 1.0 / std::sqrt(static_cast<double>(cfg.N))
                                                            : 1.0;
}

/// One draw of the scattering environment on a single UE link.
struct ScattererDraw {
    std::vector<Position3D> positions;
    ComplexVector gains;        // CN(0, sigma_s_sq)
    std::vector<double> phases; // uniform on [0, 2*pi)

    std::size_t size() const { return positions.size(); }
};

/// One joint draw of the deterministic and stochastic channel for one UE.
struct ChannelRealization {
    ComplexVector g;                // in-waveguide channel, length N
    ComplexVector h;                // wireless propagation channel, length N
    std::vector<std::uint8_t> los_mask; // Bernoulli LoS indicators
    ScattererDraw scatterers;
    PinchingLayout layout;
    Position3D ue;
};

/// In-waveguide channel: entry n = alpha_n * exp(-j*2*pi/lambda_g * |feed - pa_n|).
inline ComplexVector inwaveguide_channel(const PinchingLayout &layout, const SystemConfig &cfg) {
    const double alpha = coupling_amplitude(cfg);
    const double k_g = 2.0 * std::numbers::pi / cfg.guided_wavelength();
    const Position3D feed{cfg.feed_x, 0.0, cfg.d};
    ComplexVector g(layout.size());
    for (std::size_t n = 0; n < layout.size(); ++n) {
        const double dist = distance(feed, layout.antenna_position(n, cfg));
        g[n] = std::polar(alpha, -k_g * dist);
    }
    return g;
}

/// Spherical-wavefront free-space LoS channel:
/// entry n = sqrt(eta) * exp(-j*2*pi/lambda * r_n) / r_n.
inline ComplexVector los_channel(const PinchingLayout &layout, const Position3D &ue,
                                 const SystemConfig &cfg) {
    const double eta = path_gain_constant(cfg.f_c);
    const double amp = std::sqrt(eta);
    const double k = 2.0 * std::numbers::pi / cfg.wavelength();
    ComplexVector h(layout.size());
    for (std::size_t n = 0; n < layout.size(); ++n) {
        const double r = distance(ue, layout.antenna_position(n, cfg));
        if (r <= 0.0)
            throw SingularityError("los_channel: UE coincides with antenna " + std::to_string(n));
        h[n] = std::polar(amp / r, -k * r);
    }
    return h;
}

/// Scatterer positions uniform over [0,D_x]x[0,D_y]x[0,d]; gains CN(0, sigma_s_sq);
/// phases uniform on [0, 2*pi).
inline ScattererDraw sample_scatterers(const Position3D & /*ue*/, const SystemConfig &cfg,
                                       std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    ScattererDraw draw;
    const auto s_count = static_cast<std::size_t>(cfg.S_scat);
    draw.positions.resize(s_count);
    draw.gains.resize(s_count);
    draw.phases.resize(s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
        draw.positions[s] = {rng.uniform(0.0, cfg.D_x), rng.uniform(0.0, cfg.D_y), rng.uniform(0.0, cfg.d)};
        draw.gains[s] = rng.cnormal(cfg.sigma_s_sq);
        draw.phases[s] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return draw;
}

/// NLoS channel: sqrt(1/S) * sum_s beta_s * a_s * exp(j*phase_s), where the
/// spherical-wavefront response a_s has entries
/// sqrt(eta) * exp(-j*2*pi*d_sn/lambda) / (d_ks * d_sn).
/// An empty draw yields the all-zeros vector.
inline ComplexVector nlos_channel(const PinchingLayout &layout, const Position3D &ue,
                                  const ScattererDraw &draw, const SystemConfig &cfg) {
    ComplexVector h(layout.size(), cplx{0.0, 0.0});
    if (draw.size() == 0)
        return h;
    const double eta = path_gain_constant(cfg.f_c);
    const double amp = std::sqrt(eta);
    const double k = 2.0 * std::numbers::pi / cfg.wavelength();
    const double norm = std::sqrt(1.0 / static_cast<double>(draw.size()));
    for (std::size_t s = 0; s < draw.size(); ++s) {
        const double d_ks = distance(ue, draw.positions[s]);
        if (d_ks <= 0.0)
            throw SingularityError("nlos_channel: UE coincides with scatterer " + std::to_string(s));
        const cplx path_factor = norm * draw.gains[s] * std::polar(1.0, draw.phases[s]);
        for (std::size_t n = 0; n < layout.size(); ++n) {
            const double d_sn = distance(draw.positions[s], layout.antenna_position(n, cfg));
            if (d_sn <= 0.0)
                throw SingularityError("nlos_channel: scatterer " + std::to_string(s) +
                                       " coincides with antenna " + std::to_string(n));
            h[n] += path_factor * std::polar(amp / (d_ks * d_sn), -k * d_sn);
        }
    }
    return h;
}

/// Draws the LoS mask and scatterers, then assembles
/// h = mask .* h_LoS + h_NLoS. Pure function of (layout, ue, cfg, seed).
inline ChannelRealization compose_channel(const PinchingLayout &layout, const Position3D &ue,
                                          const SystemConfig &cfg, std::uint64_t rng_seed) {
    ChannelRealization real;
    real.layout = layout;
    real.ue = ue;
    real.g = inwaveguide_channel(layout, cfg);

    Rng mask_rng(derive_seed(rng_seed, kStreamLosMask));
    real.los_mask.resize(layout.size());
    for (auto &bit : real.los_mask)
        bit = mask_rng.bernoulli(cfg.p_los) ? 1 : 0;

    real.scatterers = sample_scatterers(ue, cfg, derive_seed(rng_seed, kStreamScatterers));

    const ComplexVector h_los = los_channel(layout, ue, cfg);
    const ComplexVector h_nlos = nlos_channel(layout, ue, real.scatterers, cfg);
    real.h.resize(layout.size());
    for (std::size_t n = 0; n < layout.size(); ++n)
        real.h[n] = (real.los_mask[n] ? h_los[n] : cplx{0.0, 0.0}) + h_nlos[n];
    return real;
}

} // namespace passim

#endif // PASSIM_CHANNEL_HPP

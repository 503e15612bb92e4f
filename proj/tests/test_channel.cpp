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

#include <catch2/catch_amalgamated.hpp>

#include <passim/channel.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace passim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PinchingLayout layout_at(std::vector<double> xs) {
    PinchingLayout l;
    l.pa_x = std::move(xs);
    l.grid_indices.assign(l.pa_x.size(), 0);
    return l;
}

} // namespace

TEST_CASE("inwaveguide channel phases and amplitudes") {
    SystemConfig cfg;
    cfg.N = 1;

    SECTION("antenna at the feed point has zero phase") {
        cfg.feed_x = 3.0;
        const auto g = inwaveguide_channel(layout_at({3.0}), cfg);
        CHECK_THAT(g[0].real(), WithinAbs(1.0, 1e-15)); // alpha = 1/sqrt(1)
        CHECK_THAT(g[0].imag(), WithinAbs(0.0, 1e-15));
    }

    SECTION("half a guided wavelength flips the sign") {
        const double lam_g = cfg.guided_wavelength();
        const auto g = inwaveguide_channel(layout_at({cfg.feed_x + lam_g / 2.0}), cfg);
        CHECK_THAT(g[0].real(), WithinAbs(-1.0, 1e-9));
        CHECK_THAT(g[0].imag(), WithinAbs(0.0, 1e-6));
    }

    SECTION("1 m propagation matches direct evaluation at 28 GHz, n_e = 1.4") {
        const double lam_g = (kSpeedOfLight / 28e9) / 1.4;
        const cplx expected = std::polar(1.0, -2.0 * std::numbers::pi / lam_g * 1.0);
        const auto g = inwaveguide_channel(layout_at({cfg.feed_x + 1.0}), cfg);
        CHECK_THAT(g[0].real(), WithinAbs(expected.real(), 1e-9));
        CHECK_THAT(g[0].imag(), WithinAbs(expected.imag(), 1e-9));
    }

    SECTION("|g_n| = alpha_n and sum alpha^2 = 1 under uniform power") {
        cfg.N = 16;
        const auto layout = sample_layout(cfg, 5);
        const auto g = inwaveguide_channel(layout, cfg);
        const double alpha = coupling_amplitude(cfg);
        double power = 0.0;
        for (const auto &gn : g) {
            REQUIRE_THAT(std::abs(gn), WithinRel(alpha, 1e-13));
            power += std::norm(gn);
        }
        CHECK_THAT(power, WithinAbs(1.0, 1e-12));
    }

    SECTION("unit coupling mode has unit amplitudes") {
        cfg.N = 4;
        cfg.coupling_mode = CouplingMode::unit;
        const auto g = inwaveguide_channel(sample_layout(cfg, 5), cfg);
        for (const auto &gn : g)
            REQUIRE_THAT(std::abs(gn), WithinRel(1.0, 1e-13));
    }
}

TEST_CASE("LoS channel spherical wavefront law") {
    SystemConfig cfg;
    cfg.N = 1;

    SECTION("doubling the distance halves the magnitude") {
        const auto l = layout_at({0.0});
        cfg.d = 5.0;
        const auto near = los_channel(l, {0.0, 0.0, 0.0}, cfg);
        cfg.d = 10.0;
        const auto far = los_channel(l, {0.0, 0.0, 0.0}, cfg);
        CHECK_THAT(std::abs(near[0]) / std::abs(far[0]), WithinRel(2.0, 1e-12));
    }

    SECTION("distance of one wavelength has unit phase factor") {
        const double lam = cfg.wavelength();
        const auto h = los_channel(layout_at({0.0}), {0.0, 0.0, cfg.d - lam}, cfg);
        const double expected = std::sqrt(path_gain_constant(cfg.f_c)) / lam;
        CHECK_THAT(h[0].real(), WithinRel(expected, 1e-9));
        CHECK_THAT(h[0].imag(), WithinAbs(0.0, expected * 1e-6));
    }

    SECTION("magnitude matches sqrt(4 pi f_c / c) / 5 for a 5 m hop at 28 GHz") {
        cfg.f_c = 28e9;
        cfg.d = 5.0;
        const auto h = los_channel(layout_at({0.0}), {0.0, 0.0, 0.0}, cfg);
        const double expected = std::sqrt(4.0 * std::numbers::pi * 28e9 / kSpeedOfLight) / 5.0;
        CHECK_THAT(std::abs(h[0]), WithinRel(expected, 1e-13));
    }

    SECTION("magnitude is exactly sqrt(eta)/r for random geometry") {
        cfg.N = 8;
        const auto layout = sample_layout(cfg, 3);
        Rng rng(17);
        for (int t = 0; t < 50; ++t) {
            const Position3D ue{rng.uniform(0.0, 20.0), rng.uniform(0.0, 20.0), 0.0};
            const auto h = los_channel(layout, ue, cfg);
            for (std::size_t n = 0; n < layout.size(); ++n) {
                const double r = distance(ue, layout.antenna_position(n, cfg));
                REQUIRE_THAT(std::abs(h[n]), WithinRel(std::sqrt(path_gain_constant(cfg.f_c)) / r, 1e-13));
            }
        }
    }

    SECTION("zero distance raises a singularity error") {
        CHECK_THROWS_AS(los_channel(layout_at({1.0}), {1.0, 0.0, cfg.d}, cfg), SingularityError);
    }
}

TEST_CASE("scatterer sampling statistics") {
    SystemConfig cfg;

    SECTION("zero scatterers give an empty draw") {
        cfg.S_scat = 0;
        const auto draw = sample_scatterers({1, 1, 0}, cfg, 1);
        CHECK(draw.size() == 0);
    }

    SECTION("gain second moment matches sigma_s_sq within 2 percent") {
        cfg.S_scat = 1;
        cfg.sigma_s_sq = 2.5;
        double acc = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i)
            acc += std::norm(sample_scatterers({1, 1, 0}, cfg, static_cast<std::uint64_t>(i)).gains[0]);
        CHECK_THAT(acc / n, WithinRel(2.5, 0.02));
    }

    SECTION("phases pass a Kolmogorov-Smirnov test against U[0, 2pi)") {
        cfg.S_scat = 1;
        const int n = 10000;
        std::vector<double> phases(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            phases[static_cast<std::size_t>(i)] =
                sample_scatterers({1, 1, 0}, cfg, static_cast<std::uint64_t>(i)).phases[0];
        std::sort(phases.begin(), phases.end());
        double d_stat = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = phases[static_cast<std::size_t>(i)] / (2.0 * std::numbers::pi);
            d_stat = std::max(d_stat, std::abs(f - static_cast<double>(i) / n));
            d_stat = std::max(d_stat, std::abs(static_cast<double>(i + 1) / n - f));
        }
        const double critical_1pct = 1.628 / std::sqrt(static_cast<double>(n));
        CHECK(d_stat < critical_1pct);
    }

    SECTION("positions stay inside the service volume") {
        cfg.S_scat = 4;
        for (std::uint64_t seed = 0; seed < 500; ++seed) {
            const auto draw = sample_scatterers({1, 1, 0}, cfg, seed);
            for (const auto &p : draw.positions) {
                REQUIRE((p.x >= 0.0 && p.x <= cfg.D_x));
                REQUIRE((p.y >= 0.0 && p.y <= cfg.D_y));
                REQUIRE((p.z >= 0.0 && p.z <= cfg.d));
            }
        }
    }
}

TEST_CASE("NLoS channel against a direct entry-by-entry oracle") {
    SystemConfig cfg;
    cfg.N = 4;
    const auto layout = sample_layout(cfg, 11);
    const Position3D ue{4.0, 7.0, 0.0};

    SECTION("no scatterers give the zero vector") {
        const auto h = nlos_channel(layout, ue, ScattererDraw{}, cfg);
        for (const auto &hn : h)
            REQUIRE(hn == cplx{0.0, 0.0});
    }

    SECTION("zero gains give the zero vector") {
        cfg.S_scat = 3;
        auto draw = sample_scatterers(ue, cfg, 2);
        for (auto &b : draw.gains)
            b = 0.0;
        const auto h = nlos_channel(layout, ue, draw, cfg);
        for (const auto &hn : h)
            REQUIRE(hn == cplx{0.0, 0.0});
    }

    SECTION("single scatterer with unit gain equals the array response") {
        ScattererDraw draw;
        draw.positions = {{10.0, 5.0, 2.0}};
        draw.gains = {cplx{1.0, 0.0}};
        draw.phases = {0.0};
        const auto h = nlos_channel(layout, ue, draw, cfg);

        // Independent oracle: evaluate the spherical-wavefront response from
        // raw distances.
        const double eta = 4.0 * std::numbers::pi * cfg.f_c / kSpeedOfLight;
        const double lam = kSpeedOfLight / cfg.f_c;
        const double d_ks = distance(ue, draw.positions[0]);
        for (std::size_t n = 0; n < layout.size(); ++n) {
            const double d_sn = distance(draw.positions[0], layout.antenna_position(n, cfg));
            const cplx expected = std::sqrt(eta) *
                                  std::exp(cplx{0.0, -2.0 * std::numbers::pi * d_sn / lam}) / (d_ks * d_sn);
            REQUIRE_THAT(std::abs(h[n] - expected), WithinAbs(0.0, 1e-12 * std::abs(expected) + 1e-15));
        }
    }

    SECTION("multi-scatterer sum matches a brute-force oracle") {
        cfg.S_scat = 5;
        const auto draw = sample_scatterers(ue, cfg, 33);
        const auto h = nlos_channel(layout, ue, draw, cfg);

        const double eta = 4.0 * std::numbers::pi * cfg.f_c / kSpeedOfLight;
        const double lam = kSpeedOfLight / cfg.f_c;
        for (std::size_t n = 0; n < layout.size(); ++n) {
            cplx acc{0.0, 0.0};
            for (std::size_t s = 0; s < draw.size(); ++s) {
                const double d_ks = distance(ue, draw.positions[s]);
                const double d_sn = distance(draw.positions[s], layout.antenna_position(n, cfg));
                acc += draw.gains[s] * std::exp(cplx{0.0, draw.phases[s]}) * std::sqrt(eta) *
                       std::exp(cplx{0.0, -2.0 * std::numbers::pi * d_sn / lam}) / (d_ks * d_sn);
            }
            acc *= std::sqrt(1.0 / 5.0);
            REQUIRE_THAT(std::abs(h[n] - acc), WithinAbs(0.0, 1e-12 * std::abs(acc) + 1e-15));
        }
    }
}

TEST_CASE("composed channel realization") {
    SystemConfig cfg;
    cfg.N = 8;
    const auto layout = sample_layout(cfg, 21);
    const Position3D ue{12.0, 3.0, 0.0};

    SECTION("p_los = 0 leaves exactly the NLoS part") {
        cfg.p_los = 0.0;
        const auto real = compose_channel(layout, ue, cfg, 77);
        const auto h_nlos = nlos_channel(layout, ue, real.scatterers, cfg);
        for (std::size_t n = 0; n < real.h.size(); ++n) {
            REQUIRE(real.los_mask[n] == 0);
            REQUIRE(real.h[n] == h_nlos[n]);
        }
    }

    SECTION("p_los = 1 with no scatterers is the pure free-space model") {
        cfg.p_los = 1.0;
        cfg.S_scat = 0;
        const auto real = compose_channel(layout, ue, cfg, 78);
        const auto h_los = los_channel(layout, ue, cfg);
        for (std::size_t n = 0; n < real.h.size(); ++n) {
            REQUIRE(real.los_mask[n] == 1);
            REQUIRE(real.h[n] == h_los[n]);
        }
    }

    SECTION("mask mean approaches p_los within 1 percent") {
        cfg.N = 4;
        cfg.p_los = 0.8;
        cfg.S_scat = 0;
        const auto l = sample_layout(cfg, 2);
        double acc = 0.0;
        const int trials = 25000; // 1e5 mask bits
        for (int i = 0; i < trials; ++i) {
            const auto real = compose_channel(l, ue, cfg, static_cast<std::uint64_t>(i));
            for (auto bit : real.los_mask)
                acc += bit;
        }
        CHECK_THAT(acc / (trials * 4.0), WithinRel(0.8, 0.01));
    }

    SECTION("pure function of the seed (byte-identical repeats)") {
        const auto a = compose_channel(layout, ue, cfg, 1234);
        const auto b = compose_channel(layout, ue, cfg, 1234);
        REQUIRE(a.h == b.h);
        REQUIRE(a.g == b.g);
        REQUIRE(a.los_mask == b.los_mask);
        REQUIRE(a.scatterers.gains == b.scatterers.gains);
    }

    SECTION("h is reconstructible from stored parts to 1e-12 relative") {
        const auto real = compose_channel(layout, ue, cfg, 4321);
        const auto h_los = los_channel(layout, ue, cfg);
        const auto h_nlos = nlos_channel(layout, ue, real.scatterers, cfg);
        for (std::size_t n = 0; n < real.h.size(); ++n) {
            const cplx expect = (real.los_mask[n] ? h_los[n] : cplx{0, 0}) + h_nlos[n];
            REQUIRE_THAT(std::abs(real.h[n] - expect), WithinAbs(0.0, 1e-12 * std::abs(expect) + 1e-18));
        }
    }

    SECTION("moving one antenna changes only that entry of g and h_LoS") {
        cfg.S_scat = 0;
        cfg.p_los = 1.0;
        auto moved = layout;
        moved.pa_x[3] += 0.05;
        const auto a = compose_channel(layout, ue, cfg, 9);
        const auto b = compose_channel(moved, ue, cfg, 9);
        for (std::size_t n = 0; n < a.h.size(); ++n) {
            if (n == 3) {
                CHECK(a.g[n] != b.g[n]);
                CHECK(a.h[n] != b.h[n]);
            } else {
                CHECK(a.g[n] == b.g[n]);
                CHECK(a.h[n] == b.h[n]);
            }
        }
    }
}

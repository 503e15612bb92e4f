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

#include <passim/scene.hpp>

#include <set>

using namespace passim;

TEST_CASE("feasible_positions endpoints and spacing") {
    SystemConfig cfg;
    cfg.L = 0.1;
    cfg.D_x = 20.0;

    SECTION("Q = 2 gives the interval endpoints") {
        cfg.Q = 2;
        cfg.N = 1;
        const auto s = feasible_positions(cfg);
        REQUIRE(s.size() == 2);
        CHECK(s[0] == 0.1);
        CHECK(s[1] == 20.0);
    }

    SECTION("Q = 200 spacing is (D_x - L) / 199") {
        cfg.Q = 200;
        const auto s = feasible_positions(cfg);
        REQUIRE(s.size() == 200);
        CHECK(s.front() == 0.1);
        CHECK(s.back() == 20.0);
        const double step = (20.0 - 0.1) / 199.0;
        CHECK_THAT(s[1], Catch::Matchers::WithinRel(0.1 + step, 1e-14));
        CHECK_THAT(s[1], Catch::Matchers::WithinAbs(0.2, 1e-12));
    }

    SECTION("empty interval is a configuration error") {
        cfg.L = 20.0;
        cfg.D_x = 20.0;
        CHECK_THROWS_AS(feasible_positions(cfg), ConfigError);
    }

    SECTION("Q < 2 is a configuration error") {
        cfg.Q = 1;
        cfg.N = 1;
        CHECK_THROWS_AS(feasible_positions(cfg), ConfigError);
    }
}

TEST_CASE("feasible_positions is affine in the grid index") {
    Rng meta(42);
    for (int trial = 0; trial < 20; ++trial) {
        SystemConfig cfg;
        cfg.L = meta.uniform(0.01, 5.0);
        cfg.D_x = cfg.L + meta.uniform(1.0, 40.0);
        cfg.Q = 2 + static_cast<int>(meta.below(400));
        cfg.N = 1;
        const auto s = feasible_positions(cfg);
        const double step = (cfg.D_x - cfg.L) / (cfg.Q - 1);
        for (std::size_t q = 1; q < s.size(); ++q)
            REQUIRE_THAT(s[q] - s[q - 1], Catch::Matchers::WithinRel(step, 1e-12));
    }
}

TEST_CASE("sample_layout basic contracts") {
    SystemConfig cfg;

    SECTION("N = Q takes the whole grid") {
        cfg.Q = 12;
        cfg.N = 12;
        const auto layout = sample_layout(cfg, 7);
        REQUIRE(layout.size() == 12);
        for (int q = 0; q < 12; ++q)
            CHECK(layout.grid_indices[static_cast<std::size_t>(q)] == q + 1);
    }

    SECTION("N = 1 is repeatable for a fixed seed") {
        cfg.N = 1;
        const auto a = sample_layout(cfg, 123);
        const auto b = sample_layout(cfg, 123);
        REQUIRE(a.size() == 1);
        CHECK(a.pa_x == b.pa_x);
        CHECK(a.grid_indices == b.grid_indices);
    }

    SECTION("two seeds give different layouts") {
        cfg.N = 16;
        cfg.Q = 200;
        const auto a = sample_layout(cfg, 1);
        const auto b = sample_layout(cfg, 2);
        CHECK(a.grid_indices != b.grid_indices);
    }

    SECTION("N > Q is a configuration error") {
        cfg.Q = 4;
        cfg.N = 5;
        CHECK_THROWS_AS(sample_layout(cfg, 1), ConfigError);
    }
}

TEST_CASE("sample_layout is sorted, duplicate-free and on the grid for many seeds") {
    SystemConfig cfg;
    cfg.Q = 50;
    cfg.N = 20;
    const auto grid = feasible_positions(cfg);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto layout = sample_layout(cfg, seed);
        REQUIRE(layout.size() == 20);
        std::set<int> seen;
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const int q = layout.grid_indices[i];
            REQUIRE(q >= 1);
            REQUIRE(q <= cfg.Q);
            seen.insert(q);
            REQUIRE_THAT(layout.pa_x[i],
                         Catch::Matchers::WithinRel(grid[static_cast<std::size_t>(q - 1)], 1e-12));
            if (i > 0)
                REQUIRE(layout.pa_x[i] > layout.pa_x[i - 1]);
        }
        REQUIRE(seen.size() == 20);
    }
}

TEST_CASE("sample_ues support and moments") {
    SystemConfig cfg;
    cfg.K = 4;

    SECTION("z is zero and samples stay inside the rectangle") {
        for (std::uint64_t seed = 0; seed < 2500; ++seed) {
            for (const auto &ue : sample_ues(cfg, seed)) {
                REQUIRE(ue.z == 0.0);
                REQUIRE(ue.x >= 0.0);
                REQUIRE(ue.x <= cfg.D_x);
                REQUIRE(ue.y >= 0.0);
                REQUIRE(ue.y <= cfg.D_y);
            }
        }
    }

    SECTION("empirical mean approaches the rectangle center") {
        cfg.K = 1;
        double sx = 0.0, sy = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto ue = sample_ues(cfg, static_cast<std::uint64_t>(i)).front();
            sx += ue.x;
            sy += ue.y;
        }
        CHECK_THAT(sx / n, Catch::Matchers::WithinRel(cfg.D_x / 2.0, 0.01));
        CHECK_THAT(sy / n, Catch::Matchers::WithinRel(cfg.D_y / 2.0, 0.01));
    }

    SECTION("deterministic per seed") {
        const auto a = sample_ues(cfg, 99);
        const auto b = sample_ues(cfg, 99);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].x == b[i].x);
            CHECK(a[i].y == b[i].y);
        }
    }
}

TEST_CASE("system config file round trip and key validation") {
    SystemConfig cfg;
    cfg.N = 24;
    cfg.p_los = 0.5;
    cfg.coupling_mode = CouplingMode::unit;
    const std::string text = serialize_system_config(cfg);
    const SystemConfig back = parse_system_config(text);
    CHECK(back.N == 24);
    CHECK(back.p_los == 0.5);
    CHECK(back.coupling_mode == CouplingMode::unit);
    CHECK(serialize_system_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));

    SECTION("unknown keys are rejected by name") {
        try {
            parse_system_config(std::string("N = 4\nbogus_key = 1\n"));
            FAIL("expected ConfigError");
        } catch (const ConfigError &e) {
            CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
        }
    }

    SECTION("duplicate keys are rejected") {
        CHECK_THROWS_AS(parse_system_config(std::string("N = 4\nN = 5\n")), ConfigError);
    }

    SECTION("comments and partial files are accepted") {
        const SystemConfig c = parse_system_config(std::string("# comment\nN = 8 # trailing\n"));
        CHECK(c.N == 8);
        CHECK(c.Q == 200);
    }

    SECTION("invalid field values fail validation") {
        CHECK_THROWS_AS(parse_system_config(std::string("p_los = 1.5\n")), ConfigError);
        CHECK_THROWS_AS(parse_system_config(std::string("Q = 1\n")), ConfigError);
        CHECK_THROWS_AS(parse_system_config(std::string("N = notanumber\n")), ConfigError);
    }
}

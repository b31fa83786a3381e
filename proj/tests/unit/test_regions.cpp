// SPDX-License-Identifier: Apache-2.0
//
// ddchan - joint element/group sparse estimation of delay-Doppler channels
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

#include "ddchan/regions.hpp"

#include <doctest.h>

#include <cmath>

using namespace ddchan;

namespace
{
ScenarioParams desk_params()
{
    ScenarioParams p;
    p.geometry.propagation_speed = 8e5;
    p.geometry.section_length = 1000.0;
    p.counts = {5, 5, 100};
    return p;
}

DelayDopplerGrid desk_grid(const Scenario &s, const Geometry &g)
{
    DelayDopplerGrid grid{1e-4, 256, 128, 16, 0.0};
    grid.t0 = path_parameters(s, g).front().delay;
    return grid;
}

Scenario two_terminals(double sep, double v_tx, double v_rx, double y = -6.25)
{
    Scenario s;
    s.tx = {{-sep / 2, y}, v_tx};
    s.rx = {{sep / 2, y}, v_rx};
    s.scatterers.push_back({ScattererKind::Los, {}, 0.0, {}});
    return s;
}
} // namespace

TEST_CASE("region labels")
{
    const Regions r{0, 3, 7, 10, 4, 20};
    CHECK(classify(r, 0, 0) == RegionLabel::R1);
    CHECK(classify(r, -10, 2) == RegionLabel::R1);
    CHECK(classify(r, 11, 0) == RegionLabel::R3);
    CHECK(classify(r, 7, 3) == RegionLabel::R2);
    CHECK(classify(r, -10, 7) == RegionLabel::R2);
    CHECK(classify(r, 6, 5) == RegionLabel::R3);
    CHECK(classify(r, 0, 5) == RegionLabel::R3);
}

TEST_CASE("region validation")
{
    const DelayDopplerGrid g{1e-4, 64, 32, 8, 0.0};
    CHECK_NOTHROW((Regions{0, 3, 7, 10, 4, 20}.validate(g)));
    CHECK_NOTHROW((Regions{0, 8, 7, 10, 4, 20}.validate(g)));
    CHECK_THROWS_AS((Regions{0, 9, 7, 10, 4, 20}.validate(g)), std::invalid_argument);
    CHECK_THROWS_AS((Regions{0, 3, 8, 10, 4, 20}.validate(g)), std::invalid_argument);
    CHECK_THROWS_AS((Regions{0, 3, 7, 10, 11, 20}.validate(g)), std::invalid_argument);
    CHECK_THROWS_AS((Regions{0, 3, 7, 21, 4, 20}.validate(g)), std::invalid_argument);
    CHECK_THROWS_AS((Regions{0, 3, 7, 10, 4, 33}.validate(g)), std::invalid_argument);
}

TEST_CASE("partition counts match direct enumeration")
{
    const DelayDopplerGrid g{1e-4, 64, 32, 8, 0.0};
    const Regions r{0, 3, 7, 10, 4, 20};
    const auto p = build_partition(r, g);
    Index r1_rows = 0, r2_rows = 0, r3 = 0;
    for (Index k = -32; k <= 32; ++k)
    {
        bool has_r1 = false, has_r2 = false;
        for (Index m = 0; m < 8; ++m)
        {
            const auto label = classify(r, k, m);
            has_r1 |= label == RegionLabel::R1;
            has_r2 |= label == RegionLabel::R2;
            r3 += label == RegionLabel::R3;
        }
        r1_rows += has_r1;
        r2_rows += has_r2;
    }
    CHECK(p.n_r1 == r1_rows);
    CHECK(p.n_r2 == r2_rows);
    CHECK(p.n_r3 == r3);
    CHECK(p.count() == r1_rows + r2_rows + r3);
    CHECK(p.n_r1 == 21);
    CHECK(p.n_r2 == 8);
    CHECK(p.n_r3 == 520 - 21 * 3 - 8 * 5);
    CHECK_NOTHROW(p.validate());
    // every group shares one Doppler row and one region
    for (const auto &grp : p.groups)
        for (Index j : grp)
        {
            CHECK(g.doppler_of(j) == g.doppler_of(grp.front()));
            CHECK(classify(r, g.doppler_of(j), g.delay_of(j)) ==
                  classify(r, g.doppler_of(grp.front()), g.delay_of(grp.front())));
        }
}

TEST_CASE("partition limiting cases")
{
    const DelayDopplerGrid g{1e-4, 20, 10, 6, 0.0};
    SUBCASE("R1 over the whole lattice gives one group per Doppler row")
    {
        const auto p = build_partition(Regions{0, 6, 5, 10, 0, 10}, g);
        CHECK(p.count() == 21);
        for (const auto &grp : p.groups)
            CHECK(grp.size() == 6);
    }
    SUBCASE("no R1 and no R2 gives singletons")
    {
        const auto p = build_partition(Regions{0, 0, 5, 4, 0, 10}, g);
        CHECK(p.count() == g.size());
        CHECK(p.n_r3 == g.size());
    }
    SUBCASE("R2 strips never straddle zero Doppler")
    {
        const auto p = build_partition(Regions{1, 2, 5, 3, 3, 10}, g);
        CHECK(p.n_r2 == 6);
        for (const auto &grp : p.groups)
            if (grp.size() > 1)
                CHECK(g.doppler_of(grp.front()) == g.doppler_of(grp.back()));
    }
}

TEST_CASE("partition validation catches overlap and gaps")
{
    GroupPartition p = singleton_partition(5);
    CHECK_NOTHROW(p.validate());
    p.groups[1] = {0};
    CHECK_THROWS(p.validate());
    GroupPartition q = singleton_partition(5);
    q.groups.pop_back();
    q.n_r3 -= 1;
    CHECK_THROWS(q.validate());
}

TEST_CASE("geometric regions for stationary terminals collapse to zero Doppler")
{
    const auto p = desk_params();
    const auto s = two_terminals(150.0, 0.0, 0.0);
    const auto grid = desk_grid(s, p.geometry);
    const auto gr = geometric_regions(s, p.geometry, grid, 3e-4);
    CHECK(gr.lattice.k_s == 0);
    CHECK(gr.lattice.dk == 0);
    CHECK(gr.nu_s == 0.0);
}

TEST_CASE("minimum Doppler on the ellipse matches a brute-force sweep")
{
    Geometry g;
    const auto s = two_terminals(100.0, 30.0, 30.0);
    const DelayDopplerGrid grid{10e-9, 1024, 512, 256, 100.0 / speed_of_light};
    for (double dt : {0.2e-6, 0.35e-6, 0.6e-6, 1.0e-6})
    {
        const double d0 = 100.0;
        const double a = 0.5 * (d0 + speed_of_light * dt);
        const double b = std::sqrt(a * a - 0.25 * d0 * d0);
        double best = -1.0;
        for (int i = 0; i < 10000; ++i)
        {
            const double phi = 2.0 * pi * i / 10000.0;
            const double x = a * std::cos(phi);
            const double y = s.tx.position.y + b * std::sin(phi);
            const double ay = std::abs(y);
            if (ay < g.road_width / 2 || ay > g.road_width / 2 + g.strip_width || std::abs(x) > g.section_length / 2)
                continue;
            const double nu = std::abs(doppler(std::atan2(y - s.tx.position.y, x - s.tx.position.x),
                                               std::atan2(y - s.rx.position.y, x - s.rx.position.x), 30.0, 30.0,
                                               0.0, g.wavelength));
            if (best < 0 || nu < best)
                best = nu;
        }
        const double got = ellipse_min_doppler(s, g, dt);
        if (best < 0)
        {
            CHECK(std::isnan(got));
            continue;
        }
        CHECK(got <= best + 1e-9);
        CHECK(std::abs(got - best) <= grid.doppler_resolution());
    }
}

TEST_CASE("R2 width shrinks as the delay spread grows")
{
    const auto p = desk_params();
    const auto s = two_terminals(150.0, 30.0, 40.0);
    const auto grid = desk_grid(s, p.geometry);
    const double dt0 = confining_delay_spread(s, p.geometry);
    const auto tight = geometric_regions(s, p.geometry, grid, dt0);
    CHECK(tight.lattice.dk == tight.lattice.k_s);
    CHECK(tight.delta_nu == doctest::Approx(tight.nu_s).epsilon(0.02));
    Index prev = tight.lattice.dk;
    for (double f : {2.0, 4.0, 8.0})
    {
        const auto wide = geometric_regions(s, p.geometry, grid, f * dt0);
        CHECK(wide.lattice.dk <= prev);
        prev = wide.lattice.dk;
    }
    CHECK(prev < tight.lattice.dk);
}

TEST_CASE("diffuse paths fall in R1 or R2")
{
    const auto p = desk_params();
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        const auto s = sample_scenario(p, seed);
        const auto grid = desk_grid(s, p.geometry);
        for (double dt : {confining_delay_spread(s, p.geometry), compact_delay_spread(s, p.geometry, grid)})
        {
            const auto gr = geometric_regions(s, p.geometry, grid, dt);
            for (const auto &path : path_parameters(s, p.geometry))
            {
                if (path.kind != ScattererKind::Diffuse)
                    continue;
                CHECK(gr.in_r1_or_r2(path.delay, path.doppler));
                CHECK(classify(gr.lattice, grid.doppler_bin(path.doppler), grid.delay_bin(path.delay)) !=
                      RegionLabel::R3);
            }
        }
    }
}

TEST_CASE("compact delay spread does not enlarge the regions")
{
    const auto p = desk_params();
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
    {
        const auto s = sample_scenario(p, seed);
        const auto grid = desk_grid(s, p.geometry);
        const double base = confining_delay_spread(s, p.geometry);
        const double compact = compact_delay_spread(s, p.geometry, grid);
        CHECK(compact >= base);
        CHECK(region_area(geometric_regions(s, p.geometry, grid, compact).lattice) <=
              region_area(geometric_regions(s, p.geometry, grid, base).lattice));
    }
}

TEST_CASE("data-driven regions: delay knee")
{
    const DelayDopplerGrid g{1e-4, 33, 16, 16, 0.0};
    SpreadingFunction h(g);
    // strong first tap, weaker taps 2..5, nothing beyond
    for (Index k = -16; k <= 16; ++k)
    {
        h(k, 0) = std::sqrt(1.0 / 33.0);
        for (Index m = 1; m < 5; ++m)
            h(k, m) = std::sqrt(0.3 / 33.0);
    }
    const auto est = estimate_regions_from_data(h, 0.4, 0.6);
    CHECK(est.lattice.dm >= 5);
    CHECK(est.lattice.dm <= 6);
    CHECK(est.delay_profile.front() == doctest::Approx(1.0));
    CHECK(est.delay_profile[5] == doctest::Approx(2.2 / 6.0));
}

TEST_CASE("data-driven regions: flat input has no knee")
{
    const DelayDopplerGrid g{1e-4, 33, 16, 10, 0.0};
    SpreadingFunction h(g);
    h.x.setConstant(cplx{0.5, 0.5});
    const auto est = estimate_regions_from_data(h, 0.4, 0.6);
    CHECK(est.lattice.dm == 10);
    CHECK_FALSE(est.warnings.empty());
}

TEST_CASE("data-driven regions: Doppler band edges")
{
    const DelayDopplerGrid g{1e-4, 129, 64, 16, 0.0};
    SpreadingFunction h(g);
    h(0, 0) = 10.0;
    for (Index m = 2; m < 16; ++m)
        for (Index k = 40; k <= 50; ++k)
        {
            h(k, m) = std::sqrt(0.1);
            h(-k, m) = std::sqrt(0.1);
        }
    const auto est = estimate_regions_from_data(h, 0.4, 0.6);
    CHECK(est.lattice.dm == 3);
    CHECK(std::abs(est.lattice.k_s - 50) <= 1);
    CHECK(std::abs(est.lattice.dk - 10) <= 2);
    CHECK(est.k_peak == 40);
}

TEST_CASE("data-driven regions: zero Doppler row is not double counted")
{
    const DelayDopplerGrid g{1e-4, 33, 16, 4, 0.0};
    SpreadingFunction h(g);
    h(0, 0) = 10.0;
    h(0, 3) = 1.0;
    h(2, 3) = 1.0;
    const auto est = estimate_regions_from_data(h, 0.4, 0.6);
    CHECK(est.doppler_profile[0] == doctest::Approx(1.0));
    CHECK(est.doppler_profile[2] == doctest::Approx(1.0));
    CHECK(est.k_peak == 0); // tie resolved toward the smaller bin
}

TEST_CASE("data-driven regions reject bad thresholds")
{
    const DelayDopplerGrid g{1e-4, 33, 16, 4, 0.0};
    const SpreadingFunction h(g);
    CHECK_THROWS_AS(estimate_regions_from_data(h, 0.0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(estimate_regions_from_data(h, 0.4, 1.0), std::invalid_argument);
}

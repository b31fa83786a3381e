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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ddchan
{

void Regions::validate(const DelayDopplerGrid &grid) const
{
    const Index M = grid.delay_taps;
    const Index K = grid.doppler_half;
    const bool delays_ok = m0 >= 0 && dm >= 0 && m0 + dm <= M && m_max <= M - 1 && m_max >= m0 + dm - 1;
    const bool dopplers_ok = dk >= 0 && k_s - dk >= 0 && k_s <= k_max && k_max <= K;
    if (!delays_ok || !dopplers_ok)
        throw std::invalid_argument("Regions: bounds inconsistent with each other or with the lattice");
}

RegionLabel classify(const Regions &r, Index k, Index m)
{
    const Index ak = k < 0 ? -k : k;
    if (ak <= r.k_s && m >= r.m0 && m < r.m0 + r.dm)
        return RegionLabel::R1;
    if (ak <= r.k_s && ak > r.k_s - r.dk && m >= r.m0 + r.dm && m <= r.m_max)
        return RegionLabel::R2;
    return RegionLabel::R3;
}

namespace
{
constexpr double rel_tol = 1e-9;

double static_doppler(const Scenario &sc, const Geometry &g, double x, double y)
{
    const double ang_t = std::atan2(y - sc.tx.position.y, x - sc.tx.position.x);
    const double ang_r = std::atan2(y - sc.rx.position.y, x - sc.rx.position.x);
    return doppler(ang_t, ang_r, sc.tx.speed, sc.rx.speed, 0.0, g.wavelength);
}

double path_length(const Scenario &sc, double x, double y)
{
    return std::hypot(x - sc.tx.position.x, y - sc.tx.position.y) + std::hypot(x - sc.rx.position.x, y - sc.rx.position.y);
}

double los_length(const Scenario &sc)
{
    return std::hypot(sc.rx.position.x - sc.tx.position.x, sc.rx.position.y - sc.tx.position.y);
}

bool in_strip(const Geometry &g, double x, double y)
{
    const double ay = std::abs(y);
    return ay >= 0.5 * g.road_width && ay <= 0.5 * g.road_width + g.strip_width &&
           std::abs(x) <= 0.5 * g.section_length;
}
} // namespace

bool GeometricRegions::in_r1(double tau, double nu) const
{
    const double tol = rel_tol * std::max(1.0, nu_s);
    return tau >= tau0 * (1.0 - rel_tol) && tau <= tau0 + delta_tau && std::abs(nu) <= nu_s + tol;
}

bool GeometricRegions::in_r2(double tau, double nu) const
{
    const double tol = rel_tol * std::max(1.0, nu_s);
    const double a = std::abs(nu);
    return tau > tau0 + delta_tau && tau <= tau_max && a <= nu_s + tol && a >= nu_s - delta_nu - tol;
}

double ellipse_min_doppler(const Scenario &sc, const Geometry &g, double delta_tau, int samples)
{
    if (!(delta_tau > 0.0))
        throw std::invalid_argument("ellipse_min_doppler: delta_tau must be positive");
    const double d0 = los_length(sc);
    const double a = 0.5 * (d0 + g.propagation_speed * delta_tau);
    const double c = 0.5 * d0;
    const double b = std::sqrt(std::max(0.0, a * a - c * c));
    const double cx = 0.5 * (sc.tx.position.x + sc.rx.position.x);
    const double cy = 0.5 * (sc.tx.position.y + sc.rx.position.y);
    double ux = 1.0, uy = 0.0;
    if (d0 > 0.0)
    {
        ux = (sc.rx.position.x - sc.tx.position.x) / d0;
        uy = (sc.rx.position.y - sc.tx.position.y) / d0;
    }
    auto point = [&](double phi, double &x, double &y) {
        x = cx + a * std::cos(phi) * ux - b * std::sin(phi) * uy;
        y = cy + a * std::cos(phi) * uy + b * std::sin(phi) * ux;
    };

    double best = std::numeric_limits<double>::quiet_NaN();
    auto consider = [&](double x, double y) {
        const double v = std::abs(static_doppler(sc, g, x, y));
        if (std::isnan(best) || v < best)
            best = v;
    };
    double px = 0.0, py = 0.0;
    point(0.0, px, py);
    bool prev_in = in_strip(g, px, py);
    double prev_phi = 0.0;
    for (int i = 0; i <= samples; ++i)
    {
        const double phi = 2.0 * pi * static_cast<double>(i) / samples;
        double x = 0.0, y = 0.0;
        point(phi, x, y);
        const bool now_in = in_strip(g, x, y);
        if (now_in)
            consider(x, y);
        if (i > 0 && now_in != prev_in)
        {
            // Locate the feasibility boundary between the two samples.
            double lo = prev_phi, hi = phi;
            for (int it = 0; it < 60; ++it)
            {
                const double mid = 0.5 * (lo + hi);
                double mx = 0.0, my = 0.0;
                point(mid, mx, my);
                if (in_strip(g, mx, my) == prev_in)
                    lo = mid;
                else
                    hi = mid;
            }
            double bx = 0.0, by = 0.0;
            point(prev_in ? lo : hi, bx, by);
            consider(bx, by);
        }
        prev_in = now_in;
        prev_phi = phi;
    }
    return best;
}

double confining_delay_spread(const Scenario &sc, const Geometry &g, int samples)
{
    g.validate();
    if (sc.tx.speed == 0.0 && sc.rx.speed == 0.0)
        return 0.0;
    const double half = 0.5 * g.section_length;
    const double d0 = los_length(sc);
    double worst = 0.0;
    for (int side : {-1, 1})
        for (int i = 0; i <= samples; ++i)
        {
            const double y = side * (0.5 * g.road_width + g.strip_width * static_cast<double>(i) / samples);
            double lo = -half, hi = half;
            const double v_lo = static_doppler(sc, g, lo, y);
            const double v_hi = static_doppler(sc, g, hi, y);
            double xz = 0.0;
            if (v_lo > 0.0)
                xz = lo;
            else if (v_hi < 0.0)
                xz = hi;
            else
            {
                // Doppler increases with x along a line parallel to the road.
                for (int it = 0; it < 80; ++it)
                {
                    const double mid = 0.5 * (lo + hi);
                    if (static_doppler(sc, g, mid, y) < 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                xz = 0.5 * (lo + hi);
            }
            worst = std::max(worst, path_length(sc, xz, y) - d0);
        }
    // Small margin covers the curvature between sampled lines.
    return worst * (1.0 + 1e-3) / g.propagation_speed;
}

GeometricRegions geometric_regions(const Scenario &sc, const Geometry &g, const DelayDopplerGrid &grid,
                                   double delta_tau)
{
    g.validate();
    grid.validate();
    if (!(delta_tau > 0.0))
        throw std::invalid_argument("geometric_regions: delta_tau must be positive");
    GeometricRegions out;
    const double beta = grid.sample_period * static_cast<double>(grid.doppler_bins());
    const Index K = grid.doppler_half;
    const Index M = grid.delay_taps;

    out.tau0 = los_length(sc) / g.propagation_speed;
    out.delta_tau = delta_tau;
    out.nu_s = (sc.tx.speed + sc.rx.speed) / g.wavelength;
    out.nu_max = 4.0 * g.v_max / g.wavelength;

    Regions &r = out.lattice;
    r.m_max = M - 1;
    out.tau_max = grid.t0 + (static_cast<double>(r.m_max) + 0.5) * grid.sample_period;
    r.m0 = std::clamp<Index>(grid.delay_bin(out.tau0), 0, M - 1);
    const Index m_end = std::clamp<Index>(grid.delay_bin(out.tau0 + delta_tau), r.m0, M - 1);
    r.dm = m_end - r.m0 + 1;
    r.k_max = std::clamp<Index>(grid.doppler_bin(out.nu_max), 0, K);
    r.k_s = std::clamp<Index>(grid.doppler_bin(out.nu_s), 0, K);
    r.k_max = std::max(r.k_max, r.k_s);

    out.nu_prime = ellipse_min_doppler(sc, g, delta_tau);
    if (std::isnan(out.nu_prime))
    {
        out.warnings.emplace_back("constant-delay ellipse does not reach the diffuse strips; R2 is empty");
        out.nu_prime = out.nu_s;
        out.delta_nu = 0.0;
        r.dk = 0;
    }
    else
    {
        out.delta_nu = std::max(0.0, out.nu_s - out.nu_prime);
        const Index k_prime = static_cast<Index>(std::llround(out.nu_prime * beta));
        r.dk = std::clamp<Index>(r.k_s - k_prime + 1, 0, r.k_s);
    }
    r.validate(grid);
    return out;
}

Index region_area(const Regions &r)
{
    const Index r1 = (2 * r.k_s + 1) * r.dm;
    const Index r2_len = std::max<Index>(0, r.m_max - (r.m0 + r.dm) + 1);
    return r1 + 2 * r.dk * r2_len;
}

double compact_delay_spread(const Scenario &sc, const Geometry &g, const DelayDopplerGrid &grid)
{
    const double base = confining_delay_spread(sc, g);
    const double step = 0.25 * grid.sample_period;
    const double tau0 = los_length(sc) / g.propagation_speed;
    const double last = grid.t0 + static_cast<double>(grid.delay_taps - 1) * grid.sample_period - tau0;
    double best_tau = base > 0.0 ? base : step;
    Index best_area = -1;
    for (double dt = best_tau; dt <= std::max(last, best_tau); dt += step)
    {
        const Index area = region_area(geometric_regions(sc, g, grid, dt).lattice);
        if (best_area < 0 || area < best_area)
        {
            best_area = area;
            best_tau = dt;
        }
    }
    return best_tau;
}

DataRegions estimate_regions_from_data(const SpreadingFunction &h, double alpha_d, double alpha_nu)
{
    if (!(alpha_d > 0.0 && alpha_d < 1.0) || !(alpha_nu > 0.0 && alpha_nu < 1.0))
        throw std::invalid_argument("estimate_regions_from_data: thresholds must lie in (0, 1)");
    const auto &grid = h.grid;
    grid.validate();
    const Index M = grid.delay_taps;
    const Index K = grid.doppler_half;
    DataRegions out;

    std::vector<double> column(static_cast<std::size_t>(M), 0.0);
    for (Index m = 0; m < M; ++m)
        for (Index k = -K; k <= K; ++k)
            column[static_cast<std::size_t>(m)] += std::norm(h(k, m));

    out.delay_profile.resize(static_cast<std::size_t>(M));
    double running = 0.0;
    for (Index m = 1; m <= M; ++m)
    {
        running += column[static_cast<std::size_t>(m - 1)];
        out.delay_profile[static_cast<std::size_t>(m - 1)] = running / static_cast<double>(m);
    }
    const double t1 = alpha_d * out.delay_profile.front();
    Index dm = M;
    bool found = false;
    for (Index m = 1; m <= M; ++m)
        if (out.delay_profile[static_cast<std::size_t>(m - 1)] <= t1)
        {
            dm = m;
            found = true;
            break;
        }
    if (!found)
        out.warnings.emplace_back("delay profile never drops below threshold; delta m clamped to M");

    out.doppler_profile.assign(static_cast<std::size_t>(K + 1), 0.0);
    for (Index k = 0; k <= K; ++k)
    {
        double e = 0.0;
        for (Index m = dm; m < M; ++m)
            e += std::norm(h(k, m)) + std::norm(h(-k, m));
        out.doppler_profile[static_cast<std::size_t>(k)] = k == 0 ? 0.5 * e : e;
    }
    const auto &ev = out.doppler_profile;
    Index k0 = 0;
    for (Index k = 1; k <= K; ++k)
        if (ev[static_cast<std::size_t>(k)] > ev[static_cast<std::size_t>(k0)])
            k0 = k;
    out.k_peak = k0;
    const double t2 = alpha_nu * ev[static_cast<std::size_t>(k0)];

    Index lower = 0;
    found = false;
    for (Index k = k0 - 1; k >= 0; --k)
        if (ev[static_cast<std::size_t>(k)] < t2)
        {
            lower = k;
            found = true;
            break;
        }
    if (!found && k0 > 0)
        out.warnings.emplace_back("no Doppler crossing below the peak; inner band edge clamped to 0");
    Index k_s = K;
    found = false;
    for (Index k = k0 + 1; k <= K; ++k)
        if (ev[static_cast<std::size_t>(k)] < t2)
        {
            k_s = k;
            found = true;
            break;
        }
    if (!found)
        out.warnings.emplace_back("no Doppler crossing above the peak; k_s clamped to K");

    Regions &r = out.lattice;
    r.m0 = 0;
    r.dm = dm;
    r.m_max = M - 1;
    r.k_s = k_s;
    r.dk = k_s - lower;
    r.k_max = K;
    r.validate(grid);
    return out;
}

void GroupPartition::validate() const
{
    std::vector<char> seen(static_cast<std::size_t>(size), 0);
    Index covered = 0;
    for (const auto &g : groups)
    {
        if (g.empty())
            throw std::logic_error("GroupPartition: empty group");
        for (Index j : g)
        {
            if (j < 0 || j >= size)
                throw std::logic_error("GroupPartition: index out of range");
            if (seen[static_cast<std::size_t>(j)])
                throw std::logic_error("GroupPartition: groups overlap");
            seen[static_cast<std::size_t>(j)] = 1;
            ++covered;
        }
    }
    if (covered != size)
        throw std::logic_error("GroupPartition: groups do not cover every index");
    if (n_r1 + n_r2 + n_r3 != count())
        throw std::logic_error("GroupPartition: region group counts do not add up");
}

GroupPartition build_partition(const Regions &r, const DelayDopplerGrid &grid)
{
    grid.validate();
    r.validate(grid);
    GroupPartition p;
    p.size = grid.size();
    std::vector<char> used(static_cast<std::size_t>(p.size), 0);
    auto take = [&](std::vector<Index> g) {
        for (Index j : g)
            used[static_cast<std::size_t>(j)] = 1;
        p.groups.push_back(std::move(g));
    };

    if (r.dm > 0)
        for (Index k = -r.k_s; k <= r.k_s; ++k)
        {
            std::vector<Index> g;
            for (Index m = r.m0; m < r.m0 + r.dm; ++m)
                g.push_back(grid.index(k, m));
            take(std::move(g));
            ++p.n_r1;
        }
    const Index first = r.m0 + r.dm;
    if (first <= r.m_max)
        for (Index k = -r.k_s; k <= r.k_s; ++k)
        {
            const Index ak = k < 0 ? -k : k;
            if (ak <= r.k_s - r.dk)
                continue;
            std::vector<Index> g;
            for (Index m = first; m <= r.m_max; ++m)
                g.push_back(grid.index(k, m));
            take(std::move(g));
            ++p.n_r2;
        }
    for (Index j = 0; j < p.size; ++j)
        if (!used[static_cast<std::size_t>(j)])
        {
            p.groups.push_back({j});
            ++p.n_r3;
        }
    p.validate();
    return p;
}

GroupPartition singleton_partition(Index n)
{
    GroupPartition p;
    p.size = n;
    p.groups.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
        p.groups.push_back({j});
    p.n_r3 = n;
    return p;
}

} // namespace ddchan

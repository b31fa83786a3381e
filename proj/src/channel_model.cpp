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

#include "ddchan/channel_model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ddchan
{

void Geometry::validate() const
{
    if (!(road_width > 0.0) || !(strip_width > 0.0) || !(section_length > 0.0))
        throw std::invalid_argument("Geometry: road width, strip width and section length must be positive");
    if (!(wavelength > 0.0) || !(propagation_speed > 0.0) || !(v_max > 0.0))
        throw std::invalid_argument("Geometry: wavelength, propagation speed and v_max must be positive");
    if (lanes_per_direction < 1)
        throw std::invalid_argument("Geometry: need at least one lane per direction");
}

double Geometry::lane_center(int lane) const
{
    const int total = 2 * lanes_per_direction;
    if (lane < 0 || lane >= total)
        throw std::out_of_range("Geometry::lane_center: lane index out of range");
    const double lane_width = road_width / total;
    return -0.5 * road_width + (lane + 0.5) * lane_width;
}

std::string to_string(ScattererKind kind)
{
    switch (kind)
    {
    case ScattererKind::Los:
        return "LOS";
    case ScattererKind::Mobile:
        return "MD";
    case ScattererKind::StaticDiscrete:
        return "SD";
    case ScattererKind::Diffuse:
        return "DI";
    }
    return "?";
}

ScattererKind scatterer_kind_from_string(const std::string &s)
{
    if (s == "LOS")
        return ScattererKind::Los;
    if (s == "MD")
        return ScattererKind::Mobile;
    if (s == "SD")
        return ScattererKind::StaticDiscrete;
    if (s == "DI")
        return ScattererKind::Diffuse;
    throw std::invalid_argument("unknown scatterer kind '" + s + "'");
}

void Interval::validate(const char *what) const
{
    if (!(min <= max))
        throw std::invalid_argument(std::string(what) + ": interval minimum exceeds maximum");
}

ScattererCounts Scenario::counts() const
{
    ScattererCounts c{0, 0, 0};
    for (const auto &s : scatterers)
    {
        if (s.kind == ScattererKind::Mobile)
            ++c.mobile;
        else if (s.kind == ScattererKind::StaticDiscrete)
            ++c.static_discrete;
        else if (s.kind == ScattererKind::Diffuse)
            ++c.diffuse;
    }
    return c;
}

const Scatterer &Scenario::los() const
{
    if (scatterers.empty() || scatterers.front().kind != ScattererKind::Los)
        throw std::logic_error("Scenario: first scatterer must be the LOS entry");
    return scatterers.front();
}

Scenario sample_scenario(const ScenarioParams &params, std::uint64_t seed)
{
    const Geometry &g = params.geometry;
    g.validate();
    params.speed.validate("speed range");
    params.separation.validate("separation range");
    if (params.speed.min < 0.0 || params.speed.max > g.v_max)
        throw std::invalid_argument("speed range must lie within [0, v_max]");
    if (params.separation.min < 0.0 || params.separation.max > g.section_length)
        throw std::invalid_argument("separation range must lie within the road section");
    const auto &c = params.counts;
    if (c.mobile < 0 || c.static_discrete < 0 || c.diffuse < 0)
        throw std::invalid_argument("scatterer counts must be non-negative");
    if (!(params.sd_sigma >= 0.0))
        throw std::invalid_argument("static discrete sigma must be non-negative");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
    const int lanes = 2 * g.lanes_per_direction;
    std::uniform_int_distribution<int> same_side_lane(0, g.lanes_per_direction - 1);
    std::uniform_int_distribution<int> any_lane(0, lanes - 1);
    const double half = 0.5 * g.section_length;

    Scenario sc;
    const double sep = uniform(params.separation.min, params.separation.max);
    sc.tx.position = {-0.5 * sep, g.lane_center(same_side_lane(rng))};
    sc.rx.position = {0.5 * sep, g.lane_center(same_side_lane(rng))};
    sc.tx.speed = uniform(params.speed.min, params.speed.max);
    sc.rx.speed = uniform(params.speed.min, params.speed.max);

    sc.scatterers.reserve(static_cast<std::size_t>(1 + c.mobile + c.static_discrete + c.diffuse));
    sc.scatterers.push_back({ScattererKind::Los, {}, 0.0, {}});

    // Lanes with negative y carry traffic in +x, the others oncoming traffic.
    for (int i = 0; i < c.mobile; ++i)
    {
        const int lane = any_lane(rng);
        const double x = uniform(-half, half);
        const double v = uniform(params.speed.min, params.speed.max);
        const double y = g.lane_center(lane);
        sc.scatterers.push_back({ScattererKind::Mobile, {x, y}, y < 0.0 ? v : -v, {}});
    }

    const double near = std::isnan(params.sd_mean_near) ? -(0.5 * g.road_width + 10.0) : params.sd_mean_near;
    const double far = std::isnan(params.sd_mean_far) ? 0.5 * g.road_width + 10.0 : params.sd_mean_far;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < c.static_discrete; ++i)
    {
        const double x = uniform(-half, half);
        const double mean = unit(rng) < 0.5 ? near : far;
        const double y = mean + params.sd_sigma * gauss(rng);
        sc.scatterers.push_back({ScattererKind::StaticDiscrete, {x, y}, 0.0, {}});
    }

    for (int i = 0; i < c.diffuse; ++i)
    {
        const double x = uniform(-half, half);
        const double off = uniform(0.5 * g.road_width, 0.5 * g.road_width + g.strip_width);
        const double y = unit(rng) < 0.5 ? -off : off;
        sc.scatterers.push_back({ScattererKind::Diffuse, {x, y}, 0.0, {}});
    }
    return sc;
}

double doppler(double angle_tx, double angle_rx, double v_tx, double v_rx, double v_p, double wavelength)
{
    if (!(wavelength > 0.0))
        throw std::invalid_argument("doppler: wavelength must be positive");
    return ((v_tx - v_p) * std::cos(angle_tx) + (v_rx - v_p) * std::cos(angle_rx)) / wavelength;
}

double delay(double d1, double d2, double propagation_speed)
{
    if (d1 < 0.0 || d2 < 0.0)
        throw std::invalid_argument("delay: distances must be non-negative");
    return (d1 + d2) / propagation_speed;
}

std::vector<PathParams> path_parameters(const Scenario &scenario, const Geometry &geometry)
{
    const auto &tx = scenario.tx;
    const auto &rx = scenario.rx;
    std::vector<PathParams> out;
    out.reserve(scenario.scatterers.size());
    for (const auto &s : scenario.scatterers)
    {
        if (s.kind == ScattererKind::Los)
        {
            const double dx = rx.position.x - tx.position.x;
            const double dy = rx.position.y - tx.position.y;
            const double d0 = std::hypot(dx, dy);
            const double nu = d0 > 0.0 ? (tx.speed - rx.speed) * (dx / d0) / geometry.wavelength : 0.0;
            out.push_back({s.kind, d0 / geometry.propagation_speed, nu, s.gain});
            continue;
        }
        const double d1 = std::hypot(s.position.x - tx.position.x, s.position.y - tx.position.y);
        const double d2 = std::hypot(s.position.x - rx.position.x, s.position.y - rx.position.y);
        const double ang_t = std::atan2(s.position.y - tx.position.y, s.position.x - tx.position.x);
        const double ang_r = std::atan2(s.position.y - rx.position.y, s.position.x - rx.position.x);
        out.push_back({s.kind, delay(d1, d2, geometry.propagation_speed),
                       doppler(ang_t, ang_r, tx.speed, rx.speed, s.speed, geometry.wavelength), s.gain});
    }
    return out;
}

double path_variance(const PowerDelayProfile &pdp, ScattererKind kind, double excess_delay)
{
    double offset = 0.0;
    if (kind == ScattererKind::StaticDiscrete)
        offset = pdp.sd_offset_db;
    else if (kind == ScattererKind::Diffuse)
        offset = pdp.di_offset_db;
    return pdp.ref_power * std::pow(10.0, -offset / 10.0) * std::exp(-std::max(0.0, excess_delay) / pdp.decay_constant);
}

Scenario draw_gains(Scenario scenario, const Geometry &geometry, const PowerDelayProfile &pdp, std::uint64_t seed)
{
    if (!(pdp.decay_constant > 0.0))
        throw std::invalid_argument("draw_gains: decay constant must be positive");
    if (pdp.ref_power < 0.0)
        throw std::invalid_argument("draw_gains: reference power must be non-negative");
    const auto paths = path_parameters(scenario, geometry);
    const double tau0 = paths.front().delay;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < paths.size(); ++i)
    {
        const double var = path_variance(pdp, paths[i].kind, paths[i].delay - tau0);
        const double s = std::sqrt(0.5 * var);
        const double re = gauss(rng);
        const double im = gauss(rng);
        scenario.scatterers[i].gain = {s * re, s * im};
    }
    return scenario;
}

void DelayDopplerGrid::validate() const
{
    if (!(sample_period > 0.0))
        throw std::invalid_argument("DelayDopplerGrid: sample period must be positive");
    if (block_length < 1 || doppler_half < 0 || delay_taps < 1)
        throw std::invalid_argument("DelayDopplerGrid: need N_r >= 1, K >= 0, M >= 1");
    if (doppler_bins() < block_length)
        throw std::invalid_argument("DelayDopplerGrid: 2K + 1 must be at least N_r");
}

Index DelayDopplerGrid::delay_bin(double tau) const
{
    return static_cast<Index>(std::llround((tau - t0) / sample_period));
}

Index DelayDopplerGrid::doppler_bin(double nu) const
{
    return static_cast<Index>(std::llround(nu * sample_period * static_cast<double>(doppler_bins())));
}

SpreadingFunction::SpreadingFunction(const DelayDopplerGrid &g, CVector v) : grid(g), x(std::move(v))
{
    if (x.size() != grid.size())
        throw std::invalid_argument("SpreadingFunction: vector length must equal (2K + 1) M");
}

SpreadingFunction ground_truth_spreading(const Scenario &scenario, const Geometry &geometry,
                                         const DelayDopplerGrid &grid)
{
    grid.validate();
    SpreadingFunction h(grid);
    const auto paths = path_parameters(scenario, geometry);
    for (std::size_t i = 0; i < paths.size(); ++i)
    {
        const Index m = grid.delay_bin(paths[i].delay);
        const Index k = grid.doppler_bin(paths[i].doppler);
        if (m < 0 || m >= grid.delay_taps || k < -grid.doppler_half || k > grid.doppler_half)
        {
            std::ostringstream os;
            os << "ground_truth_spreading: path " << i << " (" << to_string(paths[i].kind) << ", delay "
               << paths[i].delay << " s, Doppler " << paths[i].doppler << " Hz) maps to (k=" << k << ", m=" << m
               << ") outside the lattice";
            throw std::out_of_range(os.str());
        }
        h(k, m) += paths[i].gain;
    }
    return h;
}

RVector diffuse_variance_map(const Scenario &scenario, const Geometry &geometry, const DelayDopplerGrid &grid,
                             const PowerDelayProfile &pdp)
{
    RVector var = RVector::Zero(grid.size());
    const auto paths = path_parameters(scenario, geometry);
    const double tau0 = paths.front().delay;
    for (const auto &p : paths)
    {
        if (p.kind != ScattererKind::Diffuse)
            continue;
        const Index m = grid.delay_bin(p.delay);
        const Index k = grid.doppler_bin(p.doppler);
        if (m < 0 || m >= grid.delay_taps || k < -grid.doppler_half || k > grid.doppler_half)
            continue;
        var[grid.index(k, m)] += path_variance(pdp, p.kind, p.delay - tau0);
    }
    return var;
}

} // namespace ddchan

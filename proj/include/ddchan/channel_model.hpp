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

#ifndef DDCHAN_CHANNEL_MODEL_HPP
#define DDCHAN_CHANNEL_MODEL_HPP

#include "ddchan/types.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ddchan
{

inline constexpr double speed_of_light = 299792458.0;

// Straight road along x, centered on y = 0, with diffuse strips on both sides.
struct Geometry
{
    double road_width = 50.0;                          // D [m]
    double strip_width = 25.0;                         // d [m]
    double section_length = 1000.0;                    // road length simulated [m]
    double wavelength = speed_of_light / 5.8e9;        // [m]
    double propagation_speed = speed_of_light;         // [m/s]
    double v_max = 160.0 / 3.6;                        // [m/s]
    int lanes_per_direction = 2;

    void validate() const;
    double lane_center(int lane) const; // lanes 0..2L-1, negative y first
};

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

enum class ScattererKind
{
    Los,
    Mobile,
    StaticDiscrete,
    Diffuse
};

std::string to_string(ScattererKind kind);
ScattererKind scatterer_kind_from_string(const std::string &s);

struct Scatterer
{
    ScattererKind kind = ScattererKind::Diffuse;
    Point position;
    double speed = 0.0; // along x [m/s]
    cplx gain{0.0, 0.0};
};

struct Terminal
{
    Point position;
    double speed = 0.0; // along x [m/s]
};

struct ScattererCounts
{
    int mobile = 10;
    int static_discrete = 10;
    int diffuse = 400;
};

struct Interval
{
    double min = 0.0;
    double max = 0.0;
    void validate(const char *what) const;
};

struct ScenarioParams
{
    Geometry geometry;
    ScattererCounts counts;
    Interval speed{60.0 / 3.6, 160.0 / 3.6};     // TX, RX and mobile scatterers [m/s]
    Interval separation{100.0, 200.0};            // TX-RX distance [m]
    // Static discrete y coordinates: equal-weight mixture of two Gaussians.
    // NaN means the default of +-(D/2 + 10 m).
    double sd_mean_near = std::numeric_limits<double>::quiet_NaN();
    double sd_mean_far = std::numeric_limits<double>::quiet_NaN();
    double sd_sigma = 5.0;
};

// One entry per multipath component; the first scatterer is always the LOS.
struct Scenario
{
    Terminal tx;
    Terminal rx;
    std::vector<Scatterer> scatterers;

    ScattererCounts counts() const;
    const Scatterer &los() const;
};

Scenario sample_scenario(const ScenarioParams &params, std::uint64_t seed);

// Doppler of one bounce: angles are those of TX->P and RX->P against +x.
double doppler(double angle_tx, double angle_rx, double v_tx, double v_rx, double v_p, double wavelength);
double delay(double d1, double d2, double propagation_speed);

struct PathParams
{
    ScattererKind kind;
    double delay;   // [s]
    double doppler; // [Hz]
    cplx gain;
};

std::vector<PathParams> path_parameters(const Scenario &scenario, const Geometry &geometry);

struct PowerDelayProfile
{
    double ref_power = 1.0;
    double sd_offset_db = 10.0;
    double di_offset_db = 20.0;
    double decay_constant = 0.2e-6; // [s]
};

// Variance of one path gain given its kind and excess delay tau - tau_0.
double path_variance(const PowerDelayProfile &pdp, ScattererKind kind, double excess_delay);

Scenario draw_gains(Scenario scenario, const Geometry &geometry, const PowerDelayProfile &pdp, std::uint64_t seed);

// Sampling lattice. Delay tap m covers t0 + m T_s, Doppler bin k covers k / (T_s (2K + 1)).
struct DelayDopplerGrid
{
    double sample_period = 10e-9; // T_s
    Index block_length = 1024;    // N_r
    Index doppler_half = 512;     // K
    Index delay_taps = 256;       // M
    double t0 = 0.0;

    void validate() const;
    Index doppler_bins() const { return 2 * doppler_half + 1; }
    Index size() const { return doppler_bins() * delay_taps; }
    Index index(Index k, Index m) const { return m * doppler_bins() + k + doppler_half; }
    Index doppler_of(Index j) const { return j % doppler_bins() - doppler_half; }
    Index delay_of(Index j) const { return j / doppler_bins(); }
    double doppler_resolution() const { return 1.0 / (sample_period * static_cast<double>(doppler_bins())); }
    // Nearest lattice coordinates; no range check.
    Index delay_bin(double tau) const;
    Index doppler_bin(double nu) const;
};

// Column-stacked H[k, m].
struct SpreadingFunction
{
    DelayDopplerGrid grid;
    CVector x;

    SpreadingFunction() = default;
    explicit SpreadingFunction(const DelayDopplerGrid &g) : grid(g), x(CVector::Zero(g.size())) {}
    SpreadingFunction(const DelayDopplerGrid &g, CVector v);

    cplx &operator()(Index k, Index m) { return x[grid.index(k, m)]; }
    cplx operator()(Index k, Index m) const { return x[grid.index(k, m)]; }
};

SpreadingFunction ground_truth_spreading(const Scenario &scenario, const Geometry &geometry,
                                         const DelayDopplerGrid &grid);

// Indices of the lattice cells hit by diffuse paths, and per-cell diffuse variance.
RVector diffuse_variance_map(const Scenario &scenario, const Geometry &geometry, const DelayDopplerGrid &grid,
                             const PowerDelayProfile &pdp);

} // namespace ddchan

#endif

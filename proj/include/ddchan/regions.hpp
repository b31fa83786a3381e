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

#ifndef DDCHAN_REGIONS_HPP
#define DDCHAN_REGIONS_HPP

#include "ddchan/channel_model.hpp"
#include "ddchan/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace ddchan
{

// Lattice description of the three delay-Doppler regions.
//   R1: |k| <= k_s,                  m in [m0, m0 + dm)
//   R2: k_s - dk < |k| <= k_s,       m in [m0 + dm, m_max]
//   R3: everything else
struct Regions
{
    Index m0 = 0;
    Index dm = 0;
    Index m_max = 0;
    Index k_s = 0;
    Index dk = 0;
    Index k_max = 0;

    void validate(const DelayDopplerGrid &grid) const;
    std::array<Index, 6> to_record() const { return {m0, dm, m_max, k_s, dk, k_max}; }
    static Regions from_record(const std::array<Index, 6> &r) { return {r[0], r[1], r[2], r[3], r[4], r[5]}; }
    bool operator==(const Regions &) const = default;
};

enum class RegionLabel
{
    R1,
    R2,
    R3
};

RegionLabel classify(const Regions &regions, Index k, Index m);

// Continuous region bounds derived from the road geometry.
struct GeometricRegions
{
    Regions lattice;
    double tau0 = 0.0;
    double delta_tau = 0.0;
    double tau_max = 0.0;
    double nu_s = 0.0;
    double nu_max = 0.0;
    double nu_prime = 0.0;
    double delta_nu = 0.0;
    std::vector<std::string> warnings;

    // Membership of a continuous (delay, Doppler) pair in R1 or R2.
    bool in_r1(double tau, double nu) const;
    bool in_r2(double tau, double nu) const;
    bool in_r1_or_r2(double tau, double nu) const { return in_r1(tau, nu) || in_r2(tau, nu); }
};

// Smallest |nu| over points of the constant-delay ellipse (foci at TX and RX,
// total delay tau0 + delta_tau) that lie in the diffuse strips within the road
// section. Returns NaN when the ellipse misses the strips.
double ellipse_min_doppler(const Scenario &scenario, const Geometry &geometry, double delta_tau,
                           int samples = 65536);

// Excess delay below which every diffuse scatterer line crosses zero Doppler.
// With this delta_tau every diffuse path falls in R1 or R2.
double confining_delay_spread(const Scenario &scenario, const Geometry &geometry, int samples = 512);

// Smallest R1 + R2 lattice area over delay spreads at or above the confining
// one, scanned in quarter-tap steps.
double compact_delay_spread(const Scenario &scenario, const Geometry &geometry, const DelayDopplerGrid &grid);

Index region_area(const Regions &regions);

GeometricRegions geometric_regions(const Scenario &scenario, const Geometry &geometry, const DelayDopplerGrid &grid,
                                   double delta_tau);

struct DataRegions
{
    Regions lattice;
    std::vector<double> delay_profile;   // E_d(m), m = 1..M
    std::vector<double> doppler_profile; // E_nu(k), k = 0..K
    Index k_peak = 0;
    std::vector<std::string> warnings;
};

// Energy-knee heuristic on a coarse estimate of H[k, m]; delays are counted from tap 0.
DataRegions estimate_regions_from_data(const SpreadingFunction &h_ls, double alpha_d, double alpha_nu);

struct GroupPartition
{
    std::vector<std::vector<Index>> groups;
    Index n_r1 = 0;
    Index n_r2 = 0;
    Index n_r3 = 0;
    Index size = 0; // length of the partitioned vector

    Index count() const { return static_cast<Index>(groups.size()); }
    // Throws if the groups are not disjoint or do not cover 0..size-1.
    void validate() const;
};

GroupPartition build_partition(const Regions &regions, const DelayDopplerGrid &grid);
GroupPartition singleton_partition(Index n);

} // namespace ddchan

#endif

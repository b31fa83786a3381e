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

#ifndef DDCHAN_IO_HPP
#define DDCHAN_IO_HPP

// Plain-text exchange formats. Every reader rejects malformed input with
// std::invalid_argument naming the offending line.

#include "ddchan/channel_model.hpp"
#include "ddchan/regions.hpp"

#include <array>
#include <filesystem>
#include <string>

namespace ddchan
{

// Header comment with the terminal states, then one row per scatterer:
// kind,x,y,speed,gain_re,gain_im
std::string scenario_to_csv(const Scenario &scenario);
Scenario scenario_from_csv(const std::string &text);

// "# K=..,M=.." header (optionally T_s, N_r, t0), then k,m,re,im rows for the
// nonzero bins. Missing bins read back as zero; a repeated bin is an error.
std::string spreading_to_csv(const SpreadingFunction &h);
SpreadingFunction spreading_from_csv(const std::string &text);
SpreadingFunction import_spreading_csv(const std::filesystem::path &path);
void export_spreading_csv(const SpreadingFunction &h, const std::filesystem::path &path);

// One line per row, real and imaginary parts interleaved.
std::string matrix_to_csv(const CMatrix &m);
CMatrix matrix_from_csv(const std::string &text);

std::string partition_to_csv(const GroupPartition &p);

std::string regions_to_csv(const Regions &r);
Regions regions_from_csv(const std::string &text);

std::string read_text(const std::filesystem::path &path);

} // namespace ddchan

#endif

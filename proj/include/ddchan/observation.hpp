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

#ifndef DDCHAN_OBSERVATION_HPP
#define DDCHAN_OBSERVATION_HPP

#include "ddchan/channel_model.hpp"
#include "ddchan/types.hpp"

#include <Eigen/Sparse>
#include <cstdint>
#include <span>
#include <vector>

namespace ddchan
{

using SparseCMatrix = Eigen::SparseMatrix<cplx>;

// Transmit and receive filters are identical root-raised-cosine pulses, so the
// combined response is a raised cosine. Lags are measured from the peak of the
// combined response, which is nonzero only for |lag| < support.
struct PulseShape
{
    double rolloff = 0.25;
    double support = 1e-6;       // T_supp [s]
    double sample_period = 10e-9; // T_s [s]

    void validate() const;
};

double raised_cosine(double rolloff, double period, double t);
double root_raised_cosine(double rolloff, double period, double t);
// Combined pulse p = p_t * p_r at the given lag, with p(0) = 1.
double combined_pulse(const PulseShape &pulse, double lag);

// (2K + 1)-point DFT of exp(j 2 pi x n), n = 0 .. N_r - 1, scaled by 1 / (2K + 1), at bin k.
cplx dirichlet_w(Index k, double x, Index block_length, Index doppler_half);

// g[k, m, k', m'].
cplx leakage_coefficient(const DelayDopplerGrid &grid, const PulseShape &pulse, Index k, Index m, Index kp, Index mp);

CMatrix build_leakage_matrix(const DelayDopplerGrid &grid, const PulseShape &pulse);
// Entries below drop_tolerance * max |g| are omitted.
SparseCMatrix build_leakage_matrix_sparse(const DelayDopplerGrid &grid, const PulseShape &pulse,
                                          double drop_tolerance = 1e-6);

enum class PilotKind
{
    Gaussian,
    Constant,
    PseudoNoise
};

// Pilot samples s[-(M-1)] .. s[N_r - 1], stored with offset M - 1.
struct PilotSequence
{
    CVector samples;
    Index delay_taps = 1;

    cplx at(Index n) const { return samples[n + delay_taps - 1]; }
};

PilotSequence generate_pilot(PilotKind kind, const DelayDopplerGrid &grid, std::uint64_t seed);

// S = [S_0 ... S_{M-1}], S_m = diag(s[-m], ..., s[N_r - m - 1]) Omega.
CMatrix build_pilot_matrix(const PilotSequence &pilot, const DelayDopplerGrid &grid);
CMatrix dft_basis(const DelayDopplerGrid &grid); // Omega, N_r x (2K + 1)

// A = S G assembled directly. The Doppler sum collapses because
// sum_k omega^(n k) w(k - k', 0) = omega^(n k') for 0 <= n < N_r.
CMatrix build_sensing_matrix(const PilotSequence &pilot, const DelayDopplerGrid &grid, const PulseShape &pulse);

struct Measurement
{
    CVector y;
    double noise_variance = 0.0;
};

// Noise variance giving the requested SNR for the noiseless observation.
double noise_variance_for_snr(const CVector &clean, double snr_db);

CVector complex_gaussian(Index n, double variance, std::uint64_t seed);

Measurement synthesize_measurement(const CVector &x, const CMatrix &A, double noise_variance, std::uint64_t seed);
Measurement synthesize_measurement(const CVector &x, const CMatrix &S, const CMatrix &G, double noise_variance,
                                   std::uint64_t seed);

// Spreading function with leakage for the exact (fractional) path delays and Dopplers.
SpreadingFunction physical_leaky_spreading(const std::vector<PathParams> &paths, const DelayDopplerGrid &grid,
                                           const PulseShape &pulse);

// Received samples computed directly in time: y[n] = sum_m h[n, m] s[n - m].
CVector time_domain_response(const std::vector<PathParams> &paths, const PilotSequence &pilot,
                             const DelayDopplerGrid &grid, const PulseShape &pulse);

// Forward and inverse maps between h[n, m] (N_r x M) and H[k, m].
CMatrix time_to_delay_doppler(const CMatrix &h, const DelayDopplerGrid &grid);
CMatrix delay_doppler_to_time(const SpreadingFunction &H);

} // namespace ddchan

#endif

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

#include "ddchan/observation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace ddchan
{

namespace
{
double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x); }

cplx omega_pow(Index e, Index n)
{
    // exp(j 2 pi e / n), with e reduced mod n to keep the argument small
    Index r = e % n;
    if (r < 0)
        r += n;
    const double ang = 2.0 * pi * static_cast<double>(r) / static_cast<double>(n);
    return {std::cos(ang), std::sin(ang)};
}

void check_pilot(const PilotSequence &pilot, const DelayDopplerGrid &grid)
{
    if (pilot.delay_taps != grid.delay_taps || pilot.samples.size() != grid.block_length + grid.delay_taps - 1)
        throw std::invalid_argument("pilot length must equal N_r + M - 1");
}
} // namespace

void PulseShape::validate() const
{
    if (!(rolloff > 0.0 && rolloff <= 1.0))
        throw std::invalid_argument("PulseShape: roll-off must lie in (0, 1]");
    if (!(support > 0.0) || !(sample_period > 0.0))
        throw std::invalid_argument("PulseShape: support and sample period must be positive");
}

double raised_cosine(double beta, double period, double t)
{
    const double u = t / period;
    const double d = 2.0 * beta * u;
    if (std::abs(std::abs(d) - 1.0) < 1e-9)
        return 0.25 * pi * sinc(1.0 / (2.0 * beta));
    return sinc(u) * std::cos(pi * beta * u) / (1.0 - d * d);
}

double root_raised_cosine(double beta, double period, double t)
{
    const double scale = 1.0 / std::sqrt(period);
    const double u = t / period;
    if (std::abs(u) < 1e-12)
        return scale * (1.0 - beta + 4.0 * beta / pi);
    if (std::abs(std::abs(4.0 * beta * u) - 1.0) < 1e-9)
    {
        const double a = pi / (4.0 * beta);
        return scale * beta / std::sqrt(2.0) * ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
    }
    const double num = std::sin(pi * u * (1.0 - beta)) + 4.0 * beta * u * std::cos(pi * u * (1.0 + beta));
    const double den = pi * u * (1.0 - 16.0 * beta * beta * u * u);
    return scale * num / den;
}

double combined_pulse(const PulseShape &pulse, double lag)
{
    if (std::abs(lag) >= pulse.support)
        return 0.0;
    return raised_cosine(pulse.rolloff, pulse.sample_period, lag);
}

cplx dirichlet_w(Index k, double x, Index block_length, Index doppler_half)
{
    const double n_bins = static_cast<double>(2 * doppler_half + 1);
    const double nr = static_cast<double>(block_length);
    const double delta = static_cast<double>(k) / n_bins - x;
    if (std::abs(delta - std::round(delta)) < 1e-13)
        return {nr / n_bins, 0.0};
    const double ratio = std::sin(pi * delta * nr) / std::sin(pi * delta);
    return std::polar(ratio / n_bins, -pi * delta * (nr - 1.0));
}

cplx leakage_coefficient(const DelayDopplerGrid &grid, const PulseShape &pulse, Index k, Index m, Index kp, Index mp)
{
    const double p = combined_pulse(pulse, static_cast<double>(m - mp) * grid.sample_period);
    if (p == 0.0)
        return {0.0, 0.0};
    return omega_pow(-kp * (m - mp), grid.doppler_bins()) *
           dirichlet_w(k - kp, 0.0, grid.block_length, grid.doppler_half) * p;
}

CMatrix build_leakage_matrix(const DelayDopplerGrid &grid, const PulseShape &pulse)
{
    grid.validate();
    pulse.validate();
    const Index n = grid.size();
    const Index kk = grid.doppler_half;
    CMatrix G = CMatrix::Zero(n, n);
    for (Index mp = 0; mp < grid.delay_taps; ++mp)
        for (Index kp = -kk; kp <= kk; ++kp)
        {
            const Index col = grid.index(kp, mp);
            for (Index m = 0; m < grid.delay_taps; ++m)
                for (Index k = -kk; k <= kk; ++k)
                    G(grid.index(k, m), col) = leakage_coefficient(grid, pulse, k, m, kp, mp);
        }
    return G;
}

SparseCMatrix build_leakage_matrix_sparse(const DelayDopplerGrid &grid, const PulseShape &pulse,
                                          double drop_tolerance)
{
    grid.validate();
    pulse.validate();
    const Index n = grid.size();
    const Index kk = grid.doppler_half;
    // The largest entry is the self-coupling w(0, 0) p(0).
    const double gmax = std::abs(dirichlet_w(0, 0.0, grid.block_length, kk)) * combined_pulse(pulse, 0.0);
    const double cut = drop_tolerance * gmax;
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Index mp = 0; mp < grid.delay_taps; ++mp)
        for (Index kp = -kk; kp <= kk; ++kp)
            for (Index m = 0; m < grid.delay_taps; ++m)
            {
                if (std::abs(combined_pulse(pulse, static_cast<double>(m - mp) * grid.sample_period)) < cut)
                    continue;
                for (Index k = -kk; k <= kk; ++k)
                {
                    const cplx g = leakage_coefficient(grid, pulse, k, m, kp, mp);
                    if (std::abs(g) >= cut)
                        trip.emplace_back(grid.index(k, m), grid.index(kp, mp), g);
                }
            }
    SparseCMatrix G(n, n);
    G.setFromTriplets(trip.begin(), trip.end());
    return G;
}

PilotSequence generate_pilot(PilotKind kind, const DelayDopplerGrid &grid, std::uint64_t seed)
{
    grid.validate();
    const Index len = grid.block_length + grid.delay_taps - 1;
    PilotSequence p;
    p.delay_taps = grid.delay_taps;
    switch (kind)
    {
    case PilotKind::Gaussian:
        p.samples = complex_gaussian(len, 1.0, seed);
        break;
    case PilotKind::Constant:
        p.samples = CVector::Ones(len);
        break;
    case PilotKind::PseudoNoise: {
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution coin(0.5);
        p.samples.resize(len);
        const double a = 1.0 / std::sqrt(2.0);
        for (Index i = 0; i < len; ++i)
            p.samples[i] = cplx{coin(rng) ? a : -a, coin(rng) ? a : -a};
        break;
    }
    }
    return p;
}

CMatrix dft_basis(const DelayDopplerGrid &grid)
{
    const Index nb = grid.doppler_bins();
    CMatrix omega(grid.block_length, nb);
    for (Index i = 0; i < grid.block_length; ++i)
        for (Index j = 0; j < nb; ++j)
            omega(i, j) = omega_pow(i * (j - grid.doppler_half), nb);
    return omega;
}

CMatrix build_pilot_matrix(const PilotSequence &pilot, const DelayDopplerGrid &grid)
{
    grid.validate();
    check_pilot(pilot, grid);
    const Index nb = grid.doppler_bins();
    const CMatrix omega = dft_basis(grid);
    CMatrix S(grid.block_length, grid.size());
    for (Index m = 0; m < grid.delay_taps; ++m)
        for (Index i = 0; i < grid.block_length; ++i)
            S.block(i, m * nb, 1, nb) = pilot.at(i - m) * omega.row(i);
    return S;
}

CMatrix build_sensing_matrix(const PilotSequence &pilot, const DelayDopplerGrid &grid, const PulseShape &pulse)
{
    grid.validate();
    pulse.validate();
    check_pilot(pilot, grid);
    const Index nb = grid.doppler_bins();
    const Index kk = grid.doppler_half;
    const Index M = grid.delay_taps;
    std::vector<double> pvals(static_cast<std::size_t>(2 * M - 1));
    for (Index d = -(M - 1); d <= M - 1; ++d)
        pvals[static_cast<std::size_t>(d + M - 1)] = combined_pulse(pulse, static_cast<double>(d) * grid.sample_period);

    CMatrix A = CMatrix::Zero(grid.block_length, grid.size());
    for (Index mp = 0; mp < M; ++mp)
        for (Index kp = -kk; kp <= kk; ++kp)
        {
            const Index col = grid.index(kp, mp);
            for (Index n = 0; n < grid.block_length; ++n)
            {
                cplx acc{0.0, 0.0};
                for (Index m = 0; m < M; ++m)
                {
                    const double p = pvals[static_cast<std::size_t>(m - mp + M - 1)];
                    if (p == 0.0)
                        continue;
                    acc += pilot.at(n - m) * omega_pow(-kp * (m - mp), nb) * p;
                }
                A(n, col) = omega_pow(n * kp, nb) * acc;
            }
        }
    return A;
}

double noise_variance_for_snr(const CVector &clean, double snr_db)
{
    if (clean.size() == 0)
        throw std::invalid_argument("noise_variance_for_snr: empty signal");
    return clean.squaredNorm() / (static_cast<double>(clean.size()) * db_to_linear(snr_db));
}

CVector complex_gaussian(Index n, double variance, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double s = std::sqrt(0.5 * variance);
    CVector z(n);
    for (Index i = 0; i < n; ++i)
    {
        const double re = gauss(rng);
        const double im = gauss(rng);
        z[i] = cplx{s * re, s * im};
    }
    return z;
}

Measurement synthesize_measurement(const CVector &x, const CMatrix &A, double noise_variance, std::uint64_t seed)
{
    if (A.cols() != x.size())
        throw std::invalid_argument("synthesize_measurement: dimension mismatch");
    if (noise_variance < 0.0)
        throw std::invalid_argument("synthesize_measurement: noise variance must be non-negative");
    Measurement meas;
    meas.noise_variance = noise_variance;
    meas.y = A * x;
    if (noise_variance > 0.0)
        meas.y += complex_gaussian(A.rows(), noise_variance, seed);
    return meas;
}

Measurement synthesize_measurement(const CVector &x, const CMatrix &S, const CMatrix &G, double noise_variance,
                                   std::uint64_t seed)
{
    if (G.cols() != x.size() || S.cols() != G.rows())
        throw std::invalid_argument("synthesize_measurement: dimension mismatch");
    const CVector xl = G * x;
    return synthesize_measurement(xl, S, noise_variance, seed);
}

SpreadingFunction physical_leaky_spreading(const std::vector<PathParams> &paths, const DelayDopplerGrid &grid,
                                           const PulseShape &pulse)
{
    grid.validate();
    SpreadingFunction H(grid);
    const double ts = grid.sample_period;
    for (const auto &p : paths)
    {
        const double tau = p.delay - grid.t0;
        for (Index m = 0; m < grid.delay_taps; ++m)
        {
            const double lag = static_cast<double>(m) * ts - tau;
            const double pv = combined_pulse(pulse, lag);
            if (pv == 0.0)
                continue;
            const cplx base = p.gain * std::polar(pv, -2.0 * pi * p.doppler * lag);
            for (Index k = -grid.doppler_half; k <= grid.doppler_half; ++k)
                H(k, m) += base * dirichlet_w(k, p.doppler * ts, grid.block_length, grid.doppler_half);
        }
    }
    return H;
}

CVector time_domain_response(const std::vector<PathParams> &paths, const PilotSequence &pilot,
                             const DelayDopplerGrid &grid, const PulseShape &pulse)
{
    grid.validate();
    check_pilot(pilot, grid);
    const double ts = grid.sample_period;
    CVector y = CVector::Zero(grid.block_length);
    for (const auto &p : paths)
    {
        const double tau = p.delay - grid.t0;
        for (Index m = 0; m < grid.delay_taps; ++m)
        {
            const double pv = combined_pulse(pulse, static_cast<double>(m) * ts - tau);
            if (pv == 0.0)
                continue;
            for (Index n = 0; n < grid.block_length; ++n)
            {
                const double t = static_cast<double>(n - m) * ts + tau;
                y[n] += pilot.at(n - m) * p.gain * std::polar(pv, 2.0 * pi * p.doppler * t);
            }
        }
    }
    return y;
}

CMatrix time_to_delay_doppler(const CMatrix &h, const DelayDopplerGrid &grid)
{
    if (h.rows() != grid.block_length || h.cols() != grid.delay_taps)
        throw std::invalid_argument("time_to_delay_doppler: expected an N_r x M matrix");
    const Index nb = grid.doppler_bins();
    CMatrix H = CMatrix::Zero(nb, grid.delay_taps);
    for (Index k = -grid.doppler_half; k <= grid.doppler_half; ++k)
        for (Index n = 0; n < grid.block_length; ++n)
            H.row(k + grid.doppler_half) += omega_pow(-n * k, nb) * h.row(n);
    return H / static_cast<double>(nb);
}

CMatrix delay_doppler_to_time(const SpreadingFunction &H)
{
    const auto &grid = H.grid;
    const Index nb = grid.doppler_bins();
    CMatrix h = CMatrix::Zero(grid.block_length, grid.delay_taps);
    for (Index n = 0; n < grid.block_length; ++n)
        for (Index m = 0; m < grid.delay_taps; ++m)
        {
            cplx acc{0.0, 0.0};
            for (Index k = -grid.doppler_half; k <= grid.doppler_half; ++k)
                acc += H(k, m) * omega_pow(n * k, nb);
            h(n, m) = acc;
        }
    return h;
}

} // namespace ddchan

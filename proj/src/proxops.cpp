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

#include "ddchan/proxops.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ddchan
{

namespace
{
double sgn(double x) { return (x > 0.0) - (x < 0.0); }

double parse_number(std::string_view text, std::string_view spec)
{
    double v = 0.0;
    const auto *first = text.data();
    const auto *last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw std::invalid_argument("Regularizer: cannot parse parameter in '" + std::string(spec) + "'");
    return v;
}

// Minimizes 1/2 (x - a)^2 + c f(a) over a >= 0 for a piecewise quadratic f.
// Each piece is [lo, hi] with f(a) = q2 a^2 + q1 a + q0 on it. Candidates are the
// piece endpoints and, where the piece objective is strictly convex, its clamped
// stationary point. Ties go to the smaller magnitude.
struct Piece
{
    double lo, hi, q2, q1;
};

template <std::size_t P, class F>
double piecewise_min(double x, double c, const std::array<Piece, P> &pieces, F &&penalty)
{
    double best_a = 0.0;
    double best_v = 0.5 * x * x;
    auto consider = [&](double a) {
        const double v = 0.5 * (x - a) * (x - a) + c * penalty(a);
        if (v < best_v || (v == best_v && a < best_a))
        {
            best_v = v;
            best_a = a;
        }
    };
    for (const auto &pc : pieces)
    {
        consider(pc.lo);
        if (std::isfinite(pc.hi))
            consider(pc.hi);
        const double curv = 1.0 + 2.0 * c * pc.q2;
        if (curv > 0.0)
        {
            double a = (x - c * pc.q1) / curv;
            a = std::clamp(a, pc.lo, pc.hi);
            consider(a);
        }
    }
    return best_a;
}

double lp_prox_magnitude(double x, double lambda, double p, double c)
{
    // Stationary points of 1/2 (x - a)^2 + c lambda^(2-p) a^p, written in u = a / lambda:
    //   c u^(p-1) + u / p = x / (lambda p)
    const double rhs = x / (lambda * p);
    auto h = [&](double u) { return c * std::pow(u, p - 1.0) + u / p; };
    auto objective = [&](double a) { return 0.5 * (x - a) * (x - a) + c * std::pow(lambda, 2.0 - p) * std::pow(a, p); };

    // h is convex on u > 0 with its minimum at u_star.
    const double u_star = std::pow(c * p * (1.0 - p), 1.0 / (2.0 - p));
    if (h(u_star) > rhs)
        return 0.0;

    auto bisect = [&](double lo, double hi, bool increasing) {
        for (int it = 0; it < 200 && hi - lo > 1e-10 * std::max(1.0, hi); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            const bool above = h(mid) > rhs;
            if (above == increasing)
                hi = mid;
            else
                lo = mid;
        }
        return 0.5 * (lo + hi);
    };

    // Upper root: h increasing on [u_star, x/lambda]; h(x/lambda) >= rhs always.
    const double u_hi = bisect(u_star, std::max(u_star, x / lambda), true);
    // Lower root: h decreasing on (0, u_star].
    const double u_lo = bisect(0.0, u_star, false);

    double best_a = 0.0;
    double best_v = objective(0.0);
    for (double u : {u_lo, u_hi})
    {
        const double a = u * lambda;
        const double v = objective(a);
        if (v < best_v)
        {
            best_v = v;
            best_a = a;
        }
    }
    return best_a;
}
} // namespace

double prox_soft(double x, double lambda) { return sgn(x) * std::max(0.0, std::abs(x) - lambda); }

double prox_scad(double x, double lambda, double mu)
{
    if (!(mu > 2.0))
        throw std::invalid_argument("prox_scad: mu must exceed 2");
    const double ax = std::abs(x);
    if (ax <= lambda)
        return 0.0;
    if (ax <= 2.0 * lambda)
        return x - sgn(x) * lambda;
    if (ax <= mu * lambda)
        return ((mu - 1.0) * x - sgn(x) * mu * lambda) / (mu - 2.0);
    return x;
}

double prox_mcp(double x, double lambda, double mu)
{
    if (!(mu >= 2.0))
        throw std::invalid_argument("prox_mcp: mu must be at least 2");
    const double ax = std::abs(x);
    if (ax <= lambda)
        return 0.0;
    if (ax <= mu * lambda)
        return (x - sgn(x) * lambda) / (1.0 - 1.0 / mu);
    return x;
}

Regularizer Regularizer::soft() { return {PenaltyKind::Soft, 0.0}; }

Regularizer Regularizer::scad(double mu)
{
    if (!(mu > 2.0) || !std::isfinite(mu))
        throw std::invalid_argument("Regularizer::scad: mu must be finite and exceed 2");
    return {PenaltyKind::Scad, mu};
}

Regularizer Regularizer::mcp(double mu)
{
    if (!(mu >= 2.0) || !std::isfinite(mu))
        throw std::invalid_argument("Regularizer::mcp: mu must be finite and at least 2");
    return {PenaltyKind::Mcp, mu};
}

Regularizer Regularizer::lp(double p)
{
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("Regularizer::lp: p must lie in (0, 1]");
    return {PenaltyKind::Lp, p};
}

Regularizer Regularizer::parse(std::string_view spec)
{
    const auto colon = spec.find(':');
    const auto head = spec.substr(0, colon);
    if (head == "soft")
    {
        if (colon != std::string_view::npos)
            throw std::invalid_argument("Regularizer: 'soft' takes no parameter");
        return soft();
    }
    if (colon == std::string_view::npos)
        throw std::invalid_argument("Regularizer: missing parameter in '" + std::string(spec) + "'");
    const double v = parse_number(spec.substr(colon + 1), spec);
    if (head == "scad")
        return scad(v);
    if (head == "mcp")
        return mcp(v);
    if (head == "lp")
        return lp(v);
    throw std::invalid_argument("Regularizer: unknown penalty '" + std::string(spec) + "'");
}

std::string Regularizer::name() const
{
    std::ostringstream os;
    switch (kind_)
    {
    case PenaltyKind::Soft:
        return "soft";
    case PenaltyKind::Scad:
        os << "scad:" << param_;
        break;
    case PenaltyKind::Mcp:
        os << "mcp:" << param_;
        break;
    case PenaltyKind::Lp:
        os << "lp:" << param_;
        break;
    }
    return os.str();
}

bool Regularizer::scale_invariant() const
{
    return kind_ == PenaltyKind::Soft || (kind_ == PenaltyKind::Lp && param_ == 1.0);
}

double Regularizer::value(double x, double lambda) const
{
    const double a = std::abs(x);
    switch (kind_)
    {
    case PenaltyKind::Soft:
        return lambda * a;
    case PenaltyKind::Scad: {
        const double mu = param_;
        if (a <= lambda)
            return lambda * a;
        if (a <= mu * lambda)
            return (2.0 * mu * lambda * a - a * a - lambda * lambda) / (2.0 * (mu - 1.0));
        return 0.5 * lambda * lambda * (mu + 1.0);
    }
    case PenaltyKind::Mcp: {
        const double mu = param_;
        if (a <= mu * lambda)
            return lambda * a - a * a / (2.0 * mu);
        return 0.5 * mu * lambda * lambda;
    }
    case PenaltyKind::Lp:
        if (lambda == 0.0)
            return 0.0;
        return std::pow(lambda, 2.0 - param_) * std::pow(a, param_);
    }
    return 0.0;
}

double Regularizer::prox(double x, double lambda, double weight) const
{
    if (lambda < 0.0)
        throw std::invalid_argument("Regularizer::prox: lambda must be non-negative");
    if (!(weight >= 0.0))
        throw std::invalid_argument("Regularizer::prox: weight must be non-negative");
    if (x == 0.0 || lambda == 0.0 || weight == 0.0)
        return x == 0.0 ? 0.0 : x;

    const double ax = std::abs(x);
    const double s = sgn(x);
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_)
    {
    case PenaltyKind::Soft:
        return prox_soft(x, weight * lambda);
    case PenaltyKind::Scad: {
        if (weight == 1.0)
            return prox_scad(x, lambda, param_);
        const double mu = param_;
        const double den = 2.0 * (mu - 1.0);
        const std::array<Piece, 3> pieces{{{0.0, lambda, 0.0, lambda},
                                           {lambda, mu * lambda, -1.0 / den, 2.0 * mu * lambda / den},
                                           {mu * lambda, inf, 0.0, 0.0}}};
        return s * piecewise_min(ax, weight, pieces, [&](double a) { return value(a, lambda); });
    }
    case PenaltyKind::Mcp: {
        if (weight == 1.0)
            return prox_mcp(x, lambda, param_);
        const double mu = param_;
        const std::array<Piece, 2> pieces{{{0.0, mu * lambda, -0.5 / mu, lambda}, {mu * lambda, inf, 0.0, 0.0}}};
        return s * piecewise_min(ax, weight, pieces, [&](double a) { return value(a, lambda); });
    }
    case PenaltyKind::Lp:
        if (param_ == 1.0)
            return prox_soft(x, weight * lambda);
        return s * lp_prox_magnitude(ax, lambda, param_, weight);
    }
    return 0.0;
}

GroupProxParams::GroupProxParams(double lambda_g, double lambda_e, double rho_)
    : lambda_group(lambda_g), lambda_elem(lambda_e), rho(rho_)
{
    if (lambda_g < 0.0 || lambda_e < 0.0)
        throw std::invalid_argument("GroupProxParams: lambdas must be non-negative");
    if (rho == 0.0 || !std::isfinite(rho))
        throw std::invalid_argument("GroupProxParams: rho must be finite and nonzero");
}

RVector prox_group(const RVector &b, double lambda, const Regularizer &f_g, double rho)
{
    if (rho == 0.0)
        throw std::invalid_argument("prox_group: rho must be nonzero");
    const double nb = b.norm();
    if (nb == 0.0)
        return RVector::Zero(b.size());
    const double t = f_g.prox(nb, rho * lambda, 1.0 / (rho * rho));
    return (t / nb) * b;
}

NestedProx::NestedProx(const Regularizer &f_e, const Regularizer &f_g, const GroupProxParams &params)
    : f_e_(f_e), f_g_(f_g), params_(params), weight_(1.0 / (params.rho * params.rho))
{
    if (!f_e.scale_invariant())
        throw std::invalid_argument("NestedProx: element penalty must be scale invariant");
}

void NestedProx::apply_magnitudes(std::span<const double> mags, std::span<double> out) const
{
    if (mags.size() != out.size())
        throw std::invalid_argument("NestedProx: size mismatch");
    // Penalties are homogeneous, so f(a / rho; lambda / rho) = f(a; lambda) / rho^2.
    double norm2 = 0.0;
    for (std::size_t i = 0; i < mags.size(); ++i)
    {
        out[i] = f_e_.prox(mags[i], params_.lambda_elem, weight_);
        norm2 += out[i] * out[i];
    }
    const double nv = std::sqrt(norm2);
    if (nv == 0.0)
        return;
    const double gamma = f_g_.prox(nv, params_.lambda_group, weight_) / nv;
    for (auto &v : out)
        v *= gamma;
}

void NestedProx::apply(const CVector &in, std::span<const Index> group, CVector &out) const
{
    double norm2 = 0.0;
    for (Index j : group)
    {
        const double mag = std::abs(in[j]);
        const double shrunk = f_e_.prox(mag, params_.lambda_elem, weight_);
        out[j] = mag > 0.0 ? in[j] * (shrunk / mag) : cplx{0.0, 0.0};
        norm2 += shrunk * shrunk;
    }
    const double nv = std::sqrt(norm2);
    if (nv == 0.0)
        return;
    const double gamma = f_g_.prox(nv, params_.lambda_group, weight_) / nv;
    for (Index j : group)
        out[j] *= gamma;
}

CVector prox_nested(const CVector &b, const GroupProxParams &params, const Regularizer &f_e, const Regularizer &f_g)
{
    NestedProx op(f_e, f_g, params);
    CVector out = CVector::Zero(b.size());
    std::vector<Index> all(static_cast<std::size_t>(b.size()));
    for (Index i = 0; i < b.size(); ++i)
        all[static_cast<std::size_t>(i)] = i;
    op.apply(b, all, out);
    return out;
}

double nested_objective(const CVector &b, const CVector &a, const GroupProxParams &params, const Regularizer &f_e,
                        const Regularizer &f_g)
{
    const double rho = params.rho;
    double obj = 0.5 * (b - a).squaredNorm();
    obj += f_g.value(a.norm() / rho, params.lambda_rho_group());
    for (Index j = 0; j < a.size(); ++j)
        obj += f_e.value(std::abs(a[j]) / rho, params.lambda_rho_elem());
    return obj;
}

double reg_value(const Regularizer &f, double x, double lambda) { return f.value(x, lambda); }

} // namespace ddchan

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

#include "ddchan/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ddchan
{

void AdmmConfig::validate() const
{
    if (rho == 0.0 || !std::isfinite(rho))
        throw std::invalid_argument("AdmmConfig: rho must be finite and nonzero");
    if (lambda_group < 0.0 || lambda_elem < 0.0)
        throw std::invalid_argument("AdmmConfig: lambdas must be non-negative");
    if (max_iter < 1)
        throw std::invalid_argument("AdmmConfig: max_iter must be positive");
    if (!(tol_rel > 0.0))
        throw std::invalid_argument("AdmmConfig: tolerance must be positive");
    if (!f_elem.scale_invariant())
        throw std::invalid_argument("AdmmConfig: element penalty must be scale invariant");
    if (f_group.kind() == PenaltyKind::Scad && f_group.parameter() < 3.0)
        throw std::invalid_argument("AdmmConfig: SCAD group penalty needs mu >= 3");
    if (f_group.kind() == PenaltyKind::Mcp && f_group.parameter() < 2.0)
        throw std::invalid_argument("AdmmConfig: MCP group penalty needs mu >= 2");
}

GroupProxParams AdmmConfig::prox_params() const
{
    return {lambda_group, lambda_elem, rho};
}

RidgeSystem::RidgeSystem(const CMatrix &A, double rho) : A_(A), rho_(rho), wide_(A.rows() < A.cols())
{
    if (rho == 0.0 || !std::isfinite(rho))
        throw std::invalid_argument("RidgeSystem: rho must be finite and nonzero");
    if (!A_.allFinite())
        throw std::runtime_error("RidgeSystem: matrix has non-finite entries");
    const double r2 = rho * rho;
    if (wide_)
    {
        CMatrix gram = A_ * A_.adjoint();
        gram.diagonal().array() += r2;
        llt_.compute(gram);
    }
    else
    {
        CMatrix gram = A_.adjoint() * A_;
        gram.diagonal().array() += r2;
        llt_.compute(gram);
    }
    if (llt_.info() != Eigen::Success)
        throw std::runtime_error("RidgeSystem: factorization failed");
}

CVector RidgeSystem::solve(const CVector &r) const
{
    if (wide_)
        return (r - A_.adjoint() * llt_.solve(A_ * r)) / (rho_ * rho_);
    return llt_.solve(r);
}

CVector RidgeSystem::scaled_solve(const CVector &v) const
{
    if (wide_)
        return v - A_.adjoint() * llt_.solve(A_ * v);
    return rho_ * rho_ * llt_.solve(v);
}

CVector RidgeSystem::ridge_estimate(const CVector &y) const
{
    if (y.size() != A_.rows())
        throw std::invalid_argument("RidgeSystem: measurement length mismatch");
    if (wide_)
        return A_.adjoint() * llt_.solve(y);
    return llt_.solve(A_.adjoint() * y);
}

CMatrix RidgeSystem::ridge_operator() const
{
    if (wide_)
        return llt_.solve(A_).adjoint();
    return llt_.solve(A_.adjoint());
}

CMatrix RidgeSystem::dense_inverse() const
{
    const Index n = A_.cols();
    if (wide_)
    {
        CMatrix out = CMatrix::Identity(n, n) - A_.adjoint() * llt_.solve(A_);
        return out / (rho_ * rho_);
    }
    return llt_.solve(CMatrix::Identity(n, n));
}

CVector RidgeSystem::cg_solve(const CVector &r, const CVector &guess, double tol, int max_iter) const
{
    const double r2 = rho_ * rho_;
    auto apply = [&](const CVector &v) -> CVector { return r2 * v + A_.adjoint() * (A_ * v); };
    CVector x = guess.size() == r.size() ? guess : CVector::Zero(r.size());
    CVector res = r - apply(x);
    CVector p = res;
    double rs = res.squaredNorm();
    const double stop = tol * tol * std::max(r.squaredNorm(), 1e-300);
    for (int it = 0; it < max_iter && rs > stop; ++it)
    {
        const CVector ap = apply(p);
        const double alpha = rs / std::real(p.dot(ap));
        x += alpha * p;
        res -= alpha * ap;
        const double rs_new = res.squaredNorm();
        p = res + (rs_new / rs) * p;
        rs = rs_new;
    }
    return x;
}

double admm_objective(const CVector &y, const CMatrix &A, const CVector &x, const GroupPartition &partition,
                      const AdmmConfig &cfg)
{
    double obj = 0.5 * (y - A * x).squaredNorm();
    for (const auto &g : partition.groups)
    {
        double n2 = 0.0;
        for (Index j : g)
        {
            const double a = std::abs(x[j]);
            n2 += a * a;
            obj += cfg.f_elem.value(a, cfg.lambda_elem);
        }
        obj += cfg.f_group.value(std::sqrt(n2), cfg.lambda_group);
    }
    return obj;
}

EstimateResult admm_solve(const CVector &y, const RidgeSystem &system, const GroupPartition &partition,
                          const AdmmConfig &cfg, const AdmmObserver &observer)
{
    cfg.validate();
    const CMatrix &A = system.matrix();
    const Index n = A.cols();
    if (y.size() != A.rows())
        throw std::invalid_argument("admm_solve: measurement length mismatch");
    if (partition.size != n)
        throw std::invalid_argument("admm_solve: partition does not match the unknown vector");
    if (std::abs(system.rho() - cfg.rho) > 1e-15 * std::abs(cfg.rho))
        throw std::invalid_argument("admm_solve: ridge system was factored for a different rho");

    const CVector x0 = system.ridge_estimate(y);
    const double eps = cfg.tol_rel * x0.norm();
    const NestedProx prox(cfg.f_elem, cfg.f_group, cfg.prox_params());

    CVector x = CVector::Zero(n);
    CVector x_prev = CVector::Zero(n);
    CVector w = CVector::Zero(n);
    CVector theta = CVector::Zero(n);
    CVector theta_prev = CVector::Zero(n);
    CVector v(n);
    CVector cg_guess;

    EstimateResult res;
    for (int it = 1; it <= cfg.max_iter; ++it)
    {
        if (cfg.x_update == XUpdate::Direct)
            x = system.scaled_solve(w - theta) + x0;
        else
        {
            cg_guess = system.cg_solve(w - theta, cg_guess, 1e-12, 1000);
            x = cfg.rho * cfg.rho * cg_guess + x0;
        }

        v = x + theta;
        // Groups are disjoint, so each update touches its own entries only.
        for (const auto &g : partition.groups)
            prox.apply(v, g, w);

        theta_prev = theta;
        theta += x - w;

        const double step = (x - x_prev).norm();
        const double primal = (x - w).norm();
        if (!std::isfinite(step) || !std::isfinite(primal) || !w.allFinite())
        {
            std::ostringstream os;
            os << "admm_solve: non-finite iterate at iteration " << it << " (step " << step << ", residual "
               << primal << ")";
            throw std::runtime_error(os.str());
        }
        double obj = std::numeric_limits<double>::quiet_NaN();
        if (cfg.track_objective)
        {
            obj = admm_objective(y, A, w, partition, cfg);
            res.objective_trace.push_back(obj);
        }
        res.history.push_back({it, step, primal, obj});
        res.iterations = it;
        res.final_step_norm = step;
        res.final_primal_residual = primal;
        if (observer)
            observer(AdmmState{it, x, w, theta, theta_prev});
        x_prev = x;
        if (step < eps || step == 0.0)
            break;
    }
    res.x_hat = std::move(w);
    res.x_last = std::move(x);
    return res;
}

EstimateResult admm_solve(const CVector &y, const CMatrix &A, const GroupPartition &partition, const AdmmConfig &cfg)
{
    const RidgeSystem sys(A, cfg.rho);
    return admm_solve(y, sys, partition, cfg);
}

CVector ls_estimate(const CVector &y, const CMatrix &A, double rho)
{
    const RidgeSystem sys(A, rho);
    return sys.ridge_estimate(y);
}

std::vector<char> prototype_support(const DelayDopplerGrid &grid, Index k_max, Index m_max)
{
    std::vector<char> mask(static_cast<std::size_t>(grid.size()), 0);
    for (Index m = 0; m <= std::min(m_max, grid.delay_taps - 1); ++m)
        for (Index k = -std::min(k_max, grid.doppler_half); k <= std::min(k_max, grid.doppler_half); ++k)
            mask[static_cast<std::size_t>(grid.index(k, m))] = 1;
    return mask;
}

CVector wiener_estimate(const CVector &y, const CMatrix &A, const std::vector<char> &mask, double noise_variance,
                        double power)
{
    if (static_cast<Index>(mask.size()) != A.cols() || y.size() != A.rows())
        throw std::invalid_argument("wiener_estimate: dimension mismatch");
    std::vector<Index> supp;
    for (Index j = 0; j < A.cols(); ++j)
        if (mask[static_cast<std::size_t>(j)])
            supp.push_back(j);
    if (supp.empty())
        throw std::invalid_argument("wiener_estimate: prototype support is empty");
    CMatrix As(A.rows(), static_cast<Index>(supp.size()));
    for (std::size_t i = 0; i < supp.size(); ++i)
        As.col(static_cast<Index>(i)) = A.col(supp[i]);

    double c = 0.0;
    if (power > 0.0)
        c = power / static_cast<double>(supp.size());
    else
    {
        const double signal = y.squaredNorm() - static_cast<double>(y.size()) * noise_variance;
        c = std::max(signal, 1e-12 * y.squaredNorm()) / As.squaredNorm();
    }
    CMatrix inner = c * (As * As.adjoint());
    inner.diagonal().array() += noise_variance;
    Eigen::LDLT<CMatrix> ldlt(inner);
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().cwiseAbs().minCoeff() > 1e-13 * dmax))
        throw std::runtime_error("wiener_estimate: inner matrix is singular");
    const CVector xs = c * (As.adjoint() * ldlt.solve(y));
    CVector out = CVector::Zero(A.cols());
    for (std::size_t i = 0; i < supp.size(); ++i)
        out[supp[i]] = xs[static_cast<Index>(i)];
    return out;
}

CVector cs_estimate(const CVector &y, const RidgeSystem &system, AdmmConfig cfg)
{
    cfg.lambda_group = 0.0;
    return admm_solve(y, system, singleton_partition(system.matrix().cols()), cfg).x_hat;
}

RVector ls_noise_variance(const RidgeSystem &system, double noise_variance)
{
    const CMatrix op = system.ridge_operator();
    return noise_variance * op.rowwise().squaredNorm();
}

CVector hsd_estimate(const CVector &y, const RidgeSystem &system, const RVector &diffuse_variance,
                     double noise_variance, double gamma)
{
    const Index n = system.matrix().cols();
    if (diffuse_variance.size() != n)
        throw std::invalid_argument("hsd_estimate: diffuse variance length mismatch");
    if ((diffuse_variance.array() < 0.0).any() || noise_variance < 0.0)
        throw std::invalid_argument("hsd_estimate: covariances must be non-negative");
    if (!(gamma > 0.0))
        throw std::invalid_argument("hsd_estimate: gamma must be positive");
    const CVector x_ls = system.ridge_estimate(y);
    const RVector noise = ls_noise_variance(system, noise_variance);
    CVector out(n);
    for (Index j = 0; j < n; ++j)
    {
        const double dv = diffuse_variance[j];
        const double ev = noise[j];
        if (std::norm(x_ls[j]) >= gamma * (ev + dv))
            out[j] = x_ls[j];
        else
            out[j] = dv + ev > 0.0 ? x_ls[j] * (dv / (dv + ev)) : cplx{0.0, 0.0};
    }
    return out;
}

CVector known_support_estimate(const CVector &y, const CMatrix &A, const std::vector<Index> &support,
                               const GroupPartition &partition, const AdmmConfig &cfg)
{
    const Index n = A.cols();
    CVector out = CVector::Zero(n);
    if (support.empty())
        return out;
    std::vector<Index> local(static_cast<std::size_t>(n), -1);
    CMatrix As(A.rows(), static_cast<Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i)
    {
        const Index j = support[i];
        if (j < 0 || j >= n || local[static_cast<std::size_t>(j)] >= 0)
            throw std::invalid_argument("known_support_estimate: invalid or repeated support index");
        local[static_cast<std::size_t>(j)] = static_cast<Index>(i);
        As.col(static_cast<Index>(i)) = A.col(j);
    }
    GroupPartition sub;
    sub.size = static_cast<Index>(support.size());
    for (const auto &g : partition.groups)
    {
        std::vector<Index> kept;
        for (Index j : g)
            if (local[static_cast<std::size_t>(j)] >= 0)
                kept.push_back(local[static_cast<std::size_t>(j)]);
        if (!kept.empty())
            sub.groups.push_back(std::move(kept));
    }
    sub.n_r3 = sub.count();
    const auto res = admm_solve(y, As, sub, cfg);
    for (std::size_t i = 0; i < support.size(); ++i)
        out[support[i]] = res.x_hat[static_cast<Index>(i)];
    return out;
}

CrossValidationResult cross_validate(const CVector &y, const CMatrix &A, const GroupPartition &partition,
                                     const std::vector<double> &lambda_grid, double ratio, int folds,
                                     const AdmmConfig &base, std::uint64_t seed, bool element_only)
{
    if (lambda_grid.empty())
        throw std::invalid_argument("cross_validate: empty lambda grid");
    if (!element_only && !(ratio > 0.0))
        throw std::invalid_argument("cross_validate: ratio must be positive");
    const Index rows = A.rows();
    if (folds < 2 || folds > rows)
        throw std::invalid_argument("cross_validate: folds must lie in [2, number of measurements]");

    auto configure = [&](double lambda) {
        AdmmConfig c = base;
        if (element_only)
        {
            c.lambda_group = 0.0;
            c.lambda_elem = lambda;
        }
        else
        {
            c.lambda_group = lambda;
            c.lambda_elem = lambda / ratio;
        }
        return c;
    };

    CrossValidationResult out;
    out.lambda_grid = lambda_grid;
    if (lambda_grid.size() == 1)
    {
        out.config = configure(lambda_grid.front());
        out.scores.assign(1, 0.0);
        return out;
    }

    std::vector<Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    struct Fold
    {
        std::vector<Index> train, test;
        CMatrix A_train, A_test;
        CVector y_train, y_test;
    };
    std::vector<Fold> parts(static_cast<std::size_t>(folds));
    for (Index i = 0; i < rows; ++i)
        for (int f = 0; f < folds; ++f)
            (i % folds == f ? parts[f].test : parts[f].train).push_back(order[static_cast<std::size_t>(i)]);
    std::vector<RidgeSystem> systems;
    systems.reserve(parts.size());
    for (auto &p : parts)
    {
        std::sort(p.train.begin(), p.train.end());
        std::sort(p.test.begin(), p.test.end());
        p.A_train = A(p.train, Eigen::all);
        p.A_test = A(p.test, Eigen::all);
        p.y_train = y(p.train);
        p.y_test = y(p.test);
        systems.emplace_back(p.A_train, base.rho);
    }

    out.scores.assign(lambda_grid.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t l = 0; l < lambda_grid.size(); ++l)
    {
        const AdmmConfig c = configure(lambda_grid[l]);
        double score = 0.0;
        for (std::size_t f = 0; f < parts.size(); ++f)
        {
            const auto res = admm_solve(parts[f].y_train, systems[f], partition, c);
            score += (parts[f].y_test - parts[f].A_test * res.x_hat).squaredNorm();
        }
        out.scores[l] = score;
        const bool better = score < out.scores[best] ||
                            (score == out.scores[best] && lambda_grid[l] < lambda_grid[best]);
        if (l == 0 || better)
            best = l;
    }
    out.config = configure(lambda_grid[best]);
    return out;
}

} // namespace ddchan

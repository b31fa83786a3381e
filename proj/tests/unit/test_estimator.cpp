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
#include "ddchan/observation.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ddchan;

namespace
{
CMatrix random_matrix(Index r, Index c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    CMatrix A(r, c);
    for (Index i = 0; i < A.size(); ++i)
        A.data()[i] = cplx{n01(rng), n01(rng)} / std::sqrt(2.0 * static_cast<double>(r));
    return A;
}

CVector random_vector(Index n, std::uint64_t seed) { return complex_gaussian(n, 1.0, seed); }

GroupPartition one_group(Index n)
{
    GroupPartition p;
    p.size = n;
    p.groups.emplace_back();
    for (Index j = 0; j < n; ++j)
        p.groups.back().push_back(j);
    p.n_r1 = 1;
    return p;
}

GroupPartition blocks(Index n, Index width)
{
    GroupPartition p;
    p.size = n;
    for (Index s = 0; s < n; s += width)
    {
        p.groups.emplace_back();
        for (Index j = s; j < std::min(n, s + width); ++j)
            p.groups.back().push_back(j);
    }
    p.n_r1 = p.count();
    return p;
}

AdmmConfig soft_config(double lg, double le, double rho = 1.0)
{
    AdmmConfig c;
    c.rho = rho;
    c.lambda_group = lg;
    c.lambda_elem = le;
    return c;
}

// Zoomed pattern search over the real and imaginary parts; independent of the
// prox machinery.
template <class F> CVector pattern_minimize(F f, CVector start, double span, int points, int rounds)
{
    const Index n = start.size();
    const Index dims = 2 * n;
    CVector best = start;
    double best_val = f(best);
    for (int r = 0; r < rounds; ++r)
    {
        const CVector centre = best;
        const double step = 2.0 * span / (points - 1);
        std::vector<int> idx(static_cast<std::size_t>(dims), 0);
        while (true)
        {
            CVector cand = centre;
            for (Index d = 0; d < dims; ++d)
            {
                const double off = -span + step * idx[static_cast<std::size_t>(d)];
                if (d % 2 == 0)
                    cand[d / 2] += cplx{off, 0.0};
                else
                    cand[d / 2] += cplx{0.0, off};
            }
            const double v = f(cand);
            if (v < best_val)
            {
                best_val = v;
                best = cand;
            }
            Index d = 0;
            while (d < dims && ++idx[static_cast<std::size_t>(d)] == points)
                idx[static_cast<std::size_t>(d++)] = 0;
            if (d == dims)
                break;
        }
        span *= 0.6;
    }
    return best;
}
} // namespace

TEST_CASE("ridge system: identity case")
{
    const CMatrix I = CMatrix::Identity(6, 6);
    const RidgeSystem sys(I, 1.0);
    CHECK((sys.dense_inverse() - 0.5 * I).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("ridge system: inverse residual for wide and tall matrices")
{
    for (auto [r, c] : {std::pair<Index, Index>{50, 200}, {200, 50}, {40, 40}})
    {
        const CMatrix A = random_matrix(r, c, 3);
        for (double rho : {0.3, 1.0, 4.0})
        {
            const RidgeSystem sys(A, rho);
            const CMatrix A0 = sys.dense_inverse();
            const CMatrix M = rho * rho * CMatrix::Identity(c, c) + A.adjoint() * A;
            CHECK((A0 * M - CMatrix::Identity(c, c)).norm() < 1e-8);

            const CVector v = random_vector(c, 4);
            CHECK((sys.solve(v) - A0 * v).norm() < 1e-10 * (A0 * v).norm());
            CHECK((sys.scaled_solve(v) - rho * rho * A0 * v).norm() < 1e-10 * v.norm());
            const CVector y = random_vector(r, 5);
            CHECK((sys.ridge_estimate(y) - A0 * A.adjoint() * y).norm() < 1e-10 * y.norm());
            CHECK((sys.ridge_operator() - A0 * A.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
            const CVector cg = sys.cg_solve(v, CVector(), 1e-13, 2000);
            CHECK((cg - A0 * v).norm() < 1e-8 * (A0 * v).norm());
        }
    }
}

TEST_CASE("ridge estimate approaches least squares as rho shrinks")
{
    const CMatrix A = random_matrix(60, 12, 8);
    const CVector y = random_vector(60, 9);
    const CVector ls = A.colPivHouseholderQr().solve(y);
    double prev = 1e300;
    for (double rho : {1e-1, 1e-2, 1e-3, 1e-4})
    {
        const double err = (ls_estimate(y, A, rho) - ls).norm();
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-6 * ls.norm());

    SUBCASE("A = I")
    {
        const CVector b = random_vector(7, 2);
        CHECK((ls_estimate(b, CMatrix::Identity(7, 7), 1e-4) - b).norm() < 1e-7 * b.norm());
    }
    SUBCASE("noiseless, well conditioned")
    {
        const CVector x = random_vector(12, 10);
        CHECK((ls_estimate(A * x, A, 1e-2) - x).norm() < 1e-3 * x.norm());
    }
}

TEST_CASE("least squares noise power scales with the noise variance")
{
    const CMatrix A = random_matrix(40, 20, 1);
    const RidgeSystem sys(A, 0.1);
    auto mean_power = [&](double var) {
        double acc = 0.0;
        for (std::uint64_t s = 0; s < 200; ++s)
            acc += sys.ridge_estimate(complex_gaussian(40, var, 500 + s)).squaredNorm();
        return acc / 200.0;
    };
    const double p1 = mean_power(1.0), p4 = mean_power(4.0);
    CHECK(p4 / p1 == doctest::Approx(4.0).epsilon(1e-9));
    const RVector diag = ls_noise_variance(sys, 1.0);
    CHECK(p1 == doctest::Approx(diag.sum()).epsilon(0.1));
}

TEST_CASE("ADMM with A = I and one group reduces to the nested operator")
{
    const std::vector<std::pair<Regularizer, Regularizer>> combos{
        {Regularizer::soft(), Regularizer::soft()},
        {Regularizer::soft(), Regularizer::scad(3.7)},
        {Regularizer::soft(), Regularizer::mcp(2.0)}};
    for (const auto &[fe, fg] : combos)
        for (std::uint64_t seed = 1; seed <= 20; ++seed)
        {
            const Index n = 6;
            const CVector y = 2.0 * random_vector(n, seed);
            AdmmConfig cfg = soft_config(1.5, 0.15);
            cfg.f_elem = fe;
            cfg.f_group = fg;
            cfg.tol_rel = 1e-10;
            cfg.max_iter = 50;
            const auto res = admm_solve(y, CMatrix::Identity(n, n), one_group(n), cfg);
            const CVector expect = prox_nested(y, GroupProxParams(1.5, 0.15, 1.0), fe, fg);
            CHECK((res.x_hat - expect).norm() < 1e-6);
            CHECK(res.iterations <= 50);
        }
}

TEST_CASE("ADMM returns zero for zero data")
{
    const CMatrix A = random_matrix(10, 30, 2);
    const auto res = admm_solve(CVector::Zero(10), A, blocks(30, 3), soft_config(0.5, 0.05));
    CHECK(res.x_hat.norm() == 0.0);
}

TEST_CASE("ADMM matches a brute-force minimizer on a three-unknown problem")
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
        const CMatrix A = random_matrix(4, 3, 20 + seed);
        const CVector y = random_vector(4, 30 + seed);
        GroupPartition p;
        p.size = 3;
        p.groups = {{0, 1}, {2}};
        p.n_r1 = 1;
        p.n_r3 = 1;
        AdmmConfig cfg = soft_config(0.3, 0.05);
        cfg.tol_rel = 1e-12;
        cfg.max_iter = 20000;
        const auto res = admm_solve(y, A, p, cfg);
        const double got = admm_objective(y, A, res.x_hat, p, cfg);
        auto f = [&](const CVector &x) { return admm_objective(y, A, x, p, cfg); };
        const CVector brute = pattern_minimize(f, CVector::Zero(3), 2.0, 7, 30);
        CHECK(got <= f(brute) + 1e-4);
        CHECK(std::abs(got - f(brute)) < 1e-4);
    }
}

TEST_CASE("ADMM iterate properties on a random instance")
{
    const CMatrix A = random_matrix(30, 60, 7);
    CVector x_true = CVector::Zero(60);
    x_true.segment(0, 4) = random_vector(4, 1);
    x_true.segment(20, 4) = random_vector(4, 2);
    const CVector y = A * x_true + complex_gaussian(30, 1e-3, 3);
    const auto part = blocks(60, 4);
    AdmmConfig cfg = soft_config(0.1, 0.01);
    cfg.tol_rel = 1e-9;
    cfg.max_iter = 5000;
    cfg.track_objective = true;

    double max_dual_gap = 0.0;
    const RidgeSystem sys(A, cfg.rho);
    const auto res = admm_solve(y, sys, part, cfg, [&](const AdmmState &s) {
        const CVector lhs = s.theta - s.theta_prev;
        const CVector rhs = s.x - s.w;
        max_dual_gap = std::max(max_dual_gap, (lhs - rhs).cwiseAbs().maxCoeff());
    });

    SUBCASE("dual update identity")
    {
        CHECK(max_dual_gap <= 1e-14);
    }
    SUBCASE("splitting consistency")
    {
        const double eps = cfg.tol_rel * sys.ridge_estimate(y).norm();
        CHECK(res.iterations < cfg.max_iter);
        CHECK((res.x_last - res.x_hat).norm() <= 10.0 * eps);
    }
    SUBCASE("first-order optimality by coordinate perturbation")
    {
        const double base = admm_objective(y, A, res.x_hat, part, cfg);
        for (Index j = 0; j < 60; ++j)
            for (cplx d : {cplx{1e-3, 0}, cplx{-1e-3, 0}, cplx{0, 1e-3}, cplx{0, -1e-3}})
            {
                CVector z = res.x_hat;
                z[j] += d;
                CHECK(admm_objective(y, A, z, part, cfg) >= base - 1e-6);
            }
    }
    SUBCASE("hard zeros for groups inside the dead zone")
    {
        int zero_groups = 0;
        for (const auto &g : part.groups)
        {
            double n2 = 0.0;
            for (Index j : g)
                n2 += std::norm(res.x_hat[j]);
            zero_groups += n2 == 0.0;
        }
        CHECK(zero_groups >= 10);
    }
    SUBCASE("objective along the w iterates is non-increasing")
    {
        const auto &tr = res.objective_trace;
        REQUIRE(tr.size() > 6);
        double worst = 0.0;
        for (std::size_t i = 6; i < tr.size(); ++i)
            worst = std::max(worst, tr[i] - tr[i - 1]);
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("conjugate-gradient x-update agrees with the direct one")
{
    const CMatrix A = random_matrix(20, 50, 4);
    const CVector y = random_vector(20, 5);
    AdmmConfig cfg = soft_config(0.2, 0.02, 2.0);
    cfg.tol_rel = 1e-9;
    cfg.max_iter = 3000;
    const auto direct = admm_solve(y, A, blocks(50, 5), cfg);
    cfg.x_update = XUpdate::ConjugateGradient;
    const auto cg = admm_solve(y, A, blocks(50, 5), cfg);
    CHECK((direct.x_hat - cg.x_hat).norm() < 1e-6 * std::max(1.0, direct.x_hat.norm()));
}

TEST_CASE("ADMM configuration checks")
{
    AdmmConfig c = soft_config(1.0, 0.1);
    c.rho = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = soft_config(1.0, 0.1);
    c.f_group = Regularizer::scad(2.5);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(Regularizer::mcp(1.5), std::invalid_argument);
    c.f_group = Regularizer::mcp(2.0);
    CHECK_NOTHROW(c.validate());
    c.lambda_elem = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = soft_config(1.0, 0.1);
    c.max_iter = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    SUBCASE("non-finite data aborts")
    {
        CVector y = random_vector(5, 1);
        y[2] = cplx{std::nan(""), 0.0};
        CHECK_THROWS(admm_solve(y, random_matrix(5, 8, 1), blocks(8, 2), soft_config(0.1, 0.01)));
    }
    SUBCASE("mismatched rho")
    {
        const RidgeSystem sys(random_matrix(5, 8, 1), 2.0);
        CHECK_THROWS_AS(admm_solve(random_vector(5, 1), sys, blocks(8, 2), soft_config(0.1, 0.01, 1.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("element-wise baseline")
{
    const CMatrix A = random_matrix(15, 40, 6);
    const CVector y = random_vector(15, 7);
    AdmmConfig cfg = soft_config(0.0, 0.1);
    const RidgeSystem sys(A, cfg.rho);
    const CVector a = cs_estimate(y, sys, cfg);
    const CVector b = admm_solve(y, sys, singleton_partition(40), cfg).x_hat;
    CHECK((a - b).norm() == 0.0);

    SUBCASE("no penalty gives least squares")
    {
        const CMatrix T = random_matrix(40, 8, 2);
        const CVector yt = random_vector(40, 3);
        AdmmConfig z = soft_config(0.0, 0.0);
        z.tol_rel = 1e-12;
        z.max_iter = 20000;
        const CVector ls = T.colPivHouseholderQr().solve(yt);
        CHECK((cs_estimate(yt, RidgeSystem(T, 1.0), z) - ls).norm() < 1e-6 * ls.norm());
    }
}

TEST_CASE("Wiener estimator")
{
    SUBCASE("scalar shrinkage for A = I")
    {
        const DelayDopplerGrid g{1e-4, 5, 2, 2, 0.0};
        const CMatrix I = CMatrix::Identity(g.size(), g.size());
        const CVector y = random_vector(g.size(), 1);
        const std::vector<char> all(static_cast<std::size_t>(g.size()), 1);
        const double c = 0.7, var = 0.2;
        const CVector x = wiener_estimate(y, I, all, var, c * g.size());
        CHECK((x - (c / (c + var)) * y).norm() < 1e-12);
    }
    SUBCASE("vanishing noise inverts A on the support")
    {
        const CMatrix A = random_matrix(6, 6, 2);
        const CVector x = random_vector(6, 3);
        const std::vector<char> all(6, 1);
        CHECK((wiener_estimate(A * x, A, all, 1e-12, 6.0) - x).norm() < 1e-6 * x.norm());
    }
    SUBCASE("singular inner matrix is reported")
    {
        const CMatrix A = random_matrix(6, 3, 2);
        const std::vector<char> all(3, 1);
        CHECK_THROWS(wiener_estimate(random_vector(6, 1), A, all, 0.0, 1.0));
    }
    SUBCASE("prototype support shape")
    {
        const DelayDopplerGrid g{1e-4, 21, 10, 6, 0.0};
        const auto mask = prototype_support(g, 3, 2);
        Index count = 0;
        for (char c : mask)
            count += c;
        CHECK(count == 7 * 3);
        CHECK(mask[static_cast<std::size_t>(g.index(-3, 2))] == 1);
        CHECK(mask[static_cast<std::size_t>(g.index(4, 0))] == 0);
    }
}

TEST_CASE("HSD estimator limits")
{
    const CMatrix A = random_matrix(20, 10, 1);
    const CVector y = random_vector(20, 2);
    const RidgeSystem sys(A, 0.1);
    const RVector zero = RVector::Zero(10);
    CHECK(hsd_estimate(y, sys, zero, 0.1, 1e12).norm() == 0.0);
    CHECK((hsd_estimate(y, sys, zero, 0.1, 1e-12) - sys.ridge_estimate(y)).norm() == 0.0);
    RVector neg = zero;
    neg[3] = -1.0;
    CHECK_THROWS_AS(hsd_estimate(y, sys, neg, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("known-support estimator")
{
    const CMatrix A = random_matrix(30, 60, 11);
    CVector x = CVector::Zero(60);
    const std::vector<Index> support{3, 4, 17, 40, 41};
    for (Index j : support)
        x[j] = random_vector(1, 100 + j)[0];
    const auto part = blocks(60, 3);

    AdmmConfig exact = soft_config(0.0, 0.0);
    exact.tol_rel = 1e-12;
    exact.max_iter = 20000;
    const CVector est = known_support_estimate(A * x, A, support, part, exact);
    CHECK((est - x).squaredNorm() / x.squaredNorm() < 1e-6);

    AdmmConfig cfg = soft_config(0.2, 0.02);
    std::vector<Index> all(60);
    std::iota(all.begin(), all.end(), Index{0});
    const CVector y = A * x + complex_gaussian(30, 0.01, 5);
    CHECK((known_support_estimate(y, A, all, part, cfg) - admm_solve(y, A, part, cfg).x_hat).norm() < 1e-12);
    CHECK(known_support_estimate(y, A, {}, part, cfg).norm() == 0.0);
    CHECK_THROWS_AS(known_support_estimate(y, A, {3, 3}, part, cfg), std::invalid_argument);
}

TEST_CASE("cross-validation")
{
    const CMatrix A = random_matrix(40, 60, 12);
    CVector x = CVector::Zero(60);
    x.segment(6, 6) = random_vector(6, 4);
    const auto part = blocks(60, 6);
    AdmmConfig base = soft_config(0.0, 0.0);
    base.max_iter = 300;

    SUBCASE("single grid point")
    {
        const auto r = cross_validate(A * x, A, part, {0.3}, 10.0, 3, base, 1);
        CHECK(r.config.lambda_group == 0.3);
        CHECK(r.config.lambda_elem == doctest::Approx(0.03));
    }
    SUBCASE("noiseless data picks the smallest weight")
    {
        const auto r = cross_validate(A * x, A, part, {0.01, 0.1, 0.5, 1.0}, 10.0, 4, base, 1);
        CHECK(r.config.lambda_group == 0.01);
        REQUIRE(r.scores.size() == 4);
        CHECK(r.scores[0] <= r.scores[3]);
    }
    SUBCASE("element-only mode sets the element weight")
    {
        const auto r = cross_validate(A * x, A, part, {0.01, 0.1}, 10.0, 4, base, 1, true);
        CHECK(r.config.lambda_group == 0.0);
        CHECK(r.config.lambda_elem == 0.01);
    }
    SUBCASE("deterministic for a fixed seed")
    {
        const CVector y = A * x + complex_gaussian(40, 0.05, 9);
        const auto a = cross_validate(y, A, part, {0.05, 0.2, 0.8}, 10.0, 3, base, 7);
        const auto b = cross_validate(y, A, part, {0.05, 0.2, 0.8}, 10.0, 3, base, 7);
        CHECK(a.scores == b.scores);
    }
    SUBCASE("bad arguments")
    {
        CHECK_THROWS_AS(cross_validate(A * x, A, part, {}, 10.0, 3, base, 1), std::invalid_argument);
        CHECK_THROWS_AS(cross_validate(A * x, A, part, {0.1, 0.2}, 10.0, 1, base, 1), std::invalid_argument);
    }
}

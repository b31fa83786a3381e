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

#ifndef DDCHAN_ESTIMATOR_HPP
#define DDCHAN_ESTIMATOR_HPP

#include "ddchan/proxops.hpp"
#include "ddchan/regions.hpp"
#include "ddchan/types.hpp"

#include <Eigen/Cholesky>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ddchan
{

enum class XUpdate
{
    Direct,
    ConjugateGradient
};

struct AdmmConfig
{
    double rho = 1.0;
    double lambda_group = 0.0;
    double lambda_elem = 0.0;
    int max_iter = 500;
    double tol_rel = 1e-6; // stop when ||x_{n+1} - x_n|| < tol_rel * ||x_0||
    Regularizer f_elem = Regularizer::soft();
    Regularizer f_group = Regularizer::soft();
    XUpdate x_update = XUpdate::Direct;
    bool track_objective = false;

    void validate() const;
    GroupProxParams prox_params() const;
};

// Solves (rho^2 I + A^H A) v = r. The smaller of the two Gram matrices is
// factored; for a wide A the push-through identity
//   (rho^2 I + A^H A)^{-1} = rho^{-2} (I - A^H (rho^2 I + A A^H)^{-1} A)
// avoids ever forming the N x N inverse.
class RidgeSystem
{
  public:
    RidgeSystem(const CMatrix &A, double rho);

    double rho() const { return rho_; }
    const CMatrix &matrix() const { return A_; }

    // A_0 r
    CVector solve(const CVector &r) const;
    // rho^2 A_0 v
    CVector scaled_solve(const CVector &v) const;
    // A_0 A^H y
    CVector ridge_estimate(const CVector &y) const;
    // A_0 A^H as an explicit N x N_r matrix
    CMatrix ridge_operator() const;
    // Dense A_0; intended for small problems and tests.
    CMatrix dense_inverse() const;
    // Conjugate-gradient solve of (rho^2 I + A^H A) v = r.
    CVector cg_solve(const CVector &r, const CVector &guess, double tol, int max_iter) const;

  private:
    CMatrix A_;
    double rho_;
    bool wide_;
    Eigen::LLT<CMatrix> llt_;
};

struct IterationRecord
{
    int iteration;
    double step_norm;
    double primal_residual;
    double objective; // NaN unless tracked
};

struct EstimateResult
{
    CVector x_hat;
    int iterations = 0;
    double final_step_norm = 0.0;
    double final_primal_residual = 0.0;
    std::vector<double> objective_trace;
    std::vector<IterationRecord> history;
    CVector x_last; // x iterate at exit, for splitting diagnostics
};

// Iterates exposed to an optional observer after every dual update.
struct AdmmState
{
    int iteration;
    const CVector &x;
    const CVector &w;
    const CVector &theta;
    const CVector &theta_prev;
};

using AdmmObserver = std::function<void(const AdmmState &)>;

// Objective 1/2||y - A x||^2 + sum_i f_g(||x_i||; lambda_g) + sum_j f_e(|x_j|; lambda_e).
double admm_objective(const CVector &y, const CMatrix &A, const CVector &x, const GroupPartition &partition,
                      const AdmmConfig &cfg);

EstimateResult admm_solve(const CVector &y, const RidgeSystem &system, const GroupPartition &partition,
                          const AdmmConfig &cfg, const AdmmObserver &observer = {});
EstimateResult admm_solve(const CVector &y, const CMatrix &A, const GroupPartition &partition, const AdmmConfig &cfg);

CVector ls_estimate(const CVector &y, const CMatrix &A, double rho);

// Flat prototype scattering function on the mask; total power estimated from
// the data when power <= 0.
CVector wiener_estimate(const CVector &y, const CMatrix &A, const std::vector<char> &support_mask,
                        double noise_variance, double power = 0.0);
std::vector<char> prototype_support(const DelayDopplerGrid &grid, Index k_max, Index m_max);

CVector cs_estimate(const CVector &y, const RidgeSystem &system, AdmmConfig cfg);

// Diagonal of the post-LS noise covariance sigma^2 A_0 A^H A A_0.
RVector ls_noise_variance(const RidgeSystem &system, double noise_variance);

CVector hsd_estimate(const CVector &y, const RidgeSystem &system, const RVector &diffuse_variance,
                     double noise_variance, double gamma);

CVector known_support_estimate(const CVector &y, const CMatrix &A, const std::vector<Index> &support,
                               const GroupPartition &partition, const AdmmConfig &cfg);

struct CrossValidationResult
{
    AdmmConfig config;
    std::vector<double> lambda_grid;
    std::vector<double> scores;
};

CrossValidationResult cross_validate(const CVector &y, const CMatrix &A, const GroupPartition &partition,
                                     const std::vector<double> &lambda_grid, double ratio, int folds,
                                     const AdmmConfig &base, std::uint64_t seed, bool element_only = false);

} // namespace ddchan

#endif

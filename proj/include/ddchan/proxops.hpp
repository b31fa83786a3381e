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

#ifndef DDCHAN_PROXOPS_HPP
#define DDCHAN_PROXOPS_HPP

#include "ddchan/types.hpp"

#include <span>
#include <string>
#include <string_view>

namespace ddchan
{

// Univariate sparsity penalties f(x; lambda) and their proximity operators
//
//   P_{lambda, c f}(x) = argmin_a  1/2 (x - a)^2 + c * f(a; lambda)
//
// The weight c defaults to 1. Weighted operators are needed by the group
// step inside ADMM, where the penalty enters as f / rho^2.
//
// Every penalty here is even in x, vanishes at x = 0 and at lambda = 0, is
// non-decreasing in |x| and is homogeneous: f(a x; a lambda) = a^2 f(x; lambda).
// Soft (and Lp with p = 1) is additionally scale invariant, which is what the
// element-wise stage of the nested operator requires.
enum class PenaltyKind
{
    Soft,
    Scad,
    Mcp,
    Lp
};

class Regularizer
{
  public:
    static Regularizer soft();
    // mu > 2; the ADMM solver additionally insists on mu >= 3
    static Regularizer scad(double mu);
    // mu >= 2
    static Regularizer mcp(double mu);
    // 0 < p <= 1; f(x; lambda) = lambda^(2 - p) |x|^p
    static Regularizer lp(double p);

    // "soft", "scad:<mu>", "mcp:<mu>", "lp:<p>"
    static Regularizer parse(std::string_view spec);
    std::string name() const;

    PenaltyKind kind() const { return kind_; }
    double parameter() const { return param_; }

    bool scale_invariant() const;
    bool homogeneous() const { return true; }

    double value(double x, double lambda) const;
    double prox(double x, double lambda, double weight = 1.0) const;

  private:
    Regularizer(PenaltyKind kind, double param) : kind_(kind), param_(param) {}

    PenaltyKind kind_;
    double param_;
};

// Closed forms at unit weight.
double prox_soft(double x, double lambda);
double prox_scad(double x, double lambda, double mu);
double prox_mcp(double x, double lambda, double mu);

struct GroupProxParams
{
    double lambda_group = 0.0;
    double lambda_elem = 0.0;
    double rho = 1.0;

    GroupProxParams() = default;
    GroupProxParams(double lambda_g, double lambda_e, double rho_);

    double lambda_rho_group() const { return lambda_group / rho; }
    double lambda_rho_elem() const { return lambda_elem / rho; }
};

// Group operator for g(a) = f_g(||a||_2 / rho; lambda). The result is gamma * b
// with gamma = P_{rho lambda, f_g / rho^2}(||b||) / ||b|| and gamma in [0, 1].
RVector prox_group(const RVector &b, double lambda, const Regularizer &f_g, double rho);

// Joint element/group operator on one complex group. Element-wise shrinkage of
// the magnitudes, then the group shrinkage, then the input phases restored.
class NestedProx
{
  public:
    NestedProx(const Regularizer &f_e, const Regularizer &f_g, const GroupProxParams &params);

    // Writes the result for the entries of `in` listed in `group` into the same
    // positions of `out`. No other entries are touched.
    void apply(const CVector &in, std::span<const Index> group, CVector &out) const;

    // Real, non-negative magnitudes in and out.
    void apply_magnitudes(std::span<const double> mags, std::span<double> out) const;

    const Regularizer &element_penalty() const { return f_e_; }
    const Regularizer &group_penalty() const { return f_g_; }
    const GroupProxParams &params() const { return params_; }

  private:
    Regularizer f_e_;
    Regularizer f_g_;
    GroupProxParams params_;
    double weight_;
};

CVector prox_nested(const CVector &b, const GroupProxParams &params, const Regularizer &f_e,
                    const Regularizer &f_g);

// Group objective 1/2||b - a||^2 + f_g(||a||/rho; lambda_rho_g) + sum f_e(|a_j|/rho; lambda_rho_e).
double nested_objective(const CVector &b, const CVector &a, const GroupProxParams &params,
                        const Regularizer &f_e, const Regularizer &f_g);

double reg_value(const Regularizer &f, double x, double lambda);

} // namespace ddchan

#endif

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

#ifndef DDCHAN_HARNESS_HPP
#define DDCHAN_HARNESS_HPP

#include "ddchan/channel_model.hpp"
#include "ddchan/estimator.hpp"
#include "ddchan/observation.hpp"
#include "ddchan/regions.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ddchan
{

enum class RegionSource
{
    Geometric,
    Data
};

struct ExperimentConfig
{
    std::string preset = "desk";

    ScenarioParams scenario;
    PowerDelayProfile pdp;
    DelayDopplerGrid grid;
    PulseShape pulse;
    PilotKind pilot = PilotKind::Gaussian;

    std::vector<double> snr_db{0.0, 10.0, 20.0, 30.0};
    std::vector<std::string> estimators{"ls", "cs", "nested-soft", "nested-scad", "oracle-support"};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<std::uint64_t> calibration_seeds{1000};

    // Penalty weights are multiples of sigma_z sqrt(N_r).
    std::vector<double> lambda_grid{0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    double lambda_ratio = 10.0; // lambda_g / lambda_e
    int cv_folds = 3;

    double rho = 1.0;
    double ls_rho = 0.1;
    int max_iter = 500;
    double tol_rel = 1e-6;
    double scad_mu = 3.7;
    double mcp_mu = 3.0;
    double hsd_gamma = 4.0;

    RegionSource region_source = RegionSource::Geometric;
    double delta_tau = 0.0; // <= 0 selects the compact confining spread
    double alpha_d = 0.4;
    double alpha_nu = 0.6;
    // Extra lattice rows/columns added to R1 and R2 (region mismatch studies).
    Index inflate_dm = 0;
    Index inflate_dk = 0;

    bool leakage = true;  // A = S G when true, A = S otherwise
    bool off_grid = false; // fractional path delays in the synthesized data

    int threads = 1; // seeds run concurrently; output order does not depend on it

    void validate() const;
};

const std::vector<std::string> &known_estimators();
ExperimentConfig preset_config(const std::string &name);
// Missing keys keep the values of the named (or given) preset.
ExperimentConfig config_from_json(const std::string &text);
ExperimentConfig load_config(const std::filesystem::path &path);
std::string config_to_json(const ExperimentConfig &cfg);

double nmse(const CVector &x_hat, const CVector &x_true);

// Independent sub-streams of one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Everything about one channel draw that does not depend on the SNR.
struct Trial
{
    std::uint64_t seed = 0;
    Scenario scenario;
    DelayDopplerGrid grid;
    SpreadingFunction truth;
    std::vector<Index> support;
    RVector diffuse_variance;
    CMatrix A;           // operator used by the estimators
    CVector clean;       // noiseless received samples
    CVector unit_noise;  // unit-variance noise, scaled per SNR
    Regions regions;
    GeometricRegions geometric;
    GroupPartition partition;
};

// Scenario, ground truth, regions and partition only; A, clean and unit_noise stay empty.
Trial prepare_channel(const ExperimentConfig &cfg, std::uint64_t seed);
Trial prepare_trial(const ExperimentConfig &cfg, std::uint64_t seed);

Measurement trial_measurement(const Trial &trial, double snr_db);

// lambda (in units of sigma_z sqrt(N_r)) per (estimator, SNR).
using LambdaTable = std::map<std::pair<std::string, double>, double>;

LambdaTable calibrate_lambdas(const ExperimentConfig &cfg);

struct EstimatorOutput
{
    CVector x_hat;
    int iterations = 0;
    std::vector<IterationRecord> history; // ADMM estimators only
};

class TrialSolver
{
  public:
    TrialSolver(const ExperimentConfig &cfg, const Trial &trial);
    EstimatorOutput run(const std::string &estimator, const Measurement &meas, double lambda_units) const;
    AdmmConfig admm_config(const std::string &estimator, double lambda) const;
    // Record the objective in the iteration history (costs one A x per step).
    void set_track_objective(bool on) { track_objective_ = on; }

  private:
    const ExperimentConfig &cfg_;
    const Trial &trial_;
    RidgeSystem admm_system_;
    RidgeSystem ls_system_;
    bool track_objective_ = false;
};

struct BenchmarkRow
{
    std::string estimator;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double nmse = 0.0;
    int iterations = 0;
    double wall_time = 0.0;
    std::string error;
};

using ProgressFn = std::function<void(const std::string &)>;

std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig &cfg, const LambdaTable &lambdas,
                                        const ProgressFn &progress = {});
std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig &cfg, const ProgressFn &progress = {});

// Deterministic columns only; wall times go to a separate table.
std::string benchmark_csv(std::vector<BenchmarkRow> rows);
std::string timing_csv(std::vector<BenchmarkRow> rows);

struct AblationRow
{
    std::string estimator;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double nmse_compensated = 0.0;
    double nmse_uncompensated = 0.0;
    double delta_db = 0.0; // uncompensated minus compensated, in dB
};

std::vector<AblationRow> leakage_ablation(const ExperimentConfig &cfg, const ProgressFn &progress = {});
std::string ablation_csv(std::vector<AblationRow> rows);

struct SummaryPoint
{
    double mean = 0.0;
    double mean_db = 0.0;
    double std = 0.0;
    int count = 0;
};

// mean NMSE per (estimator, SNR) over the rows without errors
std::map<std::string, std::map<double, SummaryPoint>> summarize(const std::vector<BenchmarkRow> &rows);

// One file per figure: SNR in the first column, then mean, mean in dB and
// standard deviation per estimator.
std::filesystem::path emit_plots_csv(const std::vector<BenchmarkRow> &rows, const std::filesystem::path &dir,
                                     const std::string &figure);

void write_text(const std::filesystem::path &path, const std::string &text);

} // namespace ddchan

#endif

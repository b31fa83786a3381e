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

#include "ddchan/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ddchan
{

using json = nlohmann::json;

namespace
{
constexpr double kmh = 1.0 / 3.6;

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

bool is_admm_estimator(const std::string &name)
{
    return name == "cs" || name.rfind("nested-", 0) == 0 || name == "oracle-support";
}

// Estimator whose penalty weight a given estimator borrows.
std::string lambda_owner(const std::string &name) { return name == "oracle-support" ? "nested-scad" : name; }

PilotKind pilot_from_string(const std::string &s)
{
    if (s == "gaussian")
        return PilotKind::Gaussian;
    if (s == "constant")
        return PilotKind::Constant;
    if (s == "pn")
        return PilotKind::PseudoNoise;
    throw std::invalid_argument("unknown pilot kind '" + s + "'");
}

std::string pilot_to_string(PilotKind k)
{
    switch (k)
    {
    case PilotKind::Gaussian:
        return "gaussian";
    case PilotKind::Constant:
        return "constant";
    case PilotKind::PseudoNoise:
        return "pn";
    }
    return "gaussian";
}
} // namespace

const std::vector<std::string> &known_estimators()
{
    static const std::vector<std::string> names{"nested-soft", "nested-scad", "nested-mcp", "cs",
                                                "ls",          "wiener",      "hsd",        "oracle-support"};
    return names;
}

void ExperimentConfig::validate() const
{
    scenario.geometry.validate();
    scenario.speed.validate("speed range");
    scenario.separation.validate("separation range");
    grid.validate();
    pulse.validate();
    if (seeds.empty())
        throw std::invalid_argument("config: seed list is empty");
    if (snr_db.empty())
        throw std::invalid_argument("config: SNR list is empty");
    if (estimators.empty())
        throw std::invalid_argument("config: estimator list is empty");
    const auto &known = known_estimators();
    for (const auto &e : estimators)
        if (std::find(known.begin(), known.end(), e) == known.end())
            throw std::invalid_argument("config: unknown estimator '" + e + "'");
    if (lambda_grid.empty() || std::any_of(lambda_grid.begin(), lambda_grid.end(), [](double l) { return l < 0.0; }))
        throw std::invalid_argument("config: lambda grid must be nonempty and non-negative");
    if (!(lambda_ratio > 0.0))
        throw std::invalid_argument("config: lambda ratio must be positive");
    if (cv_folds < 2)
        throw std::invalid_argument("config: need at least two folds");
    if (calibration_seeds.empty())
        throw std::invalid_argument("config: calibration seed list is empty");
    if (rho == 0.0 || ls_rho == 0.0)
        throw std::invalid_argument("config: rho must be nonzero");
    if (max_iter < 1 || !(tol_rel > 0.0))
        throw std::invalid_argument("config: invalid iteration limits");
    if (!(scad_mu >= 3.0) || !(mcp_mu >= 2.0))
        throw std::invalid_argument("config: need SCAD mu >= 3 and MCP mu >= 2");
    if (threads < 1)
        throw std::invalid_argument("config: threads must be at least 1");
    if (!(hsd_gamma > 0.0))
        throw std::invalid_argument("config: hsd gamma must be positive");
    if (!(alpha_d > 0.0 && alpha_d < 1.0) || !(alpha_nu > 0.0 && alpha_nu < 1.0))
        throw std::invalid_argument("config: region thresholds must lie in (0, 1)");
    if (inflate_dm < 0 || inflate_dk < 0)
        throw std::invalid_argument("config: region inflation must be non-negative");
}

ExperimentConfig preset_config(const std::string &name)
{
    ExperimentConfig c;
    c.preset = name;
    auto &g = c.scenario.geometry;
    if (name == "full")
    {
        // Full-scale reference values; too large for a dense desk run.
        c.grid = {10e-9, 1024, 512, 256, 0.0};
        c.pulse = {0.25, 1e-6, 10e-9};
        c.scenario.counts = {10, 10, 400};
        c.pdp.decay_constant = 0.2e-6;
        // Keeps every excess delay inside the 256-tap window.
        g.section_length = 500.0;
        c.rho = 1.0;
        return c;
    }
    // Scaled presets: a slow propagation speed puts one delay tap at 80 m of
    // path length while the carrier wavelength keeps Dopplers in the kHz range.
    g.propagation_speed = 8e5;
    c.pdp.decay_constant = 4e-4;
    if (name == "desk")
    {
        c.rho = 2.0;
        c.lambda_ratio = 3.0;
        c.tol_rel = 1e-5;
        c.lambda_grid = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
        c.grid = {1e-4, 256, 128, 16, 0.0};
        c.pulse = {0.25, 8e-4, 1e-4};
        g.section_length = 1000.0;
        c.scenario.counts = {5, 5, 100};
        c.seeds.resize(20);
        std::iota(c.seeds.begin(), c.seeds.end(), std::uint64_t{1});
        return c;
    }
    if (name == "tiny")
    {
        c.grid = {1e-4, 64, 32, 8, 0.0};
        c.pulse = {0.25, 4e-4, 1e-4};
        g.section_length = 600.0;
        c.scenario.counts = {2, 2, 30};
        c.seeds = {1, 2, 3};
        c.snr_db = {10.0, 20.0};
        c.lambda_grid = {0.05, 0.2, 1.0};
        c.rho = 4.0;
        return c;
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

ExperimentConfig config_from_json(const std::string &text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ExperimentConfig c = preset_config(j.value("preset", std::string("desk")));
    try
    {
        if (j.contains("grid"))
        {
            const auto &g = j["grid"];
            c.grid.sample_period = g.value("sample_period", c.grid.sample_period);
            c.grid.block_length = g.value("block_length", c.grid.block_length);
            c.grid.doppler_half = g.value("doppler_half", c.grid.doppler_half);
            c.grid.delay_taps = g.value("delay_taps", c.grid.delay_taps);
        }
        if (j.contains("geometry"))
        {
            const auto &g = j["geometry"];
            auto &geo = c.scenario.geometry;
            geo.road_width = g.value("road_width", geo.road_width);
            geo.strip_width = g.value("strip_width", geo.strip_width);
            geo.section_length = g.value("section_length", geo.section_length);
            geo.propagation_speed = g.value("propagation_speed", geo.propagation_speed);
            if (g.contains("carrier_frequency"))
                geo.wavelength = speed_of_light / g["carrier_frequency"].get<double>();
            geo.wavelength = g.value("wavelength", geo.wavelength);
            if (g.contains("v_max_kmh"))
                geo.v_max = g["v_max_kmh"].get<double>() * kmh;
            geo.lanes_per_direction = g.value("lanes_per_direction", geo.lanes_per_direction);
        }
        if (j.contains("scenario"))
        {
            const auto &s = j["scenario"];
            auto &p = c.scenario;
            p.counts.mobile = s.value("mobile", p.counts.mobile);
            p.counts.static_discrete = s.value("static_discrete", p.counts.static_discrete);
            p.counts.diffuse = s.value("diffuse", p.counts.diffuse);
            if (s.contains("speed_kmh"))
            {
                const auto v = s["speed_kmh"].get<std::vector<double>>();
                if (v.size() != 2)
                    throw std::invalid_argument("config: speed_kmh needs two entries");
                p.speed = {v[0] * kmh, v[1] * kmh};
            }
            if (s.contains("separation_m"))
            {
                const auto v = s["separation_m"].get<std::vector<double>>();
                if (v.size() != 2)
                    throw std::invalid_argument("config: separation_m needs two entries");
                p.separation = {v[0], v[1]};
            }
            if (s.contains("sd_means"))
            {
                const auto v = s["sd_means"].get<std::vector<double>>();
                if (v.size() != 2)
                    throw std::invalid_argument("config: sd_means needs two entries");
                p.sd_mean_near = v[0];
                p.sd_mean_far = v[1];
            }
            p.sd_sigma = s.value("sd_sigma", p.sd_sigma);
        }
        if (j.contains("pdp"))
        {
            const auto &p = j["pdp"];
            c.pdp.ref_power = p.value("ref_power", c.pdp.ref_power);
            c.pdp.sd_offset_db = p.value("sd_offset_db", c.pdp.sd_offset_db);
            c.pdp.di_offset_db = p.value("di_offset_db", c.pdp.di_offset_db);
            c.pdp.decay_constant = p.value("decay_constant", c.pdp.decay_constant);
        }
        if (j.contains("pulse"))
        {
            c.pulse.rolloff = j["pulse"].value("rolloff", c.pulse.rolloff);
            c.pulse.support = j["pulse"].value("support", c.pulse.support);
        }
        c.pulse.sample_period = c.grid.sample_period;
        if (j.contains("pilot"))
            c.pilot = pilot_from_string(j["pilot"].get<std::string>());
        if (j.contains("snr_db"))
            c.snr_db = j["snr_db"].get<std::vector<double>>();
        if (j.contains("estimators"))
            c.estimators = j["estimators"].get<std::vector<std::string>>();
        if (j.contains("seeds"))
            c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("calibration_seeds"))
            c.calibration_seeds = j["calibration_seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("lambda_grid"))
            c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
        c.lambda_ratio = j.value("lambda_ratio", c.lambda_ratio);
        c.cv_folds = j.value("cv_folds", c.cv_folds);
        if (j.contains("admm"))
        {
            const auto &a = j["admm"];
            c.rho = a.value("rho", c.rho);
            c.max_iter = a.value("max_iter", c.max_iter);
            c.tol_rel = a.value("tol_rel", c.tol_rel);
            c.scad_mu = a.value("scad_mu", c.scad_mu);
            c.mcp_mu = a.value("mcp_mu", c.mcp_mu);
        }
        c.ls_rho = j.value("ls_rho", c.ls_rho);
        c.hsd_gamma = j.value("hsd_gamma", c.hsd_gamma);
        if (j.contains("regions"))
        {
            const auto &r = j["regions"];
            if (r.contains("source"))
            {
                const auto s = r["source"].get<std::string>();
                if (s == "geometric")
                    c.region_source = RegionSource::Geometric;
                else if (s == "data")
                    c.region_source = RegionSource::Data;
                else
                    throw std::invalid_argument("config: unknown region source '" + s + "'");
            }
            if (r.contains("delta_tau"))
            {
                if (r["delta_tau"].is_string())
                {
                    if (r["delta_tau"].get<std::string>() != "auto")
                        throw std::invalid_argument("config: delta_tau must be a number or \"auto\"");
                    c.delta_tau = 0.0;
                }
                else
                    c.delta_tau = r["delta_tau"].get<double>();
            }
            c.alpha_d = r.value("alpha_d", c.alpha_d);
            c.alpha_nu = r.value("alpha_nu", c.alpha_nu);
            c.inflate_dm = r.value("inflate_dm", c.inflate_dm);
            c.inflate_dk = r.value("inflate_dk", c.inflate_dk);
        }
        c.leakage = j.value("leakage", c.leakage);
        c.off_grid = j.value("off_grid", c.off_grid);
        c.threads = j.value("threads", c.threads);
    }
    catch (const json::exception &e)
    {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig &c)
{
    const auto &geo = c.scenario.geometry;
    json j;
    j["preset"] = c.preset;
    j["grid"] = {{"sample_period", c.grid.sample_period},
                 {"block_length", c.grid.block_length},
                 {"doppler_half", c.grid.doppler_half},
                 {"delay_taps", c.grid.delay_taps}};
    j["geometry"] = {{"road_width", geo.road_width},
                     {"strip_width", geo.strip_width},
                     {"section_length", geo.section_length},
                     {"wavelength", geo.wavelength},
                     {"propagation_speed", geo.propagation_speed},
                     {"v_max_kmh", geo.v_max / kmh},
                     {"lanes_per_direction", geo.lanes_per_direction}};
    json s = {{"mobile", c.scenario.counts.mobile},
              {"static_discrete", c.scenario.counts.static_discrete},
              {"diffuse", c.scenario.counts.diffuse},
              {"speed_kmh", {c.scenario.speed.min / kmh, c.scenario.speed.max / kmh}},
              {"separation_m", {c.scenario.separation.min, c.scenario.separation.max}},
              {"sd_sigma", c.scenario.sd_sigma}};
    if (!std::isnan(c.scenario.sd_mean_near) && !std::isnan(c.scenario.sd_mean_far))
        s["sd_means"] = {c.scenario.sd_mean_near, c.scenario.sd_mean_far};
    j["scenario"] = s;
    j["pdp"] = {{"ref_power", c.pdp.ref_power},
                {"sd_offset_db", c.pdp.sd_offset_db},
                {"di_offset_db", c.pdp.di_offset_db},
                {"decay_constant", c.pdp.decay_constant}};
    j["pulse"] = {{"rolloff", c.pulse.rolloff}, {"support", c.pulse.support}};
    j["pilot"] = pilot_to_string(c.pilot);
    j["snr_db"] = c.snr_db;
    j["estimators"] = c.estimators;
    j["seeds"] = c.seeds;
    j["calibration_seeds"] = c.calibration_seeds;
    j["lambda_grid"] = c.lambda_grid;
    j["lambda_ratio"] = c.lambda_ratio;
    j["cv_folds"] = c.cv_folds;
    j["admm"] = {{"rho", c.rho},
                 {"max_iter", c.max_iter},
                 {"tol_rel", c.tol_rel},
                 {"scad_mu", c.scad_mu},
                 {"mcp_mu", c.mcp_mu}};
    j["ls_rho"] = c.ls_rho;
    j["hsd_gamma"] = c.hsd_gamma;
    json r = {{"source", c.region_source == RegionSource::Geometric ? "geometric" : "data"},
              {"alpha_d", c.alpha_d},
              {"alpha_nu", c.alpha_nu},
              {"inflate_dm", c.inflate_dm},
              {"inflate_dk", c.inflate_dk}};
    if (c.delta_tau > 0.0)
        r["delta_tau"] = c.delta_tau;
    else
        r["delta_tau"] = "auto";
    j["regions"] = r;
    j["leakage"] = c.leakage;
    j["off_grid"] = c.off_grid;
    j["threads"] = c.threads;
    return j.dump(2);
}

double nmse(const CVector &x_hat, const CVector &x_true)
{
    if (x_hat.size() != x_true.size())
        throw std::invalid_argument("nmse: length mismatch");
    const double e = x_true.squaredNorm();
    if (e == 0.0)
        throw std::invalid_argument("nmse: true channel is zero");
    return (x_hat - x_true).squaredNorm() / e;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 over the pair
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace
{
Regions inflate(Regions r, const ExperimentConfig &cfg, const DelayDopplerGrid &grid)
{
    r.dm = std::min(r.dm + cfg.inflate_dm, grid.delay_taps - r.m0);
    r.m_max = std::max(r.m_max, r.m0 + r.dm - 1);
    r.dk = std::min(r.dk + cfg.inflate_dk, r.k_s);
    return r;
}

GroupPartition partition_for(const ExperimentConfig &cfg, const Trial &trial, const Measurement &meas,
                             const RidgeSystem &ls_system)
{
    if (cfg.region_source == RegionSource::Geometric)
        return trial.partition;
    const SpreadingFunction h_ls(trial.grid, ls_system.ridge_estimate(meas.y));
    const auto est = estimate_regions_from_data(h_ls, cfg.alpha_d, cfg.alpha_nu);
    return build_partition(inflate(est.lattice, cfg, trial.grid), trial.grid);
}
} // namespace

Trial prepare_channel(const ExperimentConfig &cfg, std::uint64_t seed)
{
    Trial t;
    t.seed = seed;
    const auto &geo = cfg.scenario.geometry;
    t.scenario = sample_scenario(cfg.scenario, derive_seed(seed, 1));
    t.scenario = draw_gains(std::move(t.scenario), geo, cfg.pdp, derive_seed(seed, 2));
    auto paths = path_parameters(t.scenario, geo);
    t.grid = cfg.grid;
    t.grid.t0 = paths.front().delay;
    t.truth = ground_truth_spreading(t.scenario, geo, t.grid);
    for (Index j = 0; j < t.truth.x.size(); ++j)
        if (t.truth.x[j] != cplx{0.0, 0.0})
            t.support.push_back(j);
    t.diffuse_variance = diffuse_variance_map(t.scenario, geo, t.grid, cfg.pdp);

    const double dt = cfg.delta_tau > 0.0 ? cfg.delta_tau : compact_delay_spread(t.scenario, geo, t.grid);
    t.geometric = geometric_regions(t.scenario, geo, t.grid, dt);
    t.regions = inflate(t.geometric.lattice, cfg, t.grid);
    t.partition = build_partition(t.regions, t.grid);
    return t;
}

Trial prepare_trial(const ExperimentConfig &cfg, std::uint64_t seed)
{
    Trial t = prepare_channel(cfg, seed);
    auto paths = path_parameters(t.scenario, cfg.scenario.geometry);
    PulseShape pulse = cfg.pulse;
    pulse.sample_period = t.grid.sample_period;
    const auto pilot = generate_pilot(cfg.pilot, t.grid, derive_seed(seed, 3));
    const CMatrix A_model = build_sensing_matrix(pilot, t.grid, pulse);
    if (cfg.off_grid || !cfg.leakage)
    {
        const CMatrix S = build_pilot_matrix(pilot, t.grid);
        if (cfg.off_grid)
        {
            // Exact delays; Dopplers on the lattice.
            const double beta = t.grid.sample_period * static_cast<double>(t.grid.doppler_bins());
            for (auto &p : paths)
                p.doppler = static_cast<double>(t.grid.doppler_bin(p.doppler)) / beta;
            t.clean = S * physical_leaky_spreading(paths, t.grid, pulse).x;
        }
        else
            t.clean = A_model * t.truth.x;
        t.A = cfg.leakage ? A_model : S;
    }
    else
    {
        t.A = A_model;
        t.clean = t.A * t.truth.x;
    }
    t.unit_noise = complex_gaussian(t.grid.block_length, 1.0, derive_seed(seed, 4));
    return t;
}

Measurement trial_measurement(const Trial &trial, double snr_db)
{
    Measurement m;
    m.noise_variance = noise_variance_for_snr(trial.clean, snr_db);
    m.y = trial.clean + std::sqrt(m.noise_variance) * trial.unit_noise;
    return m;
}

TrialSolver::TrialSolver(const ExperimentConfig &cfg, const Trial &trial)
    : cfg_(cfg), trial_(trial), admm_system_(trial.A, cfg.rho), ls_system_(trial.A, cfg.ls_rho)
{
}

AdmmConfig TrialSolver::admm_config(const std::string &estimator, double lambda) const
{
    AdmmConfig c;
    c.rho = cfg_.rho;
    c.max_iter = cfg_.max_iter;
    c.tol_rel = cfg_.tol_rel;
    c.track_objective = track_objective_;
    const std::string owner = lambda_owner(estimator);
    if (owner == "cs")
    {
        c.lambda_group = 0.0;
        c.lambda_elem = lambda;
        return c;
    }
    c.lambda_group = lambda;
    c.lambda_elem = lambda / cfg_.lambda_ratio;
    if (owner == "nested-soft")
        c.f_group = Regularizer::soft();
    else if (owner == "nested-scad")
        c.f_group = Regularizer::scad(cfg_.scad_mu);
    else if (owner == "nested-mcp")
        c.f_group = Regularizer::mcp(cfg_.mcp_mu);
    else
        throw std::invalid_argument("admm_config: '" + estimator + "' is not an ADMM estimator");
    return c;
}

EstimatorOutput TrialSolver::run(const std::string &name, const Measurement &meas, double lambda_units) const
{
    EstimatorOutput out;
    const double scale = std::sqrt(meas.noise_variance * static_cast<double>(trial_.grid.block_length));
    if (name == "ls")
    {
        out.x_hat = ls_system_.ridge_estimate(meas.y);
        return out;
    }
    if (name == "wiener")
    {
        const auto mask = prototype_support(trial_.grid, trial_.regions.k_max, trial_.regions.m_max);
        out.x_hat = wiener_estimate(meas.y, trial_.A, mask, meas.noise_variance);
        return out;
    }
    if (name == "hsd")
    {
        out.x_hat = hsd_estimate(meas.y, ls_system_, trial_.diffuse_variance, meas.noise_variance, cfg_.hsd_gamma);
        return out;
    }
    const AdmmConfig c = admm_config(name, lambda_units * scale);
    const GroupPartition partition = partition_for(cfg_, trial_, meas, ls_system_);
    if (name == "oracle-support")
    {
        out.x_hat = known_support_estimate(meas.y, trial_.A, trial_.support, partition, c);
        return out;
    }
    const auto res = admm_solve(meas.y, admm_system_, name == "cs" ? singleton_partition(trial_.A.cols()) : partition, c);
    out.x_hat = res.x_hat;
    out.iterations = res.iterations;
    out.history = res.history;
    return out;
}

LambdaTable calibrate_lambdas(const ExperimentConfig &cfg)
{
    cfg.validate();
    std::set<std::string> owners;
    for (const auto &e : cfg.estimators)
        if (is_admm_estimator(e))
            owners.insert(lambda_owner(e));
    LambdaTable table;
    if (owners.empty())
        return table;

    std::map<std::pair<std::string, double>, std::vector<double>> scores;
    for (auto cal_seed : cfg.calibration_seeds)
    {
        const Trial trial = prepare_trial(cfg, cal_seed);
        const TrialSolver solver(cfg, trial);
        const RidgeSystem ls_system(trial.A, cfg.ls_rho);
        for (double snr : cfg.snr_db)
        {
            const Measurement meas = trial_measurement(trial, snr);
            const double scale = std::sqrt(meas.noise_variance * static_cast<double>(trial.grid.block_length));
            std::vector<double> grid_abs;
            for (double l : cfg.lambda_grid)
                grid_abs.push_back(l * scale);
            const GroupPartition partition = partition_for(cfg, trial, meas, ls_system);
            for (const auto &owner : owners)
            {
                const bool element_only = owner == "cs";
                const AdmmConfig base = solver.admm_config(owner, 1.0);
                const auto cv =
                    cross_validate(meas.y, trial.A, element_only ? singleton_partition(trial.A.cols()) : partition,
                                   grid_abs, cfg.lambda_ratio, cfg.cv_folds, base, derive_seed(cal_seed, 5),
                                   element_only);
                auto &acc = scores[{owner, snr}];
                acc.resize(cfg.lambda_grid.size(), 0.0);
                for (std::size_t i = 0; i < cv.scores.size(); ++i)
                    acc[i] += cv.scores[i];
            }
        }
    }
    for (const auto &[key, sc] : scores)
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < sc.size(); ++i)
            if (sc[i] < sc[best])
                best = i;
        table[key] = cfg.lambda_grid[best];
    }
    for (const auto &e : cfg.estimators)
        if (is_admm_estimator(e) && e != lambda_owner(e))
            for (double snr : cfg.snr_db)
                table[{e, snr}] = table.at({lambda_owner(e), snr});
    return table;
}

namespace
{
std::vector<BenchmarkRow> run_seed(const ExperimentConfig &cfg, const LambdaTable &lambdas, std::uint64_t seed,
                                   const ProgressFn &progress)
{
    std::vector<BenchmarkRow> rows;
    std::unique_ptr<Trial> trial;
    std::unique_ptr<TrialSolver> solver;
    std::string setup_error;
    try
    {
        trial = std::make_unique<Trial>(prepare_trial(cfg, seed));
        solver = std::make_unique<TrialSolver>(cfg, *trial);
    }
    catch (const std::exception &e)
    {
        setup_error = e.what();
    }
    for (double snr : cfg.snr_db)
    {
        Measurement meas;
        if (trial)
            meas = trial_measurement(*trial, snr);
        for (const auto &name : cfg.estimators)
        {
            BenchmarkRow row;
            row.estimator = name;
            row.snr_db = snr;
            row.seed = seed;
            if (!setup_error.empty())
            {
                row.error = setup_error;
                row.nmse = std::numeric_limits<double>::quiet_NaN();
                rows.push_back(row);
                continue;
            }
            const auto t_start = std::chrono::steady_clock::now();
            try
            {
                double lambda = 0.0;
                if (is_admm_estimator(name))
                    lambda = lambdas.at({name, snr});
                const auto out = solver->run(name, meas, lambda);
                row.nmse = nmse(out.x_hat, trial->truth.x);
                row.iterations = out.iterations;
            }
            catch (const std::exception &e)
            {
                row.error = e.what();
                row.nmse = std::numeric_limits<double>::quiet_NaN();
            }
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            if (progress)
            {
                std::ostringstream os;
                os << "seed " << seed << " snr " << snr << " " << name << " nmse " << linear_to_db(row.nmse)
                   << " dB";
                progress(os.str());
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}
} // namespace

std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig &cfg, const LambdaTable &lambdas,
                                        const ProgressFn &progress)
{
    cfg.validate();
    const std::size_t n = cfg.seeds.size();
    std::vector<std::vector<BenchmarkRow>> per_seed(n);
    std::mutex progress_mutex;
    const ProgressFn guarded = progress ? ProgressFn([&](const std::string &msg) {
        std::lock_guard lock(progress_mutex);
        progress(msg);
    })
                                        : ProgressFn{};
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
            per_seed[i] = run_seed(cfg, lambdas, cfg.seeds[i], guarded);
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();
    std::vector<BenchmarkRow> rows;
    for (auto &r : per_seed)
        rows.insert(rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    return rows;
}

std::vector<BenchmarkRow> run_benchmark(const ExperimentConfig &cfg, const ProgressFn &progress)
{
    return run_benchmark(cfg, calibrate_lambdas(cfg), progress);
}

namespace
{
void sort_rows(std::vector<BenchmarkRow> &rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const BenchmarkRow &a, const BenchmarkRow &b) {
        return std::tie(a.estimator, a.snr_db, a.seed) < std::tie(b.estimator, b.snr_db, b.seed);
    });
}

std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s)
    {
        if (ch == '"')
            out += '"';
        out += ch == '\n' ? ' ' : ch;
    }
    return out + "\"";
}
} // namespace

std::string benchmark_csv(std::vector<BenchmarkRow> rows)
{
    sort_rows(rows);
    std::ostringstream os;
    os << "estimator,snr_db,seed,nmse,nmse_db,iterations,error\n";
    for (const auto &r : rows)
        os << r.estimator << ',' << fmt(r.snr_db) << ',' << r.seed << ',' << fmt(r.nmse) << ','
           << fmt(linear_to_db(r.nmse)) << ',' << r.iterations << ',' << csv_field(r.error) << '\n';
    return os.str();
}

std::string timing_csv(std::vector<BenchmarkRow> rows)
{
    sort_rows(rows);
    std::ostringstream os;
    os << "estimator,snr_db,seed,wall_time_s\n";
    for (const auto &r : rows)
        os << r.estimator << ',' << fmt(r.snr_db) << ',' << r.seed << ',' << fmt(r.wall_time) << '\n';
    return os.str();
}

std::vector<AblationRow> leakage_ablation(const ExperimentConfig &base_cfg, const ProgressFn &progress)
{
    ExperimentConfig cfg = base_cfg;
    cfg.leakage = true;
    cfg.validate();
    const LambdaTable lambdas = calibrate_lambdas(cfg);
    std::vector<AblationRow> rows;
    for (auto seed : cfg.seeds)
    {
        const Trial comp = prepare_trial(cfg, seed);
        Trial uncomp = comp;
        {
            const auto pilot = generate_pilot(cfg.pilot, comp.grid, derive_seed(seed, 3));
            uncomp.A = build_pilot_matrix(pilot, comp.grid);
        }
        const TrialSolver s_comp(cfg, comp);
        const TrialSolver s_uncomp(cfg, uncomp);
        for (double snr : cfg.snr_db)
        {
            const Measurement meas = trial_measurement(comp, snr);
            for (const auto &name : cfg.estimators)
            {
                const double lambda = is_admm_estimator(name) ? lambdas.at({name, snr}) : 0.0;
                AblationRow row;
                row.estimator = name;
                row.snr_db = snr;
                row.seed = seed;
                row.nmse_compensated = nmse(s_comp.run(name, meas, lambda).x_hat, comp.truth.x);
                row.nmse_uncompensated = nmse(s_uncomp.run(name, meas, lambda).x_hat, comp.truth.x);
                row.delta_db = linear_to_db(row.nmse_uncompensated) - linear_to_db(row.nmse_compensated);
                if (progress)
                    progress("seed " + std::to_string(seed) + " " + name + " delta " + std::to_string(row.delta_db) +
                             " dB");
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::string ablation_csv(std::vector<AblationRow> rows)
{
    std::stable_sort(rows.begin(), rows.end(), [](const AblationRow &a, const AblationRow &b) {
        return std::tie(a.estimator, a.snr_db, a.seed) < std::tie(b.estimator, b.snr_db, b.seed);
    });
    std::ostringstream os;
    os << "estimator,snr_db,seed,nmse_compensated,nmse_uncompensated,delta_db\n";
    for (const auto &r : rows)
        os << r.estimator << ',' << fmt(r.snr_db) << ',' << r.seed << ',' << fmt(r.nmse_compensated) << ','
           << fmt(r.nmse_uncompensated) << ',' << fmt(r.delta_db) << '\n';
    return os.str();
}

std::map<std::string, std::map<double, SummaryPoint>> summarize(const std::vector<BenchmarkRow> &rows)
{
    std::map<std::string, std::map<double, std::vector<double>>> groups;
    for (const auto &r : rows)
        if (r.error.empty() && std::isfinite(r.nmse))
            groups[r.estimator][r.snr_db].push_back(r.nmse);
    std::map<std::string, std::map<double, SummaryPoint>> out;
    for (const auto &[est, by_snr] : groups)
        for (const auto &[snr, vals] : by_snr)
        {
            SummaryPoint p;
            p.count = static_cast<int>(vals.size());
            p.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / p.count;
            p.mean_db = linear_to_db(p.mean);
            double ss = 0.0;
            for (double v : vals)
                ss += (v - p.mean) * (v - p.mean);
            p.std = p.count > 1 ? std::sqrt(ss / (p.count - 1)) : 0.0;
            out[est][snr] = p;
        }
    return out;
}

void write_text(const std::filesystem::path &path, const std::string &text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path emit_plots_csv(const std::vector<BenchmarkRow> &rows, const std::filesystem::path &dir,
                                     const std::string &figure)
{
    if (rows.empty())
        throw std::invalid_argument("emit_plots_csv: no rows");
    const auto summary = summarize(rows);
    std::set<double> snrs;
    for (const auto &r : rows)
        snrs.insert(r.snr_db);
    std::ostringstream os;
    os << "# snr_db";
    for (const auto &[est, _] : summary)
        os << ' ' << est << "_mean " << est << "_mean_db " << est << "_std";
    os << '\n';
    for (double snr : snrs)
    {
        os << fmt(snr);
        for (const auto &[est, by_snr] : summary)
        {
            const auto it = by_snr.find(snr);
            if (it == by_snr.end())
                os << " nan nan nan";
            else
                os << ' ' << fmt(it->second.mean) << ' ' << fmt(it->second.mean_db) << ' ' << fmt(it->second.std);
        }
        os << '\n';
    }
    const auto path = dir / (figure + ".csv");
    write_text(path, os.str());
    return path;
}

} // namespace ddchan

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

// Command-line front end: simulate, regions, estimate, benchmark,
// ablate-leakage. Results are written as CSV under --out.

#include "ddchan/harness.hpp"
#include "ddchan/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace ddchan;

namespace
{

struct CommonOptions
{
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out = "ddchan_out";
    bool quiet = false;
};

void add_common(CLI::App *cmd, CommonOptions &o)
{
    cmd->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "Named preset")->check(CLI::IsMember({"tiny", "desk", "full"}));
    cmd->add_option("--seed", o.seed, "Run a single seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("-q,--quiet", o.quiet, "No progress output");
}

ExperimentConfig resolve_config(const CommonOptions &o)
{
    ExperimentConfig cfg;
    if (!o.config.empty())
    {
        cfg = load_config(o.config);
        if (!o.preset.empty() && o.preset != cfg.preset)
            throw std::invalid_argument("--preset " + o.preset + " conflicts with the config preset " + cfg.preset);
    }
    else
        cfg = preset_config(o.preset.empty() ? "desk" : o.preset);
    if (o.seed)
        cfg.seeds = {*o.seed};
    cfg.validate();
    return cfg;
}

ProgressFn progress_for(const CommonOptions &o)
{
    if (o.quiet)
        return {};
    return [](const std::string &msg) { std::cerr << msg << '\n'; };
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return buf;
}

std::string lambda_csv(const LambdaTable &t)
{
    std::ostringstream os;
    os << "estimator,snr_db,lambda_units\n";
    for (const auto &[key, value] : t)
        os << key.first << ',' << fmt(key.second) << ',' << fmt(value) << '\n';
    return os.str();
}

void cmd_simulate(const CommonOptions &o, double snr, bool matrices)
{
    const auto cfg = resolve_config(o);
    const fs::path out = o.out;
    for (auto seed : cfg.seeds)
    {
        const Trial t = matrices ? prepare_trial(cfg, seed) : prepare_channel(cfg, seed);
        const fs::path dir = out / ("seed_" + std::to_string(seed));
        write_text(dir / "scenario.csv", scenario_to_csv(t.scenario));
        write_text(dir / "truth.csv", spreading_to_csv(t.truth));
        write_text(dir / "regions.csv", regions_to_csv(t.regions));
        write_text(dir / "partition.csv", partition_to_csv(t.partition));
        if (matrices)
        {
            const Measurement m = trial_measurement(t, snr);
            write_text(dir / "A.csv", matrix_to_csv(t.A));
            write_text(dir / "y.csv", matrix_to_csv(m.y));
            PulseShape pulse = cfg.pulse;
            pulse.sample_period = t.grid.sample_period;
            const auto pilot = generate_pilot(cfg.pilot, t.grid, derive_seed(seed, 3));
            write_text(dir / "S.csv", matrix_to_csv(build_pilot_matrix(pilot, t.grid)));
            write_text(dir / "G.csv", matrix_to_csv(build_leakage_matrix(t.grid, pulse)));
        }
        if (!o.quiet)
            std::cerr << "seed " << seed << ": " << t.scenario.scatterers.size() << " paths, " << t.support.size()
                      << " nonzero bins -> " << dir.string() << '\n';
    }
}

void cmd_regions(const CommonOptions &o, const std::string &input, double snr)
{
    auto cfg = resolve_config(o);
    SpreadingFunction h;
    std::optional<Regions> geometric;
    if (!input.empty())
        h = import_spreading_csv(input);
    else
    {
        const std::uint64_t seed = cfg.seeds.front();
        const Trial t = prepare_trial(cfg, seed);
        const Measurement m = trial_measurement(t, snr);
        h = SpreadingFunction(t.grid, RidgeSystem(t.A, cfg.ls_rho).ridge_estimate(m.y));
        geometric = t.geometric.lattice;
    }
    const auto est = estimate_regions_from_data(h, cfg.alpha_d, cfg.alpha_nu);
    for (const auto &w : est.warnings)
        std::cerr << "warning: " << w << '\n';
    write_text(fs::path(o.out) / "regions_estimated.csv", regions_to_csv(est.lattice));
    std::cout << regions_to_csv(est.lattice);
    if (geometric)
    {
        write_text(fs::path(o.out) / "regions_geometric.csv", regions_to_csv(*geometric));
        std::cout << "# geometric\n" << regions_to_csv(*geometric);
    }
}

void cmd_estimate(const CommonOptions &o, const std::string &estimator, double snr, std::optional<double> lambda)
{
    auto cfg = resolve_config(o);
    cfg.estimators = {estimator};
    cfg.snr_db = {snr};
    cfg.validate();
    const std::uint64_t seed = cfg.seeds.front();
    double lam = 0.0;
    if (lambda)
        lam = *lambda;
    else if (estimator != "ls" && estimator != "wiener" && estimator != "hsd")
        lam = calibrate_lambdas(cfg).at({estimator, snr});

    const Trial t = prepare_trial(cfg, seed);
    const Measurement m = trial_measurement(t, snr);
    TrialSolver solver(cfg, t);
    solver.set_track_objective(true);
    const auto r = solver.run(estimator, m, lam);
    const double e = nmse(r.x_hat, t.truth.x);

    const fs::path out = o.out;
    write_text(out / "estimate.csv", spreading_to_csv(SpreadingFunction(t.grid, r.x_hat)));
    write_text(out / "truth.csv", spreading_to_csv(t.truth));
    std::ostringstream log;
    for (const auto &rec : r.history)
    {
        nlohmann::json j = {{"iteration", rec.iteration}, {"step_norm", rec.step_norm},
                            {"primal_residual", rec.primal_residual}, {"objective", rec.objective}};
        log << j.dump() << '\n';
    }
    write_text(out / "iterations.jsonl", log.str());
    std::cout << "estimator " << estimator << " seed " << seed << " snr_db " << snr << " lambda_units " << lam
              << " iterations " << r.iterations << " nmse_db " << linear_to_db(e) << '\n';
}

void cmd_benchmark(const CommonOptions &o)
{
    const auto cfg = resolve_config(o);
    const auto progress = progress_for(o);
    if (progress)
        progress("calibrating penalty weights");
    const auto lambdas = calibrate_lambdas(cfg);
    const auto rows = run_benchmark(cfg, lambdas, progress);
    const fs::path out = o.out;
    write_text(out / "benchmark.csv", benchmark_csv(rows));
    write_text(out / "timing.csv", timing_csv(rows));
    write_text(out / "lambdas.csv", lambda_csv(lambdas));
    write_text(out / "config.json", config_to_json(cfg) + "\n");
    emit_plots_csv(rows, out / "plots", "nmse_vs_snr");
    for (const auto &[est, by_snr] : summarize(rows))
        for (const auto &[snr, p] : by_snr)
            std::cout << est << " snr " << snr << " mean_nmse_db " << p.mean_db << " n " << p.count << '\n';
}

void cmd_ablate(const CommonOptions &o)
{
    auto cfg = resolve_config(o);
    cfg.off_grid = true;
    const auto rows = leakage_ablation(cfg, progress_for(o));
    write_text(fs::path(o.out) / "ablation.csv", ablation_csv(rows));
    std::map<std::pair<std::string, double>, std::pair<double, int>> mean;
    for (const auto &r : rows)
    {
        auto &[sum, n] = mean[{r.estimator, r.snr_db}];
        sum += r.delta_db;
        ++n;
    }
    for (const auto &[key, v] : mean)
        std::cout << key.first << " snr " << key.second << " mean_delta_db " << v.first / v.second << '\n';
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Delay-Doppler channel estimation experiments"};
    app.require_subcommand(1);

    CommonOptions sim_o, reg_o, est_o, bench_o, abl_o;

    auto *sim = app.add_subcommand("simulate", "Draw scenarios and export ground truth");
    add_common(sim, sim_o);
    double sim_snr = 20.0;
    bool sim_matrices = false;
    sim->add_option("--snr", sim_snr, "SNR of the exported measurement [dB]");
    sim->add_flag("--matrices", sim_matrices, "Also export S, G, A and y");

    auto *reg = app.add_subcommand("regions", "Estimate regions from a spreading function");
    add_common(reg, reg_o);
    std::string reg_input;
    double reg_snr = 20.0;
    reg->add_option("--input", reg_input, "Spreading-function CSV (default: LS estimate of a simulated trial)")
        ->check(CLI::ExistingFile);
    reg->add_option("--snr", reg_snr, "SNR of the simulated measurement [dB]");

    auto *est = app.add_subcommand("estimate", "Run one estimator on one trial");
    add_common(est, est_o);
    std::string est_name = "nested-scad";
    double est_snr = 20.0;
    std::optional<double> est_lambda;
    est->add_option("--estimator", est_name)->check(CLI::IsMember(known_estimators()));
    est->add_option("--snr", est_snr, "[dB]");
    est->add_option("--lambda", est_lambda, "Penalty weight in units of sigma sqrt(N_r); cross-validated if absent");

    auto *bench = app.add_subcommand("benchmark", "Monte-Carlo NMSE sweep");
    add_common(bench, bench_o);

    auto *abl = app.add_subcommand("ablate-leakage", "Compare A = S G against A = S on off-grid data");
    add_common(abl, abl_o);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*sim)
            cmd_simulate(sim_o, sim_snr, sim_matrices);
        else if (*reg)
            cmd_regions(reg_o, reg_input, reg_snr);
        else if (*est)
            cmd_estimate(est_o, est_name, est_snr, est_lambda);
        else if (*bench)
            cmd_benchmark(bench_o);
        else if (*abl)
            cmd_ablate(abl_o);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

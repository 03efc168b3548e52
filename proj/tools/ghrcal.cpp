// SPDX-License-Identifier: Apache-2.0
//
// ghrsync - joint clock offset and RF phase calibration for distributed sensing networks
// Copyright (C) 2026 The ghrsync Authors
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

// Command-line front end: simulate, calibrate, sweep, crb, geometry, report.

#include "ghr/experiment.hpp"
#include "ghr/geometry.hpp"
#include "ghr/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ghr;

namespace
{

constexpr int kExitConfig = 2;
constexpr int kExitAllFailed = 3;

int cmd_simulate(const ExperimentConfig &cfg, const fs::path &out)
{
    const Scene scene = scene_at(cfg, 0);
    const auto obs = synthesize_observations(scene);
    fs::create_directories(out);
    export_observation(obs, out / "observation.bin", out / "observation.hdr");
    ExtractionOptions eo;
    eo.window = cfg.processing.window;
    eo.source = cfg.processing.source;
    const auto features = extract_features(obs, eo);
    for (std::size_t m = 0; m < features.size(); ++m)
    {
        const auto path = out / ("trajectory_node" + std::to_string(m + 2) + ".csv");
        write_trajectory_csv(features[m].trajectory, path);
        std::printf("node %zu: %zu snapshots (%zu valid), cycle slip %s -> %s\n", m + 2, features[m].trajectory.size(),
                    features[m].trajectory.valid_count(), features[m].cycle_slip ? "yes" : "no", path.c_str());
    }
    return 0;
}

int cmd_calibrate(const ExperimentConfig &cfg)
{
    const Scene scene = scene_at(cfg, 0);
    const auto records = run_trial(scene, cfg.methods, cfg.processing, cfg.twme);
    bool any_ok = false;
    for (const auto &rec : records)
    {
        std::printf("# method %s\n", std::string(to_string(rec.method)).c_str());
        if (rec.failed)
        {
            std::printf("# failed: %s\n", rec.failure.c_str());
            continue;
        }
        any_ok = true;
        CalibrationResult cal;
        RealSeq dT, gamma;
        for (const auto &n : rec.nodes)
        {
            NodeCalibration c;
            c.clock_offset_est_s = n.dT_est_s;
            c.rf_phase_est_rad = n.gamma_est_rad;
            cal.nodes.push_back(c);
            dT.push_back(n.dT_true_s);
            gamma.push_back(n.gamma_true_rad);
        }
        if (rec.method == Method::Ghr || rec.method == Method::GhrFast)
        {
            const auto obs = synthesize_observations(scene);
            const auto g = run_ghr(scene, obs, cfg.processing, rec.method == Method::GhrFast);
            cal = g.calibration;
        }
        write_calibration_csv(std::cout, cal, dT, gamma);
    }
    std::cout.flush();
    return any_ok ? 0 : kExitAllFailed;
}

int cmd_sweep(ExperimentConfig cfg, const std::string &out)
{
    if (!out.empty())
        cfg.output_dir = out;
    const auto result = monte_carlo(cfg);
    emit_report(result, cfg.output_dir);
    bool any_ok = false;
    for (const auto &p : result.points)
        any_ok = any_ok || p.trials_ok > 0;
    for (Method m : cfg.methods)
    {
        const auto s = result.series(m);
        const std::string name(to_string(m));
        if (cfg.axis == SweepAxis::ApertureM)
        {
            const auto c = collapse_point(s);
            std::printf("%s: collapse at %s m\n", name.c_str(), c ? std::to_string(*c).c_str() : "(none)");
        }
        if (cfg.axis == SweepAxis::SnrDb)
        {
            const auto t = convergence_threshold(s);
            std::printf("%s: convergence threshold %s dB\n", name.c_str(), t ? std::to_string(*t).c_str() : "(none)");
        }
    }
    std::printf("wrote %s\n", (cfg.output_dir / "sweep.csv").c_str());
    return any_ok ? 0 : kExitAllFailed;
}

int cmd_crb(const ExperimentConfig &cfg)
{
    std::printf("# sweep axis %s\n", std::string(to_string(cfg.axis)).c_str());
    std::printf("sweep_value,snr_db,max_aperture_m,snapshots,crb_clock_s2,crb_phase_rad2,sqrt_crb_clock_ns,sqrt_crb_phase_deg\n");
    for (std::size_t i = 0; i < sweep_size(cfg); ++i)
    {
        const Scene s = scene_at(cfg, i);
        const auto b = scene_crb(s, cfg.processing);
        const auto &wf = s.waveform;
        std::printf("%.10g,%.6g,%.6g,%ld,%.9e,%.9e,%.9e,%.9e\n", cfg.axis == SweepAxis::None ? 0.0 : cfg.values[i],
                    s.snr_db, max_aperture_m(wf.sample_rate_hz, wf.duration_s, wf.bandwidth_hz), b.snapshots,
                    b.crb_clock_s2, b.crb_phase_rad2(), std::sqrt(b.crb_clock_s2) * 1e9,
                    std::sqrt(b.crb_phase_rad2()) * 180.0 / kPi);
    }
    return 0;
}

int cmd_geometry(const ExperimentConfig &cfg, const fs::path &out)
{
    const auto rep = geometry_report(scene_at(cfg, 0), cfg.processing);
    write_geometry(rep, out);
    for (std::size_t m = 0; m < rep.nodes.size(); ++m)
    {
        const auto &g = rep.nodes[m];
        std::printf("node %zu: line R2 %.9f, line residual %.3e rad, quadratic %.3e rad, plane %.3e rad\n", m + 2,
                    g.line_r2, g.line_residual_rad, g.quadratic_residual_rad, g.plane_residual_rad);
    }
    std::printf("frequency clusters: %d\n", rep.frequency_clusters);
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Joint clock offset and RF phase calibration for distributed receivers"};
    app.require_subcommand(1);
    std::string config_path, out_dir, in_dir;

    auto *sim = app.add_subcommand("simulate", "synthesize one scene and dump observations and trajectories");
    sim->add_option("--config", config_path, "experiment config (INI or JSON)")->required();
    sim->add_option("--out", out_dir, "output directory")->required();

    auto *cal = app.add_subcommand("calibrate", "run one trial and print the calibration result");
    cal->add_option("--config", config_path, "experiment config (INI or JSON)")->required();

    auto *sweep = app.add_subcommand("sweep", "Monte Carlo sweep; writes sweep.csv and sweep.svg");
    sweep->add_option("--config", config_path, "experiment config (INI or JSON)")->required();
    sweep->add_option("--out", out_dir, "output directory (overrides the config)");

    auto *crb_cmd = app.add_subcommand("crb", "print the bounds for every sweep point");
    crb_cmd->add_option("--config", config_path, "experiment config (INI or JSON)")->required();

    auto *geo = app.add_subcommand("geometry", "phase-space projection datasets and fit diagnostics");
    geo->add_option("--config", config_path, "experiment config (INI or JSON)")->required();
    geo->add_option("--out", out_dir, "output directory")->required();

    auto *rep = app.add_subcommand("report", "regenerate sweep.svg from sweep.csv");
    rep->add_option("--in", in_dir, "directory holding sweep.csv")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        // --help is reported through the same exception with a zero code
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try
    {
        if (rep->parsed())
        {
            regenerate_report(in_dir);
            std::printf("wrote %s\n", (fs::path(in_dir) / "sweep.svg").c_str());
            return 0;
        }
        const auto cfg = load_config(config_path);
        if (sim->parsed())
            return cmd_simulate(cfg, out_dir);
        if (cal->parsed())
            return cmd_calibrate(cfg);
        if (sweep->parsed())
            return cmd_sweep(cfg, out_dir);
        if (crb_cmd->parsed())
            return cmd_crb(cfg);
        if (geo->parsed())
            return cmd_geometry(cfg, out_dir);
    }
    catch (const ConfigError &e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

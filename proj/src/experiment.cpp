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

#include "ghr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ghr
{

namespace
{

std::vector<bool> valid_snapshots(const Scene &scene, std::span<const double> ts, const ProcessingOptions &opts)
{
    const std::size_t n = ts.size();
    const std::size_t edge = std::max<std::size_t>(1, static_cast<std::size_t>(opts.window / 2));
    std::vector<bool> valid(n, false);
    for (std::size_t k = edge; k + edge < n; ++k)
        valid[k] = true;

    const auto &wf = scene.waveform;
    if (wf.kind != WaveformKind::FSK2)
        return valid;

    // Around each hop the reference and the delayed node transmit different tones.
    double max_spatial = 0.0;
    for (const auto &node : scene.nodes)
        for (int p = 0; p < node.subarray_elems; ++p)
            max_spatial = std::max(max_spatial, std::abs(element_delay(node, scene.doa_rad, p, wf.carrier_hz)));
    const double fs = wf.sample_rate_hz;
    const double before = (static_cast<double>(edge) + 2.0) / fs;
    const double after = before + max_spatial + opts.fsk_hop_guard_s;
    const double R = *wf.fsk_symbol_rate_baud;
    const auto symbols = static_cast<long>(std::ceil(wf.duration_s * R - 1e-9));
    for (long h = 1; h < symbols; ++h)
    {
        const double hop = static_cast<double>(h) / R;
        for (std::size_t k = 0; k < n; ++k)
            if (ts[k] >= hop - before && ts[k] <= hop + after)
                valid[k] = false;
    }
    return valid;
}

GhrOutput ghr_from_streams(const Scene &scene, const IntegratedStreams &streams, const ProcessingOptions &opts,
                           bool fast)
{
    const auto &wf = scene.waveform;
    const auto valid = valid_snapshots(scene, streams.timestamps, opts);
    const auto plan = plan_snapshots(scene, streams.timestamps, opts);
    const std::size_t nodes = streams.nodes.size() - 1;
    const auto K = static_cast<Eigen::Index>(plan.indices.size());

    GhrOutput out;
    Eigen::MatrixXd Psi(K, static_cast<Eigen::Index>(nodes));
    for (std::size_t m = 0; m < nodes; ++m)
    {
        auto traj = phase_difference_trajectory(streams.nodes[m + 1], streams.nodes[0], streams.timestamps);
        for (std::size_t k = 0; k < traj.size(); ++k)
            traj.valid_mask[k] = traj.valid_mask[k] && valid[k];
        out.cycle_slip.push_back(has_cycle_slip(traj));
        for (Eigen::Index k = 0; k < K; ++k)
            Psi(k, static_cast<Eigen::Index>(m)) = traj.values_rad[plan.indices[static_cast<std::size_t>(k)]];
    }

    const double gain =
        curvature_gain(wf.sample_rate_hz, opts.window, opts.source == TrajectorySource::Tangent);
    std::vector<TruncationTerm> terms;
    if (fast)
    {
        RealSeq omega(plan.timestamps_s.size());
        for (std::size_t k = 0; k < omega.size(); ++k)
            omega[k] = inst_freq(wf, plan.timestamps_s[k], 0, scene.support());
        out.estimate = ghr_lfm_fast(Psi, omega);
        terms = truncation_terms(wf, 1);
    }
    else
    {
        const int order = basis_order(scene, opts);
        const auto basis = build_basis(wf, plan.timestamps_s, order, scene.support());
        out.estimate = ghr_regress(Psi, basis);
        terms = truncation_terms(wf, order);
        if (wf.kind == WaveformKind::SFM && order == 2)
            invert_sfm(out.estimate, wf, gain);
    }

    const auto bias = window_bias_terms(wf, gain);
    terms.insert(terms.end(), bias.begin(), bias.end());

    RealSeq known(nodes);
    for (std::size_t m = 0; m < nodes; ++m)
        known[m] = scene.nodes[m + 1].prop_delay_s;
    out.calibration = decouple(out.estimate, known, terms);
    return out;
}

TrialRecord failed_record(Method method, double value, int trial, const std::exception &e)
{
    TrialRecord r;
    r.method = method;
    r.sweep_value = value;
    r.trial = trial;
    r.failed = true;
    r.failure = e.what();
    return r;
}

} // namespace

RealSeq stream_timestamps(const Scene &scene, const ProcessingOptions &opts)
{
    const auto [first, last] = common_window(scene);
    const long trim = opts.source == TrajectorySource::Tangent ? 1 : 0;
    RealSeq ts;
    for (long k = first + trim; k <= last - trim; ++k)
        ts.push_back(static_cast<double>(k) / scene.waveform.sample_rate_hz);
    return ts;
}

SnapshotPlan plan_snapshots(const Scene &scene, std::span<const double> stream_ts, const ProcessingOptions &opts,
                            bool decimate)
{
    const auto valid = valid_snapshots(scene, stream_ts, opts);
    const std::size_t stride = decimate ? static_cast<std::size_t>(opts.window) : 1;
    std::vector<std::size_t> picked;
    std::size_t seen = 0;
    for (std::size_t k = 0; k < valid.size(); ++k)
        if (valid[k] && seen++ % stride == 0)
            picked.push_back(k);

    SnapshotPlan plan;
    const std::size_t cap = std::max<std::size_t>(opts.max_snapshots, 3);
    if (picked.size() > cap)
    {
        const double step = static_cast<double>(picked.size() - 1) / static_cast<double>(cap - 1);
        for (std::size_t i = 0; i < cap; ++i)
            plan.indices.push_back(picked[static_cast<std::size_t>(std::llround(static_cast<double>(i) * step))]);
    }
    else
        plan.indices = std::move(picked);
    for (auto k : plan.indices)
        plan.timestamps_s.push_back(stream_ts[k]);
    return plan;
}

int basis_order(const Scene &scene, const ProcessingOptions &opts)
{
    return opts.order.value_or(default_order(scene.waveform.kind));
}

GhrOutput run_ghr(const Scene &scene, const Observation &obs, const ProcessingOptions &opts, bool fast)
{
    ExtractionOptions eo;
    eo.window = opts.window;
    eo.source = opts.source;
    return ghr_from_streams(scene, integrate_nodes(obs, eo), opts, fast);
}

std::vector<TrialRecord> run_trial(const Scene &scene, std::span<const Method> methods, const ProcessingOptions &opts,
                                   const TwmeModel &twme, double sweep_value, int trial)
{
    const Observation obs = synthesize_observations(scene);
    ExtractionOptions eo;
    eo.window = opts.window;
    eo.source = opts.source;
    const IntegratedStreams streams = integrate_nodes(obs, eo);
    const std::size_t nodes = scene.nodes.size() - 1;

    std::vector<TrialRecord> out;
    for (Method method : methods)
    {
        TrialRecord rec;
        rec.method = method;
        rec.sweep_value = sweep_value;
        rec.trial = trial;
        rec.nodes.resize(nodes);
        for (std::size_t m = 0; m < nodes; ++m)
        {
            rec.nodes[m].dT_true_s = scene.nodes[m + 1].clock_offset_s;
            rec.nodes[m].gamma_true_rad = scene.nodes[m + 1].rf_phase_rad;
        }
        try
        {
            switch (method)
            {
            case Method::Ghr:
            case Method::GhrFast: {
                const auto g = ghr_from_streams(scene, streams, opts, method == Method::GhrFast);
                for (std::size_t m = 0; m < nodes; ++m)
                {
                    rec.nodes[m].dT_est_s = g.calibration.nodes[m].clock_offset_est_s;
                    rec.nodes[m].gamma_est_rad = g.calibration.nodes[m].rf_phase_est_rad;
                    rec.nodes[m].cycle_slip = g.cycle_slip[m];
                }
                break;
            }
            case Method::Gcc:
                for (std::size_t m = 0; m < nodes; ++m)
                {
                    const auto &node = streams.nodes[m + 1];
                    const double d = gcc_delay(node, streams.nodes[0], obs.sample_rate_hz);
                    rec.nodes[m].dT_est_s = d - scene.nodes[m + 1].prop_delay_s;
                    rec.nodes[m].gamma_est_rad =
                        two_step_phase(node, streams.nodes[0], d, scene.waveform, streams.timestamps);
                }
                break;
            case Method::Twme:
                for (std::size_t m = 0; m < nodes; ++m)
                {
                    TwmeModel model = twme;
                    model.seed = derive_seed(scene.seed, 0x7477, m);
                    const double dT = twme_ols(rec.nodes[m].dT_true_s, model);
                    rec.nodes[m].dT_est_s = dT;
                    rec.nodes[m].gamma_est_rad =
                        two_step_phase(streams.nodes[m + 1], streams.nodes[0], scene.nodes[m + 1].prop_delay_s + dT,
                                       scene.waveform, streams.timestamps);
                }
                break;
            }
        }
        catch (const DegenerateBasisError &e)
        {
            rec = failed_record(method, sweep_value, trial, e);
        }
        catch (const AmbiguousPeakError &e)
        {
            rec = failed_record(method, sweep_value, trial, e);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

TrialRecord run_trial(const Scene &scene, Method method, const ProcessingOptions &opts, const TwmeModel &twme)
{
    const Method m[] = {method};
    return run_trial(scene, m, opts, twme).front();
}

std::vector<SweepPoint> SweepResult::series(Method method) const
{
    std::vector<SweepPoint> s;
    for (const auto &p : points)
        if (p.method == method)
            s.push_back(p);
    return s;
}

CrbResult scene_crb(const Scene &scene, const ProcessingOptions &opts)
{
    const auto ts = stream_timestamps(scene, opts);
    const auto plan = plan_snapshots(scene, ts, opts);
    const double m_ref = scene.nodes[0].subarray_elems;
    const double m_node = scene.nodes[1].subarray_elems;
    // per-node variance 1/(2 SNR M L); the two nodes add
    const double var = phase_noise_variance(scene.snr_db, 1, opts.window) * 0.5 * (1.0 / m_ref + 1.0 / m_node);
    return crb(scene.waveform, plan.timestamps_s, var, scene.support());
}

double rmse(std::span<const double> errors)
{
    if (errors.empty())
        throw DomainError("rmse of an empty set");
    double ss = 0.0;
    for (double e : errors)
        ss += e * e;
    return std::sqrt(ss / static_cast<double>(errors.size()));
}

double circular_rmse(std::span<const double> errors_rad)
{
    RealSeq wrapped(errors_rad.size());
    std::transform(errors_rad.begin(), errors_rad.end(), wrapped.begin(), wrap_to_pi);
    return rmse(wrapped);
}

SweepResult monte_carlo(const ExperimentConfig &cfg)
{
    validate(cfg);
    const std::size_t points = sweep_size(cfg);
    const std::size_t trials = static_cast<std::size_t>(cfg.trials);
    std::vector<Scene> scenes;
    for (std::size_t i = 0; i < points; ++i)
        scenes.push_back(scene_at(cfg, i));

    std::vector<std::vector<TrialRecord>> results(points * trials);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;)
        {
            const std::size_t unit = next.fetch_add(1);
            if (unit >= results.size())
                return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error)
                    return;
            }
            const std::size_t i = unit / trials;
            const std::size_t t = unit % trials;
            try
            {
                Scene s = scenes[i];
                s.seed = derive_seed(cfg.base_seed, i, t);
                const double value = cfg.axis == SweepAxis::None ? 0.0 : cfg.values[i];
                results[unit] = run_trial(s, cfg.methods, cfg.processing, cfg.twme, value, static_cast<int>(t));
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::max(1, cfg.workers));
    if (n_workers == 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }
    if (error)
        std::rethrow_exception(error);

    SweepResult res;
    res.axis = cfg.axis;
    for (std::size_t i = 0; i < points; ++i)
    {
        const auto bound = scene_crb(scenes[i], cfg.processing);
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
        {
            SweepPoint p;
            p.value = cfg.axis == SweepAxis::None ? 0.0 : cfg.values[i];
            p.method = cfg.methods[mi];
            p.crb_clock_s = std::sqrt(bound.crb_clock_s2);
            p.crb_phase_rad = std::sqrt(bound.crb_phase_rad2());
            RealSeq clock_err, phase_err;
            for (std::size_t t = 0; t < trials; ++t)
            {
                const auto &rec = results[i * trials + t][mi];
                if (rec.failed)
                {
                    ++p.trials_failed;
                    continue;
                }
                ++p.trials_ok;
                bool slip = false;
                for (const auto &n : rec.nodes)
                {
                    clock_err.push_back(n.dT_est_s - n.dT_true_s);
                    phase_err.push_back(n.gamma_est_rad - n.gamma_true_rad);
                    slip = slip || n.cycle_slip;
                }
                p.cycle_slip_trials += slip ? 1 : 0;
            }
            if (!clock_err.empty())
            {
                p.rmse_clock_s = rmse(clock_err);
                p.rmse_phase_rad = circular_rmse(phase_err);
            }
            res.points.push_back(p);
        }
    }
    for (auto &unit : results)
        for (auto &rec : unit)
            res.records.push_back(std::move(rec));
    return res;
}

std::optional<double> collapse_point(std::span<const SweepPoint> series, double factor, std::size_t plateau_points)
{
    RealSeq early;
    for (std::size_t i = 0; i < series.size() && early.size() < plateau_points; ++i)
        if (series[i].rmse_clock_s)
            early.push_back(*series[i].rmse_clock_s);
    if (early.empty())
        return std::nullopt;
    std::sort(early.begin(), early.end());
    const double plateau = early[early.size() / 2];
    for (const auto &p : series)
        if (!p.rmse_clock_s || *p.rmse_clock_s > factor * plateau)
            return p.value;
    return std::nullopt;
}

std::optional<double> convergence_threshold(std::span<const SweepPoint> series, double ratio)
{
    std::optional<double> threshold;
    for (auto it = series.rbegin(); it != series.rend(); ++it)
    {
        if (!it->rmse_clock_s || !(*it->rmse_clock_s <= ratio * it->crb_clock_s))
            break;
        threshold = it->value;
    }
    return threshold;
}

} // namespace ghr

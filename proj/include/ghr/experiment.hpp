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

#pragma once

#include "ghr/bounds.hpp"
#include "ghr/config.hpp"
#include "ghr/regression.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ghr
{

struct NodeOutcome
{
    double dT_true_s = 0.0;
    double dT_est_s = 0.0;
    double gamma_true_rad = 0.0;
    double gamma_est_rad = 0.0;
    bool cycle_slip = false;
};

struct TrialRecord
{
    Method method = Method::Ghr;
    double sweep_value = 0.0;
    int trial = 0;
    bool failed = false;
    std::string failure; // exception text when failed
    std::vector<NodeOutcome> nodes; // index 0 is node 2; empty when failed
};

// Snapshots of the integrated streams that enter the regression.
struct SnapshotPlan
{
    std::vector<std::size_t> indices; // into the integrated-stream timeline
    RealSeq timestamps_s;
};

/// Valid snapshots (edge and FSK2 hop neighbourhoods removed), thinned to one
/// per integration window when `decimate` is set, then uniformly capped at
/// opts.max_snapshots.
SnapshotPlan plan_snapshots(const Scene &scene, std::span<const double> stream_timestamps,
                            const ProcessingOptions &opts, bool decimate = true);

// Timeline of the integrated streams for this scene (no synthesis).
RealSeq stream_timestamps(const Scene &scene, const ProcessingOptions &opts);

int basis_order(const Scene &scene, const ProcessingOptions &opts);

/// GHR pipeline on one observation: integrate, difference, unwrap, regress and
/// decouple. Throws DegenerateBasisError for an unobservable basis.
struct GhrOutput
{
    CalibrationResult calibration;
    std::vector<bool> cycle_slip;
    GeomEstimate estimate;
};
GhrOutput run_ghr(const Scene &scene, const Observation &obs, const ProcessingOptions &opts, bool fast = false);

// One trial of every method on a shared synthesized observation.
std::vector<TrialRecord> run_trial(const Scene &scene, std::span<const Method> methods, const ProcessingOptions &opts,
                                   const TwmeModel &twme, double sweep_value = 0.0, int trial = 0);
TrialRecord run_trial(const Scene &scene, Method method, const ProcessingOptions &opts = {},
                      const TwmeModel &twme = {});

struct SweepPoint
{
    double value = 0.0;
    Method method = Method::Ghr;
    int trials_ok = 0;
    int trials_failed = 0;
    int cycle_slip_trials = 0;
    std::optional<double> rmse_clock_s;  // absent when every trial failed
    std::optional<double> rmse_phase_rad; // circular
    double crb_clock_s = 0.0;             // square roots of the bounds
    double crb_phase_rad = 0.0;
};

struct SweepResult
{
    SweepAxis axis = SweepAxis::None;
    std::vector<SweepPoint> points; // sweep-major, methods in config order
    std::vector<TrialRecord> records;

    // Points of one method in sweep order.
    std::vector<SweepPoint> series(Method method) const;
};

// Bound for the node-2 measurement of this scene with the configured processing.
CrbResult scene_crb(const Scene &scene, const ProcessingOptions &opts);

/// Monte Carlo over every sweep point. Trial seeds are derived from
/// (base_seed, sweep index, trial index), so the result does not depend on
/// the number of workers.
SweepResult monte_carlo(const ExperimentConfig &cfg);

// sqrt(mean(x^2)); circular variant wraps each error first.
double rmse(std::span<const double> errors);
double circular_rmse(std::span<const double> errors_rad);

/// First value whose clock RMSE exceeds `factor` times the plateau (median of
/// the leading `plateau_points` values). Missing RMSE counts as collapsed.
std::optional<double> collapse_point(std::span<const SweepPoint> series, double factor = 10.0,
                                     std::size_t plateau_points = 3);

/// Lowest sweep value from which every later point keeps the clock RMSE
/// within `ratio` times sqrt(CRB).
std::optional<double> convergence_threshold(std::span<const SweepPoint> series, double ratio = 2.0);

} // namespace ghr

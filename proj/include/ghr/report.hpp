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

#include "ghr/experiment.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace ghr
{

// sweep_value,method,trials_ok,trials_failed,rmse_clock_ns,rmse_phase_deg,crb_clock_ns,crb_phase_deg
// Absent RMSE values are written as empty fields.
void write_sweep_csv(std::ostream &os, std::span<const SweepPoint> points);

// Parses a file written by write_sweep_csv.
std::vector<SweepPoint> read_sweep_csv(const std::filesystem::path &path);

// Log-scale RMSE-vs-sweep plot (clock and phase panels) with the bound overlaid.
std::string render_sweep_svg(std::span<const SweepPoint> points, const std::string &axis_label);

// Per-trial records: method,sweep_value,trial,node,dT_true_ns,dT_est_ns,gamma_true_rad,gamma_est_rad,cycle_slip,failed
void write_trials_csv(std::ostream &os, std::span<const TrialRecord> records);

/// Writes sweep.csv, sweep.svg and trials.csv into output_dir (created if needed).
/// The axis name goes to sweep.axis so `report` can relabel the plot later.
void emit_report(const SweepResult &result, const std::filesystem::path &output_dir);

// Rebuilds sweep.svg from sweep.csv in dir.
void regenerate_report(const std::filesystem::path &dir);

} // namespace ghr

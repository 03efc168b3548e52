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

#include "ghr/config.hpp"

#include <filesystem>
#include <vector>

namespace ghr
{

// One snapshot of the phase-space projection.
struct GeometryRow
{
    double t_s = 0.0;
    double omega_rad_s = 0.0;
    double omega_dot_rad_s2 = 0.0;
    RealSeq psi_rad; // one entry per non-reference node
};

// Least-squares fits of psi against the frequency dynamics (residuals are RMS, radians).
struct NodeGeometry
{
    double line_r2 = 0.0;             // psi ~ omega
    double line_residual_rad = 0.0;
    double quadratic_residual_rad = 0.0; // psi ~ omega + omega^2
    double plane_residual_rad = 0.0;  // psi ~ omega + omega_dot
};

struct GeometryReport
{
    WaveformKind kind = WaveformKind::LFM;
    std::vector<GeometryRow> rows;
    std::vector<NodeGeometry> nodes;
    int frequency_clusters = 0;
};

// Synthesizes one observation of `scene` and fits the extracted trajectories.
GeometryReport geometry_report(const Scene &scene, const ProcessingOptions &opts);

// Number of groups in `values` separated by gaps wider than rel_gap * range.
int count_clusters(RealSeq values, double rel_gap = 0.1);

// geometry.csv (t, omega, omega_dot, psi_2..psi_M) and geometry_summary.csv.
void write_geometry(const GeometryReport &report, const std::filesystem::path &dir);

} // namespace ghr

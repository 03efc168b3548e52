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

#include "ghr/common.hpp"
#include "ghr/waveform.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ghr
{

struct NodeConfig
{
    double prop_delay_s = 0.0;  // spatial delay of the node's reference element
    double clock_offset_s = 0.0;
    double rf_phase_rad = 0.0;  // in [-pi, pi)
    int subarray_elems = 1;
    double elem_spacing_wavelengths = 0.5;

    double total_delay() const { return prop_delay_s + clock_offset_s; }
};

struct Scene
{
    WaveformSpec waveform;
    double doa_rad = 0.0;
    std::vector<NodeConfig> nodes; // nodes[0] is the reference
    double snr_db = 20.0;          // +inf for a noiseless scene
    std::uint64_t seed = 1;
    // Evaluate delayed copies through the analytic continuation of the phase law
    // instead of requiring a common window inside the pulse (aperture probing).
    bool extend_waveform = false;

    Support support() const { return extend_waveform ? Support::Extended : Support::Pulse; }
};

void validate(const Scene &scene);

struct Observation
{
    std::vector<Eigen::MatrixXcd> nodes; // per node: subarray_elems x K
    RealSeq timestamps;                  // seconds, reference-node clock
    double sample_rate_hz = 0.0;
    double carrier_hz = 0.0;
    RealSeq element_delay_s;             // per node: delay between adjacent elements

    std::size_t snapshots() const { return timestamps.size(); }
};

// Arrival delay of subarray element elem_index (uniform linear array, broadside at doa 0).
double element_delay(const NodeConfig &node, double doa_rad, int elem_index, double carrier_hz);

// Sample indices [first, last] of the common snapshot window shared by every element.
std::pair<long, long> common_window(const Scene &scene);

Observation synthesize_observations(const Scene &scene);

// Binary interleaved complex64 (node, element, snapshot order) plus a text header.
void export_observation(const Observation &obs, const std::filesystem::path &bin_path,
                        const std::filesystem::path &header_path);

} // namespace ghr

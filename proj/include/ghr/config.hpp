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

#include "ghr/baselines.hpp"
#include "ghr/features.hpp"
#include "ghr/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ghr
{

enum class Method
{
    Ghr,     // dynamic-basis regression
    GhrFast, // order-1 scalar fit
    Gcc,     // cross-correlation delay + two-step phase
    Twme     // two-way message exchange offset + two-step phase
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

enum class SweepAxis
{
    None,
    SnrDb,
    ApertureM, // extra propagation delay D/c added to the sweep node
    SampleRate,
    Duration,
    Bandwidth
};

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct ProcessingOptions
{
    int window = 9;
    TrajectorySource source = TrajectorySource::Observation;
    std::optional<int> order; // default_order(kind) when absent
    std::size_t max_snapshots = 5000;
    // Extra margin masked after each FSK2 hop, on top of the largest spatial delay.
    double fsk_hop_guard_s = 10e-9;
};

struct ExperimentConfig
{
    std::string name = "experiment";
    Scene scene;
    ProcessingOptions processing;
    SweepAxis axis = SweepAxis::None;
    RealSeq values;     // sweep values in the axis unit (dB, m, Hz, s, Hz)
    int sweep_node = 2; // 1-based node receiving the aperture delay
    std::vector<Method> methods{Method::Ghr};
    int trials = 100;
    std::uint64_t base_seed = 1;
    std::filesystem::path output_dir = "out";
    int workers = 1;
    TwmeModel twme;
};

// Throws ConfigError on any inconsistency.
void validate(const ExperimentConfig &cfg);

// INI ("key = value" under [section] headers) or JSON, chosen by extension (.json) or content.
ExperimentConfig load_config(const std::filesystem::path &path);
ExperimentConfig parse_config(std::string_view text, bool json);

// Scene of sweep point `index` (the template itself when the axis is None).
Scene scene_at(const ExperimentConfig &cfg, std::size_t index);

// Number of sweep points (1 when the axis is None).
std::size_t sweep_size(const ExperimentConfig &cfg);

} // namespace ghr

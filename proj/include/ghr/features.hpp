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
#include "ghr/scene.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace ghr
{

/// Unwrapped inter-node phase difference of one node against the reference:
/// the feature vector a node forwards to the processing centre.
struct PhaseTrajectory
{
    RealSeq values_rad;
    RealSeq timestamps_s;
    std::vector<bool> valid_mask;

    std::size_t size() const { return values_rad.size(); }
    std::size_t valid_count() const;
};

// Central-difference derivative over interior samples (output length K-2).
ComplexSeq tangent_vector(std::span<const cdouble> samples, double sample_rate_hz);

// Known subarray layout: element p arrives p * element_delay_s after element 0.
struct ArrayGeometry
{
    double element_delay_s = 0.0;
    double sample_rate_hz = 0.0;
    double carrier_hz = 0.0;
};

/// Coherent integration of a node's subarray over a sliding window of `window`
/// snapshots.
///
/// Each window slab (elements x window, edge-clamped) is reduced to its dominant
/// rank-1 component, and the temporal component is summed with its local phase
/// progression removed. The phase of the spatial singular vector is fixed by a
/// reference steering vector: with `geometry`, the plane-wave steering at the
/// window's measured frequency and frequency rate, which keeps element 0 as the
/// phase reference for wideband signals; without it, the whole-record dominant
/// eigenvector.
/// Output k has unit nominal amplitude. window == 1 on a single element is the
/// identity.
ComplexSeq subarray_integrate(const Eigen::MatrixXcd &element_matrix, int window,
                              const std::optional<ArrayGeometry> &geometry = std::nullopt);

// Principal-branch angle in [-pi, pi).
double wrap_to_pi(double angle);

// Successive differences mapped into (-pi, pi] by whole turns; output[0] = wrapped[0].
RealSeq unwrap(std::span<const double> wrapped);

/// arg(node * conj(ref)) unwrapped; first and last samples are marked invalid.
PhaseTrajectory phase_difference_trajectory(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq,
                                            std::span<const double> timestamps);

// Clears `count` validity flags at each end.
void mask_edges(PhaseTrajectory &traj, std::size_t count);

// True when any second difference over consecutive valid samples exceeds pi/2.
bool has_cycle_slip(const PhaseTrajectory &traj);

enum class TrajectorySource
{
    Observation, // phase of the (integrated) observation x
    Tangent      // phase of the (integrated) tangent vector v
};

struct ExtractionOptions
{
    int window = 9;
    TrajectorySource source = TrajectorySource::Observation;
};

struct NodeFeatures
{
    PhaseTrajectory trajectory;
    bool cycle_slip = false;
};

// Per-node integrated sequences aligned to `timestamps` (tangent trimming applied).
struct IntegratedStreams
{
    std::vector<ComplexSeq> nodes;
    RealSeq timestamps;
};

IntegratedStreams integrate_nodes(const Observation &obs, const ExtractionOptions &opts);

// Feature vectors psi_m for m = 2..M (index 0 of the result is node 2).
std::vector<NodeFeatures> extract_features(const Observation &obs, const ExtractionOptions &opts);

// CSV with columns t,psi,valid.
void write_trajectory_csv(const PhaseTrajectory &traj, const std::filesystem::path &path);

} // namespace ghr

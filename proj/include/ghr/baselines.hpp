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

#include "ghr/waveform.hpp"

#include <cstdint>
#include <span>

namespace ghr
{

/// Lag of node_seq relative to ref_seq in seconds (positive: node lags).
/// Integer peak of |sum_k node[k+l] * conj(ref[k])| refined by a parabola
/// through the peak and its neighbours. Throws AmbiguousPeakError when the
/// peak sits on the outermost lag.
double gcc_delay(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq, double sample_rate_hz);

// Direct O(N^2) evaluation of the cross-correlation at lags -(N-1)..N-1.
ComplexSeq cross_correlation_direct(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq);
ComplexSeq cross_correlation(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq);

/// Phase error after removing the waveform phase accumulated over delay_est_s:
/// circular mean of node * exp(j(Phi(t) - Phi(t - delay))) * conj(ref).
/// FSK2 snapshots whose delayed time leaves the pulse are skipped.
double two_step_phase(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq, double delay_est_s,
                      const WaveformSpec &spec, std::span<const double> timestamps);

struct TwmeModel
{
    int exchanges = 100;
    double queue_jitter_mean_s = 1e-9;
    double asymmetry = 0.5; // forward mean x (1 + a), return mean x (1 - a)
    std::uint64_t seed = 1;
    double propagation_s = 0.0;
    double exchange_interval_s = 1e-3;
};

void validate(const TwmeModel &model);

// Offset from N simulated two-way exchanges, fitted by least squares with zero skew.
double twme_ols(double true_offset_s, const TwmeModel &model);

} // namespace ghr

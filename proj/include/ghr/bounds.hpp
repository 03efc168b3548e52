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

#include <ostream>
#include <span>

namespace ghr
{

// c * fs * T / (2B): largest separation before the per-sample phase increment exceeds pi.
double max_aperture_m(double sample_rate_hz, double duration_s, double bandwidth_hz);

// Variance of the two-node phase difference after integration over M_sub elements
// and L snapshots, in the high-SNR small-angle regime. +inf SNR gives 0.
double phase_noise_variance(double snr_db, int subarray_elems, int window);

struct CrbResult
{
    double crb_clock_s2 = 0.0;
    double crb_gen_intercept_rad2 = 0.0;
    double mean_omega_rad_s = 0.0;
    double var_omega_rad2_s2 = 0.0;
    long snapshots = 0;
    double phase_noise_var_rad2 = 0.0;

    // Phase bound reported for the physical phase error (same value as the intercept bound).
    double crb_phase_rad2() const { return crb_gen_intercept_rad2; }
};

// Bounds from the empirical frequency moments over `timestamps`; infinite when Var(omega) = 0.
CrbResult crb(const WaveformSpec &spec, std::span<const double> timestamps, double phase_noise_var,
              Support support = Support::Pulse);

struct CrbRow
{
    double snr_db = 0.0;
    CrbResult bound;
};

// snr_db, crb_clock (s^2), crb_phase (rad^2).
void write_crb_csv(std::ostream &os, std::span<const CrbRow> rows);

} // namespace ghr

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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ghr
{

enum class WaveformKind
{
    LFM,
    SFM,
    QFM,
    FSK2
};

std::string_view to_string(WaveformKind kind);
WaveformKind parse_waveform_kind(std::string_view name);

// Where the closed-form phase law may be evaluated.
// Pulse: only on [0, duration_s]. Extended: the analytic law continued beyond
// the pulse, used when probing apertures whose delay exceeds the pulse length.
enum class Support
{
    Pulse,
    Extended
};

/// Cooperative calibration waveform.
///
/// carrier_hz is the centre of the swept band for every kind, so the
/// instantaneous frequency stays within [carrier - B/2, carrier + B/2].
struct WaveformSpec
{
    WaveformKind kind = WaveformKind::LFM;
    double carrier_hz = 2e9;
    double bandwidth_hz = 500e6;
    double duration_s = 1e-6;
    double sample_rate_hz = 5e9;
    std::optional<double> sfm_mod_rate_hz;
    std::optional<double> fsk_symbol_rate_baud;
    std::optional<std::uint64_t> fsk_pattern_seed;
    // Require Nyquist for the real passband signal instead of the complex band.
    bool passband_faithful = false;

    double chirp_rate() const { return bandwidth_hz / duration_s; }
    std::size_t sample_count() const;
};

// Throws ConfigError when the waveform description violates its invariants.
void validate(const WaveformSpec &spec);

// Total instantaneous phase, with phase origin at t = 0.
double total_phase(const WaveformSpec &spec, double t, Support support = Support::Pulse);

// order-th time derivative of the instantaneous angular frequency (order <= 3).
double inst_freq(const WaveformSpec &spec, double t, int order = 0, Support support = Support::Pulse);

// Unit-modulus samples exp(j*phase(k/fs)), k = 0 .. floor(T*fs)-1.
ComplexSeq synthesize(const WaveformSpec &spec);

// True when t lies on (or within tol seconds of) an FSK2 symbol boundary.
bool is_hop_instant(const WaveformSpec &spec, double t, double tol = 0.0);

// Largest derivative order of the instantaneous frequency that is constant in time
// for this kind (LFM: 1, QFM: 2), or nullopt when no derivative is constant.
std::optional<int> constant_derivative_order(WaveformKind kind);

} // namespace ghr

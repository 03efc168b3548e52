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

#include "ghr/waveform.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace ghr
{

namespace
{

void check_time(const WaveformSpec &spec, double t, Support support)
{
    if (!std::isfinite(t))
        throw DomainError("waveform evaluated at non-finite time");
    if (support == Support::Extended)
    {
        if (spec.kind == WaveformKind::FSK2)
            throw DomainError("FSK2 phase law has no analytic extension outside the pulse");
        return;
    }
    const double slack = 1e-12 * spec.duration_s;
    if (t < -slack || t > spec.duration_s + slack)
        throw DomainError("time " + std::to_string(t) + " s outside pulse [0, " + std::to_string(spec.duration_s) + "]");
}

std::size_t fsk_symbol_count(const WaveformSpec &spec)
{
    return static_cast<std::size_t>(std::ceil(spec.duration_s * *spec.fsk_symbol_rate_baud - 1e-9));
}

// +1 or -1 tone sign of symbol i.
double fsk_sign(const WaveformSpec &spec, std::size_t i)
{
    return (mix64(*spec.fsk_pattern_seed ^ (0xA5A5A5A5ULL + i)) & 1ULL) ? 1.0 : -1.0;
}

std::size_t fsk_symbol_index(const WaveformSpec &spec, double t)
{
    const double pos = std::max(0.0, t) * *spec.fsk_symbol_rate_baud;
    const auto n = fsk_symbol_count(spec);
    auto i = static_cast<std::size_t>(std::floor(pos));
    return i >= n ? n - 1 : i;
}

} // namespace

std::string_view to_string(WaveformKind kind)
{
    switch (kind)
    {
    case WaveformKind::LFM:
        return "LFM";
    case WaveformKind::SFM:
        return "SFM";
    case WaveformKind::QFM:
        return "QFM";
    case WaveformKind::FSK2:
        return "FSK2";
    }
    return "?";
}

WaveformKind parse_waveform_kind(std::string_view name)
{
    std::string s(name);
    for (auto &c : s)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "LFM")
        return WaveformKind::LFM;
    if (s == "SFM")
        return WaveformKind::SFM;
    if (s == "QFM")
        return WaveformKind::QFM;
    if (s == "FSK2" || s == "2FSK")
        return WaveformKind::FSK2;
    throw ConfigError("unknown waveform kind '" + std::string(name) + "'");
}

std::size_t WaveformSpec::sample_count() const
{
    return static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz * (1.0 + 1e-12)));
}

void validate(const WaveformSpec &spec)
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(spec.bandwidth_hz))
        throw ConfigError("waveform bandwidth_hz must be > 0");
    if (!positive(spec.duration_s))
        throw ConfigError("waveform duration_s must be > 0");
    if (!positive(spec.sample_rate_hz))
        throw ConfigError("waveform sample_rate_hz must be > 0");
    if (!std::isfinite(spec.carrier_hz) || spec.carrier_hz < 0.5 * spec.bandwidth_hz)
        throw ConfigError("waveform carrier_hz must be >= bandwidth_hz/2 (instantaneous frequency must stay non-negative)");

    if (spec.passband_faithful)
    {
        if (spec.sample_rate_hz <= 2.0 * (spec.carrier_hz + 0.5 * spec.bandwidth_hz))
            throw ConfigError("passband-faithful mode requires sample_rate_hz > 2*(carrier_hz + bandwidth_hz/2)");
    }
    else if (spec.sample_rate_hz <= spec.bandwidth_hz)
        throw ConfigError("sample_rate_hz must exceed bandwidth_hz");

    const bool is_sfm = spec.kind == WaveformKind::SFM;
    const bool is_fsk = spec.kind == WaveformKind::FSK2;
    if (spec.sfm_mod_rate_hz.has_value() != is_sfm)
        throw ConfigError(is_sfm ? "SFM waveform requires sfm_mod_rate_hz" : "sfm_mod_rate_hz is only valid for SFM");
    if (is_sfm && !positive(*spec.sfm_mod_rate_hz))
        throw ConfigError("sfm_mod_rate_hz must be > 0");
    if (spec.fsk_symbol_rate_baud.has_value() != is_fsk || spec.fsk_pattern_seed.has_value() != is_fsk)
        throw ConfigError(is_fsk ? "FSK2 waveform requires fsk_symbol_rate_baud and fsk_pattern_seed"
                                 : "fsk_* fields are only valid for FSK2");
    if (is_fsk && !positive(*spec.fsk_symbol_rate_baud))
        throw ConfigError("fsk_symbol_rate_baud must be > 0");
    if (spec.sample_count() < 3)
        throw ConfigError("waveform must span at least 3 samples");
}

double total_phase(const WaveformSpec &spec, double t, Support support)
{
    check_time(spec, t, support);
    const double f0 = spec.carrier_hz;
    const double B = spec.bandwidth_hz;
    const double T = spec.duration_s;
    switch (spec.kind)
    {
    case WaveformKind::LFM:
        // omega = 2*pi*(f0 + mu*(t - T/2))
        return kTwoPi * f0 * t + kPi * spec.chirp_rate() * t * (t - T);
    case WaveformKind::QFM:
        // omega = 2*pi*(f0 - B/2 + B*(t/T)^2)
        return kTwoPi * ((f0 - 0.5 * B) * t + B * t * t * t / (3.0 * T * T));
    case WaveformKind::SFM: {
        const double fm = *spec.sfm_mod_rate_hz;
        return kTwoPi * f0 * t + (0.5 * B / fm) * (1.0 - std::cos(kTwoPi * fm * t));
    }
    case WaveformKind::FSK2: {
        const double R = *spec.fsk_symbol_rate_baud;
        const std::size_t i = fsk_symbol_index(spec, t);
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j)
            acc += fsk_sign(spec, j);
        const double dev = acc / R + fsk_sign(spec, i) * (t - static_cast<double>(i) / R);
        return kTwoPi * (f0 * t + 0.5 * B * dev);
    }
    }
    return 0.0;
}

double inst_freq(const WaveformSpec &spec, double t, int order, Support support)
{
    if (order < 0 || order > 3)
        throw DomainError("inst_freq supports derivative orders 0..3");
    check_time(spec, t, support);
    const double f0 = spec.carrier_hz;
    const double B = spec.bandwidth_hz;
    const double T = spec.duration_s;
    switch (spec.kind)
    {
    case WaveformKind::LFM: {
        const double mu = spec.chirp_rate();
        switch (order)
        {
        case 0:
            return kTwoPi * (f0 + mu * (t - 0.5 * T));
        case 1:
            return kTwoPi * mu;
        default:
            return 0.0;
        }
    }
    case WaveformKind::QFM:
        switch (order)
        {
        case 0:
            return kTwoPi * (f0 - 0.5 * B + B * t * t / (T * T));
        case 1:
            return kTwoPi * 2.0 * B * t / (T * T);
        case 2:
            return kTwoPi * 2.0 * B / (T * T);
        default:
            return 0.0;
        }
    case WaveformKind::SFM: {
        const double a = kTwoPi * *spec.sfm_mod_rate_hz;
        const double amp = kPi * B; // 2*pi*(B/2)
        switch (order)
        {
        case 0:
            return kTwoPi * f0 + amp * std::sin(a * t);
        case 1:
            return amp * a * std::cos(a * t);
        case 2:
            return -amp * a * a * std::sin(a * t);
        default:
            return -amp * a * a * a * std::cos(a * t);
        }
    }
    case WaveformKind::FSK2:
        if (order == 0)
            return kTwoPi * (f0 + 0.5 * B * fsk_sign(spec, fsk_symbol_index(spec, t)));
        if (is_hop_instant(spec, t, 1e-6 / *spec.fsk_symbol_rate_baud))
            throw UndefinedDerivativeError("FSK2 frequency derivative undefined at symbol hop t=" + std::to_string(t));
        return 0.0;
    }
    return 0.0;
}

bool is_hop_instant(const WaveformSpec &spec, double t, double tol)
{
    if (spec.kind != WaveformKind::FSK2)
        return false;
    const double R = *spec.fsk_symbol_rate_baud;
    const double n = std::round(t * R);
    if (n < 1.0 || n >= static_cast<double>(fsk_symbol_count(spec)))
        return false;
    return std::abs(t - n / R) <= tol;
}

ComplexSeq synthesize(const WaveformSpec &spec)
{
    validate(spec);
    const std::size_t n = spec.sample_count();
    ComplexSeq out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = std::polar(1.0, total_phase(spec, static_cast<double>(k) / spec.sample_rate_hz));
    return out;
}

std::optional<int> constant_derivative_order(WaveformKind kind)
{
    switch (kind)
    {
    case WaveformKind::LFM:
        return 1;
    case WaveformKind::QFM:
        return 2;
    default:
        return std::nullopt;
    }
}

} // namespace ghr

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

#include "ghr/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

namespace ghr
{

namespace
{

// Interior samples dropped at each end of the common window.
constexpr long kGuardSamples = 2;

} // namespace

void validate(const Scene &scene)
{
    validate(scene.waveform);
    if (scene.nodes.size() < 2)
        throw ConfigError("scene needs at least 2 nodes");
    const auto &ref = scene.nodes.front();
    if (ref.prop_delay_s != 0.0 || ref.clock_offset_s != 0.0 || ref.rf_phase_rad != 0.0)
        throw ConfigError("node 1 is the reference and must have zero delay, clock offset and phase");
    for (std::size_t m = 0; m < scene.nodes.size(); ++m)
    {
        const auto &n = scene.nodes[m];
        const std::string tag = "node " + std::to_string(m + 1);
        if (!std::isfinite(n.prop_delay_s) || !std::isfinite(n.clock_offset_s))
            throw ConfigError(tag + ": delays must be finite");
        if (!(n.rf_phase_rad >= -kPi && n.rf_phase_rad < kPi))
            throw ConfigError(tag + ": rf_phase_rad must lie in [-pi, pi)");
        if (n.subarray_elems < 1)
            throw ConfigError(tag + ": subarray_elems must be >= 1");
        if (!(n.elem_spacing_wavelengths > 0.0))
            throw ConfigError(tag + ": elem_spacing_wavelengths must be > 0");
    }
    if (std::isnan(scene.snr_db) || scene.snr_db == -INFINITY)
        throw ConfigError("snr_db must be a number or +inf");
}

double element_delay(const NodeConfig &node, double doa_rad, int elem_index, double carrier_hz)
{
    if (elem_index < 0 || elem_index >= node.subarray_elems)
        throw DomainError("element index out of range");
    if (elem_index == 0)
        return node.prop_delay_s;
    // spacing [m] = d_lambda * c / f0, differential delay = spacing * sin(theta) / c
    const double spacing_m = node.elem_spacing_wavelengths * kSpeedOfLight / carrier_hz;
    return node.prop_delay_s + elem_index * spacing_m * std::sin(doa_rad) / kSpeedOfLight;
}

std::pair<long, long> common_window(const Scene &scene)
{
    const auto &wf = scene.waveform;
    const double fs = wf.sample_rate_hz;
    const long k0 = static_cast<long>(wf.sample_count());
    if (scene.extend_waveform)
        return {kGuardSamples, k0 - 1 - kGuardSamples};

    double max_d = 0.0;
    double min_d = 0.0;
    for (const auto &node : scene.nodes)
        for (int p = 0; p < node.subarray_elems; ++p)
        {
            const double d = element_delay(node, scene.doa_rad, p, wf.carrier_hz) + node.clock_offset_s;
            max_d = std::max(max_d, d);
            min_d = std::min(min_d, d);
        }
    if (max_d >= wf.duration_s / 10.0 || -min_d >= wf.duration_s / 10.0)
        throw ConfigError("total element delay exceeds duration/10; no common snapshot window "
                          "(enable extend_waveform for aperture probing)");
    // a tiny relative slack keeps exact-grid delays on the valid side of ceil/floor
    const long first = static_cast<long>(std::ceil(max_d * fs * (1.0 - 1e-12)));
    const long last = std::min(k0 - 1, static_cast<long>(std::floor((wf.duration_s + min_d) * fs * (1.0 + 1e-12))));
    if (last - first < 2 * kGuardSamples + 2)
        throw ConfigError("common snapshot window too short");
    return {first + kGuardSamples, last - kGuardSamples};
}

Observation synthesize_observations(const Scene &scene)
{
    validate(scene);
    const auto &wf = scene.waveform;
    const auto support = scene.support();
    const auto [first, last] = common_window(scene);
    const long K = last - first + 1;

    Observation obs;
    obs.sample_rate_hz = wf.sample_rate_hz;
    obs.carrier_hz = wf.carrier_hz;
    obs.timestamps.resize(static_cast<std::size_t>(K));
    for (long k = 0; k < K; ++k)
        obs.timestamps[static_cast<std::size_t>(k)] = static_cast<double>(first + k) / wf.sample_rate_hz;

    const bool noisy = std::isfinite(scene.snr_db);
    const double noise_std = noisy ? std::sqrt(0.5 * std::pow(10.0, -scene.snr_db / 10.0)) : 0.0;

    obs.nodes.reserve(scene.nodes.size());
    for (std::size_t m = 0; m < scene.nodes.size(); ++m)
    {
        const auto &node = scene.nodes[m];
        Eigen::MatrixXcd x(node.subarray_elems, K);
        for (int p = 0; p < node.subarray_elems; ++p)
        {
            const double delay = element_delay(node, scene.doa_rad, p, wf.carrier_hz) + node.clock_offset_s;
            for (long k = 0; k < K; ++k)
            {
                const double t = obs.timestamps[static_cast<std::size_t>(k)];
                x(p, k) = std::polar(1.0, total_phase(wf, t - delay, support) + node.rf_phase_rad);
            }
            if (noisy)
            {
                std::mt19937_64 rng(derive_seed(scene.seed, m, static_cast<std::uint64_t>(p)));
                std::normal_distribution<double> gauss(0.0, noise_std);
                for (long k = 0; k < K; ++k)
                {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    x(p, k) += cdouble(re, im);
                }
            }
        }
        obs.nodes.push_back(std::move(x));
        obs.element_delay_s.push_back(node.subarray_elems > 1 ? element_delay(node, scene.doa_rad, 1, wf.carrier_hz) -
                                                                     node.prop_delay_s
                                                               : 0.0);
    }
    return obs;
}

void export_observation(const Observation &obs, const std::filesystem::path &bin_path,
                        const std::filesystem::path &header_path)
{
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin)
        throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
    for (const auto &x : obs.nodes)
        for (Eigen::Index p = 0; p < x.rows(); ++p)
            for (Eigen::Index k = 0; k < x.cols(); ++k)
            {
                const float iq[2] = {static_cast<float>(x(p, k).real()), static_cast<float>(x(p, k).imag())};
                bin.write(reinterpret_cast<const char *>(iq), sizeof(iq));
            }
    if (!bin)
        throw std::runtime_error("write failed: " + bin_path.string());

    std::ofstream hdr(header_path);
    if (!hdr)
        throw std::runtime_error("cannot open " + header_path.string() + " for writing");
    hdr << "format = complex64_interleaved\n";
    hdr << "nodes = " << obs.nodes.size() << "\n";
    hdr << "subarray_elems =";
    for (const auto &x : obs.nodes)
        hdr << ' ' << x.rows();
    hdr << "\nsnapshots = " << obs.snapshots() << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", obs.sample_rate_hz);
    hdr << "sample_rate_hz = " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", obs.timestamps.empty() ? 0.0 : obs.timestamps.front());
    hdr << "first_timestamp_s = " << buf << "\n";
    if (!hdr)
        throw std::runtime_error("write failed: " + header_path.string());
}

} // namespace ghr

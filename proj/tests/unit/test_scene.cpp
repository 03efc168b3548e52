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

#include <catch_amalgamated.hpp>

#include "ghr/scene.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

using namespace ghr;
using Catch::Approx;

namespace
{

Scene two_node(double prop, double clock, double phase)
{
    Scene s;
    s.snr_db = INFINITY;
    s.nodes.resize(2);
    s.nodes[1].prop_delay_s = prop;
    s.nodes[1].clock_offset_s = clock;
    s.nodes[1].rf_phase_rad = phase;
    return s;
}

} // namespace

TEST_CASE("scene - element delay geometry")
{
    NodeConfig n;
    n.prop_delay_s = 42e-9;
    n.subarray_elems = 4;
    CHECK(element_delay(n, 0.3, 0, 2e9) == 42e-9);
    for (int p = 0; p < 4; ++p)
        CHECK(element_delay(n, 0.0, p, 2e9) == 42e-9);
    // 0.5 wavelength at 2 GHz is 0.0749 m; sin(30 deg) = 0.5
    const double expected = 42e-9 + 0.5 * (kSpeedOfLight / 2e9) * 0.5 / kSpeedOfLight;
    CHECK(element_delay(n, kPi / 6, 1, 2e9) == Approx(expected).epsilon(1e-12));
    CHECK(element_delay(n, kPi / 6, 1, 2e9) - 42e-9 == Approx(1.25e-10).epsilon(1e-9));
    CHECK_THROWS_AS(element_delay(n, 0.0, 4, 2e9), DomainError);
}

TEST_CASE("scene - zero-error scene gives identical node sequences")
{
    auto s = two_node(0.0, 0.0, 0.0);
    s.nodes[0].subarray_elems = 2;
    s.nodes[1].subarray_elems = 2;
    const auto obs = synthesize_observations(s);
    CHECK(obs.nodes[0] == obs.nodes[1]);
}

TEST_CASE("scene - node phase difference follows the delayed phase law")
{
    const auto s = two_node(100e-9, 3.45e-9, 1.234);
    auto ext = s;
    ext.extend_waveform = false;
    // 103.45 ns exceeds T/10 for a 1 us pulse: needs the extended law
    CHECK_THROWS_AS(synthesize_observations(ext), ConfigError);
    ext.extend_waveform = true;
    const auto obs = synthesize_observations(ext);
    const auto &wf = ext.waveform;
    for (std::size_t k = 0; k < obs.snapshots(); k += 97)
    {
        const double t = obs.timestamps[k];
        const double expected =
            total_phase(wf, t - 103.45e-9, Support::Extended) - total_phase(wf, t, Support::Extended) + 1.234;
        const double got = std::arg(obs.nodes[1](0, static_cast<Eigen::Index>(k)) *
                                    std::conj(obs.nodes[0](0, static_cast<Eigen::Index>(k))));
        CHECK(std::abs(std::remainder(got - expected, kTwoPi)) < 1e-6);
    }
}

TEST_CASE("scene - common window excludes samples outside the pulse")
{
    const auto s = two_node(50e-9, 3.45e-9, 0.0);
    const auto [first, last] = common_window(s);
    const double fs = s.waveform.sample_rate_hz;
    CHECK(first / fs >= 53.45e-9);
    CHECK(last <= static_cast<long>(s.waveform.sample_count()) - 1);
    const auto obs = synthesize_observations(s);
    CHECK(static_cast<long>(obs.snapshots()) == last - first + 1);
    CHECK(obs.timestamps.front() == Approx(first / fs));
}

TEST_CASE("scene - noiseless samples are unit modulus")
{
    auto s = two_node(20e-9, -2.15e-9, -0.876);
    s.nodes[1].subarray_elems = 4;
    s.doa_rad = 0.4;
    const auto obs = synthesize_observations(s);
    for (const auto &x : obs.nodes)
        CHECK((x.cwiseAbs().array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("scene - noise variance and independence")
{
    auto s = two_node(0.0, 0.0, 0.0);
    s.waveform.duration_s = 4e-6; // 20000 samples
    s.nodes[0].subarray_elems = 2;
    s.snr_db = 0.0;
    const auto noisy = synthesize_observations(s);
    s.snr_db = INFINITY;
    const auto clean = synthesize_observations(s);
    const auto K = static_cast<Eigen::Index>(noisy.snapshots());
    REQUIRE(K >= 10000);

    const Eigen::MatrixXcd n0 = noisy.nodes[0] - clean.nodes[0];
    const Eigen::MatrixXcd n1 = noisy.nodes[1] - clean.nodes[1];
    CHECK(n0.row(0).squaredNorm() / static_cast<double>(K) == Approx(1.0).epsilon(0.05));
    CHECK(n1.row(0).squaredNorm() / static_cast<double>(K) == Approx(1.0).epsilon(0.05));

    const double bound = 3.0 / std::sqrt(static_cast<double>(K));
    auto xcorr = [K](const Eigen::RowVectorXcd &a, const Eigen::RowVectorXcd &b) {
        return std::abs(a.dot(b)) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    };
    CHECK(xcorr(n0.row(0), n0.row(1)) <= bound);
    CHECK(xcorr(n0.row(0), n1.row(0)) <= bound);
    CHECK(xcorr(n0.row(1), n1.row(0)) <= bound);
}

TEST_CASE("scene - synthesis is deterministic in the seed")
{
    auto s = two_node(10e-9, 1e-9, 0.5);
    s.snr_db = 5.0;
    s.seed = 99;
    const auto a = synthesize_observations(s);
    const auto b = synthesize_observations(s);
    CHECK(a.nodes[1] == b.nodes[1]);
    s.seed = 100;
    const auto c = synthesize_observations(s);
    CHECK(a.nodes[1] != c.nodes[1]);
}

TEST_CASE("scene - validation")
{
    auto s = two_node(0.0, 0.0, 0.0);
    s.nodes.resize(1);
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = two_node(0.0, 0.0, kPi);
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = two_node(0.0, 0.0, -kPi);
    CHECK_NOTHROW(validate(s));
    s.nodes[0].clock_offset_s = 1e-9;
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = two_node(0.0, 0.0, 0.0);
    s.nodes[1].subarray_elems = 0;
    CHECK_THROWS_AS(validate(s), ConfigError);
}

TEST_CASE("scene - observation export writes interleaved complex64 and a header")
{
    auto s = two_node(5e-9, 0.0, 0.2);
    s.nodes[1].subarray_elems = 3;
    const auto obs = synthesize_observations(s);
    const auto dir = std::filesystem::temp_directory_path() / "ghr_scene_export";
    std::filesystem::create_directories(dir);
    export_observation(obs, dir / "obs.bin", dir / "obs.hdr");
    CHECK(std::filesystem::file_size(dir / "obs.bin") == 8 * 4 * obs.snapshots());
    std::ifstream hdr(dir / "obs.hdr");
    std::string text((std::istreambuf_iterator<char>(hdr)), std::istreambuf_iterator<char>());
    CHECK(text.find("nodes = 2") != std::string::npos);
    CHECK(text.find("subarray_elems = 1 3") != std::string::npos);
    CHECK(text.find("snapshots = " + std::to_string(obs.snapshots())) != std::string::npos);
}

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

#include "ghr/baselines.hpp"
#include "ghr/experiment.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <random>

using namespace ghr;
using Catch::Approx;

namespace
{

struct Pair
{
    ComplexSeq node, ref;
    RealSeq ts;
};

// Short LFM record; node is the continuous-time delayed copy.
Pair chirp_pair(double delay_s, double gamma = 0.0, std::size_t n = 500)
{
    WaveformSpec w;
    w.duration_s = static_cast<double>(n) / w.sample_rate_hz;
    Pair p;
    for (std::size_t k = 0; k < n; ++k)
    {
        const double t = static_cast<double>(k) / w.sample_rate_hz;
        p.ts.push_back(t);
        p.ref.push_back(std::polar(1.0, total_phase(w, t, Support::Extended)));
        p.node.push_back(std::polar(1.0, total_phase(w, t - delay_s, Support::Extended) + gamma));
    }
    return p;
}

// Dense oracle: both sequences are band-limited-interpolated by `factor` and the
// peak of their linear correlation is searched on the fine lag grid, in samples.
double upsampled_peak(const ComplexSeq &node, const ComplexSeq &ref, int factor)
{
    const std::size_t N = node.size();
    const std::size_t U = N * static_cast<std::size_t>(factor);
    Eigen::FFT<double> fft;
    auto upsample = [&](const ComplexSeq &x) {
        std::vector<cdouble> X, Z(U, cdouble(0.0, 0.0)), out;
        fft.fwd(X, x);
        const std::size_t h = N / 2;
        for (std::size_t i = 0; i < h; ++i)
        {
            Z[i] = X[i];
            Z[U - h + i] = X[N - h + i];
        }
        fft.inv(out, Z);
        return out;
    };
    const auto nu = upsample(node);
    const auto ru = upsample(ref);
    double best = -1.0;
    long best_lag = 0;
    for (long j = -2L * factor; j <= 2L * factor; ++j)
    {
        cdouble acc(0.0, 0.0);
        for (std::size_t i = 0; i < U; ++i)
        {
            const long n = static_cast<long>(i) + j;
            if (n >= 0 && n < static_cast<long>(U))
                acc += nu[static_cast<std::size_t>(n)] * std::conj(ru[i]);
        }
        if (std::abs(acc) > best)
        {
            best = std::abs(acc);
            best_lag = j;
        }
    }
    return static_cast<double>(best_lag) / factor;
}

} // namespace

TEST_CASE("baselines - transform correlation matches direct summation")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t n : {16u, 100u, 257u, 1000u})
    {
        ComplexSeq a(n), b(n);
        for (std::size_t k = 0; k < n; ++k)
        {
            a[k] = cdouble(g(rng), g(rng));
            b[k] = cdouble(g(rng), g(rng));
        }
        const auto fast = cross_correlation(a, b);
        const auto slow = cross_correlation_direct(a, b);
        REQUIRE(fast.size() == 2 * n - 1);
        double peak = 0.0;
        for (const auto &v : slow)
            peak = std::max(peak, std::abs(v));
        for (std::size_t i = 0; i < slow.size(); ++i)
            CHECK(std::abs(fast[i] - slow[i]) <= 1e-9 * peak);
    }
}

TEST_CASE("baselines - integer shift of ten samples")
{
    // a 300-sample pulse inside a 500-sample record keeps the whole pulse in view at every lag
    const auto p = chirp_pair(0.0, 0.0, 300);
    ComplexSeq ref(500, cdouble(0.0, 0.0)), node(500, cdouble(0.0, 0.0));
    for (std::size_t k = 0; k < 300; ++k)
    {
        ref[k + 50] = p.ref[k];
        node[k + 60] = p.ref[k];
    }
    CHECK(gcc_delay(node, ref, 5e9) == Approx(2e-9).margin(1e-13));
    CHECK(gcc_delay(ref, node, 5e9) == Approx(-2e-9).margin(1e-13));
    CHECK(std::abs(gcc_delay(ref, ref, 5e9)) <= 1e-13);
}

TEST_CASE("baselines - fractional shift against an upsampled oracle")
{
    const double fs = 5e9;
    const auto p = chirp_pair(0.3 / fs, 0.0, 5000);
    const double est = gcc_delay(p.node, p.ref, fs) * fs;
    const double oracle = upsampled_peak(p.node, p.ref, 64);
    INFO("gcc " << est << " oracle " << oracle);
    CHECK(std::abs(est - 0.3) <= 0.05);
    CHECK(std::abs(est - oracle) <= 0.02);
}

TEST_CASE("baselines - correlation errors")
{
    const ComplexSeq short_seq(10, cdouble(1.0, 0.0));
    CHECK_THROWS_AS(gcc_delay(short_seq, short_seq, 1e9), DomainError);
    const ComplexSeq a(32, cdouble(1.0, 0.0)), b(33, cdouble(1.0, 0.0));
    CHECK_THROWS_AS(cross_correlation(a, b), DomainError);

    // energy only at the two ends puts the peak on the outermost lag
    ComplexSeq x(32, cdouble(0.0, 0.0)), y(32, cdouble(0.0, 0.0));
    x.back() = 1.0;
    y.front() = 1.0;
    CHECK_THROWS_AS(gcc_delay(x, y, 1e9), AmbiguousPeakError);
}

TEST_CASE("baselines - two-step phase with an exact delay")
{
    WaveformSpec w;
    w.duration_s = 500 / w.sample_rate_hz;
    const double tau = 7.3e-9;
    const auto p = chirp_pair(tau, -2.2);
    CHECK(std::abs(wrap_to_pi(two_step_phase(p.node, p.ref, tau, w, p.ts) + 2.2)) <= 1e-6);
    const auto z = chirp_pair(0.0);
    CHECK(std::abs(two_step_phase(z.node, z.ref, 0.0, w, z.ts)) <= 1e-12);
}

TEST_CASE("baselines - nanosecond delay error randomizes the two-step phase")
{
    WaveformSpec w;
    w.duration_s = 500 / w.sample_rate_hz;
    const auto p = chirp_pair(20e-9, 0.9);
    std::mt19937_64 rng(44);
    std::normal_distribution<double> dt(1e-9, 1e-9);
    RealSeq err;
    for (int t = 0; t < 200; ++t)
        err.push_back(two_step_phase(p.node, p.ref, 20e-9 + dt(rng), w, p.ts) - 0.9);
    const double r = circular_rmse(err);
    INFO("circular RMSE " << r);
    CHECK(r == Approx(kPi / std::sqrt(3.0)).margin(0.2));
}

TEST_CASE("baselines - TWME with no jitter is exact")
{
    TwmeModel m;
    m.queue_jitter_mean_s = 0.0;
    m.propagation_s = 50e-9;
    CHECK(twme_ols(3.45e-9, m) == Approx(3.45e-9).margin(1e-18));
    CHECK(twme_ols(-2.15e-9, m) == Approx(-2.15e-9).margin(1e-18));
}

TEST_CASE("baselines - TWME bias follows the queue asymmetry")
{
    auto mean_error = [](double asym) {
        double acc = 0.0;
        for (int run = 0; run < 500; ++run)
        {
            TwmeModel m;
            m.asymmetry = asym;
            m.seed = derive_seed(5, static_cast<std::uint64_t>(run), 0);
            acc += twme_ols(3.45e-9, m) - 3.45e-9;
        }
        return acc / 500.0;
    };
    CHECK(std::abs(mean_error(0.0)) <= 0.2e-9);
    // forward mean (1+a)*mu, return mean (1-a)*mu: half their difference is a*mu
    CHECK(mean_error(0.5) == Approx(0.5e-9).margin(0.1e-9));
}

TEST_CASE("baselines - TWME determinism and validation")
{
    TwmeModel m;
    m.seed = 99;
    CHECK(twme_ols(1e-9, m) == twme_ols(1e-9, m));
    TwmeModel bad = m;
    bad.exchanges = 1;
    CHECK_THROWS_AS(twme_ols(0.0, bad), ConfigError);
    bad = m;
    bad.queue_jitter_mean_s = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = m;
    bad.asymmetry = 1.5;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

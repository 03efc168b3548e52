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

#include "ghr/baselines.hpp"
#include "ghr/features.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <random>

namespace ghr
{

namespace
{

// The FFTW planner is not reentrant; execution of distinct plans is.
std::mutex fftw_planner_mutex;

struct FftwFree
{
    void operator()(fftw_complex *p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer fftw_buffer(std::size_t n)
{
    auto *p = static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!p)
        throw std::bad_alloc();
    return FftwBuffer(p);
}

class Plan
{
  public:
    Plan(int n, fftw_complex *in, fftw_complex *out, int sign)
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        plan_ = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE);
    }
    ~Plan()
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        fftw_destroy_plan(plan_);
    }
    Plan(const Plan &) = delete;
    Plan &operator=(const Plan &) = delete;
    void run() const { fftw_execute(plan_); }

  private:
    fftw_plan plan_;
};

std::size_t fft_size(std::size_t n)
{
    std::size_t p = 1;
    while (p < 2 * n - 1)
        p <<= 1;
    return p;
}

void check_pair(std::span<const cdouble> a, std::span<const cdouble> b, std::size_t min_len)
{
    if (a.size() != b.size())
        throw DomainError("sequences differ in length");
    if (a.size() < min_len)
        throw DomainError("sequences too short (need " + std::to_string(min_len) + " samples)");
}

} // namespace

ComplexSeq cross_correlation_direct(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq)
{
    check_pair(node_seq, ref_seq, 1);
    const long N = static_cast<long>(node_seq.size());
    ComplexSeq c(static_cast<std::size_t>(2 * N - 1));
    for (long l = -(N - 1); l <= N - 1; ++l)
    {
        cdouble acc(0.0, 0.0);
        for (long k = std::max(0L, -l); k < std::min(N, N - l); ++k)
            acc += node_seq[static_cast<std::size_t>(k + l)] * std::conj(ref_seq[static_cast<std::size_t>(k)]);
        c[static_cast<std::size_t>(l + N - 1)] = acc;
    }
    return c;
}

ComplexSeq cross_correlation(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq)
{
    check_pair(node_seq, ref_seq, 1);
    const std::size_t N = node_seq.size();
    const std::size_t P = fft_size(N);
    auto a = fftw_buffer(P), b = fftw_buffer(P), fa = fftw_buffer(P), fb = fftw_buffer(P);
    for (std::size_t k = 0; k < P; ++k)
    {
        const cdouble x = k < N ? node_seq[k] : cdouble{};
        const cdouble y = k < N ? ref_seq[k] : cdouble{};
        a[k][0] = x.real();
        a[k][1] = x.imag();
        b[k][0] = y.real();
        b[k][1] = y.imag();
    }
    const int n = static_cast<int>(P);
    {
        Plan pa(n, a.get(), fa.get(), FFTW_FORWARD);
        Plan pb(n, b.get(), fb.get(), FFTW_FORWARD);
        pa.run();
        pb.run();
    }
    for (std::size_t k = 0; k < P; ++k)
    {
        const cdouble x(fa[k][0], fa[k][1]);
        const cdouble y(fb[k][0], fb[k][1]);
        const cdouble z = x * std::conj(y);
        fa[k][0] = z.real();
        fa[k][1] = z.imag();
    }
    {
        Plan inv(n, fa.get(), a.get(), FFTW_BACKWARD);
        inv.run();
    }
    ComplexSeq c(2 * N - 1);
    const double inv_p = 1.0 / static_cast<double>(P);
    for (long l = -static_cast<long>(N - 1); l <= static_cast<long>(N - 1); ++l)
    {
        const std::size_t idx = l >= 0 ? static_cast<std::size_t>(l) : P - static_cast<std::size_t>(-l);
        c[static_cast<std::size_t>(l + static_cast<long>(N) - 1)] = cdouble(a[idx][0], a[idx][1]) * inv_p;
    }
    return c;
}

double gcc_delay(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq, double sample_rate_hz)
{
    check_pair(node_seq, ref_seq, 16);
    if (!(sample_rate_hz > 0.0))
        throw DomainError("gcc_delay: sample rate must be positive");
    const auto c = cross_correlation(node_seq, ref_seq);
    const long N = static_cast<long>(node_seq.size());
    std::size_t peak = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < c.size(); ++i)
    {
        const double m = std::abs(c[i]);
        if (m > best)
        {
            best = m;
            peak = i;
        }
    }
    if (peak == 0 || peak + 1 == c.size())
        throw AmbiguousPeakError("cross-correlation peak at the edge of the lag range");
    const double a = std::abs(c[peak - 1]);
    const double b = best;
    const double d = std::abs(c[peak + 1]);
    const double denom = a - 2.0 * b + d;
    const double frac = denom != 0.0 ? 0.5 * (a - d) / denom : 0.0;
    const double lag = static_cast<double>(static_cast<long>(peak) - (N - 1)) + frac;
    return lag / sample_rate_hz;
}

double two_step_phase(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq, double delay_est_s,
                      const WaveformSpec &spec, std::span<const double> timestamps)
{
    check_pair(node_seq, ref_seq, 1);
    if (timestamps.size() != node_seq.size())
        throw DomainError("two_step_phase: timestamps must match the sequences");
    if (!std::isfinite(delay_est_s))
        throw DomainError("two_step_phase: delay estimate must be finite");
    const bool pulse_only = spec.kind == WaveformKind::FSK2;
    const Support support = pulse_only ? Support::Pulse : Support::Extended;
    cdouble acc(0.0, 0.0);
    for (std::size_t k = 0; k < node_seq.size(); ++k)
    {
        const double t = timestamps[k];
        const double td = t - delay_est_s;
        if (pulse_only && (td < 0.0 || td > spec.duration_s || t > spec.duration_s))
            continue;
        const double comp = total_phase(spec, t, support) - total_phase(spec, td, support);
        const cdouble z = node_seq[k] * std::conj(ref_seq[k]) * std::polar(1.0, comp);
        const double mag = std::abs(z);
        if (mag > 0.0)
            acc += z / mag;
    }
    return wrap_to_pi(std::arg(acc));
}

void validate(const TwmeModel &model)
{
    if (model.exchanges < 2)
        throw ConfigError("twme exchanges must be >= 2");
    if (!(model.queue_jitter_mean_s >= 0.0))
        throw ConfigError("twme queue jitter mean must be >= 0");
    if (!(model.asymmetry >= 0.0 && model.asymmetry <= 1.0))
        throw ConfigError("twme asymmetry must lie in [0, 1]");
    if (!(model.propagation_s >= 0.0) || !(model.exchange_interval_s > 0.0))
        throw ConfigError("twme propagation must be >= 0 and exchange interval > 0");
}

double twme_ols(double true_offset_s, const TwmeModel &model)
{
    validate(model);
    std::mt19937_64 rng(model.seed);
    auto queue = [&rng](double mean) {
        if (mean <= 0.0)
            return 0.0;
        return std::exponential_distribution<double>(1.0 / mean)(rng);
    };
    const double fwd_mean = model.queue_jitter_mean_s * (1.0 + model.asymmetry);
    const double ret_mean = model.queue_jitter_mean_s * (1.0 - model.asymmetry);
    const double turnaround = 0.01 * model.exchange_interval_s;

    // offset_i = ((T2 - T1) - (T4 - T3)) / 2 = theta + e_i; the zero-skew OLS fit is their mean
    double sum = 0.0;
    for (int i = 0; i < model.exchanges; ++i)
    {
        const double t1 = i * model.exchange_interval_s;
        const double t2 = t1 + model.propagation_s + queue(fwd_mean) + true_offset_s;
        const double t3 = t2 + turnaround;
        const double t4 = t3 - true_offset_s + model.propagation_s + queue(ret_mean);
        sum += 0.5 * ((t2 - t1) - (t4 - t3));
    }
    return sum / model.exchanges;
}

} // namespace ghr

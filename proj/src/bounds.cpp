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

#include "ghr/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace ghr
{

double max_aperture_m(double sample_rate_hz, double duration_s, double bandwidth_hz)
{
    if (!(sample_rate_hz > 0.0 && duration_s > 0.0 && bandwidth_hz > 0.0))
        throw DomainError("max_aperture_m: arguments must be positive");
    return kSpeedOfLight * sample_rate_hz * duration_s / (2.0 * bandwidth_hz);
}

double phase_noise_variance(double snr_db, int subarray_elems, int window)
{
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw DomainError("phase_noise_variance: snr_db must be a number or +inf");
    if (subarray_elems < 1 || window < 1)
        throw DomainError("phase_noise_variance: element count and window must be >= 1");
    if (std::isinf(snr_db))
        return 0.0;
    const double snr = std::pow(10.0, snr_db / 10.0);
    return 1.0 / (snr * subarray_elems * window);
}

CrbResult crb(const WaveformSpec &spec, std::span<const double> timestamps, double phase_noise_var, Support support)
{
    if (timestamps.size() < 2)
        throw DomainError("crb: need at least 2 snapshots");
    if (!(phase_noise_var >= 0.0))
        throw DomainError("crb: phase noise variance must be >= 0");
    const double K = static_cast<double>(timestamps.size());
    double mean = 0.0;
    for (double t : timestamps)
        mean += inst_freq(spec, t, 0, support);
    mean /= K;
    double var = 0.0;
    for (double t : timestamps)
    {
        const double e = inst_freq(spec, t, 0, support) - mean;
        var += e * e;
    }
    var /= K;
    // rounding residue of a constant frequency is not dynamics
    if (std::sqrt(var) <= 1e-13 * std::abs(mean))
        var = 0.0;

    CrbResult r;
    r.mean_omega_rad_s = mean;
    r.var_omega_rad2_s2 = var;
    r.snapshots = static_cast<long>(timestamps.size());
    r.phase_noise_var_rad2 = phase_noise_var;
    if (var == 0.0)
    {
        r.crb_clock_s2 = std::numeric_limits<double>::infinity();
        r.crb_gen_intercept_rad2 = std::numeric_limits<double>::infinity();
        return r;
    }
    r.crb_clock_s2 = phase_noise_var / (K * var);
    r.crb_gen_intercept_rad2 = phase_noise_var / K * (1.0 + mean * mean / var);
    return r;
}

void write_crb_csv(std::ostream &os, std::span<const CrbRow> rows)
{
    os << "snr_db,crb_clock,crb_phase\n";
    char buf[128];
    for (const auto &row : rows)
    {
        std::snprintf(buf, sizeof(buf), "%.6g,%.9e,%.9e\n", row.snr_db, row.bound.crb_clock_s2,
                      row.bound.crb_phase_rad2());
        os << buf;
    }
}

} // namespace ghr

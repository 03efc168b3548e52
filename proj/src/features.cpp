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

#include "ghr/features.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ghr
{

std::size_t PhaseTrajectory::valid_count() const
{
    return static_cast<std::size_t>(std::count(valid_mask.begin(), valid_mask.end(), true));
}

ComplexSeq tangent_vector(std::span<const cdouble> samples, double sample_rate_hz)
{
    if (samples.size() < 3)
        throw DomainError("tangent_vector needs at least 3 samples");
    ComplexSeq v(samples.size() - 2);
    const double half_fs = 0.5 * sample_rate_hz;
    for (std::size_t k = 1; k + 1 < samples.size(); ++k)
        v[k - 1] = (samples[k + 1] - samples[k - 1]) * half_fs;
    return v;
}

namespace
{

Eigen::VectorXcd dominant_eigenvector(const Eigen::MatrixXcd &gram)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    return es.eigenvectors().col(gram.rows() - 1); // eigenvalues ascending
}

} // namespace

ComplexSeq subarray_integrate(const Eigen::MatrixXcd &element_matrix, int window,
                              const std::optional<ArrayGeometry> &geometry)
{
    const Eigen::Index M = element_matrix.rows();
    const Eigen::Index K = element_matrix.cols();
    if (M < 1 || K < 1)
        throw DomainError("subarray_integrate: empty element matrix");
    if (window < 1 || window % 2 == 0)
        throw DomainError("subarray_integrate: window length must be odd and >= 1");
    if (window > K)
        throw DomainError("subarray_integrate: window longer than the record");

    const int half = window / 2;
    ComplexSeq out(static_cast<std::size_t>(K));
    auto clamp_col = [K](Eigen::Index j) { return std::clamp<Eigen::Index>(j, 0, K - 1); };

    if (geometry && !(geometry->sample_rate_hz > 0.0))
        throw DomainError("subarray_integrate: geometry needs a positive sample rate");

    // Whole-record steering fixes the phase gauge when the layout is unknown.
    Eigen::VectorXcd steering;
    if (M > 1 && !geometry)
    {
        steering = dominant_eigenvector(element_matrix * element_matrix.adjoint());
        Eigen::Index anchor = 0;
        if (std::abs(steering(0)) < 1e-3 / std::sqrt(static_cast<double>(M)))
            steering.cwiseAbs().maxCoeff(&anchor);
        steering *= std::polar(1.0, -std::arg(steering(anchor)));
    }

    const double norm = 1.0 / (static_cast<double>(window) * std::sqrt(static_cast<double>(M)));
    ComplexSeq temporal(static_cast<std::size_t>(window));
    Eigen::MatrixXcd slab(M, window);
    for (Eigen::Index k = 0; k < K; ++k)
    {
        for (int i = 0; i < window; ++i)
            slab.col(i) = element_matrix.col(clamp_col(k - half + i));

        Eigen::VectorXcd u;
        if (M == 1)
        {
            for (int i = 0; i < window; ++i)
                temporal[static_cast<std::size_t>(i)] = slab(0, i);
        }
        else
        {
            u = dominant_eigenvector(slab * slab.adjoint());
            // temporal component sigma1 * conj(w) = u^H slab, up to the phase of u
            const Eigen::RowVectorXcd proj = u.adjoint() * slab;
            for (int i = 0; i < window; ++i)
                temporal[static_cast<std::size_t>(i)] = proj(i);
        }

        double step = 0.0;
        if (window > 1)
        {
            cdouble lag1(0.0, 0.0);
            for (int i = 0; i + 1 < window; ++i)
                lag1 += temporal[static_cast<std::size_t>(i + 1)] * std::conj(temporal[static_cast<std::size_t>(i)]);
            step = std::arg(lag1);
        }

        if (M > 1)
        {
            cdouble align;
            if (geometry)
            {
                cdouble curl(0.0, 0.0);
                if (window == 1)
                {
                    // no temporal extent to measure the frequency on: borrow the neighbouring snapshots
                    const cdouble prev = u.dot(element_matrix.col(clamp_col(k - 1)));
                    const cdouble next = u.dot(element_matrix.col(clamp_col(k + 1)));
                    step = std::arg(next * std::conj(temporal[0]) + temporal[0] * std::conj(prev));
                    curl = next * std::conj(temporal[0]) * std::conj(temporal[0] * std::conj(prev));
                }
                for (int i = 0; i + 2 < window; ++i)
                {
                    const auto &t = temporal;
                    const auto j = static_cast<std::size_t>(i);
                    curl += t[j + 2] * std::conj(t[j + 1]) * std::conj(t[j + 1] * std::conj(t[j]));
                }
                // the measured step is the local frequency modulo fs; take the alias nearest the carrier
                const double fs = geometry->sample_rate_hz;
                const double f_alias = step * fs / kTwoPi;
                const double f_local = f_alias + fs * std::round((geometry->carrier_hz - f_alias) / fs);
                const double delta = geometry->element_delay_s;
                // element p lags by p*delta: phase -p*delta*omega + (p*delta)^2 * omega_dot / 2
                const double c = std::abs(curl) > 0.0 ? 0.5 * std::arg(curl) * fs * fs * delta * delta : 0.0;
                // the step was measured on the beamformed stream, i.e. at the power centroid of u, not element 0
                double centroid = 0.0;
                for (Eigen::Index p = 0; p < M; ++p)
                    centroid += static_cast<double>(p) * std::norm(u(p));
                centroid /= u.squaredNorm();
                const double w = kTwoPi * f_local * delta + 2.0 * c * centroid;
                align = 0.0;
                for (Eigen::Index p = 0; p < M; ++p)
                {
                    const double pd = static_cast<double>(p);
                    align += std::polar(1.0, pd * w - pd * pd * c) * u(p); // conj(steering_p) * u_p
                }
            }
            else
                align = steering.dot(u); // steering^H u
            if (std::abs(align) > 0.0)
            {
                const cdouble rot = align / std::abs(align); // u -> u * conj(rot) scales u^H slab by rot
                for (auto &v : temporal)
                    v *= rot;
            }
        }

        cdouble acc = temporal[static_cast<std::size_t>(half)];
        if (window > 1)
        {
            acc = 0.0;
            for (int i = 0; i < window; ++i)
                acc += temporal[static_cast<std::size_t>(i)] * std::polar(1.0, -(i - half) * step);
        }
        out[static_cast<std::size_t>(k)] = acc * norm;
    }
    return out;
}

double wrap_to_pi(double angle)
{
    double r = std::fmod(angle + kPi, kTwoPi);
    if (r < 0.0)
        r += kTwoPi;
    r -= kPi;
    return r >= kPi ? -kPi : r;
}

RealSeq unwrap(std::span<const double> wrapped)
{
    if (wrapped.empty())
        throw DomainError("unwrap: empty sequence");
    RealSeq out(wrapped.size());
    out[0] = wrapped[0];
    double turns = 0.0;
    for (std::size_t k = 1; k < wrapped.size(); ++k)
    {
        const double d = wrapped[k] - wrapped[k - 1];
        // shift d into (-pi, pi]
        turns -= std::ceil((d - kPi) / kTwoPi);
        out[k] = wrapped[k] + kTwoPi * turns;
    }
    return out;
}

PhaseTrajectory phase_difference_trajectory(std::span<const cdouble> node_seq, std::span<const cdouble> ref_seq,
                                            std::span<const double> timestamps)
{
    if (node_seq.size() != ref_seq.size() || node_seq.size() != timestamps.size())
        throw DomainError("phase_difference_trajectory: length mismatch");
    if (node_seq.size() < 2)
        throw DomainError("phase_difference_trajectory: need at least 2 samples");
    const std::size_t K = node_seq.size();
    RealSeq wrapped(K);
    for (std::size_t k = 0; k < K; ++k)
        wrapped[k] = std::arg(node_seq[k] * std::conj(ref_seq[k]));

    PhaseTrajectory traj;
    traj.values_rad = unwrap(wrapped);
    traj.timestamps_s.assign(timestamps.begin(), timestamps.end());
    traj.valid_mask.assign(K, true);
    traj.valid_mask.front() = false;
    traj.valid_mask.back() = false;
    return traj;
}

void mask_edges(PhaseTrajectory &traj, std::size_t count)
{
    const std::size_t K = traj.valid_mask.size();
    for (std::size_t k = 0; k < std::min(count, K); ++k)
    {
        traj.valid_mask[k] = false;
        traj.valid_mask[K - 1 - k] = false;
    }
}

bool has_cycle_slip(const PhaseTrajectory &traj)
{
    const auto &v = traj.values_rad;
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
    {
        if (!traj.valid_mask[k - 1] || !traj.valid_mask[k] || !traj.valid_mask[k + 1])
            continue;
        if (std::abs(v[k + 1] - 2.0 * v[k] + v[k - 1]) > 0.5 * kPi)
            return true;
    }
    return false;
}

IntegratedStreams integrate_nodes(const Observation &obs, const ExtractionOptions &opts)
{
    IntegratedStreams streams;
    const bool tangent = opts.source == TrajectorySource::Tangent;
    if (tangent)
    {
        if (obs.timestamps.size() < 3)
            throw DomainError("observation too short for tangent estimation");
        streams.timestamps.assign(obs.timestamps.begin() + 1, obs.timestamps.end() - 1);
    }
    else
        streams.timestamps = obs.timestamps;

    auto geometry_of = [&obs](std::size_t m) -> std::optional<ArrayGeometry> {
        if (m >= obs.element_delay_s.size())
            return std::nullopt;
        return ArrayGeometry{obs.element_delay_s[m], obs.sample_rate_hz, obs.carrier_hz};
    };
    streams.nodes.reserve(obs.nodes.size());
    for (std::size_t m = 0; m < obs.nodes.size(); ++m)
    {
        const auto &x = obs.nodes[m];
        if (!tangent)
        {
            streams.nodes.push_back(subarray_integrate(x, opts.window, geometry_of(m)));
            continue;
        }
        Eigen::MatrixXcd v(x.rows(), x.cols() - 2);
        ComplexSeq row(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index p = 0; p < x.rows(); ++p)
        {
            for (Eigen::Index k = 0; k < x.cols(); ++k)
                row[static_cast<std::size_t>(k)] = x(p, k);
            const auto tv = tangent_vector(row, obs.sample_rate_hz);
            for (std::size_t k = 0; k < tv.size(); ++k)
                v(p, static_cast<Eigen::Index>(k)) = tv[k];
        }
        streams.nodes.push_back(subarray_integrate(v, opts.window, geometry_of(m)));
    }
    return streams;
}

std::vector<NodeFeatures> extract_features(const Observation &obs, const ExtractionOptions &opts)
{
    const auto streams = integrate_nodes(obs, opts);
    const std::size_t edge = std::max<std::size_t>(1, static_cast<std::size_t>(opts.window / 2));
    std::vector<NodeFeatures> out;
    for (std::size_t m = 1; m < streams.nodes.size(); ++m)
    {
        NodeFeatures f;
        f.trajectory = phase_difference_trajectory(streams.nodes[m], streams.nodes[0], streams.timestamps);
        mask_edges(f.trajectory, edge);
        f.cycle_slip = has_cycle_slip(f.trajectory);
        out.push_back(std::move(f));
    }
    return out;
}

void write_trajectory_csv(const PhaseTrajectory &traj, const std::filesystem::path &path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "t,psi,valid\n";
    char buf[96];
    for (std::size_t k = 0; k < traj.size(); ++k)
    {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", traj.timestamps_s[k], traj.values_rad[k],
                      traj.valid_mask[k] ? 1 : 0);
        os << buf;
    }
    if (!os)
        throw std::runtime_error("write failed: " + path.string());
}

} // namespace ghr

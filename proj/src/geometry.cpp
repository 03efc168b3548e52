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

#include "ghr/geometry.hpp"
#include "ghr/experiment.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ghr
{

namespace
{

// Standardized regressor; empty when the input does not vary.
std::optional<Eigen::VectorXd> standardize(const Eigen::VectorXd &x)
{
    const double mean = x.mean();
    const Eigen::VectorXd c = x.array() - mean;
    const double sd = c.norm() / std::sqrt(static_cast<double>(x.size()));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
        return std::nullopt;
    return Eigen::VectorXd(c / sd);
}

// RMS residual of y regressed on an intercept plus the given columns.
double fit_residual(const Eigen::VectorXd &y, const std::vector<Eigen::VectorXd> &cols, double *r2 = nullptr)
{
    const auto K = y.size();
    Eigen::MatrixXd A(K, static_cast<Eigen::Index>(cols.size()) + 1);
    A.col(0).setOnes();
    for (std::size_t j = 0; j < cols.size(); ++j)
        A.col(static_cast<Eigen::Index>(j) + 1) = cols[j];
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
    const double ss_res = (y - A * coef).squaredNorm();
    if (r2)
    {
        const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
        *r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
    return std::sqrt(ss_res / static_cast<double>(K));
}

} // namespace

int count_clusters(RealSeq values, double rel_gap)
{
    if (values.empty())
        return 0;
    std::sort(values.begin(), values.end());
    const double range = values.back() - values.front();
    if (!(range > 0.0))
        return 1;
    int clusters = 1;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] - values[i - 1] > rel_gap * range)
            ++clusters;
    return clusters;
}

GeometryReport geometry_report(const Scene &scene, const ProcessingOptions &opts)
{
    const auto obs = synthesize_observations(scene);
    ExtractionOptions eo;
    eo.window = opts.window;
    eo.source = opts.source;
    const auto streams = integrate_nodes(obs, eo);
    const auto plan = plan_snapshots(scene, streams.timestamps, opts, false);
    const auto &wf = scene.waveform;
    const auto support = scene.support();
    const std::size_t nodes = scene.nodes.size() - 1;

    GeometryReport rep;
    rep.kind = wf.kind;
    std::vector<PhaseTrajectory> traj;
    for (std::size_t m = 0; m < nodes; ++m)
        traj.push_back(phase_difference_trajectory(streams.nodes[m + 1], streams.nodes[0], streams.timestamps));

    const auto K = static_cast<Eigen::Index>(plan.indices.size());
    Eigen::VectorXd omega(K), omega_dot(K);
    for (Eigen::Index k = 0; k < K; ++k)
    {
        GeometryRow row;
        row.t_s = plan.timestamps_s[static_cast<std::size_t>(k)];
        row.omega_rad_s = inst_freq(wf, row.t_s, 0, support);
        row.omega_dot_rad_s2 = inst_freq(wf, row.t_s, 1, support);
        for (const auto &tr : traj)
            row.psi_rad.push_back(tr.values_rad[plan.indices[static_cast<std::size_t>(k)]]);
        omega(k) = row.omega_rad_s;
        omega_dot(k) = row.omega_dot_rad_s2;
        rep.rows.push_back(std::move(row));
    }

    const auto w = standardize(omega);
    const auto wd = standardize(omega_dot);
    std::vector<Eigen::VectorXd> line, quad, plane;
    if (w)
    {
        line.push_back(*w);
        quad.push_back(*w);
        plane.push_back(*w);
        quad.push_back(w->array().square().matrix());
    }
    if (wd)
        plane.push_back(*wd);

    for (std::size_t m = 0; m < nodes; ++m)
    {
        Eigen::VectorXd y(K);
        for (Eigen::Index k = 0; k < K; ++k)
            y(k) = rep.rows[static_cast<std::size_t>(k)].psi_rad[m];
        NodeGeometry g;
        g.line_residual_rad = fit_residual(y, line, &g.line_r2);
        g.quadratic_residual_rad = fit_residual(y, quad);
        g.plane_residual_rad = fit_residual(y, plane);
        rep.nodes.push_back(g);
    }
    rep.frequency_clusters = count_clusters(RealSeq(omega.data(), omega.data() + K));
    return rep;
}

void write_geometry(const GeometryReport &report, const std::filesystem::path &dir)
{
    std::filesystem::create_directories(dir);
    const auto data_path = dir / "geometry.csv";
    std::ofstream os(data_path);
    if (!os)
        throw std::runtime_error("cannot open " + data_path.string() + " for writing");
    os << "t,omega,omega_dot";
    for (std::size_t m = 0; m < report.nodes.size(); ++m)
        os << ",psi_" << m + 2;
    os << "\n";
    char buf[64];
    for (const auto &row : report.rows)
    {
        std::snprintf(buf, sizeof(buf), "%.12e", row.t_s);
        os << buf;
        std::snprintf(buf, sizeof(buf), ",%.12e", row.omega_rad_s);
        os << buf;
        std::snprintf(buf, sizeof(buf), ",%.12e", row.omega_dot_rad_s2);
        os << buf;
        for (double p : row.psi_rad)
        {
            std::snprintf(buf, sizeof(buf), ",%.12e", p);
            os << buf;
        }
        os << "\n";
    }
    if (!os)
        throw std::runtime_error("write failed: " + data_path.string());

    const auto summary_path = dir / "geometry_summary.csv";
    std::ofstream ss(summary_path);
    if (!ss)
        throw std::runtime_error("cannot open " + summary_path.string() + " for writing");
    ss << "node,kind,line_r2,line_residual_rad,quadratic_residual_rad,plane_residual_rad,frequency_clusters\n";
    char line[256];
    for (std::size_t m = 0; m < report.nodes.size(); ++m)
    {
        const auto &g = report.nodes[m];
        std::snprintf(line, sizeof(line), "%zu,%s,%.12f,%.6e,%.6e,%.6e,%d\n", m + 2,
                      std::string(to_string(report.kind)).c_str(), g.line_r2, g.line_residual_rad,
                      g.quadratic_residual_rad, g.plane_residual_rad, report.frequency_clusters);
        ss << line;
    }
    if (!ss)
        throw std::runtime_error("write failed: " + summary_path.string());
}

} // namespace ghr

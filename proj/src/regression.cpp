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

#include "ghr/regression.hpp"
#include "ghr/features.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <string>

namespace ghr
{

namespace
{

constexpr double kMaxGramCondition = 1e12;

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

double sign_pow(int j) { return (j % 2 == 0) ? 1.0 : -1.0; }

void check_shapes(const Eigen::MatrixXd &Psi, Eigen::Index K, int order)
{
    if (Psi.rows() != K)
        throw DomainError("trajectory matrix and basis differ in snapshot count");
    if (Psi.cols() < 1)
        throw DomainError("no trajectories to regress");
    if (K <= order + 1)
        throw DomainError("need more snapshots than basis order + 1");
}

Eigen::VectorXd intercepts(const Eigen::MatrixXd &Psi, const Eigen::MatrixXd &D, const Eigen::MatrixXd &Q)
{
    return (Psi - D * Q).colwise().mean().transpose();
}

} // namespace

DynamicBasis build_basis(const WaveformSpec &spec, std::span<const double> timestamps, int order, Support support)
{
    if (order < 1 || order > 4)
        throw DomainError("basis order must be in 1..4");
    DynamicBasis b;
    b.order = order;
    b.timestamps_s.assign(timestamps.begin(), timestamps.end());
    b.matrix.resize(static_cast<Eigen::Index>(timestamps.size()), order);
    for (int j = 1; j <= order; ++j)
    {
        const double scale = sign_pow(j) / factorial(j);
        for (std::size_t k = 0; k < timestamps.size(); ++k)
            b.matrix(static_cast<Eigen::Index>(k), j - 1) = scale * inst_freq(spec, timestamps[k], j - 1, support);
    }
    return b;
}

Eigen::MatrixXd center(const Eigen::MatrixXd &matrix)
{
    if (matrix.rows() < 2)
        throw DomainError("centering needs at least 2 rows");
    return matrix.rowwise() - matrix.colwise().mean();
}

GeomEstimate ghr_regress(const Eigen::MatrixXd &Psi, const DynamicBasis &basis)
{
    const Eigen::MatrixXd &D = basis.matrix;
    const int d = static_cast<int>(D.cols());
    check_shapes(Psi, D.rows(), d);

    const Eigen::MatrixXd Dc = center(D);
    const Eigen::MatrixXd Pc = center(Psi);
    const double K = static_cast<double>(D.rows());

    Eigen::VectorXd scale(d);
    for (int j = 0; j < d; ++j)
    {
        const double raw_rms = D.col(j).norm() / std::sqrt(K);
        scale(j) = Dc.col(j).norm() / std::sqrt(K);
        if (!(scale(j) > 1e-12 * raw_rms) || raw_rms == 0.0)
            throw DegenerateBasisError(j + 1, "basis column " + std::to_string(j + 1) +
                                                  " is collinear with the intercept (constant over the snapshots)");
    }
    const Eigen::MatrixXd Dn = Dc * scale.cwiseInverse().asDiagonal();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Dn, Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    const double cond = sv(0) / sv(d - 1);
    if (!(cond * cond < kMaxGramCondition))
    {
        Eigen::Index worst = 0;
        svd.matrixV().col(d - 1).cwiseAbs().maxCoeff(&worst);
        throw DegenerateBasisError(static_cast<int>(worst) + 1,
                                   "centred basis is rank deficient (condition number of the normal matrix " +
                                       std::to_string(cond * cond) + "); column " + std::to_string(worst + 1) +
                                       " is nearly a combination of the others");
    }

    const Eigen::MatrixXd Qn = Dn.colPivHouseholderQr().solve(Pc);
    GeomEstimate est;
    est.order = d;
    est.Q_hat = scale.cwiseInverse().asDiagonal() * Qn;
    est.Gamma_hat = intercepts(Psi, D, est.Q_hat);
    est.residual_rms_rad = std::sqrt((Pc - Dc * est.Q_hat).squaredNorm() / (K * static_cast<double>(Psi.cols())));
    return est;
}

GeomEstimate ghr_lfm_fast(const Eigen::MatrixXd &Psi, std::span<const double> omega)
{
    const auto K = static_cast<Eigen::Index>(omega.size());
    if (K < 3)
        throw DomainError("fast path needs at least 3 snapshots");
    if (Psi.rows() != K)
        throw DomainError("trajectory matrix and omega differ in snapshot count");
    const Eigen::Map<const Eigen::VectorXd> w(omega.data(), K);
    const double w_mean = w.mean();
    const Eigen::VectorXd wc = w.array() - w_mean;
    const double var = wc.squaredNorm();
    if (!(var > 0.0) || !(std::sqrt(var / static_cast<double>(K)) > 1e-12 * std::abs(w_mean)))
        throw DegenerateBasisError(1, "instantaneous frequency is constant over the snapshots (zero variance)");

    GeomEstimate est;
    est.order = 1;
    est.Q_hat.resize(1, Psi.cols());
    est.Gamma_hat.resize(Psi.cols());
    double ss = 0.0;
    for (Eigen::Index m = 0; m < Psi.cols(); ++m)
    {
        const double p_mean = Psi.col(m).mean();
        double cov = 0.0;
        for (Eigen::Index k = 0; k < K; ++k)
            cov += wc(k) * (Psi(k, m) - p_mean);
        const double slope = cov / var;
        est.Q_hat(0, m) = -slope;
        est.Gamma_hat(m) = p_mean - slope * w_mean;
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const double r = Psi(k, m) - p_mean - slope * wc(k);
            ss += r * r;
        }
    }
    est.residual_rms_rad = std::sqrt(ss / static_cast<double>(K * Psi.cols()));
    return est;
}

std::vector<TruncationTerm> truncation_terms(const WaveformSpec &spec, int order)
{
    const auto c = constant_derivative_order(spec.kind);
    if (!c || *c != order)
        return {};
    // constant derivative: evaluate anywhere inside the pulse
    const double deriv = inst_freq(spec, 0.5 * spec.duration_s, order);
    return {TruncationTerm{order + 1, sign_pow(order + 1) / factorial(order + 1) * deriv}};
}

double curvature_gain(double sample_rate_hz, int window, bool tangent)
{
    const double L2 = static_cast<double>(window) * window;
    return ((L2 - 1.0) / 24.0 + (tangent ? 0.5 : 0.0)) / (sample_rate_hz * sample_rate_hz);
}

std::vector<TruncationTerm> window_bias_terms(const WaveformSpec &spec, double curvature_gain)
{
    if (spec.kind != WaveformKind::QFM || curvature_gain == 0.0)
        return {};
    const double omega_ddot = inst_freq(spec, 0.5 * spec.duration_s, 2);
    return {TruncationTerm{1, -omega_ddot * curvature_gain}};
}

void invert_sfm(GeomEstimate &est, const WaveformSpec &spec, double curvature_gain)
{
    if (spec.kind != WaveformKind::SFM || est.order != 2)
        throw DomainError("invert_sfm applies to order-2 SFM estimates only");
    const double a = kTwoPi * *spec.sfm_mod_rate_hz;
    const double shrink = 1.0 - curvature_gain * a * a;
    for (Eigen::Index m = 0; m < est.Q_hat.cols(); ++m)
    {
        const double q = est.Q_hat(0, m);
        if (!(std::abs(a * q / shrink) < 1.0))
            throw DomainError("SFM delay slope outside the invertible range (|tau| must stay below 1/(4 f_mod))");
        const double tau = std::asin(a * q / shrink) / a;
        est.Q_hat(0, m) = tau;
        est.Gamma_hat(m) += kTwoPi * spec.carrier_hz * (tau - q);
    }
}

int default_order(WaveformKind kind)
{
    switch (kind)
    {
    case WaveformKind::QFM:
    case WaveformKind::SFM: // omega'' is an affine function of omega, so order 3 is always rank deficient
        return 2;
    default:
        return 1;
    }
}

CalibrationResult decouple(const GeomEstimate &est, std::span<const double> known_delays_s,
                           std::span<const TruncationTerm> terms)
{
    const auto n = static_cast<std::size_t>(est.Q_hat.cols());
    if (known_delays_s.size() != n || static_cast<std::size_t>(est.Gamma_hat.size()) != n)
        throw DomainError("decouple: known delays must match the number of estimated nodes");
    CalibrationResult out;
    out.nodes.resize(n);
    for (std::size_t m = 0; m < n; ++m)
    {
        auto &r = out.nodes[m];
        const double tau = est.Q_hat(0, static_cast<Eigen::Index>(m));
        double gamma = est.Gamma_hat(static_cast<Eigen::Index>(m));
        for (const auto &t : terms)
            gamma -= t.coefficient * std::pow(tau, t.power);
        r.tau_tot_est_s = tau;
        r.clock_offset_est_s = tau - known_delays_s[m];
        r.rf_phase_est_rad = wrap_to_pi(gamma);
        r.residual_rms_rad = est.residual_rms_rad;
    }
    return out;
}

CalibrationResult decouple(const GeomEstimate &est, std::span<const double> known_delays_s,
                           std::optional<double> chirp_rate_hz_per_s)
{
    std::vector<TruncationTerm> terms;
    if (est.order == 1)
    {
        if (!chirp_rate_hz_per_s)
            throw DomainError("decouple: order-1 estimate requires the chirp rate");
        terms.push_back({2, kPi * *chirp_rate_hz_per_s});
    }
    else if (chirp_rate_hz_per_s)
        throw DomainError("decouple: chirp rate applies to order-1 estimates only");
    return decouple(est, known_delays_s, terms);
}

void write_calibration_csv(std::ostream &os, const CalibrationResult &result, std::span<const double> dT_true_s,
                           std::span<const double> gamma_true_rad)
{
    if (dT_true_s.size() != result.nodes.size() || gamma_true_rad.size() != result.nodes.size())
        throw DomainError("calibration CSV: truth vectors must match the node count");
    os << "node,dT_true,dT_est,gamma_true,gamma_est,residual_rms\n";
    char buf[256];
    for (std::size_t m = 0; m < result.nodes.size(); ++m)
    {
        const auto &r = result.nodes[m];
        std::snprintf(buf, sizeof(buf), "%zu,%.12e,%.12e,%.12f,%.12f,%.6e\n", m + 2, dT_true_s[m],
                      r.clock_offset_est_s, gamma_true_rad[m], r.rf_phase_est_rad, r.residual_rms_rad);
        os << buf;
    }
}

} // namespace ghr

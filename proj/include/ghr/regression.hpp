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
#include "ghr/waveform.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace ghr
{

/// Regressors of the phase-difference model. Row k holds, for j = 1..order,
/// ((-1)^j / j!) * d^(j-1)omega/dt^(j-1) evaluated at timestamps_s[k].
struct DynamicBasis
{
    Eigen::MatrixXd matrix;
    int order = 1;
    RealSeq timestamps_s;
};

// Throws UndefinedDerivativeError when a needed derivative does not exist at a timestamp.
DynamicBasis build_basis(const WaveformSpec &spec, std::span<const double> timestamps, int order,
                         Support support = Support::Pulse);

// Subtracts each column's mean.
Eigen::MatrixXd center(const Eigen::MatrixXd &matrix);

struct GeomEstimate
{
    Eigen::MatrixXd Q_hat;     // order x (M-1); row 0 holds the total delays in seconds
    Eigen::VectorXd Gamma_hat; // regression intercepts, one per node
    double residual_rms_rad = 0.0;
    int order = 1;
};

/// Multivariate least squares of Psi (K x (M-1), one trajectory per column) on
/// the dynamic basis. Slopes come from the centred system, solved by QR on
/// unit-RMS columns; intercepts are the column means of Psi - D*Q_hat.
/// Throws DegenerateBasisError when the centred basis loses rank.
GeomEstimate ghr_regress(const Eigen::MatrixXd &Psi, const DynamicBasis &basis);

// Scalar covariance fit for an order-1 (LFM) basis, linear in K*(M-1).
GeomEstimate ghr_lfm_fast(const Eigen::MatrixXd &Psi, std::span<const double> omega);

// Model term c * tau^power that the truncated basis leaves inside the intercept.
struct TruncationTerm
{
    int power = 0;
    double coefficient = 0.0;
};

// Terms absorbed by an order-`order` basis: non-empty only when the order-th
// derivative of omega is constant (LFM at order 1, QFM at order 2).
std::vector<TruncationTerm> truncation_terms(const WaveformSpec &spec, int order);

// Phase shift per unit phase curvature left by feature extraction: averaging a
// phasor over `window` snapshots moves its phase by phi'' (window^2 - 1) / (24 fs^2),
// and a central-difference tangent adds phi'' / (2 fs^2).
double curvature_gain(double sample_rate_hz, int window, bool tangent);

// For the phase difference of a delayed copy phi'' = -tau * omega_ddot, which is
// constant for QFM and so biases the intercept by a term linear in tau. Empty
// for other kinds or a zero gain.
std::vector<TruncationTerm> window_bias_terms(const WaveformSpec &spec, double curvature_gain);

// For SFM the order-2 model is exact: with a = 2*pi*f_mod and g the curvature
// gain, the omega slope equals sin(a*tau) * (1/a - g*a) and the intercept
// carries 2*pi*f0*(slope - tau). Rewrites row 0 of Q_hat to tau and the
// intercepts accordingly. Requires |a*tau| < pi/2.
void invert_sfm(GeomEstimate &est, const WaveformSpec &spec, double curvature_gain);

// Basis order used for each waveform kind.
int default_order(WaveformKind kind);

struct NodeCalibration
{
    double tau_tot_est_s = 0.0;
    double clock_offset_est_s = 0.0;
    double rf_phase_est_rad = 0.0; // in [-pi, pi)
    double residual_rms_rad = 0.0;
};

struct CalibrationResult
{
    std::vector<NodeCalibration> nodes; // index 0 is node 2
};

/// Splits each total delay into clock offset and known spatial delay, and
/// removes the truncation terms from the intercept before wrapping.
CalibrationResult decouple(const GeomEstimate &est, std::span<const double> known_delays_s,
                           std::span<const TruncationTerm> terms);

// LFM convenience form: chirp rate required for order 1, rejected otherwise.
CalibrationResult decouple(const GeomEstimate &est, std::span<const double> known_delays_s,
                           std::optional<double> chirp_rate_hz_per_s);

// node, dT_true, dT_est, gamma_true, gamma_est, residual_rms (node numbering starts at 2).
void write_calibration_csv(std::ostream &os, const CalibrationResult &result, std::span<const double> dT_true_s,
                           std::span<const double> gamma_true_rad);

} // namespace ghr

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

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghr
{

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using cdouble = std::complex<double>;
using ComplexSeq = std::vector<cdouble>;
using RealSeq = std::vector<double>;

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

// Derivative of a piecewise waveform requested exactly at a discontinuity.
class UndefinedDerivativeError : public DomainError
{
  public:
    using DomainError::DomainError;
};

// Invalid waveform / scene / experiment configuration.
class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

// Centered dynamic basis is rank deficient or too ill-conditioned to regress on.
class DegenerateBasisError : public std::runtime_error
{
  public:
    DegenerateBasisError(int column, const std::string &what)
        : std::runtime_error(what), column_(column)
    {
    }

    // 1-based index of the basis column responsible for the degeneracy.
    int column() const noexcept { return column_; }

  private:
    int column_;
};

// Cross-correlation maximum sits on the edge of the lag range.
class AmbiguousPeakError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent RNG streams from counters.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept
{
    return mix64(mix64(mix64(base) ^ (a + 0x632BE59BD9B4E019ULL)) ^ (b + 0x85157AF5ULL));
}

} // namespace ghr

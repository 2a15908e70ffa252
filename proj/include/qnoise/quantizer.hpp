// SPDX-License-Identifier: Apache-2.0
//
// qnoise: quantization noise analysis for digital phased arrays
// Copyright (C) 2026 The qnoise authors
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

#ifndef QNOISE_QUANTIZER_HPP
#define QNOISE_QUANTIZER_HPP

#include "errors.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnoise {

inline constexpr int max_bits = 24;

namespace detail {

inline void check_bits(int bits)
{
    if (bits < 1 || bits > max_bits)
        throw std::invalid_argument("bit count must be in [1, 24], got " + std::to_string(bits));
}

inline void check_clip(double clip)
{
    if (!(clip > 0.0) || !std::isfinite(clip))
        throw std::invalid_argument("clipping level must be positive and finite");
}

} // namespace detail

/*
 k-bit uniform midrise quantizer with clipping level R.

 Reproduction levels are x_m = -R + (m - 1/2) * delta, m = 1..2^k, with
 delta = 2R / 2^k. Cells are half-open, [x_m - delta/2, x_m + delta/2), so an
 input sitting exactly on a cell edge maps to the upper level. Inputs beyond
 the outermost edges +-(R - delta) saturate to +-(R - delta/2).
*/
class Quantizer {
public:
    Quantizer(int bits, double clip)
        : bits_(bits), clip_(clip)
    {
        detail::check_bits(bits);
        detail::check_clip(clip);
        half_levels_ = std::int64_t{1} << (bits - 1);
        // 2^k is a power of two, so clip_ == half_levels_ * step_ exactly.
        step_ = 2.0 * clip / std::ldexp(1.0, bits);
    }

    int bits() const { return bits_; }
    double clip() const { return clip_; }
    double step() const { return step_; }
    double saturation() const { return clip_ - 0.5 * step_; }
    std::int64_t level_count() const { return 2 * half_levels_; }

    // 0-based: level(0) = -saturation(), level(level_count()-1) = saturation().
    double level(std::int64_t m) const
    {
        return -clip_ + (static_cast<double>(m) + 0.5) * step_;
    }

    std::vector<double> levels() const
    {
        std::vector<double> out(static_cast<std::size_t>(level_count()));
        for (std::int64_t m = 0; m < level_count(); ++m)
            out[static_cast<std::size_t>(m)] = level(m);
        return out;
    }

    double quantize(double x) const
    {
        // Work on |x| so that Q(-x) == -Q(x) bit-exactly off the cell edges.
        // For x < 0 an edge value belongs to the cell above it, i.e. the one
        // closer to zero, hence ceil() - 1 instead of floor().
        const double t = std::fabs(x) / step_;
        double cell = (x >= 0.0) ? std::floor(t) : std::ceil(t) - 1.0;
        const double top = static_cast<double>(half_levels_ - 1);
        if (cell > top)
            cell = top;
        if (cell < 0.0)
            cell = 0.0;
        const double magnitude = (cell + 0.5) * step_;
        return (x >= 0.0) ? magnitude : -magnitude;
    }

    double error(double x) const { return x - quantize(x); }

    double operator()(double x) const { return quantize(x); }

private:
    int bits_;
    double clip_;
    double step_ = 0.0;
    std::int64_t half_levels_ = 0;
};

inline Quantizer make_quantizer(int bits, double clip) { return Quantizer(bits, clip); }

inline double quantize(const Quantizer& q, double x) { return q.quantize(x); }

inline double quantization_error(const Quantizer& q, double x) { return q.error(x); }

/// Quantization noise variance of a unit Gaussian: granular term R^2/(3*4^k)
/// plus the overload term sqrt(8/pi) R^-3 exp(-R^2/2).
inline double vq_approx(int bits, double clip)
{
    detail::check_bits(bits);
    detail::check_clip(clip);
    const double granular = clip * clip / (3.0 * std::ldexp(1.0, 2 * bits));
    const double overload = std::sqrt(8.0 / std::numbers::pi) * std::exp(-0.5 * clip * clip)
                            / (clip * clip * clip);
    return granular + overload;
}

/// Residual of the stationarity condition d/dR vq_approx(k, R) = 0, written as
/// exp(-R^2/2) - sqrt(pi/8) (2/3) 2^-2k R^5 / (3 + R^2).
inline double optimal_clip_residual(int bits, double clip)
{
    const double r2 = clip * clip;
    const double rhs = std::sqrt(std::numbers::pi / 8.0) * (2.0 / 3.0) * std::ldexp(1.0, -2 * bits)
                       * r2 * r2 * clip / (3.0 + r2);
    return std::exp(-0.5 * r2) - rhs;
}

/// Clipping level minimizing vq_approx(k, .). Bisection on [0.5, 10].
inline double solve_optimal_clip(int bits)
{
    detail::check_bits(bits);
    double lo = 0.5;
    double hi = 10.0;
    double f_lo = optimal_clip_residual(bits, lo);
    const double f_hi = optimal_clip_residual(bits, hi);
    if (!(f_lo > 0.0 && f_hi < 0.0))
        throw NoConvergence("optimal clip: root not bracketed on [0.5, 10]");

    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = optimal_clip_residual(bits, mid);
        if (f_mid == 0.0)
            return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    const double root = 0.5 * (lo + hi);
    if (!(hi - lo <= 1e-13) || std::fabs(optimal_clip_residual(bits, root)) >= 1e-12)
        throw NoConvergence("optimal clip: bisection did not reach tolerance");
    return root;
}

/// Least-squares quadratic fit of the optimal clipping level, used by the
/// simulation protocol: R(k) = -0.0053 k^2 + 0.3763 k + 1.26.
inline double clip_fit(int bits)
{
    detail::check_bits(bits);
    const double k = bits;
    return -0.0053 * k * k + 0.3763 * k + 1.26;
}

} // namespace qnoise

#endif

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

#ifndef QNOISE_BIVARIATE_HPP
#define QNOISE_BIVARIATE_HPP

#include "errors.hpp"
#include "gaussian.hpp"
#include "quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qnoise {

/// Settings for the corner-region integral. upper_cut is how far beyond R the
/// Gaussian tail is kept; nodes is the Gauss-Legendre order of each panel.
struct QuadratureSpec {
    double upper_cut = 10.0;
    double abs_tol = 1e-10;
    int nodes = 24;

    void validate() const
    {
        if (!(upper_cut >= 8.0))
            throw std::invalid_argument("QuadratureSpec: upper_cut must be >= 8");
        if (!(abs_tol > 0.0 && abs_tol <= 1e-9))
            throw std::invalid_argument("QuadratureSpec: abs_tol must be in (0, 1e-9]");
        if (nodes < 20)
            throw std::invalid_argument("QuadratureSpec: nodes must be >= 20");
    }
};

namespace detail {

inline const GaussLegendreRule& cached_rule(int nodes)
{
    thread_local std::map<int, GaussLegendreRule> cache;
    auto it = cache.find(nodes);
    if (it == cache.end())
        it = cache.emplace(nodes, gauss_legendre(nodes)).first;
    return it->second;
}

inline void check_open_rho(double rho, const char* who)
{
    if (!(std::fabs(rho) < 1.0))
        throw std::invalid_argument(std::string(who) + ": |rho| must be < 1");
}

} // namespace detail

/*
 Pr[(X, Y) in C1] with C1 = [R, inf)^2 u (-inf, -R]^2 for a standard
 bivariate normal pair with correlation rho. By symmetry this is twice the
 upper quadrant. The inner coordinate is integrated exactly through the
 conditional law Y | X = x ~ N(rho x, 1 - rho^2), leaving a 1-D integral
 over x in [R, R + upper_cut] that is done by adaptive Gauss-Legendre.
*/
inline double corner_prob(double clip, double rho, const QuadratureSpec& quad = {})
{
    detail::check_open_rho(rho, "corner_prob");
    detail::check_clip(clip);
    quad.validate();

    const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
    auto integrand = [=](double x) {
        return std_normal_pdf(x) * std_normal_ccdf((clip - rho * x) / s);
    };

    const double lo = clip;
    const double hi = clip + quad.upper_cut;
    std::vector<double> breaks;
    for (double d : {0.25, 1.0, 3.0})
        breaks.push_back(lo + d);
    if (rho > 0.0) {
        // Conditional tail switches on around x = R / rho over a width s / rho.
        const double centre = clip / rho;
        const double width = s / rho;
        for (double m : {-8.0, -1.0, 0.0, 1.0, 8.0})
            breaks.push_back(centre + m * width);
    } else if (rho < 0.0) {
        // Decay away from the corner on the scale s^2 / (R (1 + |rho|) |rho|).
        const double scale = s * s / (clip * (1.0 - rho) * (-rho));
        for (double m : {1.0, 4.0, 16.0, 64.0})
            breaks.push_back(lo + m * scale);
    }
    std::sort(breaks.begin(), breaks.end());

    const auto res = integrate_adaptive(integrand, lo, hi, detail::cached_rule(quad.nodes),
                                        0.5 * quad.abs_tol, breaks);
    if (!(res.error_estimate <= 0.5 * quad.abs_tol))
        throw QuadratureFailure("corner_prob: tolerance not met");
    return 2.0 * res.value;
}

/*
 Everything needed to evaluate the quantization-noise covariance psi(rho) of
 two unit Gaussians with correlation rho, both quantized by the same k-bit
 midrise quantizer with clipping level R.

 sigma2 is the per-branch quantization noise variance used where the pair
 becomes (numerically) identical. It defaults to vq_approx(k, R) and can be
 overridden, e.g. by a Monte Carlo estimate.
*/
class PsiModel {
public:
    PsiModel(int bits, double clip, QuadratureSpec quad = {}, std::optional<double> sigma2 = std::nullopt)
        : bits_(bits), clip_(clip), quad_(quad)
    {
        detail::check_bits(bits);
        detail::check_clip(clip);
        quad_.validate();
        step_ = 2.0 * clip / std::ldexp(1.0, bits);
        switch_eps_ = std::ldexp(1.0, -2 * bits);
        sigma2_ = sigma2 ? *sigma2 : vq_approx(bits, clip);
        if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_))
            throw std::invalid_argument("PsiModel: sigma2 must be positive and finite");
    }

    int bits() const { return bits_; }
    double clip() const { return clip_; }
    double step() const { return step_; }
    double sigma2() const { return sigma2_; }
    double switch_eps() const { return switch_eps_; }
    const QuadratureSpec& quadrature() const { return quad_; }

    /// Corner function C(rho): twice the integral of (x - x_s)(y - x_s) times the
    /// bivariate density over [R, inf)^2, in its truncated-moment closed form.
    double corner_c(double rho) const
    {
        detail::check_open_rho(rho, "corner_c");
        const double r = clip_;
        const double xs = r - 0.5 * step_;
        const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
        const double prob = corner_prob(r, rho, quad_);
        // 2 (1 - rho^2) phi(R, R; rho) with phi(R, R; rho) = exp(-R^2/(1+rho)) / (2 pi s)
        const double density_term = s * std::exp(-r * r / (1.0 + rho)) / std::numbers::pi;
        // R (1 - rho) / sqrt(1 - rho^2) rewritten without cancellation
        const double tail_arg = r * std::sqrt((1.0 - rho) / (1.0 + rho));
        const double tail_term = 4.0 * (r - (1.0 + rho) * 0.5 * step_) * std_normal_pdf(r)
                                 * std_normal_ccdf(tail_arg);
        return (xs * xs + rho) * prob + density_term - tail_term;
    }

    /// M = lim_{rho -> 1} C(rho).
    double corner_limit() const
    {
        const double r = clip_;
        const double xs = r - 0.5 * step_;
        return 2.0 * (xs * xs + 1.0) * std_normal_ccdf(r) - 2.0 * (r - step_) * std_normal_pdf(r);
    }

    bool saturated(double rho) const { return std::fabs(rho) > 1.0 - switch_eps_; }

    /// C(rho) - C(-rho) without the saturation switch, for |rho| < 1.
    double corner_difference(double rho) const { return corner_c(rho) - corner_c(-rho); }

    /// Quantization-noise covariance approximation. Odd in rho by construction.
    double psi(double rho) const
    {
        if (!(std::fabs(rho) <= 1.0))
            throw std::invalid_argument("psi: |rho| must be <= 1");
        const double a = std::fabs(rho);
        const double v = saturated(a) ? sigma2_ : corner_difference(a);
        return std::signbit(rho) ? -v : v;
    }

private:
    int bits_;
    double clip_;
    QuadratureSpec quad_;
    double step_ = 0.0;
    double switch_eps_ = 0.0;
    double sigma2_ = 0.0;
};

inline double corner_c(double rho, const PsiModel& model) { return model.corner_c(rho); }

inline double corner_limit_m(const PsiModel& model) { return model.corner_limit(); }

inline double psi(double rho, const PsiModel& model) { return model.psi(rho); }

/// Anything that provides psi(rho) and the per-branch variance sigma2().
template <typename S>
concept PsiSource = requires(const S& s, double rho) {
    { s.psi(rho) } -> std::convertible_to<double>;
    { s.sigma2() } -> std::convertible_to<double>;
};

/*
 Corner-function cache. The unsaturated branch of psi is tabulated on a
 uniform grid in t = asin(rho), where it stays smooth all the way up to the
 saturation threshold, and read back with 4-point Lagrange interpolation.
 Immutable after construction.
*/
class PsiTable {
public:
    explicit PsiTable(PsiModel model, int intervals = 1024)
        : model_(std::move(model)), intervals_(intervals)
    {
        if (intervals < 8)
            throw std::invalid_argument("PsiTable: need at least 8 intervals");
        t_max_ = std::asin(1.0 - model_.switch_eps());
        h_ = t_max_ / intervals_;
        values_.resize(static_cast<std::size_t>(intervals_) + 1);
        values_[0] = 0.0;
        for (int i = 1; i <= intervals_; ++i) {
            const double rho = std::min(std::sin(i * h_), 1.0 - model_.switch_eps());
            values_[static_cast<std::size_t>(i)] = model_.corner_difference(rho);
        }
    }

    const PsiModel& model() const { return model_; }
    int bits() const { return model_.bits(); }
    double sigma2() const { return model_.sigma2(); }

    double psi(double rho) const
    {
        if (!(std::fabs(rho) <= 1.0))
            throw std::invalid_argument("psi: |rho| must be <= 1");
        const double a = std::fabs(rho);
        const double v = model_.saturated(a) ? model_.sigma2() : interpolate(std::asin(a));
        return std::signbit(rho) ? -v : v;
    }

private:
    double node(int i) const
    {
        // The tabulated function is odd in t.
        return i < 0 ? -values_[static_cast<std::size_t>(-i)] : values_[static_cast<std::size_t>(i)];
    }

    double interpolate(double t) const
    {
        const double u = t / h_;
        int start = static_cast<int>(std::floor(u)) - 1;
        start = std::clamp(start, -1, intervals_ - 3);
        const double x = u - start;  // stencil nodes sit at x = 0, 1, 2, 3
        const double f0 = node(start);
        const double f1 = node(start + 1);
        const double f2 = node(start + 2);
        const double f3 = node(start + 3);
        const double l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
        const double l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
        const double l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
        const double l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
        return f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3;
    }

    PsiModel model_;
    int intervals_;
    double t_max_ = 0.0;
    double h_ = 0.0;
    std::vector<double> values_;
};

} // namespace qnoise

#endif

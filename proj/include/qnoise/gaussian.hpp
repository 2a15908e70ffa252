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

#ifndef QNOISE_GAUSSIAN_HPP
#define QNOISE_GAUSSIAN_HPP

#include "errors.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace qnoise {

inline double std_normal_pdf(double x)
{
    constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Pr[X >= x] for a standard normal X.
inline double std_normal_ccdf(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Standard bivariate normal density with correlation rho, |rho| < 1.
inline double bivariate_pdf(double x, double y, double rho)
{
    if (!(std::fabs(rho) < 1.0))
        throw std::invalid_argument("bivariate_pdf: |rho| must be < 1");
    const double one_minus_rho2 = (1.0 - rho) * (1.0 + rho);
    const double q = (x * x - 2.0 * rho * x * y + y * y) / one_minus_rho2;
    return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(one_minus_rho2));
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int n)
{
    if (n < 1)
        throw std::invalid_argument("gauss_legendre: n must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton on P_n starting from the Chebyshev-like guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16)
                break;
        }
        if (n == 1) {
            x = 0.0;
            dp = 1.0;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return rule;
}

namespace detail {

template <typename F>
double gl_panel(const F& f, const GaussLegendreRule& rule, double a, double b)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

template <typename F>
double adaptive_gl(const F& f, const GaussLegendreRule& rule, double a, double b, double whole,
                   double tol, int depth, double& err)
{
    const double mid = 0.5 * (a + b);
    const double left = gl_panel(f, rule, a, mid);
    const double right = gl_panel(f, rule, mid, b);
    const double diff = std::fabs(left + right - whole);
    if (diff <= tol) {
        err += diff;
        return left + right;
    }
    if (depth <= 0)
        throw QuadratureFailure("adaptive Gauss-Legendre: tolerance not met at maximum depth");
    return adaptive_gl(f, rule, a, mid, left, 0.5 * tol, depth - 1, err)
           + adaptive_gl(f, rule, mid, b, right, 0.5 * tol, depth - 1, err);
}

} // namespace detail

struct IntegrationResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// Adaptive composite Gauss-Legendre over [a, b] with panels bisected until
/// refinement changes each panel by less than its share of abs_tol. The
/// optional breakpoints seed the initial panel partition.
template <typename F>
IntegrationResult integrate_adaptive(const F& f, double a, double b, const GaussLegendreRule& rule,
                                     double abs_tol, const std::vector<double>& breakpoints = {},
                                     int max_depth = 40)
{
    std::vector<double> edges{a};
    for (double p : breakpoints)
        if (p > edges.back() && p < b)
            edges.push_back(p);
    edges.push_back(b);

    IntegrationResult out;
    const double length = b - a;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double lo = edges[i];
        const double hi = edges[i + 1];
        const double share = abs_tol * (hi - lo) / length;
        const double whole = detail::gl_panel(f, rule, lo, hi);
        out.value += detail::adaptive_gl(f, rule, lo, hi, whole, share, max_depth, out.error_estimate);
    }
    return out;
}

} // namespace qnoise

#endif

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

#ifndef QNOISE_ARRAY_MODEL_HPP
#define QNOISE_ARRAY_MODEL_HPP

#include "bivariate.hpp"
#include "parallel.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qnoise {

/// Uniform linear array. spacing is d / lambda; aoa_grid is the number of
/// uniform angle-of-arrival cells over (-pi/2, pi/2), sampled at cell midpoints.
struct ArrayConfig {
    int antennas = 1;
    double spacing = 0.5;
    int aoa_grid = 181;

    void validate() const
    {
        if (antennas < 1)
            throw std::invalid_argument("ArrayConfig: antennas must be >= 1");
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            throw std::invalid_argument("ArrayConfig: spacing must be positive");
        if (aoa_grid < 3 || aoa_grid % 2 == 0)
            throw std::invalid_argument("ArrayConfig: aoa_grid must be odd and >= 3");
    }
};

/// Midpoints of n uniform cells over (-pi/2, pi/2), n odd, written as
/// (i - (n-1)/2) * pi / n so that the middle node is exactly 0 and the grid is
/// exactly symmetric.
inline std::vector<double> aoa_nodes(int n)
{
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("aoa_nodes: grid size must be odd and >= 3");
    const int centre = (n - 1) / 2;
    const double h = std::numbers::pi / n;
    std::vector<double> theta(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        theta[static_cast<std::size_t>(i)] = (i - centre) * h;
    return theta;
}

namespace detail {

inline void check_theta(double theta)
{
    if (!(std::fabs(theta) < 0.5 * std::numbers::pi))
        throw std::invalid_argument("angle of arrival must lie in (-pi/2, pi/2)");
}

} // namespace detail

/// alpha_n = -2 pi (d/lambda) (n - 1) sin(theta), n = 1..N.
inline std::vector<double> phase_shifts(const ArrayConfig& cfg, double theta)
{
    cfg.validate();
    detail::check_theta(theta);
    const double unit = -2.0 * std::numbers::pi * cfg.spacing * std::sin(theta);
    std::vector<double> alpha(static_cast<std::size_t>(cfg.antennas));
    for (int n = 0; n < cfg.antennas; ++n)
        alpha[static_cast<std::size_t>(n)] = n * unit;
    return alpha;
}

/// Covariance between the complex quantization error of one antenna and the
/// counter-rotated error of a second antenna whose signal is rotated by alpha.
template <PsiSource S>
std::complex<double> r_epsilon(double alpha, const S& src)
{
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    const double pc = src.psi(c);
    const double ps = src.psi(s);
    return {2.0 * (c * pc + s * ps), 2.0 * (s * pc - c * ps)};
}

/// Psi(alpha) = cos(a) psi(cos a) + sin(a) psi(sin a) = (r(a) + r(-a)) / 4.
template <PsiSource S>
double big_psi(double alpha, const S& src)
{
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    return c * src.psi(c) + s * src.psi(s);
}

/// Variance of the coherently combined quantization error,
/// 2 sigma^2 N + 4 sum_{n=1}^{N-1} (N - n) Psi(alpha_{n+1}).
template <PsiSource S>
double total_noise_variance(const ArrayConfig& cfg, double theta, const S& src)
{
    const auto alpha = phase_shifts(cfg, theta);
    const int n_ant = cfg.antennas;
    double cross = 0.0;
    for (int n = 1; n < n_ant; ++n)
        cross += (n_ant - n) * big_psi(alpha[static_cast<std::size_t>(n)], src);
    return 2.0 * src.sigma2() * n_ant + 4.0 * cross;
}

/// Noise suppression factor: combined variance over the fully correlated
/// worst case 2 sigma^2 N^2. Ranges from 1 (no suppression) down to 1/N.
template <PsiSource S>
double gamma(const ArrayConfig& cfg, double theta, const S& src)
{
    const double n = cfg.antennas;
    return total_noise_variance(cfg, theta, src) / (2.0 * src.sigma2() * n * n);
}

/// Controls the angle-of-arrival integration in mean_gamma. The base grid
/// (ArrayConfig::aoa_grid) is refined by tripling until the relative change
/// drops below rel_tol or max_refinements is reached.
struct ThetaQuadrature {
    double rel_tol = 1e-5;
    int max_refinements = 9;
    int threads = 1;
};

struct SuppressionResult {
    int antennas = 0;
    int bits = 0;
    double gamma_mean = 0.0;
    double suppression_db = 0.0;            // -10 log10(gamma_mean)
    std::optional<double> rule_of_thumb;    // set when the source carries a PsiModel
    std::vector<std::pair<double, double>> per_theta;  // (theta, Gamma(theta)) on the base grid
    double sigma2_used = 0.0;
    int nodes_used = 0;
    double richardson_change = 0.0;         // relative change at the last refinement
    bool converged = false;
};

/// Approximate fraction of angles for which |cos| or |sin| of a lag phase
/// exceeds 1 - 2^-2k: 4 (sqrt2 / pi) 2^-k.
inline double saturation_measure(int bits)
{
    return 4.0 * std::numbers::sqrt2 / std::numbers::pi * std::ldexp(1.0, -bits);
}

inline double rule_of_thumb(int antennas, const PsiModel& model);

namespace detail {

template <typename S>
concept HasPsiModel = requires(const S& s) {
    { s.model() } -> std::convertible_to<const PsiModel&>;
};

template <PsiSource S>
int bits_of(const S& src)
{
    if constexpr (std::same_as<S, PsiModel>)
        return src.bits();
    else if constexpr (HasPsiModel<S>)
        return src.model().bits();
    else if constexpr (requires { { src.bits() } -> std::convertible_to<int>; })
        return src.bits();
    else
        return 0;
}

// Average of Gamma over the n-node midpoint grid, evaluated through the
// per-lag integrals of Psi: 1/N + 2/(pi sigma^2) sum (N-n)/N^2 int Psi dtheta.
template <PsiSource S>
double mean_gamma_on_grid(const ArrayConfig& cfg, const S& src, int n_nodes, int threads)
{
    const int n_ant = cfg.antennas;
    const double n_sq = static_cast<double>(n_ant) * n_ant;
    if (n_ant == 1)
        return 1.0;

    const int centre = (n_nodes - 1) / 2;
    const double h = std::numbers::pi / n_nodes;
    const double base = 2.0 * std::numbers::pi * cfg.spacing;

    // Weighted lag sum sum_n (N - n) Psi(2 pi d n sin theta) at the node
    // theta = j h, j = 0..centre; Gamma is even in theta.
    std::vector<double> slots(static_cast<std::size_t>(centre) + 1);
    parallel_for(slots.size(), threads, [&](std::size_t j) {
        const double st = std::sin(static_cast<double>(j) * h);
        double acc = 0.0;
        for (int n = 1; n < n_ant; ++n)
            acc += (n_ant - n) * big_psi(base * n * st, src);
        slots[j] = acc;
    });

    double integral = slots[0];
    for (std::size_t j = 1; j < slots.size(); ++j)
        integral += 2.0 * slots[j];
    integral *= h;
    return 1.0 / n_ant + 2.0 / (std::numbers::pi * src.sigma2()) * integral / n_sq;
}

} // namespace detail

/// Angle-of-arrival average of Gamma for theta uniform on (-pi/2, pi/2).
template <PsiSource S>
SuppressionResult mean_gamma(const ArrayConfig& cfg, const S& src, const ThetaQuadrature& tq = {})
{
    if (cfg.aoa_grid < 3)
        throw QuadratureFailure("mean_gamma: angle grid must have at least 3 nodes");
    cfg.validate();

    SuppressionResult out;
    out.antennas = cfg.antennas;
    out.bits = detail::bits_of(src);
    out.sigma2_used = src.sigma2();

    const auto theta = aoa_nodes(cfg.aoa_grid);
    out.per_theta.resize(theta.size());
    parallel_for(theta.size(), tq.threads, [&](std::size_t i) {
        out.per_theta[i] = {theta[i], gamma(cfg, theta[i], src)};
    });

    int n_nodes = cfg.aoa_grid;
    double current = detail::mean_gamma_on_grid(cfg, src, n_nodes, tq.threads);
    out.nodes_used = n_nodes;
    if (cfg.antennas == 1) {
        out.converged = true;
    } else {
        for (int level = 0; level < tq.max_refinements; ++level) {
            n_nodes *= 3;
            const double refined = detail::mean_gamma_on_grid(cfg, src, n_nodes, tq.threads);
            out.richardson_change = std::fabs(refined - current) / std::fabs(refined);
            current = refined;
            out.nodes_used = n_nodes;
            if (out.richardson_change < tq.rel_tol) {
                out.converged = true;
                break;
            }
        }
    }

    out.gamma_mean = current;
    out.suppression_db = -10.0 * std::log10(current);
    if constexpr (std::same_as<S, PsiModel>)
        out.rule_of_thumb = rule_of_thumb(cfg.antennas, src);
    else if constexpr (detail::HasPsiModel<S>)
        out.rule_of_thumb = rule_of_thumb(cfg.antennas, src.model());
    return out;
}

/// Closed-form upper estimate of the angle-averaged suppression factor:
/// 1/N + (N-1)/(N sigma^2) (u sigma^2 + (1 - u) M), u = 4 (sqrt2/pi) 2^-k the
/// measure of angles where some lag pair is numerically fully correlated.
inline double rule_of_thumb(int antennas, const PsiModel& model)
{
    if (antennas < 1)
        throw std::invalid_argument("rule_of_thumb: antennas must be >= 1");
    const double n = antennas;
    if (antennas == 1)
        return 1.0;
    const double u = saturation_measure(model.bits());
    const double s2 = model.sigma2();
    return 1.0 / n + (n - 1.0) / (n * s2) * (u * s2 + (1.0 - u) * model.corner_limit());
}

} // namespace qnoise

#endif

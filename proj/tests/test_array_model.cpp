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

#include <catch2/catch_amalgamated.hpp>
#include <qnoise/array_model.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

// Errors uncorrelated across antennas.
struct ZeroPsi {
    double s2 = 0.01;
    double psi(double) const { return 0.0; }
    double sigma2() const { return s2; }
};

// Errors fully correlated: psi(rho) = rho sigma^2.
struct LinearPsi {
    double s2 = 0.01;
    double psi(double rho) const { return rho * s2; }
    double sigma2() const { return s2; }
};

// Full covariance of the counter-rotated sum, sum_{m,n} r(alpha_m - alpha_n).
template <typename S>
double brute_total_variance(const qnoise::ArrayConfig& cfg, double theta, const S& src)
{
    const auto alpha = qnoise::phase_shifts(cfg, theta);
    std::complex<double> acc{};
    for (double am : alpha)
        for (double an : alpha)
            acc += qnoise::r_epsilon(am - an, src);
    return acc.real();
}

} // namespace

TEST_CASE("phase_shifts")
{
    for (int n : {1, 2, 7})
        for (double a : qnoise::phase_shifts({n, 0.5, 181}, 0.0))
            CHECK(a == 0.0);

    const auto a2 = qnoise::phase_shifts({2, 0.5, 181}, pi / 6.0);
    CHECK(a2[0] == 0.0);
    CHECK(a2[1] == Approx(-pi / 2.0).epsilon(1e-14));

    for (double theta : {-1.2, -0.3, 0.4, 1.5}) {
        const auto a = qnoise::phase_shifts({4, 0.5, 181}, theta);
        CHECK(a[2] - a[1] == Approx(a[1] - a[0]).epsilon(1e-14));
        CHECK(a[3] - a[2] == Approx(a[1] - a[0]).epsilon(1e-14));
    }
    CHECK_THROWS_AS(qnoise::phase_shifts({4, 0.5, 181}, pi / 2.0), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::phase_shifts({0, 0.5, 181}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::phase_shifts({4, 0.0, 181}, 0.1), std::invalid_argument);
}

TEST_CASE("aoa_nodes - symmetric midpoint grid")
{
    const auto th = qnoise::aoa_nodes(181);
    REQUIRE(th.size() == 181);
    CHECK(th[90] == 0.0);
    for (std::size_t i = 0; i < th.size(); ++i)
        CHECK(th[i] == -th[th.size() - 1 - i]);
    CHECK(th.front() == Approx(-pi / 2.0 + pi / 362.0).epsilon(1e-14));
    CHECK_THROWS_AS(qnoise::aoa_nodes(180), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::ArrayConfig({4, 0.5, 4}).validate(), std::invalid_argument);
}

TEST_CASE("r_epsilon and big_psi")
{
    const qnoise::PsiModel m(4, 2.6804);
    const double s2 = m.sigma2();

    const auto r0 = qnoise::r_epsilon(0.0, m);
    CHECK(r0.real() == Approx(2.0 * s2).epsilon(1e-14));
    CHECK(r0.imag() == 0.0);
    const auto r90 = qnoise::r_epsilon(pi / 2.0, m);
    CHECK(r90.real() == Approx(2.0 * s2).epsilon(1e-12));
    CHECK(r90.imag() == Approx(0.0).margin(1e-12));

    CHECK(qnoise::big_psi(0.0, m) == s2);
    CHECK(qnoise::big_psi(pi / 4.0, m) == Approx(std::numbers::sqrt2 * m.psi(std::numbers::sqrt2 / 2.0)).epsilon(1e-12));

    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double a = u(eng);
        const auto sum = qnoise::r_epsilon(a, m) + qnoise::r_epsilon(-a, m);
        const double bp = qnoise::big_psi(a, m);
        REQUIRE(sum.real() == Approx(4.0 * bp).epsilon(1e-12).margin(1e-15));
        REQUIRE(sum.imag() == Approx(0.0).margin(1e-15));
        REQUIRE(qnoise::big_psi(-a, m) == Approx(bp).epsilon(1e-12).margin(1e-15));
        REQUIRE(qnoise::big_psi(a + pi / 2.0, m) == Approx(bp).epsilon(1e-9).margin(1e-13));
    }
}

TEST_CASE("total_noise_variance - closed form against double sum")
{
    std::mt19937_64 eng(11);
    std::uniform_int_distribution<int> pick_n(1, 8);
    std::uniform_real_distribution<double> pick_theta(-1.5, 1.5);
    std::uniform_real_distribution<double> pick_d(0.1, 2.0);
    for (int k : {3, 4, 6, 8}) {
        const qnoise::PsiModel m(k, qnoise::clip_fit(k));
        for (int i = 0; i < 50; ++i) {
            const qnoise::ArrayConfig cfg{pick_n(eng), pick_d(eng), 181};
            const double theta = pick_theta(eng);
            const double fast = qnoise::total_noise_variance(cfg, theta, m);
            const double brute = brute_total_variance(cfg, theta, m);
            REQUIRE(std::fabs(fast - brute) <= 1e-9 * std::fabs(brute));
        }
    }
}

TEST_CASE("total_noise_variance - limiting cases")
{
    const qnoise::PsiModel m(5, qnoise::clip_fit(5));
    const double s2 = m.sigma2();
    for (int n : {1, 2, 5, 16})
        CHECK(qnoise::total_noise_variance({n, 0.5, 181}, 0.0, m) == Approx(2.0 * s2 * n * n).epsilon(1e-13));
    CHECK(qnoise::total_noise_variance({1, 0.5, 181}, 0.9, m) == 2.0 * s2);

    const ZeroPsi zero;
    const LinearPsi full;
    for (int n : {2, 8, 16}) {
        CHECK(qnoise::total_noise_variance({n, 0.5, 181}, 0.37, zero) == Approx(2.0 * zero.s2 * n).epsilon(1e-14));
        CHECK(qnoise::gamma({n, 0.5, 181}, 0.37, zero) == Approx(1.0 / n).epsilon(1e-14));
        CHECK(qnoise::gamma({n, 0.5, 181}, 0.37, full) == Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gamma - range and symmetry")
{
    const qnoise::PsiModel m(6, qnoise::clip_fit(6));
    for (int n : {1, 2, 4, 8, 16}) {
        const qnoise::ArrayConfig cfg{n, 0.5, 181};
        CHECK(qnoise::gamma(cfg, 0.0, m) == Approx(1.0).epsilon(1e-13));
        for (double theta : qnoise::aoa_nodes(181)) {
            const double g = qnoise::gamma(cfg, theta, m);
            REQUIRE(g >= 1.0 / n - 1e-12);
            REQUIRE(g <= 1.0 + 1e-12);
            REQUIRE(qnoise::gamma(cfg, -theta, m) == g);
        }
    }
    CHECK(qnoise::gamma({1, 0.5, 181}, 1.1, m) == 1.0);
}

TEST_CASE("gamma - regression pin")
{
    const qnoise::PsiModel m(8, qnoise::clip_fit(8));
    const double g = qnoise::gamma({16, 0.5, 181}, 0.7, m);
    CHECK(g > 1.0 / 16.0);
    CHECK(g < 1.0);
    CHECK(g == Approx(0.1112359625070211).epsilon(1e-9));
}

TEST_CASE("mean_gamma - lag-integral form equals the direct angle average")
{
    const qnoise::PsiModel m(5, qnoise::clip_fit(5));
    for (int n : {2, 4, 8}) {
        const qnoise::ArrayConfig cfg{n, 0.5, 181};
        double direct = 0.0;
        for (double theta : qnoise::aoa_nodes(181))
            direct += qnoise::gamma(cfg, theta, m);
        direct /= 181.0;
        CHECK(qnoise::detail::mean_gamma_on_grid(cfg, m, 181, 1) == Approx(direct).epsilon(1e-12));

        const auto res = qnoise::mean_gamma(cfg, m, {1e-5, 0, 1});
        CHECK(res.gamma_mean == Approx(direct).epsilon(1e-12));
        CHECK(res.nodes_used == 181);
        REQUIRE(res.per_theta.size() == 181);
        CHECK(res.per_theta[90].second == Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("mean_gamma - refinement and single antenna")
{
    const qnoise::PsiTable t(qnoise::PsiModel(6, qnoise::clip_fit(6)));
    const auto one = qnoise::mean_gamma({1, 0.5, 181}, t);
    CHECK(one.gamma_mean == 1.0);
    CHECK(one.suppression_db == 0.0);
    CHECK(*one.rule_of_thumb == 1.0);

    const auto res = qnoise::mean_gamma({8, 0.5, 181}, t);
    CHECK(res.converged);
    CHECK(res.richardson_change < 1e-5);
    CHECK(res.nodes_used > 181);
    CHECK(res.bits == 6);
    CHECK(res.suppression_db == Approx(-10.0 * std::log10(res.gamma_mean)).epsilon(1e-14));
    CHECK(res.gamma_mean > 1.0 / 8.0);
    CHECK(res.gamma_mean < 1.0);

    // Nested grids: the direct average on the final grid matches gamma_mean.
    CHECK(qnoise::detail::mean_gamma_on_grid(qnoise::ArrayConfig{8, 0.5, 181}, t, res.nodes_used, 1)
          == res.gamma_mean);
}

TEST_CASE("mean_gamma - decreasing in resolution at sixteen antennas")
{
    double prev = 1.0;
    for (int k = 4; k <= 8; ++k) {
        const qnoise::PsiTable t(qnoise::PsiModel(k, qnoise::clip_fit(k)));
        const double g = qnoise::mean_gamma({16, 0.5, 181}, t).gamma_mean;
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("rule_of_thumb")
{
    CHECK(qnoise::saturation_measure(6) == Approx(0.02813).margin(1e-5));
    const qnoise::PsiModel m8(8, qnoise::clip_fit(8));
    CHECK(qnoise::rule_of_thumb(1, m8) == 1.0);
    const auto res = qnoise::mean_gamma({16, 0.5, 181}, qnoise::PsiTable(m8));
    CHECK(*res.rule_of_thumb == qnoise::rule_of_thumb(16, m8));
    CHECK(qnoise::rule_of_thumb(16, m8) >= 0.98 * res.gamma_mean);
    CHECK_THROWS_AS(qnoise::rule_of_thumb(0, m8), std::invalid_argument);
}

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
#include <qnoise/quantizer.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

using Catch::Approx;

namespace {

// Minimizer of vq_approx over a 1e-4 grid on [1, 8].
double scan_optimal_clip(int k)
{
    double best_r = 1.0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 70000; ++i) {
        const double r = 1.0 + 1e-4 * i;
        const double v = qnoise::vq_approx(k, r);
        if (v < best_v) {
            best_v = v;
            best_r = r;
        }
    }
    return best_r;
}

} // namespace

TEST_CASE("Quantizer - level grid")
{
    const qnoise::Quantizer q(2, 1.0);
    CHECK(q.step() == 0.5);
    CHECK(q.saturation() == 0.75);
    CHECK(q.level_count() == 4);
    const std::vector<double> expected{-0.75, -0.25, 0.25, 0.75};
    CHECK(q.levels() == expected);

    const std::vector<double> two{-0.5, 0.5};
    CHECK(qnoise::make_quantizer(1, 1.0).levels() == two);

    CHECK_THROWS_AS(qnoise::Quantizer(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::Quantizer(25, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::Quantizer(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::Quantizer(4, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::Quantizer(4, std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("Quantizer - mapping and error")
{
    const auto q = qnoise::make_quantizer(2, 1.0);
    CHECK(qnoise::quantize(q, 0.3) == 0.25);
    CHECK(qnoise::quantize(q, 5.0) == 0.75);
    CHECK(qnoise::quantize(q, -5.0) == -0.75);

    CHECK(qnoise::quantization_error(q, 0.25) == 0.0);
    CHECK(qnoise::quantization_error(q, 0.3) == Approx(0.05).margin(1e-15));
    CHECK(qnoise::quantization_error(q, 2.0) == 1.25);
}

TEST_CASE("Quantizer - cell boundaries belong to the upper cell")
{
    const qnoise::Quantizer q(2, 1.0);
    CHECK(q(-1.0) == -0.75);
    CHECK(q(-0.5) == -0.25);
    CHECK(q(0.0) == 0.25);
    CHECK(q(-0.0) == 0.25);
    CHECK(q(0.5) == 0.75);
    CHECK(q(1.0) == 0.75);
    CHECK(q(std::nextafter(0.5, 0.0)) == 0.25);
    CHECK(q(std::nextafter(-0.5, -1.0)) == -0.75);
}

TEST_CASE("Quantizer - properties on random inputs")
{
    std::mt19937_64 eng(12345);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int k : {1, 3, 4, 8, 12}) {
        const qnoise::Quantizer q(k, qnoise::clip_fit(k));
        const double half = 0.5 * q.step();
        for (int i = 0; i < 20000; ++i) {
            const double x = gauss(eng);
            const double y = q(x);
            // Symmetry does not hold on cell boundaries under the tie-up rule.
            const double t = x / q.step();
            if (t != std::floor(t))
                REQUIRE(q(-x) == -y);
            REQUIRE(q(y) == y);
            REQUIRE(std::fabs(y) <= q.saturation());
            if (std::fabs(x) <= q.clip())
                REQUIRE(std::fabs(q.error(x)) <= half * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("vq_approx - values and scaling")
{
    CHECK(qnoise::vq_approx(4, 2.6804) == Approx(1.16e-2).epsilon(0.01));

    const double r = 2.5;
    const double tail = std::sqrt(8.0 / std::numbers::pi) * std::exp(-0.5 * r * r) / (r * r * r);
    for (int k = 1; k < 12; ++k) {
        const double g0 = qnoise::vq_approx(k, r) - tail;
        const double g1 = qnoise::vq_approx(k + 1, r) - tail;
        CHECK(g0 / g1 == Approx(4.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(qnoise::vq_approx(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(qnoise::vq_approx(4, 0.0), std::invalid_argument);
}

TEST_CASE("solve_optimal_clip - agrees with a grid scan of vq_approx")
{
    for (int k = 1; k <= 12; ++k) {
        const double r = qnoise::solve_optimal_clip(k);
        CHECK(std::fabs(qnoise::optimal_clip_residual(k, r)) < 1e-12);
        CHECK(r == Approx(scan_optimal_clip(k)).margin(2e-4));
        if (k >= 3 && k <= 8) {
            CHECK(std::fabs(r - qnoise::clip_fit(k)) <= 0.15);
            CHECK(qnoise::vq_approx(k, r) <= qnoise::vq_approx(k, qnoise::clip_fit(k)));
        }
    }
    CHECK(std::fabs(qnoise::solve_optimal_clip(4) - 2.6804) <= 0.15);
}

TEST_CASE("solve_optimal_clip - increasing in k")
{
    for (int k = 1; k <= 10; ++k)
        CHECK(qnoise::solve_optimal_clip(k + 1) > qnoise::solve_optimal_clip(k));
}

TEST_CASE("clip_fit - quadratic values")
{
    CHECK(qnoise::clip_fit(4) == Approx(2.6804).margin(1e-12));
    CHECK(qnoise::clip_fit(8) == Approx(3.9312).margin(1e-12));
    // -0.0053 * 25 + 0.3763 * 5 + 1.26
    CHECK(qnoise::clip_fit(5) == Approx(3.009).margin(1e-12));
    CHECK_THROWS_AS(qnoise::clip_fit(0), std::invalid_argument);
}

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

#ifndef QNOISE_RNG_HPP
#define QNOISE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace qnoise {

/// Algorithm identifiers written into run manifests. Bump the version suffix
/// whenever the mapping from seed to samples changes.
inline constexpr const char* rng_name = "mt19937_64+marsaglia-polar/v1";
inline constexpr const char* seed_mixer_name = "splitmix64-finalizer/v1";

/// splitmix64 output function (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for sub-stream `stream` of a run seeded with `seed`. Streams are
/// decorrelated through the avalanche mixer rather than by seed + stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64_mix(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& eng)
{
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard normal variates via the Marsaglia polar method. The sequence is
/// fully determined by the seed (std::normal_distribution is not portable).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(eng_) - 1.0;
            v = 2.0 * uniform01(eng_) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qnoise

#endif

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

#ifndef QNOISE_MONTECARLO_HPP
#define QNOISE_MONTECARLO_HPP

#include "array_model.hpp"
#include "bivariate.hpp"
#include "parallel.hpp"
#include "quantizer.hpp"
#include "rng.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qnoise {

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
};

/// Samples per independently seeded block in the streaming estimators. The
/// block layout, not the thread count, fixes which variates each sample sees.
inline constexpr std::int64_t mc_block_size = std::int64_t{1} << 20;

/// n pairs (g1, rho g1 + sqrt(1 - rho^2) g2) from one normal stream.
inline std::vector<std::pair<double, double>> sample_bivariate(double rho, std::int64_t n, std::uint64_t seed)
{
    if (!(std::fabs(rho) <= 1.0))
        throw std::invalid_argument("sample_bivariate: |rho| must be <= 1");
    if (n < 1)
        throw std::invalid_argument("sample_bivariate: n must be >= 1");
    const double w = std::sqrt((1.0 - rho) * (1.0 + rho));
    NormalStream normal(seed);
    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        const double g1 = normal();
        const double g2 = normal();
        p = {g1, rho * g1 + w * g2};
    }
    return out;
}

namespace detail {

struct Moments {
    double s1 = 0.0;   // sum a
    double s2 = 0.0;   // sum b
    double s12 = 0.0;  // sum a b
    double s1212 = 0.0;  // sum (a b)^2
    std::int64_t n = 0;

    void merge(const Moments& o)
    {
        s1 += o.s1;
        s2 += o.s2;
        s12 += o.s12;
        s1212 += o.s1212;
        n += o.n;
    }
};

// Runs body(block_index, block_length) -> Moments over fixed-size blocks and
// reduces the per-block moments in block order.
template <typename Body>
Moments blocked_moments(std::int64_t n, int threads, Body&& body)
{
    const std::int64_t blocks = (n + mc_block_size - 1) / mc_block_size;
    std::vector<Moments> parts(static_cast<std::size_t>(blocks));
    parallel_for(parts.size(), threads, [&](std::size_t b) {
        const std::int64_t begin = static_cast<std::int64_t>(b) * mc_block_size;
        const std::int64_t len = std::min(mc_block_size, n - begin);
        parts[b] = body(static_cast<std::uint64_t>(b), len);
    });
    Moments total;
    for (const auto& p : parts)
        total.merge(p);
    return total;
}

} // namespace detail

/// Sample covariance of the quantization errors of correlated unit Gaussian
/// pairs, quantized with the model's (k, R). std_error is that of the mean of
/// the error products.
inline McEstimate mc_psi_estimate(double rho, const PsiModel& model, std::int64_t n, std::uint64_t seed,
                                  int threads = 0)
{
    if (!(std::fabs(rho) <= 1.0))
        throw std::invalid_argument("mc_psi_estimate: |rho| must be <= 1");
    if (n < 100000)
        throw std::invalid_argument("mc_psi_estimate: n must be >= 1e5");
    const Quantizer q(model.bits(), model.clip());
    const double w = std::sqrt((1.0 - rho) * (1.0 + rho));

    const auto m = detail::blocked_moments(n, threads, [&](std::uint64_t block, std::int64_t len) {
        NormalStream normal(derive_seed(seed, block));
        detail::Moments part;
        for (std::int64_t i = 0; i < len; ++i) {
            const double x = normal();
            const double y = rho * x + w * normal();
            const double ex = q.error(x);
            const double ey = q.error(y);
            part.s1 += ex;
            part.s2 += ey;
            part.s12 += ex * ey;
            part.s1212 += (ex * ey) * (ex * ey);
        }
        part.n = len;
        return part;
    });

    const double nn = static_cast<double>(m.n);
    const double mean_prod = m.s12 / nn;
    McEstimate est;
    est.value = (m.s12 - m.s1 * m.s2 / nn) / (nn - 1.0);
    est.std_error = std::sqrt(std::max(0.0, m.s1212 / nn - mean_prod * mean_prod) / nn);
    est.n = m.n;
    est.seed = seed;
    return est;
}

/// Sample variance of the quantization error of n standard normal draws.
inline McEstimate mc_vq_estimate(const PsiModel& model, std::int64_t n, std::uint64_t seed, int threads = 0)
{
    if (n < 100000)
        throw std::invalid_argument("mc_vq_estimate: n must be >= 1e5");
    const Quantizer q(model.bits(), model.clip());

    const auto m = detail::blocked_moments(n, threads, [&](std::uint64_t block, std::int64_t len) {
        NormalStream normal(derive_seed(seed, block));
        detail::Moments part;
        for (std::int64_t i = 0; i < len; ++i) {
            const double e = q.error(normal());
            part.s1 += e;
            part.s12 += e * e;
            part.s1212 += (e * e) * (e * e);
        }
        part.n = len;
        return part;
    });

    const double nn = static_cast<double>(m.n);
    const double m2 = m.s12 / nn;
    McEstimate est;
    est.value = (m.s12 - m.s1 * m.s1 / nn) / (nn - 1.0);
    est.std_error = std::sqrt(std::max(0.0, m.s1212 / nn - m2 * m2) / nn);
    est.n = m.n;
    est.seed = seed;
    return est;
}

// ---------------------------------------------------------------------------
// OFDM baseband

enum class Modulation { qpsk };

struct OfdmConfig {
    int num_symbols = 50;
    int fft_size = 4096;
    Modulation modulation = Modulation::qpsk;
    int trials = 4;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (num_symbols < 1)
            throw std::invalid_argument("OfdmConfig: num_symbols must be >= 1");
        if (fft_size < 64 || (fft_size & (fft_size - 1)) != 0)
            throw std::invalid_argument("OfdmConfig: fft_size must be a power of two >= 64");
        if (trials < 1)
            throw std::invalid_argument("OfdmConfig: trials must be >= 1");
    }
};

namespace detail {

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline FftwBuffer fftw_buffer(int n)
{
    return FftwBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n))));
}

// Plan creation and destruction are not thread-safe in FFTW; execution is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

// Applies an unnormalized FFTW transform of length fft_size to consecutive
// blocks of `data`, scaling the result by `scale`.
inline std::vector<std::complex<double>> blockwise_dft(std::span<const std::complex<double>> data, int fft_size,
                                                       int sign, double scale)
{
    if (data.size() % static_cast<std::size_t>(fft_size) != 0)
        throw std::invalid_argument("blockwise_dft: length is not a multiple of the FFT size");
    auto in = fftw_buffer(fft_size);
    auto out = fftw_buffer(fft_size);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(fft_size, in.get(), out.get(), sign, FFTW_ESTIMATE);
    }
    std::unique_ptr<fftw_plan_s, void (*)(fftw_plan)> plan_guard(plan, [](fftw_plan p) {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    });

    std::vector<std::complex<double>> result(data.size());
    const std::size_t f = static_cast<std::size_t>(fft_size);
    for (std::size_t start = 0; start < data.size(); start += f) {
        for (std::size_t i = 0; i < f; ++i) {
            in[i][0] = data[start + i].real();
            in[i][1] = data[start + i].imag();
        }
        fftw_execute_dft(plan, in.get(), out.get());
        for (std::size_t i = 0; i < f; ++i)
            result[start + i] = {scale * out[i][0], scale * out[i][1]};
    }
    return result;
}

} // namespace detail

/// Frequency-domain QPSK points, unit modulus at phases pi/4 + m pi/2, for all
/// subcarriers of all symbols (symbol-major).
inline std::vector<std::complex<double>> qpsk_symbols(const OfdmConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const std::size_t total = static_cast<std::size_t>(cfg.num_symbols) * static_cast<std::size_t>(cfg.fft_size);
    constexpr double c = 0.70710678118654752440;
    static constexpr std::complex<double> constellation[4] = {{c, c}, {-c, c}, {-c, -c}, {c, -c}};
    std::mt19937_64 eng(seed);
    std::vector<std::complex<double>> points(total);
    for (auto& p : points)
        p = constellation[eng() >> 62];
    return points;
}

/// Inverse DFT per symbol, normalized by 1/fft_size.
inline std::vector<std::complex<double>> ofdm_modulate(std::span<const std::complex<double>> points, int fft_size)
{
    return detail::blockwise_dft(points, fft_size, FFTW_BACKWARD, 1.0 / fft_size);
}

/// Forward DFT per symbol; inverse of ofdm_modulate.
inline std::vector<std::complex<double>> ofdm_demodulate(std::span<const std::complex<double>> samples, int fft_size)
{
    return detail::blockwise_dft(samples, fft_size, FFTW_FORWARD, 1.0);
}

/// Population variance of the real (imag = false) or imaginary parts.
inline double branch_variance(std::span<const std::complex<double>> x, bool imag)
{
    double s = 0.0;
    double ss = 0.0;
    for (const auto& z : x) {
        const double v = imag ? z.imag() : z.real();
        s += v;
        ss += v * v;
    }
    const double n = static_cast<double>(x.size());
    const double mean = s / n;
    return ss / n - mean * mean;
}

/// Time-domain QPSK-OFDM stream, all subcarriers active, rescaled so that the I
/// and Q branches each have empirical variance 1.
inline std::vector<std::complex<double>> gen_ofdm_signal(const OfdmConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const auto points = qpsk_symbols(cfg, seed);
    auto sig = ofdm_modulate(points, cfg.fft_size);
    const double gi = 1.0 / std::sqrt(branch_variance(sig, false));
    const double gq = 1.0 / std::sqrt(branch_variance(sig, true));
    for (auto& z : sig)
        z = {z.real() * gi, z.imag() * gq};
    return sig;
}

/// Which per-branch variance normalizes the simulated suppression factor.
enum class NoiseReference {
    empirical,  // error variance measured on antenna 1 in the same run
    analytic,   // vq_approx(k, R)
};

/// Per-sample view of one array reception, for checks on the combiner.
struct ArrayCapture {
    std::vector<std::complex<double>> combined_error;      // sum_n e^{-j a_n} eps_n
    std::vector<std::complex<double>> combined_clean;      // sum_n e^{-j a_n} s_n
    std::vector<std::complex<double>> combined_quantized;  // sum_n e^{-j a_n} Q(s_n)
    std::vector<std::complex<double>> first_error;         // eps_1
};

namespace detail {

struct Rotation {
    double c;
    double s;
};

inline std::vector<Rotation> array_rotations(int antennas, double spacing, double theta)
{
    const auto alpha = phase_shifts(ArrayConfig{antennas, spacing, 3}, theta);
    std::vector<Rotation> rot;
    rot.reserve(alpha.size());
    for (double a : alpha)
        rot.push_back({std::cos(a), std::sin(a)});
    return rot;
}

inline void check_signal(std::span<const std::complex<double>> sig, int antennas)
{
    if (sig.empty())
        throw std::invalid_argument("array simulation: empty signal");
    if (antennas < 1)
        throw std::invalid_argument("array simulation: antennas must be >= 1");
}

} // namespace detail

inline ArrayCapture capture_array_errors(std::span<const std::complex<double>> sig, int antennas, double spacing,
                                         double theta, int bits, double clip)
{
    detail::check_signal(sig, antennas);
    const auto rot = detail::array_rotations(antennas, spacing, theta);
    const Quantizer q(bits, clip);
    ArrayCapture cap;
    cap.combined_error.resize(sig.size());
    cap.combined_clean.resize(sig.size());
    cap.combined_quantized.resize(sig.size());
    cap.first_error.resize(sig.size());
    for (std::size_t i = 0; i < sig.size(); ++i) {
        std::complex<double> err{}, clean{}, quant{};
        for (std::size_t n = 0; n < rot.size(); ++n) {
            const std::complex<double> fwd{rot[n].c, rot[n].s};
            const std::complex<double> back{rot[n].c, -rot[n].s};
            const std::complex<double> sn = fwd * sig[i];
            const std::complex<double> qn{q(sn.real()), q(sn.imag())};
            const std::complex<double> en = sn - qn;
            if (n == 0)
                cap.first_error[i] = en;
            err += back * en;
            clean += back * sn;
            quant += back * qn;
        }
        cap.combined_error[i] = err;
        cap.combined_clean[i] = clean;
        cap.combined_quantized[i] = quant;
    }
    return cap;
}

/*
 Simulated suppression factor for one angle of arrival. Antenna n sees
 s_n = e^{j a_n} s_1; I and Q are quantized independently and the errors are
 counter-rotated and summed. Returns var(eps_combined) / (2 sigma^2 N^2).
*/
inline double simulate_array_suppression(std::span<const std::complex<double>> sig, int antennas, double spacing,
                                         double theta, int bits, double clip,
                                         NoiseReference ref = NoiseReference::empirical)
{
    detail::check_signal(sig, antennas);
    const auto rot = detail::array_rotations(antennas, spacing, theta);
    const Quantizer q(bits, clip);

    double comb_re = 0.0, comb_im = 0.0, comb_re2 = 0.0, comb_im2 = 0.0;
    double first_i = 0.0, first_q = 0.0, first_i2 = 0.0, first_q2 = 0.0;
    for (const auto& z : sig) {
        const double si = z.real();
        const double sq = z.imag();
        double acc_re = 0.0;
        double acc_im = 0.0;
        for (std::size_t n = 0; n < rot.size(); ++n) {
            const double c = rot[n].c;
            const double s = rot[n].s;
            const double in = si * c - sq * s;
            const double qn = si * s + sq * c;
            const double ei = q.error(in);
            const double eq = q.error(qn);
            if (n == 0) {
                first_i += ei;
                first_q += eq;
                first_i2 += ei * ei;
                first_q2 += eq * eq;
            }
            acc_re += ei * c + eq * s;
            acc_im += eq * c - ei * s;
        }
        comb_re += acc_re;
        comb_im += acc_im;
        comb_re2 += acc_re * acc_re;
        comb_im2 += acc_im * acc_im;
    }

    const double n = static_cast<double>(sig.size());
    auto var = [n](double s, double s2) {
        const double m = s / n;
        return s2 / n - m * m;
    };
    const double combined = var(comb_re, comb_re2) + var(comb_im, comb_im2);
    const double sigma2 = (ref == NoiseReference::empirical)
                              ? 0.5 * (var(first_i, first_i2) + var(first_q, first_q2))
                              : vq_approx(bits, clip);
    const double n_ant = antennas;
    return combined / (2.0 * sigma2 * n_ant * n_ant);
}

/// Angle-averaged simulated suppression: for each of ofdm.trials independently
/// seeded transmissions, average simulate_array_suppression over the midpoint
/// angle grid; report the mean over trials and its standard error.
inline McEstimate mc_mean_suppression(const ArrayConfig& cfg, const OfdmConfig& ofdm, int bits, double clip,
                                      int threads = 0, NoiseReference ref = NoiseReference::empirical)
{
    cfg.validate();
    ofdm.validate();
    const auto theta = aoa_nodes(cfg.aoa_grid);
    std::vector<double> per_trial(static_cast<std::size_t>(ofdm.trials));
    for (int t = 0; t < ofdm.trials; ++t) {
        const auto sig = gen_ofdm_signal(ofdm, derive_seed(ofdm.seed, static_cast<std::uint64_t>(t)));
        std::vector<double> slots(theta.size());
        parallel_for(theta.size(), threads, [&](std::size_t i) {
            slots[i] = simulate_array_suppression(sig, cfg.antennas, cfg.spacing, theta[i], bits, clip, ref);
        });
        double sum = 0.0;
        for (double v : slots)
            sum += v;
        per_trial[static_cast<std::size_t>(t)] = sum / static_cast<double>(slots.size());
    }

    McEstimate est;
    double sum = 0.0;
    for (double v : per_trial)
        sum += v;
    const double trials = static_cast<double>(per_trial.size());
    est.value = sum / trials;
    if (per_trial.size() > 1) {
        double ss = 0.0;
        for (double v : per_trial)
            ss += (v - est.value) * (v - est.value);
        est.std_error = std::sqrt(ss / (trials - 1.0) / trials);
    }
    est.n = static_cast<std::int64_t>(per_trial.size());
    est.seed = ofdm.seed;
    return est;
}

} // namespace qnoise

#endif

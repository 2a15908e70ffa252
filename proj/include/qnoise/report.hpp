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

#ifndef QNOISE_REPORT_HPP
#define QNOISE_REPORT_HPP

#include "array_model.hpp"
#include "bivariate.hpp"
#include "montecarlo.hpp"
#include "quantizer.hpp"
#include "rng.hpp"
#include "version.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnoise {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Serialization helpers

/// 15 significant digits; "nan" / "inf" / "-inf" for non-finite values.
inline std::string format_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, const std::string& bytes)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << bytes;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

/// Comma-separated, header row first, '\n' line endings.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns))
    {
        append_line(columns_);
    }

    template <typename... Cells>
    void row(const Cells&... cells)
    {
        std::vector<std::string> line{cell(cells)...};
        if (line.size() != columns_.size())
            throw std::logic_error("CsvTable: row width does not match header");
        append_line(line);
    }

    const std::string& str() const { return text_; }

private:
    static std::string cell(double v) { return format_real(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }

    void append_line(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                text_.push_back(',');
            text_ += cells[i];
        }
        text_.push_back('\n');
    }

    std::vector<std::string> columns_;
    std::string text_;
};

// ---------------------------------------------------------------------------
// Run manifests

struct OutputFile {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    nlohmann::json parameters = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string code_version = version;
    std::string rng = rng_name;
    std::string started_at;
    double duration_seconds = 0.0;
    std::vector<OutputFile> outputs;

    nlohmann::json to_json() const
    {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : outputs)
            files.push_back({{"path", f.path}, {"sha256", f.sha256}});
        return {
            {"command", command},
            {"parameters", parameters},
            {"seed", seed},
            {"code_version", code_version},
            {"rng_name", rng},
            {"seed_mixer", seed_mixer_name},
            {"started_at", started_at},
            {"duration_seconds", duration_seconds},
            {"outputs", files},
        };
    }

    /// Digest of the named output, or empty if it is not listed.
    std::string digest_of(const fs::path& path) const
    {
        for (const auto& f : outputs)
            if (fs::path(f.path) == path)
                return f.sha256;
        return {};
    }
};

namespace detail {

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp)
{
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Times a command and collects its outputs into a manifest.
class RunRecorder {
public:
    RunRecorder(std::string command, nlohmann::json parameters, std::uint64_t seed)
        : start_(std::chrono::steady_clock::now())
    {
        manifest_.command = std::move(command);
        manifest_.parameters = std::move(parameters);
        manifest_.seed = seed;
        manifest_.started_at = utc_timestamp(std::chrono::system_clock::now());
    }

    void emit(const fs::path& path, const std::string& bytes)
    {
        write_file(path, bytes);
        // Digest what actually landed on disk.
        manifest_.outputs.push_back({path.string(), sha256_hex(read_file(path))});
    }

    RunManifest finish(const fs::path& manifest_path)
    {
        manifest_.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_file(manifest_path, manifest_.to_json().dump(2) + "\n");
        return manifest_;
    }

private:
    std::chrono::steady_clock::time_point start_;
    RunManifest manifest_;
};

} // namespace detail

/// Output stem for a run: `out` if given, else $QNOISE_OUT_DIR/<default_name>
/// (current directory when the variable is unset).
inline fs::path resolve_output_stem(const fs::path& out, const std::string& default_name)
{
    if (!out.empty())
        return out;
    const char* dir = std::getenv("QNOISE_OUT_DIR");
    return fs::path(dir && *dir ? dir : ".") / default_name;
}

inline fs::path with_suffix(const fs::path& stem, const std::string& suffix)
{
    return fs::path(stem.string() + suffix);
}

// ---------------------------------------------------------------------------
// psi-curve

struct PsiCurveParams {
    int bits = 4;
    std::vector<double> rho;
    std::optional<double> clip;  // defaults to clip_fit(bits)
    std::int64_t samples = 1000000;
    std::uint64_t seed = 0;
    int threads = 0;
    fs::path out;
};

/// The correlation grid {-0.99, -0.9, -0.8, ..., 0.8, 0.9, 0.99}.
inline std::vector<double> default_rho_grid()
{
    std::vector<double> g{-0.99};
    for (int i = -9; i <= 9; ++i)
        g.push_back(i / 10.0);
    g.push_back(0.99);
    return g;
}

/*
 Columns: rho, psi_analytic (psi / sigma^2 with the model variance),
 psi_mc (Monte Carlo covariance / empirical sigma^2), mc_std_error (standard
 error of psi_mc, same normalization).
*/
inline RunManifest cmd_psi_curve(const PsiCurveParams& p)
{
    detail::check_bits(p.bits);
    if (p.rho.empty())
        throw std::invalid_argument("psi-curve: empty rho grid");
    for (double r : p.rho)
        if (!(std::fabs(r) <= 1.0))
            throw std::invalid_argument("psi-curve: rho values must lie in [-1, 1]");
    if (p.samples < 100000)
        throw std::invalid_argument("psi-curve: samples must be >= 1e5");
    const double clip = p.clip ? *p.clip : clip_fit(p.bits);
    detail::check_clip(clip);

    nlohmann::json params = {{"k", p.bits}, {"R", clip},           {"rho", p.rho},
                             {"samples", p.samples}, {"threads", p.threads}};
    detail::RunRecorder run("psi-curve", params, p.seed);

    const PsiModel model(p.bits, clip);
    const double sigma2_hat = mc_vq_estimate(model, p.samples, derive_seed(p.seed, 0), p.threads).value;

    CsvTable table({"rho", "psi_analytic", "psi_mc", "mc_std_error"});
    for (std::size_t i = 0; i < p.rho.size(); ++i) {
        const double r = p.rho[i];
        const auto est = mc_psi_estimate(r, model, p.samples, derive_seed(p.seed, i + 1), p.threads);
        table.row(r, model.psi(r) / model.sigma2(), est.value / sigma2_hat, est.std_error / sigma2_hat);
    }

    const fs::path stem = resolve_output_stem(p.out, "psi_curve");
    run.emit(with_suffix(stem, ".csv"), table.str());
    return run.finish(with_suffix(stem, ".manifest.json"));
}

// ---------------------------------------------------------------------------
// suppression-curve and bound-compare

enum class CurveMode { analytic, mc, both };

struct SuppressionCurveParams {
    std::vector<int> bits{4, 5, 6, 7, 8};
    std::vector<int> antennas{1, 2, 4, 8, 16};
    double spacing = 0.5;
    int aoa_grid = 181;
    CurveMode mode = CurveMode::analytic;
    OfdmConfig ofdm;  // ofdm.seed is the run seed
    NoiseReference noise_ref = NoiseReference::empirical;
    int threads = 0;
    fs::path out;
};

namespace detail {

inline void check_lists(const std::vector<int>& bits, const std::vector<int>& antennas)
{
    if (bits.empty() || antennas.empty())
        throw std::invalid_argument("bit and antenna lists must be non-empty");
    for (int k : bits)
        check_bits(k);
    for (int n : antennas)
        if (n < 1)
            throw std::invalid_argument("antenna counts must be >= 1");
}

inline SuppressionResult converged_or_throw(SuppressionResult r)
{
    if (!r.converged)
        throw NoConvergence("angle-of-arrival integral did not converge (relative change "
                            + format_real(r.richardson_change) + ")");
    return r;
}

inline const char* mode_name(CurveMode m)
{
    switch (m) {
    case CurveMode::analytic: return "analytic";
    case CurveMode::mc: return "mc";
    case CurveMode::both: return "both";
    }
    return "?";
}

} // namespace detail

/// Analytic angle-averaged suppression for a (k, N) pair using the corner-function
/// cache and R = clip_fit(k).
inline SuppressionResult analytic_suppression(int bits, int antennas, double spacing, int aoa_grid, int threads = 0)
{
    const PsiTable table(PsiModel(bits, clip_fit(bits)));
    ThetaQuadrature tq;
    tq.threads = threads;
    return detail::converged_or_throw(mean_gamma(ArrayConfig{antennas, spacing, aoa_grid}, table, tq));
}

/*
 Columns: k, N, gamma_analytic, gamma_mc, gamma_mc_stderr, ideal (= 1/N).
 Columns of a path that was not requested hold "nan". Rows are ordered by k,
 then N, as given.
*/
inline RunManifest cmd_suppression_curve(const SuppressionCurveParams& p)
{
    detail::check_lists(p.bits, p.antennas);
    p.ofdm.validate();

    nlohmann::json params = {
        {"k", p.bits},
        {"N", p.antennas},
        {"spacing", p.spacing},
        {"aoa_grid", p.aoa_grid},
        {"mode", detail::mode_name(p.mode)},
        {"symbols", p.ofdm.num_symbols},
        {"fft_size", p.ofdm.fft_size},
        {"modulation", "qpsk"},
        {"trials", p.ofdm.trials},
        {"noise_ref", p.noise_ref == NoiseReference::empirical ? "empirical" : "analytic"},
        {"threads", p.threads},
    };
    detail::RunRecorder run("suppression-curve", params, p.ofdm.seed);

    const bool want_analytic = p.mode != CurveMode::mc;
    const bool want_mc = p.mode != CurveMode::analytic;
    const double nan = std::nan("");

    CsvTable table({"k", "N", "gamma_analytic", "gamma_mc", "gamma_mc_stderr", "ideal"});
    for (int k : p.bits) {
        std::optional<PsiTable> psi_table;
        if (want_analytic)
            psi_table.emplace(PsiModel(k, clip_fit(k)));
        for (int n : p.antennas) {
            const ArrayConfig cfg{n, p.spacing, p.aoa_grid};
            double g_an = nan;
            double g_mc = nan;
            double g_se = nan;
            if (want_analytic) {
                ThetaQuadrature tq;
                tq.threads = p.threads;
                g_an = detail::converged_or_throw(mean_gamma(cfg, *psi_table, tq)).gamma_mean;
            }
            if (want_mc) {
                const auto est = mc_mean_suppression(cfg, p.ofdm, k, clip_fit(k), p.threads, p.noise_ref);
                g_mc = est.value;
                g_se = est.std_error;
            }
            table.row(k, n, g_an, g_mc, g_se, 1.0 / n);
        }
    }

    const fs::path stem = resolve_output_stem(p.out, "suppression_curve");
    run.emit(with_suffix(stem, ".csv"), table.str());
    return run.finish(with_suffix(stem, ".manifest.json"));
}

struct BoundCompareParams {
    std::uint64_t seed = 0;  // recorded only; the command is deterministic
    std::vector<int> bits{4, 5, 6, 7, 8};
    std::vector<int> antennas{1, 2, 4, 8, 16};
    double spacing = 0.5;
    int aoa_grid = 181;
    int threads = 0;
    fs::path out;
};

/// Columns: k, N, refined (angle-averaged Gamma from psi), simple (closed-form rule of thumb).
inline RunManifest cmd_bound_compare(const BoundCompareParams& p)
{
    detail::check_lists(p.bits, p.antennas);

    nlohmann::json params = {{"k", p.bits},
                             {"N", p.antennas},
                             {"spacing", p.spacing},
                             {"aoa_grid", p.aoa_grid},
                             {"threads", p.threads}};
    detail::RunRecorder run("bound-compare", params, p.seed);

    CsvTable table({"k", "N", "refined", "simple"});
    for (int k : p.bits) {
        const PsiTable psi_table(PsiModel(k, clip_fit(k)));
        for (int n : p.antennas) {
            ThetaQuadrature tq;
            tq.threads = p.threads;
            const auto res = detail::converged_or_throw(mean_gamma(ArrayConfig{n, p.spacing, p.aoa_grid}, psi_table, tq));
            table.row(k, n, res.gamma_mean, *res.rule_of_thumb);
        }
    }

    const fs::path stem = resolve_output_stem(p.out, "bound_compare");
    run.emit(with_suffix(stem, ".csv"), table.str());
    return run.finish(with_suffix(stem, ".manifest.json"));
}

// ---------------------------------------------------------------------------
// opt-clip

struct OptClipParams {
    std::uint64_t seed = 0;  // recorded only; the command is deterministic
    int k_min = 1;
    int k_max = 12;
    fs::path out;
};

/// Columns: k, R_solved, R_fit, vq_at_solved, vq_at_fit.
inline RunManifest cmd_opt_clip(const OptClipParams& p)
{
    detail::check_bits(p.k_min);
    detail::check_bits(p.k_max);
    if (p.k_min > p.k_max)
        throw std::invalid_argument("opt-clip: k-min must not exceed k-max");

    detail::RunRecorder run("opt-clip", {{"k_min", p.k_min}, {"k_max", p.k_max}}, p.seed);
    CsvTable table({"k", "R_solved", "R_fit", "vq_at_solved", "vq_at_fit"});
    for (int k = p.k_min; k <= p.k_max; ++k) {
        const double solved = solve_optimal_clip(k);
        const double fit = clip_fit(k);
        table.row(k, solved, fit, vq_approx(k, solved), vq_approx(k, fit));
    }

    const fs::path stem = resolve_output_stem(p.out, "opt_clip");
    run.emit(with_suffix(stem, ".csv"), table.str());
    return run.finish(with_suffix(stem, ".manifest.json"));
}

// ---------------------------------------------------------------------------
// advisor

/// Quantization noise added per removed ADC bit.
inline constexpr double db_per_bit = 5.0;

struct AdvisorReport {
    int antennas = 1;
    int k_digital = 1;
    double suppression_db = 0.0;
    int bit_reduction = 0;          // floor(suppression_db / 5) unless forced
    int bit_reduction_nearest = 0;  // round(suppression_db / 5)
    bool bit_reduction_forced = false;
    int k_analog_equivalent = 1;    // k_digital + bit_reduction
    double adc_power_ratio = 1.0;   // N 2^k_digital / 2^k_analog_equivalent

    nlohmann::json to_json() const
    {
        return {
            {"N", antennas},
            {"k_digital", k_digital},
            {"suppression_db", suppression_db},
            {"bit_reduction", bit_reduction},
            {"bit_reduction_nearest", bit_reduction_nearest},
            {"bit_reduction_forced", bit_reduction_forced},
            {"k_analog_equivalent", k_analog_equivalent},
            {"adc_power_ratio", adc_power_ratio},
        };
    }
};

/// ADC budget comparison of an N-antenna digital array with k-bit ADC pairs
/// against a single-ADC analog array needing k + bit_reduction bits for the same
/// quantization noise. ADC power is taken proportional to 2^k.
inline AdvisorReport advise(int antennas, int k_digital, double suppression_db,
                            std::optional<int> forced_reduction = std::nullopt)
{
    if (antennas < 1)
        throw std::invalid_argument("advisor: antennas must be >= 1");
    detail::check_bits(k_digital);
    AdvisorReport r;
    r.antennas = antennas;
    r.k_digital = k_digital;
    r.suppression_db = suppression_db;
    const double bits_gained = std::max(0.0, suppression_db) / db_per_bit;
    r.bit_reduction = static_cast<int>(std::floor(bits_gained));
    r.bit_reduction_nearest = static_cast<int>(std::lround(bits_gained));
    if (forced_reduction) {
        if (*forced_reduction < 0)
            throw std::invalid_argument("advisor: bit reduction must be >= 0");
        r.bit_reduction = *forced_reduction;
        r.bit_reduction_forced = true;
    }
    r.k_analog_equivalent = k_digital + r.bit_reduction;
    r.adc_power_ratio = antennas / std::ldexp(1.0, r.bit_reduction);
    return r;
}

struct AdvisorParams {
    std::uint64_t seed = 0;  // recorded only; the command is deterministic
    int antennas = 16;
    int bits = 6;
    double spacing = 0.5;
    int aoa_grid = 181;
    std::optional<int> bit_reduction;
    int threads = 0;
    fs::path out;
};

struct AdvisorRun {
    AdvisorReport report;
    RunManifest manifest;
};

/// Writes <stem>.json with the report and <stem>.manifest.json.
inline AdvisorRun cmd_advisor(const AdvisorParams& p)
{
    if (p.antennas < 1)
        throw std::invalid_argument("advisor: antennas must be >= 1");
    detail::check_bits(p.bits);

    nlohmann::json params = {{"N", p.antennas},
                             {"k", p.bits},
                             {"spacing", p.spacing},
                             {"aoa_grid", p.aoa_grid},
                             {"threads", p.threads}};
    if (p.bit_reduction)
        params["bit_reduction"] = *p.bit_reduction;
    detail::RunRecorder run("advisor", params, p.seed);

    const double db = (p.antennas == 1)
                          ? 0.0
                          : analytic_suppression(p.bits, p.antennas, p.spacing, p.aoa_grid, p.threads).suppression_db;
    AdvisorRun out;
    out.report = advise(p.antennas, p.bits, db, p.bit_reduction);

    const fs::path stem = resolve_output_stem(p.out, "advisor");
    run.emit(with_suffix(stem, ".json"), out.report.to_json().dump(2) + "\n");
    out.manifest = run.finish(with_suffix(stem, ".manifest.json"));
    return out;
}

} // namespace qnoise

#endif

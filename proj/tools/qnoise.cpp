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

#include <qnoise/errors.hpp>
#include <qnoise/report.hpp>
#include <qnoise/version.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;
constexpr int exit_numeric = 3;

using nlohmann::json;

struct Common {
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    std::string config;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--out", c.out, "Output path stem (default: $QNOISE_OUT_DIR/<command>)");
    cmd->add_option("--threads", c.threads, "Worker threads (0 = hardware concurrency)");
    cmd->add_option("--config", c.config, "JSON file with defaults for any option");
}

// Finds --config in argv without running the full parser.
std::optional<std::string> scan_config(int argc, char** argv)
{
    for (int i = 1; i < argc; ++i) {
        const std::string_view a = argv[i];
        if (a == "--config" && i + 1 < argc)
            return argv[i + 1];
        if (a.starts_with("--config="))
            return std::string(a.substr(9));
    }
    return std::nullopt;
}

std::vector<std::string> json_to_results(const json& v)
{
    std::vector<std::string> out;
    auto scalar = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    if (v.is_array())
        for (const auto& x : v)
            out.push_back(scalar(x));
    else
        out.push_back(scalar(v));
    return out;
}

// Fills every option of `cmd` that was not given on the command line from the
// config object. Keys are long option names without dashes; '_' and '-' are
// interchangeable. A section named after the subcommand overrides top-level keys.
void merge_config(CLI::App* cmd, const json& config)
{
    std::map<std::string, json> values;
    auto absorb = [&](const json& obj) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (it.value().is_object())
                continue;
            std::string key = it.key();
            for (auto& ch : key)
                if (ch == '_')
                    ch = '-';
            values[key] = it.value();
        }
    };
    absorb(config);
    if (auto sec = config.find(cmd->get_name()); sec != config.end() && sec->is_object())
        absorb(*sec);

    for (CLI::Option* opt : cmd->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "config" || opt->count() > 0)
            continue;
        const auto it = values.find(name);
        if (it == values.end())
            continue;
        for (const auto& r : json_to_results(it->second))
            opt->add_result(r);
        opt->run_callback();
    }
}

void require(const CLI::App* cmd, const char* name)
{
    if (cmd->get_option(name)->count() == 0)
        throw CLI::RequiredError(name);
}

qnoise::CurveMode parse_mode(const std::string& s)
{
    if (s == "analytic")
        return qnoise::CurveMode::analytic;
    if (s == "mc")
        return qnoise::CurveMode::mc;
    if (s == "both")
        return qnoise::CurveMode::both;
    throw std::invalid_argument("--mode must be analytic, mc or both");
}

qnoise::NoiseReference parse_noise_ref(const std::string& s)
{
    if (s == "empirical")
        return qnoise::NoiseReference::empirical;
    if (s == "analytic")
        return qnoise::NoiseReference::analytic;
    throw std::invalid_argument("--noise-ref must be empirical or analytic");
}

void print_outputs(const qnoise::RunManifest& m)
{
    for (const auto& f : m.outputs)
        std::cout << f.sha256 << "  " << f.path << '\n';
}

int run(int argc, char** argv)
{
    CLI::App app{"Quantization noise analysis for digital phased arrays"};
    app.set_version_flag("--version", std::string(qnoise::version));
    app.require_subcommand(1);

    Common common;

    qnoise::PsiCurveParams psi;
    std::vector<double> psi_rho;
    double psi_clip = 0.0;
    auto* psi_cmd = app.add_subcommand("psi-curve", "Quantization-error covariance psi(rho) / sigma^2, analytic vs Monte Carlo");
    add_common(psi_cmd, common);
    psi_cmd->add_option("--k", psi.bits, "ADC bits (required)");
    psi_cmd->add_option("--rho", psi_rho, "Correlation grid (default -0.99, -0.9..0.9, 0.99)");
    psi_cmd->add_option("--clip", psi_clip, "Clip level R (default clip_fit(k))");
    psi_cmd->add_option("--samples", psi.samples, "Monte Carlo pairs per grid point")->capture_default_str();

    qnoise::SuppressionCurveParams sup;
    std::string sup_mode = "analytic";
    std::string sup_ref = "empirical";
    auto* sup_cmd = app.add_subcommand("suppression-curve", "Angle-averaged noise suppression factor per (k, N)");
    add_common(sup_cmd, common);
    sup_cmd->add_option("--k", sup.bits, "ADC bit list")->capture_default_str();
    sup_cmd->add_option("--N", sup.antennas, "Antenna count list")->capture_default_str();
    sup_cmd->add_option("--spacing", sup.spacing, "Element spacing in wavelengths")->capture_default_str();
    sup_cmd->add_option("--aoa-grid", sup.aoa_grid, "Angle-of-arrival grid size (odd)")->capture_default_str();
    sup_cmd->add_option("--mode", sup_mode, "analytic | mc | both")->capture_default_str();
    sup_cmd->add_option("--symbols", sup.ofdm.num_symbols, "OFDM symbols per trial")->capture_default_str();
    sup_cmd->add_option("--fft-size", sup.ofdm.fft_size, "OFDM FFT size")->capture_default_str();
    sup_cmd->add_option("--trials", sup.ofdm.trials, "Independent Monte Carlo trials")->capture_default_str();
    sup_cmd->add_option("--noise-ref", sup_ref, "sigma^2 in the simulated ratio: empirical | analytic")->capture_default_str();

    qnoise::BoundCompareParams bnd;
    auto* bnd_cmd = app.add_subcommand("bound-compare", "Refined suppression factor vs the closed-form rule of thumb");
    add_common(bnd_cmd, common);
    bnd_cmd->add_option("--k", bnd.bits, "ADC bit list")->capture_default_str();
    bnd_cmd->add_option("--N", bnd.antennas, "Antenna count list")->capture_default_str();
    bnd_cmd->add_option("--spacing", bnd.spacing, "Element spacing in wavelengths")->capture_default_str();
    bnd_cmd->add_option("--aoa-grid", bnd.aoa_grid, "Angle-of-arrival grid size (odd)")->capture_default_str();

    qnoise::OptClipParams opt;
    auto* opt_cmd = app.add_subcommand("opt-clip", "MSE-optimal clip level per bit count vs the quadratic fit");
    add_common(opt_cmd, common);
    opt_cmd->add_option("--k-min", opt.k_min, "Smallest bit count")->capture_default_str();
    opt_cmd->add_option("--k-max", opt.k_max, "Largest bit count")->capture_default_str();

    qnoise::AdvisorParams adv;
    int adv_reduction = 0;
    auto* adv_cmd = app.add_subcommand("advisor", "ADC resolution and power budget for a digital array");
    add_common(adv_cmd, common);
    adv_cmd->add_option("--N", adv.antennas, "Antenna count")->capture_default_str();
    adv_cmd->add_option("--k", adv.bits, "ADC bits of the digital array")->capture_default_str();
    adv_cmd->add_option("--spacing", adv.spacing, "Element spacing in wavelengths")->capture_default_str();
    adv_cmd->add_option("--aoa-grid", adv.aoa_grid, "Angle-of-arrival grid size (odd)")->capture_default_str();
    adv_cmd->add_option("--bit-reduction", adv_reduction, "Force the bit reduction instead of deriving it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    CLI::App* cmd = app.get_subcommands().front();
    if (const auto path = scan_config(argc, argv)) {
        std::ifstream in(*path);
        if (!in)
            throw std::invalid_argument("cannot open config file " + *path);
        json config;
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config file " + *path + ": " + e.what());
        }
        if (!config.is_object())
            throw std::invalid_argument("config file must hold a JSON object");
        try {
            merge_config(cmd, config);
        } catch (const CLI::ParseError& e) {
            throw std::invalid_argument(std::string("config file: ") + e.what());
        }
    }

    if (cmd == psi_cmd) {
        require(cmd, "--k");
        psi.rho = psi_rho.empty() ? qnoise::default_rho_grid() : psi_rho;
        if (cmd->get_option("--clip")->count() > 0)
            psi.clip = psi_clip;
        psi.seed = common.seed;
        psi.threads = common.threads;
        psi.out = common.out;
        print_outputs(qnoise::cmd_psi_curve(psi));
    } else if (cmd == sup_cmd) {
        sup.mode = parse_mode(sup_mode);
        sup.noise_ref = parse_noise_ref(sup_ref);
        sup.ofdm.seed = common.seed;
        sup.threads = common.threads;
        sup.out = common.out;
        print_outputs(qnoise::cmd_suppression_curve(sup));
    } else if (cmd == bnd_cmd) {
        bnd.seed = common.seed;
        bnd.threads = common.threads;
        bnd.out = common.out;
        print_outputs(qnoise::cmd_bound_compare(bnd));
    } else if (cmd == opt_cmd) {
        opt.seed = common.seed;
        opt.out = common.out;
        print_outputs(qnoise::cmd_opt_clip(opt));
    } else if (cmd == adv_cmd) {
        if (cmd->get_option("--bit-reduction")->count() > 0)
            adv.bit_reduction = adv_reduction;
        adv.seed = common.seed;
        adv.threads = common.threads;
        adv.out = common.out;
        const auto result = qnoise::cmd_advisor(adv);
        std::cout << result.report.to_json().dump(2) << '\n';
        print_outputs(result.manifest);
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const qnoise::QuadratureFailure& e) {
        std::cerr << "qnoise: numeric failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const qnoise::NoConvergence& e) {
        std::cerr << "qnoise: numeric failure: " << e.what() << '\n';
        return exit_numeric;
    } catch (const CLI::ParseError& e) {
        std::cerr << "qnoise: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "qnoise: invalid argument: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "qnoise: " << e.what() << '\n';
        return exit_runtime;
    }
}

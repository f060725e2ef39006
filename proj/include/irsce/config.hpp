// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The irsce Authors
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

#pragma once

#include "error.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace irsce
{

enum class ExtraSlotPolicy
{
    phase1,
    phase2,
    even,
};

/// Planar user-region geometry: BS at the origin, IRS at (d_bi, 0), users uniform in a disc.
struct Geometry
{
    double center_to_irs = 10.0;
    double center_to_bs = 105.0;
    double radius = 5.0;
    double d_bi = 100.0;
};

struct UserDistances
{
    std::vector<double> to_bs;
    std::vector<double> to_irs;
};

/// A full scenario. Defaults are the reference link budget and geometry.
struct ScenarioConfig
{
    SystemDims dims{8, 32, 32};
    // negative means "minimum": K, N and (K-1) ceil(N/M)
    int tau1 = -1;
    int tau2 = -1;
    int tau3 = -1;
    int extra_slots = 0;
    ExtraSlotPolicy extra_policy = ExtraSlotPolicy::phase2;

    Geometry geometry;
    double beta0_db = -20.0;
    double d0 = 1.0;
    double alpha1 = 4.2;
    double alpha2 = 2.1;
    double alpha3 = 2.2;

    CorrelationSpec correlation = CorrelationSpec::uniform(0.5);
    bool irs_size_factor = true;

    double power_dbm = 33.0;
    double bandwidth_hz = 1e6;
    double noise_psd_dbm_hz = -169.0;

    std::vector<Scheme> schemes{Scheme::proposed_lmmse};
    int trials = 100;
    std::uint64_t seed = 1;
    int prior_trials = 10000;
    double ratio_cap = 10.0;
    bool perfect_typical = false;
    CovarianceForm phase3_form = CovarianceForm::exact;
    RatioPrior ratio_prior = RatioPrior::conditional;

    void validate() const
    {
        dims.validate();
        require(trials >= 1, ErrorKind::constraint, "trials must be >= 1");
        require(extra_slots >= 0, ErrorKind::constraint, "extra_slots must be >= 0");
        require(prior_trials >= 1000, ErrorKind::constraint, "prior_trials must be >= 1000");
        require(ratio_cap > 0.0, ErrorKind::constraint, "ratio_cap must be > 0");
        require(geometry.radius >= 0.0, ErrorKind::constraint, "radius must be >= 0");
        require(geometry.d_bi > 0.0 && geometry.center_to_bs > 0.0 && geometry.center_to_irs > 0.0,
                ErrorKind::constraint, "geometry distances must be > 0");
        require(!schemes.empty(), ErrorKind::constraint, "schemes must not be empty");
        correlation.validate(dims.K);
        budget().validate();
        const PhasePlan ph = phases();
        require(ph.tau1 >= dims.K, ErrorKind::constraint, "tau1 must be >= K");
        require(ph.tau2 >= dims.N, ErrorKind::constraint, "tau2 must be >= N");
        if (dims.K >= 2)
            require(ph.tau3 >= orthogonal_tau3(dims), ErrorKind::constraint, "tau3 must be >= (K-1) ceil(N/M)");
    }

    LinkBudget budget() const { return LinkBudget::from_dbm(power_dbm, bandwidth_hz, noise_psd_dbm_hz); }

    /// Phase lengths after filling minimums and distributing extra slots.
    PhasePlan phases() const
    {
        PhasePlan ph{tau1 < 0 ? dims.K : tau1, tau2 < 0 ? dims.N : tau2,
                     tau3 < 0 ? (dims.K >= 2 ? orthogonal_tau3(dims) : 0) : tau3};
        switch (extra_policy)
        {
        case ExtraSlotPolicy::phase1: ph.tau1 += extra_slots; break;
        case ExtraSlotPolicy::phase2: ph.tau2 += extra_slots; break;
        case ExtraSlotPolicy::even:
            ph.tau1 += extra_slots / 3 + (extra_slots % 3 > 0 ? 1 : 0);
            ph.tau2 += extra_slots / 3 + (extra_slots % 3 > 1 ? 1 : 0);
            ph.tau3 += extra_slots / 3;
            break;
        }
        return ph;
    }

    PipelineSetup setup() const { return {seed, prior_trials, ratio_cap, perfect_typical, phase3_form, ratio_prior}; }
};

/// Disc center from the two center distances; throws when no such triangle exists.
inline std::pair<double, double> region_center(const Geometry& g)
{
    const double x = (g.center_to_bs * g.center_to_bs - g.center_to_irs * g.center_to_irs + g.d_bi * g.d_bi) /
                     (2.0 * g.d_bi);
    const double y2 = g.center_to_bs * g.center_to_bs - x * x;
    require(y2 >= -1e-9 * g.center_to_bs * g.center_to_bs, ErrorKind::invalid_geometry,
            "user-region center distances are inconsistent with d_bi");
    return {x, std::sqrt(std::max(0.0, y2))};
}

/// Uniform user positions in the disc, returned as distances to the BS and the IRS.
inline UserDistances place_users(const ScenarioConfig& cfg, std::uint64_t seed)
{
    const Geometry& g = cfg.geometry;
    const auto [cx, cy] = region_center(g);
    Rng rng(stream_seed(seed, 0, "placement"));
    UserDistances out;
    for (int k = 0; k < cfg.dims.K; ++k)
    {
        const double r = g.radius * std::sqrt(rng.uniform());
        const double theta = 2.0 * kPi * rng.uniform();
        const double x = cx + r * std::cos(theta);
        const double y = cy + r * std::sin(theta);
        out.to_bs.push_back(std::hypot(x, y));
        out.to_irs.push_back(std::hypot(x - g.d_bi, y));
    }
    return out;
}

inline PathLossSpec path_loss_spec(const ScenarioConfig& cfg, const UserDistances& users)
{
    PathLossSpec spec;
    spec.beta0_db = cfg.beta0_db;
    spec.d0 = cfg.d0;
    spec.d_bu = users.to_bs;
    spec.d_iu = users.to_irs;
    spec.d_bi = cfg.geometry.d_bi;
    spec.alpha1 = cfg.alpha1;
    spec.alpha2 = cfg.alpha2;
    spec.alpha3 = cfg.alpha3;
    return spec;
}

/// Channel model with users placed once from the master seed.
inline ChannelModel scenario_model(const ScenarioConfig& cfg)
{
    return ChannelModel(cfg.dims, cfg.correlation, path_loss_spec(cfg, place_users(cfg, cfg.seed)),
                        ModelOptions{cfg.irs_size_factor});
}

namespace detail
{

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

inline double parse_double(std::string_view text, const std::string& key)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc{} && ptr == text.data() + text.size() && !text.empty(), ErrorKind::parse,
            key + ": '" + std::string(text) + "' is not a number");
    return v;
}

inline long long parse_int(std::string_view text, const std::string& key)
{
    text = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc{} && ptr == text.data() + text.size() && !text.empty(), ErrorKind::parse,
            key + ": '" + std::string(text) + "' is not an integer");
    return v;
}

inline bool parse_bool(std::string_view text, const std::string& key)
{
    text = trim(text);
    if (text == "true" || text == "1" || text == "on" || text == "yes")
        return true;
    if (text == "false" || text == "0" || text == "off" || text == "no")
        return false;
    fail(ErrorKind::parse, key + ": '" + std::string(text) + "' is not a boolean");
}

} // namespace detail

/// Parses "a", "bj", "a+bj" or "a-bj" (j or i as imaginary unit).
inline cdouble parse_complex(std::string_view text, const std::string& key = "value")
{
    text = detail::trim(text);
    require(!text.empty(), ErrorKind::parse, key + ": empty complex value");
    const char last = text.back();
    if (last != 'j' && last != 'i')
        return {detail::parse_double(text, key), 0.0};

    const std::string_view body = text.substr(0, text.size() - 1);
    std::size_t split = std::string_view::npos;
    for (std::size_t i = body.size(); i-- > 1;)
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E')
        {
            split = i;
            break;
        }
    auto imag_part = [&](std::string_view s) {
        s = detail::trim(s);
        if (s.empty() || s == "+")
            return 1.0;
        if (s == "-")
            return -1.0;
        return detail::parse_double(s, key);
    };
    if (split == std::string_view::npos)
        return {0.0, imag_part(body)};
    return {detail::parse_double(body.substr(0, split), key), imag_part(body.substr(split))};
}

/// Flat `key = value` text; `#` starts a comment, lists are comma separated.
inline ScenarioConfig parse_config(std::istream& in)
{
    ScenarioConfig cfg;
    std::map<std::string, std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty())
            continue;
        const auto eq = view.find('=');
        require(eq != std::string_view::npos, ErrorKind::parse,
                "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(detail::trim(view.substr(0, eq)));
        const std::string value(detail::trim(view.substr(eq + 1)));
        require(!seen.contains(key), ErrorKind::parse, "line " + std::to_string(line_no) + ": duplicate key " + key);
        seen[key] = value;
    }

    auto get = [&](const char* key) -> const std::string* {
        auto it = seen.find(key);
        return it == seen.end() ? nullptr : &it->second;
    };
    auto num = [&](const char* key, double& dst) {
        if (auto v = get(key))
            dst = detail::parse_double(*v, key);
    };
    auto integer = [&](const char* key, int& dst) {
        if (auto v = get(key))
            dst = static_cast<int>(detail::parse_int(*v, key));
    };
    auto tau = [&](const char* key, int& dst) {
        if (auto v = get(key))
            dst = *v == "minimum" ? -1 : static_cast<int>(detail::parse_int(*v, key));
    };
    auto complex_list = [&](const char* key, std::vector<cdouble>& dst) {
        if (auto v = get(key))
        {
            dst.clear();
            for (auto item : detail::split(*v, ','))
                dst.push_back(parse_complex(item, key));
        }
    };

    integer("K", cfg.dims.K);
    integer("N", cfg.dims.N);
    integer("M", cfg.dims.M);
    tau("tau1", cfg.tau1);
    tau("tau2", cfg.tau2);
    tau("tau3", cfg.tau3);
    integer("extra_slots", cfg.extra_slots);
    if (auto v = get("extra_policy"))
    {
        if (*v == "phaseI")
            cfg.extra_policy = ExtraSlotPolicy::phase1;
        else if (*v == "phaseII")
            cfg.extra_policy = ExtraSlotPolicy::phase2;
        else if (*v == "even")
            cfg.extra_policy = ExtraSlotPolicy::even;
        else
            fail(ErrorKind::parse, "extra_policy: expected phaseI, phaseII or even");
    }

    num("center_to_irs", cfg.geometry.center_to_irs);
    num("center_to_bs", cfg.geometry.center_to_bs);
    num("radius", cfg.geometry.radius);
    num("d_bi", cfg.geometry.d_bi);
    num("beta0_db", cfg.beta0_db);
    num("d0", cfg.d0);
    num("alpha1", cfg.alpha1);
    num("alpha2", cfg.alpha2);
    num("alpha3", cfg.alpha3);

    if (auto v = get("correlation"))
        cfg.correlation = CorrelationSpec::uniform(parse_complex(*v, "correlation"));
    complex_list("corr_bs_user", cfg.correlation.bs_user);
    complex_list("corr_irs_user", cfg.correlation.irs_user);
    if (auto v = get("corr_bs"))
        cfg.correlation.bs = parse_complex(*v, "corr_bs");
    if (auto v = get("corr_irs"))
        cfg.correlation.irs = parse_complex(*v, "corr_irs");
    if (auto v = get("irs_size_factor"))
        cfg.irs_size_factor = detail::parse_bool(*v, "irs_size_factor");

    num("power_dbm", cfg.power_dbm);
    num("bandwidth_hz", cfg.bandwidth_hz);
    num("noise_psd_dbm_hz", cfg.noise_psd_dbm_hz);

    if (auto v = get("schemes"))
    {
        cfg.schemes.clear();
        for (auto item : detail::split(*v, ','))
            cfg.schemes.push_back(parse_scheme(item));
    }
    integer("trials", cfg.trials);
    if (auto v = get("seed"))
    {
        const auto s = detail::parse_int(*v, "seed");
        require(s >= 0, ErrorKind::constraint, "seed must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    integer("prior_trials", cfg.prior_trials);
    num("ratio_cap", cfg.ratio_cap);
    if (auto v = get("perfect_typical"))
        cfg.perfect_typical = detail::parse_bool(*v, "perfect_typical");
    if (auto v = get("phase3_covariance"))
    {
        if (*v == "exact")
            cfg.phase3_form = CovarianceForm::exact;
        else if (*v == "single_power")
            cfg.phase3_form = CovarianceForm::single_power;
        else
            fail(ErrorKind::parse, "phase3_covariance: expected exact or single_power");
    }
    if (auto v = get("ratio_prior"))
    {
        if (*v == "conditional")
            cfg.ratio_prior = RatioPrior::conditional;
        else if (*v == "trimmed")
            cfg.ratio_prior = RatioPrior::trimmed;
        else
            fail(ErrorKind::parse, "ratio_prior: expected conditional or trimmed");
    }

    static const char* known[] = {"K", "N", "M", "tau1", "tau2", "tau3", "extra_slots", "extra_policy",
                                  "center_to_irs", "center_to_bs", "radius", "d_bi", "beta0_db", "d0", "alpha1",
                                  "alpha2", "alpha3", "correlation", "corr_bs_user", "corr_irs_user", "corr_bs",
                                  "corr_irs", "irs_size_factor", "power_dbm", "bandwidth_hz", "noise_psd_dbm_hz",
                                  "schemes", "trials", "seed", "prior_trials", "ratio_cap", "perfect_typical",
                                  "phase3_covariance", "ratio_prior"};
    for (const auto& [key, value] : seen)
        require(std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) !=
                    std::end(known),
                ErrorKind::parse, "unknown key '" + key + "'");

    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open config '" + path + "'");
    return parse_config(in);
}

} // namespace irsce

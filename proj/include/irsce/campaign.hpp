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

#include "config.hpp"
#include "error.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <locale>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace irsce
{

/// One aggregated line per (scheme, scenario).
struct ResultRow
{
    std::string scheme;
    int K = 0, N = 0, M = 0;
    int tau1 = 0, tau2 = 0, tau3 = 0;
    std::uint64_t seed = 0;
    long trials = 0;
    MseReport report;
    std::optional<double> wall_seconds;
};

struct CampaignOptions
{
    int threads = 1;
    bool timing = false;
};

inline std::uint64_t channel_seed(std::uint64_t master, int trial)
{
    return stream_seed(master, static_cast<std::uint64_t>(trial), "channel");
}

inline std::uint64_t noise_seed(std::uint64_t master, int trial, Scheme scheme)
{
    return stream_seed(master, static_cast<std::uint64_t>(trial), "noise/" + to_string(scheme));
}

/// Runs `trials` independent trials of one pipeline and reduces them in trial order.
inline MseReport run_trials(const ChannelModel& model, const Pipeline& pipeline, std::uint64_t master, int trials,
                            int threads)
{
    struct Slot
    {
        TrialErrors errors;
        Predictions predictions;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(trials));
    std::mutex error_mutex;
    int failed_trial = trials;
    std::exception_ptr failure;

    auto worker = [&](int first, int stride) {
        for (int t = first; t < trials; t += stride)
        {
            try
            {
                const ChannelRealization ch = model.draw(channel_seed(master, t));
                const TrialResult r = pipeline.run(ch, noise_seed(master, t, pipeline.scheme()));
                slots[t] = {score(r.estimates, ch), r.predictions};
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (t < failed_trial)
                {
                    failed_trial = t;
                    failure = std::current_exception();
                }
                return;
            }
        }
    };

    const int n = std::max(1, std::min(threads, trials));
    if (n == 1)
        worker(0, 1);
    else
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n; ++w)
            pool.emplace_back(worker, w, n);
    }

    if (failure)
    {
        try
        {
            std::rethrow_exception(failure);
        }
        catch (const Error& e)
        {
            throw Error(e.kind(), "trial " + std::to_string(failed_trial) + ": " + e.what());
        }
    }

    MseAccumulator acc;
    for (const Slot& s : slots)
        acc.add(s.errors, s.predictions);
    return acc.report();
}

inline std::vector<ResultRow> run_campaign(const ScenarioConfig& cfg, const CampaignOptions& options = {})
{
    cfg.validate();
    const ChannelModel model = scenario_model(cfg);
    const PhasePlan phases = cfg.phases();
    std::vector<ResultRow> rows;
    for (Scheme scheme : cfg.schemes)
    {
        const auto start = std::chrono::steady_clock::now();
        const Pipeline pipeline(model, cfg.budget(), phases, scheme, cfg.setup());
        ResultRow row;
        row.scheme = to_string(scheme);
        row.K = cfg.dims.K;
        row.N = cfg.dims.N;
        row.M = cfg.dims.M;
        row.tau1 = pipeline.phases().tau1;
        row.tau2 = pipeline.phases().tau2;
        row.tau3 = pipeline.phases().tau3;
        row.seed = cfg.seed;
        row.report = run_trials(model, pipeline, cfg.seed, cfg.trials, options.threads);
        row.trials = row.report.trials;
        if (options.timing)
            row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(std::move(row));
    }
    return rows;
}

inline const std::vector<std::string>& result_columns()
{
    static const std::vector<std::string> cols{
        "scheme",   "K",        "N",           "M",           "tau1",        "tau2",        "tau3",
        "seed",     "trials",   "e2",          "e2_ci95",     "e3",          "e3_ci95",     "e_total",
        "e_total_ci95", "phase1_mse", "phase1_pred", "phase2_mse", "phase2_pred", "phase3_mse", "phase3_pred"};
    return cols;
}

/// Header plus one row per result; `wall_s` is appended only when any row carries timing.
inline void write_results_csv(std::ostream& sink, const std::vector<ResultRow>& rows)
{
    std::ostringstream out;
    out.imbue(std::locale::classic());
    const bool timing = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.wall_seconds; });
    const auto& cols = result_columns();
    for (std::size_t c = 0; c < cols.size(); ++c)
        out << (c ? "," : "") << cols[c];
    out << (timing ? ",wall_s\n" : "\n");
    for (const ResultRow& r : rows)
    {
        const MseReport& m = r.report;
        out << r.scheme << ',' << r.K << ',' << r.N << ',' << r.M << ',' << r.tau1 << ',' << r.tau2 << ',' << r.tau3
            << ',' << r.seed << ',' << r.trials;
        for (double v : {m.e2.value, m.e2.half_width, m.e3.value, m.e3.half_width, m.total.value,
                         m.total.half_width, m.phase1_error, m.phase1_predicted, m.phase2_error, m.phase2_predicted,
                         m.phase3_error, m.phase3_predicted})
            out << ',' << format_number(v);
        if (timing)
            out << ',' << format_number(r.wall_seconds.value_or(0.0), 6);
        out << '\n';
    }
    sink << out.str();
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path + "' for writing");
    write_results_csv(out, rows);
    out.flush();
    require(static_cast<bool>(out), ErrorKind::io, "write to '" + path + "' failed");
}

inline std::vector<ResultRow> read_results_csv(std::istream& in)
{
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, "results csv: missing header");
    const auto header = split_csv_line(line);
    const auto& cols = result_columns();
    require(header.size() >= cols.size() && std::equal(cols.begin(), cols.end(), header.begin()), ErrorKind::parse,
            "results csv: unexpected header");
    const bool timing = header.size() == cols.size() + 1;

    std::vector<ResultRow> rows;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const auto c = split_csv_line(line);
        require(c.size() == header.size(), ErrorKind::parse, "results csv: ragged row");
        ResultRow r;
        r.scheme = c[0];
        auto as_int = [](const std::string& s) { return static_cast<int>(parse_number(s)); };
        r.K = as_int(c[1]);
        r.N = as_int(c[2]);
        r.M = as_int(c[3]);
        r.tau1 = as_int(c[4]);
        r.tau2 = as_int(c[5]);
        r.tau3 = as_int(c[6]);
        r.seed = std::stoull(c[7]);
        r.trials = std::stol(c[8]);
        MseReport& m = r.report;
        m.trials = r.trials;
        double* fields[] = {&m.e2.value, &m.e2.half_width, &m.e3.value, &m.e3.half_width, &m.total.value,
                            &m.total.half_width, &m.phase1_error, &m.phase1_predicted, &m.phase2_error,
                            &m.phase2_predicted, &m.phase3_error, &m.phase3_predicted};
        for (std::size_t f = 0; f < std::size(fields); ++f)
            *fields[f] = parse_number(c[9 + f]);
        if (timing)
            r.wall_seconds = parse_number(c.back());
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace irsce

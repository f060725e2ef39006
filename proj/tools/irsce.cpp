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

#include <irsce/irsce.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

using namespace irsce;

struct OutputSink
{
    std::ofstream file;
    std::ostream* stream = &std::cout;

    explicit OutputSink(const std::string& path)
    {
        if (path.empty() || path == "-")
            return;
        file.open(path, std::ios::binary);
        require(static_cast<bool>(file), ErrorKind::io, "cannot open '" + path + "' for writing");
        stream = &file;
    }
};

ScenarioConfig scenario(const std::string& path)
{
    return path.empty() ? ScenarioConfig{} : load_config(path);
}

int cmd_plan(int elements, int max_users, const std::vector<int>& antennas, const std::string& out)
{
    std::vector<int> users;
    for (int k = 1; k <= max_users; ++k)
        users.push_back(k);
    OutputSink sink(out);
    *sink.stream << "K,M,N,proposed,benchmark\n";
    for (const auto& r : pilot_length_table(elements, users, antennas))
        *sink.stream << r.K << ',' << r.M << ',' << r.N << ',' << r.proposed << ',' << r.benchmark << '\n';
    return 0;
}

int cmd_schedule(ScenarioConfig cfg, const std::string& scheme, const std::string& out)
{
    cfg.validate();
    const ChannelModel model = scenario_model(cfg);
    cfg.prior_trials = 1000;
    const Pipeline pipeline(model, cfg.budget(), cfg.phases(), parse_scheme(scheme), cfg.setup());
    OutputSink sink(out);
    write_schedule_csv(*sink.stream, pipeline.schedule(), phase_labels(pipeline.phases()));
    return 0;
}

int cmd_selftest(std::uint64_t seed)
{
    int failed = 0;
    for (const CheckResult& r : run_selftest(seed))
    {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty())
            std::cout << " (" << r.detail << ")";
        std::cout << '\n';
        failed += r.passed ? 0 : 1;
    }
    std::cout << (failed ? "selftest failed: " + std::to_string(failed) + " check(s)\n" : "selftest passed\n");
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Three-phase channel estimation for IRS-assisted multiuser uplink"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::vector<std::string> schemes;
    int threads = 1;
    bool timing = false;

    auto* plan = app.add_subcommand("plan", "Minimum pilot lengths versus K for each M");
    int plan_n = 32, plan_k = 16;
    std::vector<int> plan_m{8, 32};
    plan->add_option("-N,--elements", plan_n, "IRS elements")->capture_default_str();
    plan->add_option("--max-users", plan_k, "Largest K in the table")->capture_default_str();
    plan->add_option("-M,--antennas", plan_m, "BS antenna counts")->capture_default_str();
    plan->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* run = app.add_subcommand("run", "Monte Carlo MSE campaign");
    run->add_option("--config", config_path, "Scenario file")->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "Output CSV (default stdout)");
    run->add_option("--seed", seed, "Master seed override");
    run->add_option("--trials", trials, "Trial count override");
    run->add_option("--scheme", schemes, "Scheme list override");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    run->add_flag("--timing", timing, "Append a wall-clock column");

    auto* sched = app.add_subcommand("schedule", "Dump the pilot and reflection schedule of one scheme");
    std::string sched_scheme = "proposed-lmmse";
    sched->add_option("--config", config_path, "Scenario file")->check(CLI::ExistingFile);
    sched->add_option("--scheme", sched_scheme, "Scheme")->capture_default_str();
    sched->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* self = app.add_subcommand("selftest", "Run the invariant suite");
    std::uint64_t self_seed = 1;
    self->add_option("--seed", self_seed, "Seed for random instances")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (plan->parsed())
            return cmd_plan(plan_n, plan_k, plan_m, out_path);
        if (self->parsed())
            return cmd_selftest(self_seed);

        ScenarioConfig cfg = scenario(config_path);
        if (sched->parsed())
            return cmd_schedule(cfg, sched_scheme, out_path);

        if (seed)
            cfg.seed = *seed;
        if (trials)
            cfg.trials = *trials;
        if (!schemes.empty())
        {
            cfg.schemes.clear();
            for (const auto& s : schemes)
                cfg.schemes.push_back(parse_scheme(s));
        }
        const auto rows = run_campaign(cfg, {threads, timing});
        OutputSink sink(out_path);
        write_results_csv(*sink.stream, rows);
        return 0;
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 3;
    }
}

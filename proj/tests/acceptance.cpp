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

// Acceptance run: one PASS/FAIL line per criterion, detail lines indented below it.
// Exit status is non-zero when any criterion fails.

#include <irsce/irsce.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace irsce;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::string> g_details;

void detail(const std::string& line) { g_details.push_back(line); }

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string with_ci(const MetricValue& m) { return fmt(m.value) + " +/- " + fmt(m.half_width); }

ScenarioConfig desk_scale()
{
    ScenarioConfig cfg;
    cfg.dims = {4, 8, 8};
    return cfg;
}

MseReport run_one(const ScenarioConfig& cfg, Scheme scheme)
{
    const ChannelModel model = scenario_model(cfg);
    const Pipeline pipeline(model, cfg.budget(), cfg.phases(), scheme, cfg.setup());
    return run_trials(model, pipeline, cfg.seed, cfg.trials, 1);
}

int tilde_tau(const SystemDims& d)
{
    const int ceil_part = ((d.K - 1) * d.N + d.M - 1) / d.M;
    return d.K + d.N + std::max(d.K - 1, ceil_part);
}

bool noiseless_grid()
{
    const auto start = Clock::now();
    double worst = 0.0;
    std::string worst_dims;
    bool lengths_ok = true;
    for (int K = 2; K <= 8; ++K)
        for (int N = 1; N <= 8; ++N)
            for (int M = 1; M <= 8; ++M)
            {
                const SystemDims dims{K, N, M};
                const ChannelModel model(dims, CorrelationSpec::uniform(0.5), PathLossSpec::uniform(K, 105.0, 10.0));
                const Pipeline pipeline(model, LinkBudget::from_dbm(33.0, 1e6, -169.0), {K, N, 0},
                                        Scheme::proposed_noiseless);
                if (pipeline.schedule().slots() != tilde_tau(dims))
                {
                    lengths_ok = false;
                    detail("length mismatch at K=" + std::to_string(K) + " N=" + std::to_string(N) +
                           " M=" + std::to_string(M));
                }
                const double err = noiseless_recovery_error(dims, 1000 + 64 * K + 8 * N + M);
                if (err > worst)
                {
                    worst = err;
                    worst_dims = std::to_string(K) + "," + std::to_string(N) + "," + std::to_string(M);
                }
            }

    const SystemDims example{3, 3, 2};
    const auto plan = phase3_plan(example);
    const bool example_ok = plan.slots.size() == 3 && noiseless_recovery_error(example, 7) <= 1e-9;
    const double elapsed = seconds_since(start);
    detail("max relative error " + fmt(worst) + " at (K,N,M)=(" + worst_dims + "), slot counts " +
           (lengths_ok ? "match" : "differ") + ", three-user example tau3=" + std::to_string(plan.slots.size()) +
           ", " + fmt(elapsed) + " s");
    return worst <= 1e-9 && lengths_ok && example_ok && elapsed < 10.0;
}

bool pilot_table()
{
    const auto start = Clock::now();
    std::vector<int> users;
    for (int k = 1; k <= 16; ++k)
        users.push_back(k);
    const std::vector<int> antennas{8, 32};
    bool ok = true;
    for (const PilotLengthRow& r : pilot_length_table(32, users, antennas))
    {
        const int ceil_part = ((r.K - 1) * r.N + r.M - 1) / r.M;
        ok = ok && r.proposed == r.K + r.N + std::max(r.K - 1, ceil_part) && r.benchmark == r.K + r.K * r.N;
        if (r.M == 32)
            ok = ok && r.proposed == 2 * r.K + r.N - 1;
        if (r.K == 8 && r.M == 32)
        {
            ok = ok && r.proposed == 47 && r.benchmark == 264;
            detail("K=8 M=32: proposed " + std::to_string(r.proposed) + ", benchmark " + std::to_string(r.benchmark));
        }
    }
    return ok && seconds_since(start) < 1.0;
}

bool mse_agreement()
{
    const auto start = Clock::now();
    ScenarioConfig cfg = desk_scale();
    cfg.trials = 10000;
    const MseReport full = run_one(cfg, Scheme::proposed_lmmse);
    const double rel1 = std::abs(full.phase1_error / full.phase1_predicted - 1.0);
    const double rel2 = std::abs(full.phase2_error / full.phase2_predicted - 1.0);

    // Phase III at a fixed cascaded channel: R and t_1 held, everything else redrawn.
    const ChannelModel model = scenario_model(cfg);
    const SystemDims dims = cfg.dims;
    const LinkBudget budget = cfg.budget();
    const PathLoss& loss = model.losses();
    const ChannelRealization base = model.draw(stream_seed(cfg.seed, 0, "fixed-cascade"));
    const int tau1 = dims.K;
    const Schedule s1 = phase1_schedule(dims, tau1);
    auto [s3, plan] = phase3_schedule_orthogonal_noisy(dims, orthogonal_tau3(dims));
    const Schedule s = concat(s1, s3);
    const CMatrix irs_user = exp_correlation_matrix(cfg.correlation.irs_for(0), dims.N);

    std::vector<CMatrix> priors, psis;
    for (int b = 0; b < plan.cycle; ++b)
    {
        const int k = plan.user[b];
        const auto& active = plan.active[b];
        const auto A = static_cast<Eigen::Index>(active.size());
        CMatrix prior(A, A);
        for (Eigen::Index i = 0; i < A; ++i)
            for (Eigen::Index j = 0; j < A; ++j)
                prior(i, j) = loss.iu[k] * irs_user(active[i], active[j]) /
                              (base.user_to_irs(active[i], 0) * std::conj(base.user_to_irs(active[j], 0)));
        priors.push_back(prior);
        psis.push_back(phase3_noise_covariance(loss.bu[k], budget.p, budget.sigma2, tau1,
                                               model.bs_user_correlation(k)));
    }

    double empirical = 0.0, trace = 0.0;
    for (int t = 0; t < cfg.trials; ++t)
    {
        const ChannelRealization fresh = model.draw(stream_seed(cfg.seed, static_cast<std::uint64_t>(t), "fresh"));
        CMatrix t_all = fresh.user_to_irs;
        t_all.col(0) = base.user_to_irs.col(0);
        const ChannelRealization ch = assemble_channels(fresh.direct, base.irs_to_bs, t_all);
        const ReceivedBlock y = simulate_received(ch, s, budget, true,
                                                  stream_seed(cfg.seed, static_cast<std::uint64_t>(t), "noise"));
        const Phase1Estimate ph1 =
            phase1_mmse(ReceivedBlock{y.y.leftCols(tau1)}, s1.pilots, budget.p, budget.sigma2, loss.bu);
        const ReceivedBlock y3 = cancel_direct(ReceivedBlock{y.y.rightCols(s3.slots())}, ph1.h_hat, s3.pilots, budget.p);
        for (int b = 0; b < plan.cycle; ++b)
        {
            const auto& active = plan.active[b];
            CMatrix g(dims.M, static_cast<Eigen::Index>(active.size()));
            CVector truth(static_cast<Eigen::Index>(active.size()));
            for (std::size_t a = 0; a < active.size(); ++a)
            {
                g.col(a) = ch.reflected[0].col(active[a]);
                truth(a) = ch.lambda(plan.user[b] - 1, active[a]);
            }
            const RatioEstimate r = phase3_lmmse(y3.y.col(b), g, budget.p, psis[b], priors[b]);
            empirical += (r.lambda_hat - truth).squaredNorm();
            trace += r.mse;
        }
    }
    const double rel3 = std::abs(empirical / trace - 1.0);
    const double elapsed = seconds_since(start);
    detail("phase I " + fmt(full.phase1_error) + " vs " + fmt(full.phase1_predicted) + " (" + fmt(100 * rel1) + "%)");
    detail("phase II " + fmt(full.phase2_error) + " vs " + fmt(full.phase2_predicted) + " (" + fmt(100 * rel2) +
           "%)");
    detail("phase III at fixed cascade " + fmt(empirical / cfg.trials) + " vs " + fmt(trace / cfg.trials) + " (" +
           fmt(100 * rel3) + "%), " + fmt(elapsed) + " s");
    return rel1 <= 0.03 && rel2 <= 0.03 && rel3 <= 0.03 && elapsed < 120.0;
}

bool scheme_ordering()
{
    ScenarioConfig cfg = desk_scale();
    cfg.trials = 2000;
    bool ok = true;
    for (int factor : {1, 2, 4})
    {
        cfg.tau2 = factor * cfg.dims.N;
        const MetricValue dft = run_one(cfg, Scheme::proposed_lmmse).e2;
        const MetricValue onoff = run_one(cfg, Scheme::phase2_onoff).e2;
        const MetricValue random = run_one(cfg, Scheme::phase2_random).e2;
        const double upper = dft.value + dft.half_width;
        ok = ok && upper < onoff.value - onoff.half_width && upper < random.value - random.half_width;
        detail("tau2=" + std::to_string(cfg.tau2) + ": dft " + with_ci(dft) + ", on-off " + with_ci(onoff) +
               ", random " + with_ci(random));
    }
    return ok;
}

bool error_propagation()
{
    ScenarioConfig cfg = desk_scale();
    cfg.trials = 2000;
    cfg.perfect_typical = true;
    const double perfect = run_one(cfg, Scheme::proposed_lmmse).e3.value;
    cfg.perfect_typical = false;
    std::vector<MetricValue> e3;
    for (int factor : {1, 2, 4, 8})
    {
        cfg.tau2 = factor * cfg.dims.N;
        e3.push_back(run_one(cfg, Scheme::proposed_lmmse).e3);
        detail("tau2=" + std::to_string(cfg.tau2) + ": e3 " + with_ci(e3.back()));
    }
    detail("perfect typical-user channel: e3 " + fmt(perfect));
    bool ok = true;
    for (std::size_t i = 1; i < e3.size(); ++i)
    {
        ok = ok && e3[i].value <= e3[i - 1].value;
        ok = ok && std::abs(e3[i].value - perfect) <= std::abs(e3[i - 1].value - perfect);
    }
    return ok && e3.back().value >= perfect;
}

bool proposed_vs_benchmark()
{
    ScenarioConfig cfg = desk_scale();
    cfg.trials = 2000;
    bool ok = true;
    const int first = orthogonal_tau3(cfg.dims);
    for (int tau3 = first; tau3 <= (cfg.dims.K - 1) * cfg.dims.N; tau3 *= 2)
    {
        cfg.tau3 = tau3;
        const MetricValue proposed = run_one(cfg, Scheme::proposed_lmmse).e3;
        const MetricValue benchmark = run_one(cfg, Scheme::benchmark).e3;
        const bool here = benchmark.value >= 10.0 * proposed.value;
        ok = ok && here;
        detail("tau3=" + std::to_string(tau3) + ": proposed " + with_ci(proposed) + ", benchmark " +
               with_ci(benchmark) + ", ratio " + fmt(benchmark.value / proposed.value) + (here ? "" : "  <- below 10x"));
    }
    return ok;
}

bool invariant_suite()
{
    const auto start = Clock::now();
    bool ok = true;
    for (const CheckResult& c : run_selftest(1))
    {
        ok = ok && c.passed;
        if (!c.passed)
            detail(c.name + ": " + c.detail);
    }
    const double elapsed = seconds_since(start);
    detail(fmt(elapsed) + " s");
    return ok && elapsed < 60.0;
}

} // namespace

int main()
{
    struct Criterion
    {
        const char* name;
        std::function<bool()> run;
    };
    const Criterion criteria[] = {
        {"1 noiseless recovery at minimum length", noiseless_grid},
        {"2 pilot-length table", pilot_table},
        {"3 closed-form vs empirical MSE", mse_agreement},
        {"4 DFT training beats on-off and random phases", scheme_ordering},
        {"5 Phase III error falls with Phase II length", error_propagation},
        {"6 proposed Phase III an order below benchmark", proposed_vs_benchmark},
        {"7 invariant suite", invariant_suite},
    };
    int failed = 0;
    for (const Criterion& c : criteria)
    {
        bool pass = false;
        std::string error;
        g_details.clear();
        try
        {
            pass = c.run();
        }
        catch (const std::exception& e)
        {
            error = e.what();
        }
        std::printf("%s  %s%s\n", pass ? "PASS" : "FAIL", c.name, error.empty() ? "" : (" (" + error + ")").c_str());
        for (const std::string& line : g_details)
            std::printf("    %s\n", line.c_str());
        std::fflush(stdout);
        failed += pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}

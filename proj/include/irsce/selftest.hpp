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

#include "campaign.hpp"
#include "config.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "schedule.hpp"

#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace irsce
{

struct CheckResult
{
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Stacked Phase III system: block row i, column (k-1) N + n holds a_{k,i} phi_{n,i} g_{1,n}.
inline CMatrix phase3_system_matrix(const Schedule& s3, const CMatrix& g1)
{
    const auto M = g1.rows();
    const int K = s3.users(), N = s3.elements();
    CMatrix v = CMatrix::Zero(M * s3.slots(), static_cast<Eigen::Index>(K - 1) * N);
    for (int i = 0; i < s3.slots(); ++i)
        for (int k = 1; k < K; ++k)
            for (int n = 0; n < N; ++n)
                v.block(i * M, static_cast<Eigen::Index>(k - 1) * N + n, M, 1) =
                    s3.pilots(k, i) * s3.reflections(n, i) * g1.col(n);
    return v;
}

/// Replays the plan in slot order: every active (user, element) ratio must be known already or be
/// solved in that slot, each slot's unknowns must sit on distinct elements (at most M of them),
/// and every ratio must be solved exactly once. Returns an empty string on success.
inline std::string plan_dependency_violation(const SystemDims& dims, const Phase3Plan& plan)
{
    std::set<std::pair<int, int>> known;
    for (std::size_t i = 0; i < plan.slots.size(); ++i)
    {
        const Phase3Slot& slot = plan.slots[i];
        const std::string where = "slot " + std::to_string(i + 1) + ": ";
        std::set<std::pair<int, int>> unknown(slot.unknowns.begin(), slot.unknowns.end());
        std::set<int> unknown_elements;
        for (auto [k, n] : slot.unknowns)
            unknown_elements.insert(n);
        if (unknown_elements.size() != slot.unknowns.size())
            return where + "two unknowns share an element";
        if (static_cast<int>(slot.unknowns.size()) > dims.M)
            return where + "more unknowns than antennas";
        for (int k : slot.users)
            for (int n : slot.elements)
                if (!known.contains({k, n}) && !unknown.contains({k, n}))
                    return where + "ratio (" + std::to_string(k + 1) + "," + std::to_string(n + 1) +
                           ") is active but neither known nor solved";
        for (const auto& u : slot.unknowns)
            if (!known.insert(u).second)
                return where + "ratio solved twice";
    }
    if (static_cast<int>(known.size()) != (dims.K - 1) * dims.N)
        return "not every ratio is solved";
    return {};
}

/// Slot-by-slot scalar summation of the received-signal model.
inline CMatrix brute_force_received(const ChannelRealization& ch, const Schedule& s, double p)
{
    CMatrix y = CMatrix::Zero(ch.antennas(), s.slots());
    for (int i = 0; i < s.slots(); ++i)
        for (int m = 0; m < ch.antennas(); ++m)
        {
            cdouble acc{0.0, 0.0};
            for (int k = 0; k < ch.users(); ++k)
            {
                cdouble eff = ch.direct(m, k);
                for (int n = 0; n < ch.elements(); ++n)
                    eff += s.reflections(n, i) * ch.user_to_irs(n, k) * ch.irs_to_bs(m, n);
                acc += eff * std::sqrt(p) * s.pilots(k, i);
            }
            y(m, i) = acc;
        }
    return y;
}

/// Maximum relative coefficient error of a noiseless end-to-end run at minimum length.
inline double noiseless_recovery_error(const SystemDims& dims, std::uint64_t seed)
{
    const ChannelModel model(dims, CorrelationSpec::uniform(0.5), PathLossSpec::uniform(dims.K, 105.0, 10.0));
    const LinkBudget budget = LinkBudget::from_dbm(33.0, 1e6, -169.0);
    const Pipeline pipeline(model, budget, {dims.K, dims.N, 0}, Scheme::proposed_noiseless);
    const ChannelRealization ch = model.draw(seed);
    const EstimateSet est = pipeline.run(ch, 0).estimates;
    auto rel = [](const CMatrix& a, const CMatrix& b) {
        return b.norm() > 0.0 ? (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff() : a.norm();
    };
    double worst = rel(est.h_hat, ch.direct);
    for (int k = 0; k < dims.K; ++k)
        worst = std::max(worst, rel(est.reflected(k), ch.reflected[k]));
    if (dims.K > 1)
        worst = std::max(worst, rel(est.lambda_hat, ch.lambda));
    return worst;
}

namespace detail
{

inline void for_small_grid(int limit, const std::function<void(const SystemDims&)>& f)
{
    for (int K = 1; K <= limit; ++K)
        for (int N = 1; N <= limit; ++N)
            for (int M = 1; M <= limit; ++M)
                f({K, N, M});
}

inline std::string dims_text(const SystemDims& d)
{
    return "(K=" + std::to_string(d.K) + ",N=" + std::to_string(d.N) + ",M=" + std::to_string(d.M) + ")";
}

inline CheckResult check(std::string name, const std::function<std::string()>& body)
{
    try
    {
        std::string why = body();
        return {std::move(name), why.empty(), std::move(why)};
    }
    catch (const std::exception& e)
    {
        return {std::move(name), false, e.what()};
    }
}

} // namespace detail

/// The invariant suite behind the `selftest` verb.
inline std::vector<CheckResult> run_selftest(std::uint64_t seed = 1)
{
    std::vector<CheckResult> out;
    using detail::check;
    using detail::dims_text;

    out.push_back(check("pilot gram equals tau1 I", [] {
        for (int K = 1; K <= 8; ++K)
            for (int tau1 = K; tau1 <= 12; ++tau1)
            {
                const CMatrix a = phase1_pilots(K, tau1);
                const double err = (a * a.adjoint() - tau1 * CMatrix::Identity(K, K)).cwiseAbs().maxCoeff();
                if (err > 1e-12 * tau1)
                    return "K=" + std::to_string(K) + " tau1=" + std::to_string(tau1);
            }
        return std::string{};
    }));

    out.push_back(check("dft reflections gram equals tau2 I", [] {
        for (int N = 1; N <= 16; ++N)
            for (int tau2 = N; tau2 <= 2 * N + 3; ++tau2)
            {
                const CMatrix phi = phase2_reflections_dft(N, tau2);
                const double err = (phi * phi.adjoint() - tau2 * CMatrix::Identity(N, N)).cwiseAbs().maxCoeff();
                if (err > 1e-12 * tau2)
                    return "N=" + std::to_string(N) + " tau2=" + std::to_string(tau2);
            }
        return std::string{};
    }));

    out.push_back(check("schedule entries have modulus 0 or 1", [] {
        std::string why;
        detail::for_small_grid(6, [&](const SystemDims& d) {
            if (!why.empty() || d.K < 2)
                return;
            const bool ok = has_valid_moduli(phase3_schedule_noiseless(d)) &&
                            has_valid_moduli(phase3_schedule_orthogonal_noisy(d, orthogonal_tau3(d) + 2).first) &&
                            has_valid_moduli(benchmark_phase3_schedule(d, d.N)) &&
                            has_valid_moduli(phase2_schedule(d, phase2_reflections_random(d.N, d.N + 1, 3)));
            if (!ok)
                why = dims_text(d);
        });
        return why;
    }));

    out.push_back(check("ratio index sets partition the array", [] {
        std::string why;
        detail::for_small_grid(8, [&](const SystemDims& d) {
            if (!why.empty() || d.K < 2 || d.M >= d.N)
                return;
            const Phase3Plan plan = phase3_plan(d);
            const int ups = d.N - d.M * (d.N / d.M);
            for (int k = 1; k < d.K; ++k)
            {
                std::vector<int> all(plan.lambda1[k]);
                all.insert(all.end(), plan.lambda2[k].begin(), plan.lambda2[k].end());
                std::sort(all.begin(), all.end());
                bool ok = static_cast<int>(plan.lambda2[k].size()) == ups &&
                          static_cast<int>(plan.lambda1[k].size()) == d.N - ups &&
                          static_cast<int>(all.size()) == d.N;
                for (int n = 0; ok && n < d.N; ++n)
                    ok = all[n] == n;
                if (!ok)
                    why = dims_text(d) + " user " + std::to_string(k + 1);
            }
        });
        return why;
    }));

    out.push_back(check("shared slots solve each element once", [] {
        std::string why;
        detail::for_small_grid(8, [&](const SystemDims& d) {
            if (!why.empty() || d.K < 2 || d.M >= d.N)
                return;
            const Phase3Plan plan = phase3_plan(d);
            for (std::size_t s = 0; s < plan.N_set.size(); ++s)
            {
                std::set<int> distinct(plan.N_set[s].begin(), plan.N_set[s].end());
                if (distinct.size() != plan.N_set[s].size() ||
                    static_cast<int>(distinct.size()) != plan.M_i[s])
                    why = dims_text(d) + " shared slot " + std::to_string(s + 1);
            }
        });
        return why;
    }));

    out.push_back(check("phase III slot order respects dependencies", [] {
        std::string why;
        detail::for_small_grid(8, [&](const SystemDims& d) {
            if (!why.empty() || d.K < 2)
                return;
            const Phase3Plan plan = phase3_plan(d);
            if (static_cast<int>(plan.slots.size()) != min_tau3(d))
                why = dims_text(d) + " plan length differs from minimum";
            else if (auto v = plan_dependency_violation(d, plan); !v.empty())
                why = dims_text(d) + " " + v;
        });
        return why;
    }));

    out.push_back(check("phase III system matrix has full column rank", [seed] {
        std::string why;
        detail::for_small_grid(8, [&](const SystemDims& d) {
            if (!why.empty() || d.K < 2)
                return;
            const ChannelModel model(d, CorrelationSpec{}, PathLossSpec::uniform(d.K, 1.0, 1.0, 1.0));
            const ChannelRealization ch = model.draw(stream_seed(seed, 0, "rank"));
            const CMatrix v = phase3_system_matrix(phase3_schedule_noiseless(d), ch.reflected[0]);
            if (numerical_rank(v) != static_cast<Eigen::Index>(d.K - 1) * d.N)
                why = dims_text(d);
        });
        return why;
    }));

    out.push_back(check("orthogonal slots cover every element once per user", [] {
        std::string why;
        detail::for_small_grid(8, [&](const SystemDims& d) {
            if (!why.empty() || d.K < 2)
                return;
            const OrthogonalPlan plan = orthogonal_plan(d);
            std::vector<std::vector<int>> hits(d.K, std::vector<int>(d.N, 0));
            for (int b = 0; b < plan.cycle; ++b)
            {
                if (static_cast<int>(plan.active[b].size()) > d.M)
                    why = dims_text(d) + " slot exceeds M elements";
                for (int n : plan.active[b])
                    ++hits[plan.user[b]][n];
            }
            for (int k = 1; k < d.K; ++k)
                for (int n = 0; n < d.N; ++n)
                    if (hits[k][n] != 1)
                        why = dims_text(d) + " user " + std::to_string(k + 1);
        });
        return why;
    }));

    out.push_back(check("reflected channels are ratio multiples of the typical user", [seed] {
        const SystemDims d{5, 7, 4};
        const ChannelModel model(d, CorrelationSpec::uniform({0.4, 0.3}), PathLossSpec::uniform(d.K, 105.0, 10.0));
        for (int t = 0; t < 50; ++t)
        {
            const ChannelRealization ch = model.draw(stream_seed(seed, t, "ratio"));
            for (int k = 1; k < d.K; ++k)
                for (int n = 0; n < d.N; ++n)
                    if ((ch.g(k, n) - ch.ratio(k, n) * ch.g(0, n)).norm() > 1e-12 * ch.g(k, n).norm())
                        return std::string("trial ") + std::to_string(t);
        }
        return std::string{};
    }));

    out.push_back(check("received signal matches scalar summation", [seed] {
        const SystemDims d{3, 5, 4};
        const ChannelModel model(d, CorrelationSpec::uniform(0.3), PathLossSpec::uniform(d.K, 1.0, 1.0, 1.0));
        const LinkBudget budget{2.0, 1.0};
        const ChannelRealization ch = model.draw(seed);
        Schedule s = Schedule::zeros(3, 5, 9);
        Rng rng(stream_seed(seed, 0, "schedule"));
        for (Eigen::Index j = 0; j < 9; ++j)
        {
            for (Eigen::Index k = 0; k < 3; ++k)
                s.pilots(k, j) = rng.uniform() < 0.3 ? cdouble{0.0} : std::polar(1.0, 2.0 * kPi * rng.uniform());
            for (Eigen::Index n = 0; n < 5; ++n)
                s.reflections(n, j) = rng.uniform() < 0.3 ? cdouble{0.0} : std::polar(1.0, 2.0 * kPi * rng.uniform());
        }
        const CMatrix fast = simulate_received(ch, s, budget, false, 0).y;
        const CMatrix slow = brute_force_received(ch, s, budget.p);
        const double err = (fast - slow).cwiseAbs().maxCoeff() / slow.cwiseAbs().maxCoeff();
        return err <= 1e-12 ? std::string{} : "relative difference " + format_number(err, 3);
    }));

    out.push_back(check("noiseless pipeline recovers every coefficient", [seed] {
        std::string why;
        detail::for_small_grid(8, [&](const SystemDims& d) {
            if (!why.empty())
                return;
            const double err = noiseless_recovery_error(d, stream_seed(seed, 0, "noiseless"));
            if (!(err <= 1e-9))
                why = dims_text(d) + " error " + format_number(err, 3);
        });
        return why;
    }));

    out.push_back(check("proposed length never exceeds the benchmark and falls with M", [] {
        for (int K = 1; K <= 64; ++K)
            for (int N = 1; N <= 64; ++N)
            {
                int previous = min_total_pilots({K, N, 1});
                for (int M = 1; M <= 64; ++M)
                {
                    const int tau = min_total_pilots({K, N, M});
                    if (tau > benchmark_total_pilots({K, N, M}) || tau > previous ||
                        (M >= N && tau != 2 * K + N - 1))
                        return "K=" + std::to_string(K) + " N=" + std::to_string(N) + " M=" + std::to_string(M);
                    previous = tau;
                }
            }
        return std::string{};
    }));

    out.push_back(check("campaign output independent of thread count", [seed] {
        ScenarioConfig cfg;
        cfg.dims = {3, 4, 2};
        cfg.trials = 24;
        cfg.seed = seed;
        cfg.prior_trials = 1000;
        cfg.schemes = {Scheme::proposed_lmmse, Scheme::benchmark, Scheme::phase2_random};
        std::string reference;
        for (int threads : {1, 2, 3})
        {
            std::ostringstream csv;
            write_results_csv(csv, run_campaign(cfg, {threads, false}));
            if (threads == 1)
                reference = csv.str();
            else if (csv.str() != reference)
                return "threads=" + std::to_string(threads) + " differs";
        }
        return std::string{};
    }));

    return out;
}

} // namespace irsce

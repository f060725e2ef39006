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
#include "estimate.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "schedule.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace irsce
{

enum class Scheme
{
    proposed_noiseless,
    proposed_lmmse,
    benchmark,
    phase2_onoff,
    phase2_random,
};

inline constexpr Scheme kAllSchemes[] = {Scheme::proposed_noiseless, Scheme::proposed_lmmse, Scheme::benchmark,
                                         Scheme::phase2_onoff, Scheme::phase2_random};

inline std::string to_string(Scheme s)
{
    switch (s)
    {
    case Scheme::proposed_noiseless: return "proposed-noiseless";
    case Scheme::proposed_lmmse: return "proposed-lmmse";
    case Scheme::benchmark: return "benchmark";
    case Scheme::phase2_onoff: return "phase2-onoff";
    case Scheme::phase2_random: return "phase2-random";
    }
    return "unknown";
}

inline Scheme parse_scheme(std::string_view name)
{
    for (Scheme s : kAllSchemes)
        if (to_string(s) == name)
            return s;
    fail(ErrorKind::parse, "unknown scheme '" + std::string(name) + "'");
}

enum class CovarianceForm
{
    exact,
    single_power,
};

/// Prior covariance of the ratio sub-vector in each Phase III slot.
enum class RatioPrior
{
    trimmed,     // trimmed empirical second moment, shared by all trials
    conditional, // per trial: diag(beta_k^IU / |t_1n|^2) with |t_1n|^2 read off the typical-user estimate,
                 // plus the Phase II error carried into the slot through lambda
};

/// Knobs shared by every scheme of a scenario.
struct PipelineSetup
{
    std::uint64_t seed = 1;         // master seed for priors and random reflections
    int prior_trials = 10000;       // draws behind the channel and ratio priors
    double ratio_cap = 10.0;        // trimming factor of the ratio prior
    bool perfect_typical = false;   // feed the true g_1 into Phase III
    CovarianceForm phase3_form = CovarianceForm::exact;
    RatioPrior ratio_prior = RatioPrior::conditional;
};

struct TrialResult
{
    EstimateSet estimates;
    Predictions predictions;
};

/// Precomputed schedule, priors and noise covariances for one (scenario, scheme) pair.
/// Immutable once built; `run` may be called concurrently.
class Pipeline
{
public:
    Pipeline(const ChannelModel& model, const LinkBudget& budget, const PhasePlan& phases, Scheme scheme,
             const PipelineSetup& setup = {})
        : model_(model), budget_(budget), phases_(phases), scheme_(scheme), setup_(setup)
    {
        budget_.validate();
        const auto [K, N, M] = model_.dims();
        require(phases_.tau1 >= K, ErrorKind::infeasible_schedule, "tau1 must be >= K");
        require(phases_.tau2 >= N, ErrorKind::infeasible_schedule, "tau2 must be >= N");

        const Schedule s1 = phase1_schedule(model_.dims(), phases_.tau1);
        phi2_ = phase2_pattern();
        const Schedule s2 = phase2_schedule(model_.dims(), phi2_);
        const Schedule s3 = phase3_part();
        schedule_ = concat(concat(s1, s2), s3);
        phases_.tau3 = s3.slots();

        if (!noiseless())
            build_priors();
    }

    const Schedule& schedule() const { return schedule_; }
    const PhasePlan& phases() const { return phases_; }
    Scheme scheme() const { return scheme_; }
    bool noiseless() const { return scheme_ == Scheme::proposed_noiseless; }
    const CMatrix& phase2_reflections() const { return phi2_; }
    const std::optional<Phase3Plan>& exact_plan() const { return exact_plan_; }
    const std::optional<OrthogonalPlan>& orthogonal() const { return orthogonal_; }
    const std::vector<CMatrix>& reflected_grams() const { return grams_; }
    const std::vector<CMatrix>& ratio_priors() const { return ratio_priors_; }

    TrialResult run(const ChannelRealization& ch, std::uint64_t noise_seed) const
    {
        const ReceivedBlock all = simulate_received(ch, schedule_, budget_, !noiseless(), noise_seed);
        auto part = [&](int first, int count) { return ReceivedBlock{all.y.middleCols(first, count)}; };
        const ReceivedBlock y1 = part(0, phases_.tau1);
        const ReceivedBlock y2 = part(phases_.tau1, phases_.tau2);
        const ReceivedBlock y3 = part(phases_.tau1 + phases_.tau2, phases_.tau3);
        const Schedule s2 = slice(schedule_, phases_.tau1, phases_.tau2);
        const Schedule s3 = slice(schedule_, phases_.tau1 + phases_.tau2, phases_.tau3);
        const double p = budget_.p;

        TrialResult out;
        EstimateSet& est = out.estimates;
        const CMatrix a1 = schedule_.pilots.leftCols(phases_.tau1);

        if (noiseless())
        {
            est.h_hat = phase1_recover_noiseless(y1, a1, p);
            est.g1_hat = phase2_recover_noiseless(cancel_direct(y2, est.h_hat, s2.pilots, p), phi2_, p);
            est.lambda_hat = phase3_recover_noiseless(cancel_direct(y3, est.h_hat, s3.pilots, p), *exact_plan_,
                                                      est.g1_hat, p);
            return out;
        }

        const Phase1Estimate ph1 = phase1_mmse(y1, a1, p, budget_.sigma2, model_.losses().bu);
        est.h_hat = ph1.h_hat;
        for (double e : ph1.mse)
            out.predictions.phase1 += e;

        const LmmseResult ph2 = phase2_lmmse(cancel_direct(y2, est.h_hat, s2.pilots, p), phi2_, p, psi2_, grams_[0]);
        est.g1_hat = ph2.estimate;
        out.predictions.phase2 = ph2.mse;

        const ReceivedBlock y3bar = cancel_direct(y3, est.h_hat, s3.pilots, p);
        if (scheme_ == Scheme::benchmark)
            run_benchmark_phase3(y3bar, out);
        else
            run_orthogonal_phase3(y3bar, ch, out);
        return out;
    }

private:
    CMatrix phase2_pattern() const
    {
        const int N = model_.dims().N;
        switch (scheme_)
        {
        case Scheme::phase2_onoff: return phase2_reflections_onoff(N, phases_.tau2);
        case Scheme::phase2_random:
            return phase2_reflections_random(N, phases_.tau2, stream_seed(setup_.seed, 0, "phase2-random"));
        default: return phase2_reflections_dft(N, phases_.tau2, training_offset(N, phases_.tau2));
        }
    }

    Schedule phase3_part()
    {
        const SystemDims& dims = model_.dims();
        if (noiseless())
        {
            exact_plan_ = phase3_plan(dims);
            return schedule_from_plan(dims, *exact_plan_);
        }
        if (dims.K < 2)
            return Schedule::zeros(dims.K, dims.N, 0);
        if (scheme_ == Scheme::benchmark)
        {
            block_ = phases_.tau3 / (dims.K - 1);
            require(block_ >= 1, ErrorKind::infeasible_schedule, "benchmark: tau3 must be >= K-1");
            Schedule s = benchmark_phase3_schedule(dims, block_);
            if (s.slots() < phases_.tau3)
                s = concat(s, Schedule::zeros(dims.K, dims.N, phases_.tau3 - s.slots()));
            return s;
        }
        auto [s, plan] = phase3_schedule_orthogonal_noisy(dims, phases_.tau3);
        orthogonal_ = std::move(plan);
        return s;
    }

    void build_priors()
    {
        const auto [K, N, M] = model_.dims();
        const PathLoss& loss = model_.losses();
        grams_ = estimate_reflected_grams(model_, setup_.prior_trials, stream_seed(setup_.seed, 0, "reflected-gram"));
        psi2_ = phase2_noise_covariance(loss.bu[0], budget_.p, budget_.sigma2, phases_.tau1, M,
                                        CVector::Ones(phases_.tau2));
        phase2_error_ = phase2_lmmse(ReceivedBlock{CMatrix::Zero(M, phases_.tau2)}, phi2_, budget_.p, psi2_,
                                     grams_[0]).error;

        if (scheme_ == Scheme::benchmark)
        {
            if (K < 2)
                return;
            for (int k = 0; k < K; ++k)
                benchmark_psi_.push_back(phase2_noise_covariance(loss.bu[k], budget_.p, budget_.sigma2, phases_.tau1,
                                                                 M, CVector::Ones(block_)));
            benchmark_phi_ = benchmark_block_reflections(N, block_);
            return;
        }
        if (!orthogonal_)
            return;

        const OrthogonalPlan& plan = *orthogonal_;
        repeats_.assign(plan.cycle, 0);
        for (int i = 0; i < phases_.tau3; ++i)
            ++repeats_[plan.base_slot(i)];
        for (int b = 0; b < plan.cycle; ++b)
        {
            const int k = plan.user[b];
            if (setup_.ratio_prior == RatioPrior::trimmed)
                ratio_priors_.push_back(estimate_ratio_prior(model_, k, plan.active[b], setup_.prior_trials,
                                                             setup_.ratio_cap,
                                                             stream_seed(setup_.seed, static_cast<std::uint64_t>(b),
                                                                         "ratio-prior")));
            const CMatrix cb = model_.bs_user_correlation(k);
            phase3_psi_.push_back(setup_.phase3_form == CovarianceForm::exact
                                      ? phase3_noise_covariance(loss.bu[k], budget_.p, budget_.sigma2, phases_.tau1,
                                                                cb, repeats_[b])
                                      : phase3_noise_covariance_single_power(loss.bu[k], budget_.p, budget_.sigma2,
                                                                        phases_.tau1, cb, repeats_[b]));
        }
    }

    void run_orthogonal_phase3(const ReceivedBlock& y3bar, const ChannelRealization& ch, TrialResult& out) const
    {
        const auto [K, N, M] = model_.dims();
        EstimateSet& est = out.estimates;
        est.lambda_hat = CMatrix::Zero(std::max(K - 1, 0), N);
        if (!orthogonal_)
            return;
        const OrthogonalPlan& plan = *orthogonal_;
        const CMatrix& g1 = setup_.perfect_typical ? ch.reflected[0] : est.g1_hat;

        std::vector<CVector> averaged(plan.cycle, CVector::Zero(M));
        for (int i = 0; i < phases_.tau3; ++i)
            averaged[plan.base_slot(i)] += y3bar.y.col(i);
        for (int b = 0; b < plan.cycle; ++b)
        {
            averaged[b] /= static_cast<double>(repeats_[b]);
            const auto& active = plan.active[b];
            CMatrix g(M, static_cast<Eigen::Index>(active.size()));
            for (std::size_t a = 0; a < active.size(); ++a)
                g.col(a) = g1.col(active[a]);
            RatioEstimate r;
            if (setup_.ratio_prior == RatioPrior::conditional)
            {
                const RVector var = conditional_ratio_variance(plan.user[b], g);
                CMatrix psi = phase3_psi_[b];
                if (!setup_.perfect_typical)
                {
                    double leak = 0.0;
                    for (std::size_t a = 0; a < active.size(); ++a)
                        leak += var(a) * phase2_error_(active[a], active[a]).real() / M;
                    psi += budget_.p * leak * CMatrix::Identity(M, M);
                }
                r = phase3_lmmse(averaged[b], g, budget_.p, psi, var.cast<cdouble>().asDiagonal());
            }
            else
                r = phase3_lmmse(averaged[b], g, budget_.p, phase3_psi_[b], ratio_priors_[b]);
            for (std::size_t a = 0; a < active.size(); ++a)
                est.lambda_hat(plan.user[b] - 1, active[a]) = r.lambda_hat(a);
            out.predictions.phase3 += r.mse;
        }
    }

    /// E[|lambda_kn|^2 | t_1n] = beta_k^IU / |t_1n|^2, with |t_1n|^2 = |g_1n|^2 / E|r_n|^2.
    RVector conditional_ratio_variance(int user, const CMatrix& g) const
    {
        const double column_power = model_.dims().M * model_.irs_to_bs_variance();
        RVector var(g.cols());
        for (Eigen::Index a = 0; a < g.cols(); ++a)
        {
            const double t1 = g.col(a).squaredNorm() / column_power;
            require(t1 > 0.0, ErrorKind::conditioning, "conditional ratio prior: zero typical-user column");
            var(a) = model_.losses().iu[user] / t1;
        }
        return var;
    }

    void run_benchmark_phase3(const ReceivedBlock& y3bar, TrialResult& out) const
    {
        const auto [K, N, M] = model_.dims();
        EstimateSet& est = out.estimates;
        est.lambda_hat = CMatrix::Zero(K - 1, N);
        est.reflected_direct.push_back(est.g1_hat);
        for (int k = 1; k < K; ++k)
        {
            const ReceivedBlock block{y3bar.y.middleCols((k - 1) * block_, block_)};
            const LmmseResult gk = phase2_lmmse(block, benchmark_phi_, budget_.p, benchmark_psi_[k], grams_[k]);
            for (int n = 0; n < N; ++n)
            {
                const double power = est.g1_hat.col(n).squaredNorm();
                if (power > 0.0)
                    est.lambda_hat(k - 1, n) = est.g1_hat.col(n).dot(gk.estimate.col(n)) / power;
            }
            est.reflected_direct.push_back(gk.estimate);
        }
    }

    ChannelModel model_;
    LinkBudget budget_;
    PhasePlan phases_;
    Scheme scheme_;
    PipelineSetup setup_;

    Schedule schedule_;
    CMatrix phi2_;
    std::optional<Phase3Plan> exact_plan_;
    std::optional<OrthogonalPlan> orthogonal_;
    int block_ = 0;

    std::vector<CMatrix> grams_;
    CMatrix psi2_;
    CMatrix phase2_error_;
    std::vector<int> repeats_;
    std::vector<CMatrix> ratio_priors_;
    std::vector<CMatrix> phase3_psi_;
    std::vector<CMatrix> benchmark_psi_;
    CMatrix benchmark_phi_;
};

} // namespace irsce

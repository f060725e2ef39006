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
#include "model.hpp"
#include "schedule.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace irsce
{

/// Neumaier-compensated running sum.
class CompensatedSum
{
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Ratio of pooled sums sum(num) / sum(den) with a delta-method 95% half-width.
class PooledRatio
{
public:
    void add(double num, double den)
    {
        num_.add(num);
        den_.add(den);
        nn_.add(num * num);
        dd_.add(den * den);
        nd_.add(num * den);
        ++count_;
    }

    long count() const { return count_; }
    double numerator() const { return num_.value(); }
    double denominator() const { return den_.value(); }

    double value() const
    {
        require(den_.value() > 0.0, ErrorKind::undefined_metric, "normalized MSE: channel power sums to zero");
        return num_.value() / den_.value();
    }

    /// Normal-approximation half-width; 0 for fewer than two samples.
    double half_width95() const
    {
        if (count_ < 2)
            return 0.0;
        const double n = static_cast<double>(count_);
        const double mx = num_.value() / n, my = den_.value() / n;
        const double vxx = (nn_.value() - n * mx * mx) / (n - 1.0);
        const double vyy = (dd_.value() - n * my * my) / (n - 1.0);
        const double vxy = (nd_.value() - n * mx * my) / (n - 1.0);
        const double r = mx / my;
        const double var = std::max(0.0, vxx - 2.0 * r * vxy + r * r * vyy) / (n * my * my);
        return 1.96 * std::sqrt(var);
    }

private:
    CompensatedSum num_, den_, nn_, dd_, nd_;
    long count_ = 0;
};

/// Squared errors and channel powers of one trial, per phase.
struct TrialErrors
{
    double direct_error = 0.0, direct_power = 0.0;       // sum_k |h_hat - h|^2, |h|^2
    double typical_error = 0.0, typical_power = 0.0;     // sum_n |g1_hat - g1|^2, |g1|^2
    double ratio_error = 0.0, ratio_power = 0.0;         // sum_{k,n} |lambda_hat - lambda|^2, |lambda|^2
    double reflected_error = 0.0, reflected_power = 0.0; // sum_{k,n} |g_hat - g|^2, |g|^2
};

inline TrialErrors score(const EstimateSet& est, const ChannelRealization& ch)
{
    require(est.h_hat.rows() == ch.direct.rows() && est.h_hat.cols() == ch.direct.cols() &&
                est.g1_hat.rows() == ch.irs_to_bs.rows() && est.g1_hat.cols() == ch.irs_to_bs.cols() &&
                est.lambda_hat.rows() == ch.lambda.rows() && est.lambda_hat.cols() == ch.lambda.cols(),
            ErrorKind::dimension_mismatch, "score: estimate dimensions differ from channel dimensions");
    TrialErrors e;
    e.direct_error = (est.h_hat - ch.direct).squaredNorm();
    e.direct_power = ch.direct.squaredNorm();
    e.typical_error = (est.g1_hat - ch.reflected[0]).squaredNorm();
    e.typical_power = ch.reflected[0].squaredNorm();
    e.ratio_error = (est.lambda_hat - ch.lambda).squaredNorm();
    e.ratio_power = ch.lambda.squaredNorm();
    for (int k = 0; k < ch.users(); ++k)
    {
        e.reflected_error += (est.reflected(k) - ch.reflected[k]).squaredNorm();
        e.reflected_power += ch.reflected[k].squaredNorm();
    }
    return e;
}

/// Pooled sum_n |g1_hat - g1|^2 / sum_n |g1|^2 over trials.
inline double normalized_mse_phase2(std::span<const CMatrix> estimates, std::span<const CMatrix> truths)
{
    require(estimates.size() == truths.size(), ErrorKind::dimension_mismatch, "normalized_mse_phase2: trial counts differ");
    PooledRatio r;
    for (std::size_t t = 0; t < truths.size(); ++t)
    {
        require(estimates[t].rows() == truths[t].rows() && estimates[t].cols() == truths[t].cols(),
                ErrorKind::dimension_mismatch, "normalized_mse_phase2: shape mismatch");
        r.add((estimates[t] - truths[t]).squaredNorm(), truths[t].squaredNorm());
    }
    return r.value();
}

/// Pooled sum_{k,n} |lambda_hat - lambda|^2 / sum_{k,n} |lambda|^2 over trials.
inline double normalized_mse_phase3(std::span<const CMatrix> estimates, std::span<const CMatrix> truths)
{
    require(estimates.size() == truths.size(), ErrorKind::dimension_mismatch, "normalized_mse_phase3: trial counts differ");
    PooledRatio r;
    for (std::size_t t = 0; t < truths.size(); ++t)
    {
        require(estimates[t].rows() == truths[t].rows() && estimates[t].cols() == truths[t].cols(),
                ErrorKind::dimension_mismatch, "normalized_mse_phase3: shape mismatch");
        r.add((estimates[t] - truths[t]).squaredNorm(), truths[t].squaredNorm());
    }
    return r.value();
}

/// Pooled direct plus reflected error over direct plus reflected power.
inline double normalized_mse_total(std::span<const EstimateSet> estimates, std::span<const ChannelRealization> truths)
{
    require(estimates.size() == truths.size(), ErrorKind::dimension_mismatch, "normalized_mse_total: trial counts differ");
    PooledRatio r;
    for (std::size_t t = 0; t < truths.size(); ++t)
    {
        const TrialErrors e = score(estimates[t], truths[t]);
        r.add(e.direct_error + e.reflected_error, e.direct_power + e.reflected_power);
    }
    return r.value();
}

struct MetricValue
{
    double value = 0.0;
    double half_width = 0.0;
};

/// Aggregated normalized errors and closed-form predictions for one scheme.
struct MseReport
{
    long trials = 0;
    MetricValue e2, e3, total;
    // mean absolute squared errors next to their closed-form predictions
    double phase1_error = 0.0, phase1_predicted = 0.0;
    double phase2_error = 0.0, phase2_predicted = 0.0;
    double phase3_error = 0.0, phase3_predicted = 0.0;
};

/// Closed-form per-trial predictions, filled by the estimation pipeline.
struct Predictions
{
    double phase1 = 0.0; // sum_k eps_k^I
    double phase2 = 0.0; // eps^II
    double phase3 = 0.0; // sum of Phase III conditional traces
};

/// Ordered accumulator behind MseReport.
class MseAccumulator
{
public:
    void add(const TrialErrors& e, const Predictions& pred)
    {
        e2_.add(e.typical_error, e.typical_power);
        e3_.add(e.ratio_error, e.ratio_power);
        total_.add(e.direct_error + e.reflected_error, e.direct_power + e.reflected_power);
        p1_err_.add(e.direct_error);
        p2_err_.add(e.typical_error);
        p3_err_.add(e.ratio_error);
        p1_pred_.add(pred.phase1);
        p2_pred_.add(pred.phase2);
        p3_pred_.add(pred.phase3);
    }

    MseReport report() const
    {
        MseReport r;
        r.trials = e2_.count();
        const double n = static_cast<double>(std::max<long>(r.trials, 1));
        auto metric = [](const PooledRatio& p) {
            return p.denominator() > 0.0 ? MetricValue{p.value(), p.half_width95()} : MetricValue{0.0, 0.0};
        };
        r.e2 = metric(e2_);
        r.e3 = metric(e3_);
        r.total = metric(total_);
        r.phase1_error = p1_err_.value() / n;
        r.phase2_error = p2_err_.value() / n;
        r.phase3_error = p3_err_.value() / n;
        r.phase1_predicted = p1_pred_.value() / n;
        r.phase2_predicted = p2_pred_.value() / n;
        r.phase3_predicted = p3_pred_.value() / n;
        return r;
    }

private:
    PooledRatio e2_, e3_, total_;
    CompensatedSum p1_err_, p2_err_, p3_err_, p1_pred_, p2_pred_, p3_pred_;
};

struct PilotLengthRow
{
    int K = 0;
    int M = 0;
    int N = 0;
    int proposed = 0;
    int benchmark = 0;
};

/// Minimum proposed and benchmark training lengths over a (K, M) grid at fixed N.
inline std::vector<PilotLengthRow> pilot_length_table(int elements, std::span<const int> users, std::span<const int> antennas)
{
    std::vector<PilotLengthRow> rows;
    for (int m : antennas)
        for (int k : users)
        {
            const SystemDims dims{k, elements, m};
            rows.push_back({k, m, elements, min_total_pilots(dims), benchmark_total_pilots(dims)});
        }
    return rows;
}

} // namespace irsce

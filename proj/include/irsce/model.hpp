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
#include "rng.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace irsce
{

/// K single-antenna users, N IRS elements, M BS antennas.
struct SystemDims
{
    int K = 1;
    int N = 1;
    int M = 1;

    void validate() const
    {
        require(K >= 1, ErrorKind::constraint, "K must be >= 1");
        require(N >= 1, ErrorKind::constraint, "N must be >= 1");
        require(M >= 1, ErrorKind::constraint, "M must be >= 1");
    }

    friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

/// Generating scalars of the exponential correlation matrices.
/// Per-user lists may hold a single value, which then applies to every user.
struct CorrelationSpec
{
    std::vector<cdouble> bs_user{cdouble{0.0}};  // C_k^B, receive correlation of h_k
    cdouble bs{0.0};                             // C^B, BS side of R
    cdouble irs{0.0};                            // C^I, IRS side of R
    std::vector<cdouble> irs_user{cdouble{0.0}}; // C_k^I, IRS receive correlation of t_k

    static CorrelationSpec uniform(cdouble c)
    {
        return CorrelationSpec{{c}, c, c, {c}};
    }

    cdouble bs_for(int k) const { return bs_user.size() == 1 ? bs_user.front() : bs_user.at(k); }
    cdouble irs_for(int k) const { return irs_user.size() == 1 ? irs_user.front() : irs_user.at(k); }

    void validate(int users) const
    {
        auto check_list = [&](const std::vector<cdouble>& list, const char* name) {
            require(list.size() == 1 || static_cast<int>(list.size()) == users, ErrorKind::constraint,
                    std::string(name) + " must hold 1 or K values");
            for (const auto& c : list)
                require(std::abs(c) < 1.0, ErrorKind::invalid_correlation, std::string(name) + ": |c| must be < 1");
        };
        check_list(bs_user, "bs_user correlation");
        check_list(irs_user, "irs_user correlation");
        require(std::abs(bs) < 1.0, ErrorKind::invalid_correlation, "bs correlation: |c| must be < 1");
        require(std::abs(irs) < 1.0, ErrorKind::invalid_correlation, "irs correlation: |c| must be < 1");
    }
};

/// Distance-based path-loss geometry: beta = beta0 * (d / d0)^(-alpha).
struct PathLossSpec
{
    double beta0_db = -20.0;
    double d0 = 1.0;
    std::vector<double> d_bu; // BS - user k
    std::vector<double> d_iu; // IRS - user k
    double d_bi = 100.0;      // BS - IRS
    double alpha1 = 4.2;      // h_k
    double alpha2 = 2.1;      // t_k
    double alpha3 = 2.2;      // R

    /// Every user at the same pair of distances.
    static PathLossSpec uniform(int users, double d_bu, double d_iu, double d_bi = 100.0)
    {
        PathLossSpec spec;
        spec.d_bu.assign(users, d_bu);
        spec.d_iu.assign(users, d_iu);
        spec.d_bi = d_bi;
        return spec;
    }
};

/// Linear-scale path losses.
struct PathLoss
{
    std::vector<double> bu; // beta_k^BU
    std::vector<double> iu; // beta_k^IU
    double bi = 0.0;        // beta^BI
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline PathLoss path_loss(const PathLossSpec& spec)
{
    require(spec.d0 > 0.0, ErrorKind::invalid_geometry, "reference distance must be > 0");
    require(spec.d_bu.size() == spec.d_iu.size(), ErrorKind::invalid_geometry, "d_bu and d_iu sizes differ");
    require(spec.alpha1 > 0.0 && spec.alpha2 > 0.0 && spec.alpha3 > 0.0, ErrorKind::invalid_geometry,
            "path-loss exponents must be > 0");

    const double beta0 = db_to_linear(spec.beta0_db);
    auto loss = [&](double d, double alpha) {
        require(d > 0.0, ErrorKind::invalid_geometry, "distance must be > 0");
        return beta0 * std::pow(d / spec.d0, -alpha);
    };

    PathLoss out;
    for (double d : spec.d_bu)
        out.bu.push_back(loss(d, spec.alpha1));
    for (double d : spec.d_iu)
        out.iu.push_back(loss(d, spec.alpha2));
    out.bi = loss(spec.d_bi, spec.alpha3);
    return out;
}

/// Transmit power and per-antenna noise power, both in watts.
struct LinkBudget
{
    double p = 1.0;
    double sigma2 = 1.0;

    static LinkBudget from_dbm(double power_dbm, double bandwidth_hz, double noise_psd_dbm_hz)
    {
        require(bandwidth_hz > 0.0, ErrorKind::constraint, "bandwidth must be > 0");
        LinkBudget b;
        b.p = db_to_linear(power_dbm - 30.0);
        b.sigma2 = db_to_linear(noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) - 30.0);
        return b;
    }

    void validate() const
    {
        require(p > 0.0, ErrorKind::constraint, "transmit power must be > 0");
        require(sigma2 > 0.0, ErrorKind::constraint, "noise power must be > 0");
    }
};

/// [C]_{ij} = c^(i-j) for i >= j, conj([C]_{ji}) otherwise.
inline CMatrix exp_correlation_matrix(cdouble c, int n)
{
    require(std::abs(c) < 1.0, ErrorKind::invalid_correlation, "exp_correlation_matrix: |c| must be < 1");
    require(n >= 1, ErrorKind::invalid_argument, "exp_correlation_matrix: n must be >= 1");
    CMatrix out(n, n);
    for (int i = 0; i < n; ++i)
    {
        cdouble power{1.0, 0.0};
        for (int j = i; j >= 0; --j)
        {
            out(i, j) = power;
            out(j, i) = std::conj(power);
            power *= c;
        }
    }
    return out;
}

/// One draw of every physical channel plus the derived reflected channels and ratios.
struct ChannelRealization
{
    CMatrix direct;                 // M x K, column k = h_k
    CMatrix irs_to_bs;              // M x N, column n = r_n
    CMatrix user_to_irs;            // N x K, column k = t_k
    std::vector<CMatrix> reflected; // K entries of M x N, column n = g_{k,n} = t_{k,n} r_n
    CMatrix lambda;                 // (K-1) x N, row k-1 = t_{k,.} / t_{1,.} for k >= 2 (0-based k >= 1)

    int users() const { return static_cast<int>(direct.cols()); }
    int elements() const { return static_cast<int>(irs_to_bs.cols()); }
    int antennas() const { return static_cast<int>(direct.rows()); }

    auto h(int k) const { return direct.col(k); }
    auto g(int k, int n) const { return reflected[k].col(n); }
    /// Ratio for 0-based user k >= 1.
    cdouble ratio(int k, int n) const { return lambda(k - 1, n); }
};

/// Builds g and lambda from the physical channels.
inline ChannelRealization assemble_channels(CMatrix direct, CMatrix irs_to_bs, CMatrix user_to_irs)
{
    require(direct.rows() == irs_to_bs.rows(), ErrorKind::dimension_mismatch, "assemble_channels: M mismatch");
    require(irs_to_bs.cols() == user_to_irs.rows(), ErrorKind::dimension_mismatch, "assemble_channels: N mismatch");
    require(direct.cols() == user_to_irs.cols(), ErrorKind::dimension_mismatch, "assemble_channels: K mismatch");

    ChannelRealization out;
    out.direct = std::move(direct);
    out.irs_to_bs = std::move(irs_to_bs);
    out.user_to_irs = std::move(user_to_irs);

    const auto K = out.user_to_irs.cols();
    const auto N = out.user_to_irs.rows();
    out.reflected.reserve(K);
    for (Eigen::Index k = 0; k < K; ++k)
        out.reflected.push_back(out.irs_to_bs * out.user_to_irs.col(k).asDiagonal());

    out.lambda.resize(std::max<Eigen::Index>(K - 1, 0), N);
    for (Eigen::Index k = 1; k < K; ++k)
        for (Eigen::Index n = 0; n < N; ++n)
            out.lambda(k - 1, n) = out.user_to_irs(n, k) / out.user_to_irs(n, 0);
    return out;
}

struct ModelOptions
{
    /// Scale Var(R~) by N as in the statistical model; off only for sensitivity studies.
    bool irs_size_factor = true;
};

/// Statistical channel model with the correlation square roots precomputed.
/// Immutable after construction; `draw` is a pure function of the seed.
class ChannelModel
{
public:
    ChannelModel(SystemDims dims, const CorrelationSpec& corr, const PathLossSpec& loss, ModelOptions options = {})
        : dims_(dims), loss_(path_loss(loss)), options_(options)
    {
        dims_.validate();
        corr.validate(dims_.K);
        require(static_cast<int>(loss_.bu.size()) == dims_.K, ErrorKind::invalid_geometry,
                "path-loss spec must list one distance per user");

        for (int k = 0; k < dims_.K; ++k)
        {
            bs_user_sqrt_.push_back(hermitian_sqrt(exp_correlation_matrix(corr.bs_for(k), dims_.M)));
            irs_user_sqrt_.push_back(hermitian_sqrt(exp_correlation_matrix(corr.irs_for(k), dims_.N)));
        }
        bs_sqrt_ = hermitian_sqrt(exp_correlation_matrix(corr.bs, dims_.M));
        irs_sqrt_ = hermitian_sqrt(exp_correlation_matrix(corr.irs, dims_.N));
    }

    const SystemDims& dims() const { return dims_; }
    const PathLoss& losses() const { return loss_; }
    const ModelOptions& options() const { return options_; }

    /// Square root of C_k^B (needed by the Phase III noise covariance as C_k^B = S S).
    const CMatrix& bs_user_sqrt(int k) const { return bs_user_sqrt_.at(k); }
    CMatrix bs_user_correlation(int k) const { return bs_user_sqrt_.at(k) * bs_user_sqrt_.at(k); }

    /// Variance of each entry of R~.
    double irs_to_bs_variance() const
    {
        return loss_.bi * (options_.irs_size_factor ? static_cast<double>(dims_.N) : 1.0);
    }

    /// Draw order: h~_1..h~_K, then R~ (column-major), then t~_1..t~_K.
    ChannelRealization draw(Rng& rng) const
    {
        const auto [K, N, M] = dims_;
        CMatrix direct(M, K);
        for (int k = 0; k < K; ++k)
            direct.col(k) = bs_user_sqrt_[k] * rng.complex_normal(M, 1, loss_.bu[k]);

        CMatrix r = bs_sqrt_ * rng.complex_normal(M, N, irs_to_bs_variance()) * irs_sqrt_;

        CMatrix t(N, K);
        for (int k = 0; k < K; ++k)
            t.col(k) = irs_user_sqrt_[k] * rng.complex_normal(N, 1, loss_.iu[k]);

        return assemble_channels(std::move(direct), std::move(r), std::move(t));
    }

    ChannelRealization draw(std::uint64_t seed) const
    {
        Rng rng(seed);
        return draw(rng);
    }

    /// Only t_1..t_K, from an independent stream (used for the ratio prior).
    CMatrix draw_user_to_irs(Rng& rng) const
    {
        CMatrix t(dims_.N, dims_.K);
        for (int k = 0; k < dims_.K; ++k)
            t.col(k) = irs_user_sqrt_[k] * rng.complex_normal(dims_.N, 1, loss_.iu[k]);
        return t;
    }

private:
    SystemDims dims_;
    PathLoss loss_;
    ModelOptions options_;
    std::vector<CMatrix> bs_user_sqrt_;
    std::vector<CMatrix> irs_user_sqrt_;
    CMatrix bs_sqrt_;
    CMatrix irs_sqrt_;
};

inline ChannelRealization draw_channels(const SystemDims& dims, const CorrelationSpec& corr, const PathLossSpec& loss,
                                        std::uint64_t seed, ModelOptions options = {})
{
    return ChannelModel(dims, corr, loss, options).draw(seed);
}

} // namespace irsce

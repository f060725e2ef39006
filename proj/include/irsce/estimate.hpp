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
#include "rng.hpp"
#include "schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace irsce
{

/// Received pilot signals, one column y^(i) per slot (M x tau).
struct ReceivedBlock
{
    CMatrix y;

    int slots() const { return static_cast<int>(y.cols()); }
    int antennas() const { return static_cast<int>(y.rows()); }
};

/// Channel estimates. Reflected channels of users k >= 1 (0-based) are lambda_hat(k-1, n) * g1_hat.col(n)
/// unless a scheme estimated them directly, in which case `reflected_direct` holds all K of them.
struct EstimateSet
{
    CMatrix h_hat;      // M x K
    CMatrix g1_hat;     // M x N
    CMatrix lambda_hat; // (K-1) x N
    std::vector<CMatrix> reflected_direct;

    CMatrix reflected(int k) const
    {
        if (!reflected_direct.empty())
            return reflected_direct.at(k);
        if (k == 0)
            return g1_hat;
        return g1_hat * lambda_hat.row(k - 1).transpose().asDiagonal();
    }
};

/// y^(i) = sum_k (h_k + sum_n phi_{n,i} g_{k,n}) sqrt(p) a_{k,i} + z^(i), z ~ CN(0, sigma2 I).
inline ReceivedBlock simulate_received(const ChannelRealization& ch, const Schedule& s, const LinkBudget& budget,
                                       bool noise_on, std::uint64_t seed)
{
    require(s.users() == ch.users() && s.elements() == ch.elements() &&
                s.pilots.cols() == s.reflections.cols(),
            ErrorKind::dimension_mismatch, "simulate_received: schedule does not match channel dimensions");
    const double sp = std::sqrt(budget.p);
    const int M = ch.antennas();
    const int tau = s.slots();

    CMatrix y = CMatrix::Zero(M, tau);
    for (int k = 0; k < ch.users(); ++k)
    {
        // effective channel of user k per slot: h_k 1^T + G_k Phi
        CMatrix eff = ch.reflected[k] * s.reflections;
        eff.colwise() += ch.direct.col(k);
        y += sp * eff * s.pilots.row(k).transpose().asDiagonal();
    }
    if (noise_on)
    {
        Rng rng(seed);
        y += rng.complex_normal(M, tau, budget.sigma2);
    }
    return {std::move(y)};
}

/// Gram A A^H of a pilot matrix equals tau I within a relative tolerance.
inline bool has_orthogonal_rows(const CMatrix& a, double tol = 1e-9)
{
    const double tau = static_cast<double>(a.cols());
    const CMatrix gram = a * a.adjoint();
    return (gram - tau * CMatrix::Identity(a.rows(), a.rows())).cwiseAbs().maxCoeff() <= tol * std::max(1.0, tau);
}

/// Exact direct-channel recovery from orthogonal pilots: H = Y A^* / (tau1 sqrt(p)).
inline CMatrix phase1_recover_noiseless(const ReceivedBlock& block, const CMatrix& pilots, double p)
{
    require(block.slots() == pilots.cols(), ErrorKind::dimension_mismatch,
            "phase1_recover_noiseless: pilot length differs from block length");
    require(has_orthogonal_rows(pilots), ErrorKind::precondition,
            "phase1_recover_noiseless: pilots are not orthogonal (A A^H != tau1 I)");
    const double tau1 = static_cast<double>(pilots.cols());
    return block.y * pilots.adjoint() / (tau1 * std::sqrt(p));
}

/// Closed-form Phase I error M beta sigma2 / (beta p tau1 + sigma2).
inline double phase1_mse(double beta, double p, double sigma2, int tau1, int antennas)
{
    return antennas * beta * sigma2 / (beta * p * tau1 + sigma2);
}

struct Phase1Estimate
{
    CMatrix h_hat;           // M x K
    std::vector<double> mse; // closed-form, per user
};

/// Scalar-gain MMSE form h_k = beta sqrt(p) / (beta p tau1 + sigma2) Y a_k^*.
/// It is the exact MMSE estimator only for uncorrelated h_k; with C_k^B != I it is the same
/// linear estimator and its closed-form error still holds because tr(C_k^B) = M.
inline Phase1Estimate phase1_mmse(const ReceivedBlock& block, const CMatrix& pilots, double p, double sigma2,
                                  std::span<const double> beta)
{
    require(block.slots() == pilots.cols(), ErrorKind::dimension_mismatch,
            "phase1_mmse: pilot length differs from block length");
    require(static_cast<Eigen::Index>(beta.size()) == pilots.rows(), ErrorKind::dimension_mismatch,
            "phase1_mmse: need one path loss per user");
    require(has_orthogonal_rows(pilots), ErrorKind::precondition, "phase1_mmse: pilots are not orthogonal");

    const int tau1 = static_cast<int>(pilots.cols());
    Phase1Estimate out;
    out.h_hat = block.y * pilots.adjoint();
    for (Eigen::Index k = 0; k < pilots.rows(); ++k)
    {
        const double b = beta[k];
        out.h_hat.col(k) *= b * std::sqrt(p) / (b * p * tau1 + sigma2);
        out.mse.push_back(phase1_mse(b, p, sigma2, tau1, block.antennas()));
    }
    return out;
}

/// Subtracts sqrt(p) h_hat_k a_{k,i} from every slot. Users past h_hat.cols() must be silent.
inline ReceivedBlock cancel_direct(const ReceivedBlock& block, const CMatrix& h_hat, const CMatrix& pilots, double p)
{
    require(block.slots() == pilots.cols(), ErrorKind::dimension_mismatch,
            "cancel_direct: pilot length differs from block length");
    for (Eigen::Index k = h_hat.cols(); k < pilots.rows(); ++k)
        require(pilots.row(k).cwiseAbs().maxCoeff() == 0.0, ErrorKind::precondition,
                "cancel_direct: no direct-channel estimate for transmitting user " + std::to_string(k + 1));
    if (h_hat.cols() > 0)
        require(h_hat.rows() == block.antennas(), ErrorKind::dimension_mismatch, "cancel_direct: antenna mismatch");

    ReceivedBlock out = block;
    const Eigen::Index used = std::min<Eigen::Index>(h_hat.cols(), pilots.rows());
    if (used > 0)
        out.y -= std::sqrt(p) * h_hat.leftCols(used) * pilots.topRows(used);
    return out;
}

/// Exact recovery of the typical user's reflected channels: G = Ybar Phi^H (Phi Phi^H)^{-1} / sqrt(p),
/// which is Ybar Phi^H / (tau2 sqrt(p)) for DFT patterns. Assumes the typical user sends all ones.
inline CMatrix phase2_recover_noiseless(const ReceivedBlock& block, const CMatrix& phi, double p)
{
    require(block.slots() == phi.cols(), ErrorKind::dimension_mismatch,
            "phase2_recover_noiseless: reflection length differs from block length");
    require(numerical_rank(phi) == phi.rows(), ErrorKind::precondition,
            "phase2_recover_noiseless: reflection matrix is rank deficient");
    const CMatrix gram = phi * phi.adjoint();
    auto llt = hpd_factor(gram, "phase2_recover_noiseless");
    const CMatrix rhs = (block.y * phi.adjoint()).adjoint(); // N x M
    return llt.solve(rhs).adjoint() / std::sqrt(p);
}

/// E[Zbar^H Zbar] for Phase II: p eps_1 a^* a^T + M sigma2 I, with eps_1 the Phase I error of the typical user.
inline CMatrix phase2_noise_covariance(double beta1, double p, double sigma2, int tau1, int antennas,
                                       const CVector& pilot)
{
    const double eps = phase1_mse(beta1, p, sigma2, tau1, antennas);
    const auto tau2 = pilot.size();
    CMatrix psi = p * eps * pilot.conjugate() * pilot.transpose();
    psi += antennas * sigma2 * CMatrix::Identity(tau2, tau2);
    return psi;
}

struct LmmseResult
{
    CMatrix estimate;
    CMatrix error;    // N x N error covariance summed over antennas
    double mse = 0.0; // closed-form trace
};

/// G_hat = sqrt(p) Ybar Psi^{-1} Phi^H (p Phi Psi^{-1} Phi^H + C^{-1})^{-1},
/// mse = tr((p Phi Psi^{-1} Phi^H + C^{-1})^{-1}).
inline LmmseResult phase2_lmmse(const ReceivedBlock& block, const CMatrix& phi, double p, const CMatrix& psi,
                                const CMatrix& gram_prior)
{
    require(block.slots() == phi.cols() && psi.rows() == phi.cols() && psi.cols() == phi.cols(),
            ErrorKind::dimension_mismatch, "phase2_lmmse: Psi must be tau2 x tau2");
    require(gram_prior.rows() == phi.rows() && gram_prior.cols() == phi.rows(), ErrorKind::dimension_mismatch,
            "phase2_lmmse: prior must be N x N");

    auto psi_llt = hpd_factor(psi, "phase2_lmmse: noise covariance");
    const CMatrix psi_inv_phi_h = psi_llt.solve(CMatrix(phi.adjoint())); // tau2 x N
    CMatrix inner = p * phi * psi_inv_phi_h + hpd_inverse(gram_prior, "phase2_lmmse: channel prior");
    const CMatrix inner_inv = hpd_inverse(inner, "phase2_lmmse: inner matrix");

    LmmseResult out;
    out.estimate = std::sqrt(p) * block.y * psi_inv_phi_h * inner_inv;
    out.error = inner_inv;
    out.mse = inner_inv.trace().real();
    return out;
}

/// Exact noiseless recovery of every ratio lambda_{k,n}, following the plan's slot order and
/// cancelling ratios recovered in earlier slots. Returns (K-1) x N, row k-1 for user k.
inline CMatrix phase3_recover_noiseless(const ReceivedBlock& block, const Phase3Plan& plan, const CMatrix& g1,
                                        double p)
{
    require(block.slots() == static_cast<int>(plan.slots.size()), ErrorKind::dimension_mismatch,
            "phase3_recover_noiseless: block length differs from plan length");
    const auto N = g1.cols();
    const auto users = static_cast<Eigen::Index>(plan.lambda1.size());
    CMatrix lambda = CMatrix::Zero(std::max<Eigen::Index>(users - 1, 0), N);
    std::vector<std::vector<bool>> known(users, std::vector<bool>(N, false));
    const double sp = std::sqrt(p);

    for (int i = 0; i < block.slots(); ++i)
    {
        const Phase3Slot& slot = plan.slots[i];
        std::set<std::pair<int, int>> unknown(slot.unknowns.begin(), slot.unknowns.end());
        CVector residual = block.y.col(i);
        for (int k : slot.users)
            for (int n : slot.elements)
            {
                if (known[k][n])
                    residual -= sp * lambda(k - 1, n) * g1.col(n);
                else if (!unknown.contains({k, n}))
                    fail(ErrorKind::precondition, "phase3_recover_noiseless: slot " + std::to_string(i + 1) +
                                                      " references an unrecovered ratio");
            }

        CMatrix basis(g1.rows(), static_cast<Eigen::Index>(slot.unknowns.size()));
        for (std::size_t u = 0; u < slot.unknowns.size(); ++u)
            basis.col(u) = g1.col(slot.unknowns[u].second);
        const CVector solved = pseudo_inverse(basis, basis.cols()) * residual / sp;
        for (std::size_t u = 0; u < slot.unknowns.size(); ++u)
        {
            const auto [k, n] = slot.unknowns[u];
            lambda(k - 1, n) = solved(u);
            known[k][n] = true;
        }
    }
    return lambda;
}

/// E[z~ z~^H] for a Phase III slot whose user k has Phase I error covariance
///   beta sigma^4 / D^2 C_k^B + beta^2 p tau1 sigma2 / D^2 I,  D = beta p tau1 + sigma2,
/// giving p * that + sigma2 / repeats I when `repeats` observations of the slot are averaged.
inline CMatrix phase3_noise_covariance(double beta, double p, double sigma2, int tau1, const CMatrix& bs_correlation,
                                       int repeats = 1)
{
    require(repeats >= 1, ErrorKind::invalid_argument, "phase3_noise_covariance: repeats must be >= 1");
    const double d = beta * p * tau1 + sigma2;
    const auto M = bs_correlation.rows();
    CMatrix psi = (beta * p * sigma2 * sigma2 / (d * d)) * bs_correlation;
    psi += (beta * beta * p * p * tau1 * sigma2 / (d * d) + sigma2 / repeats) * CMatrix::Identity(M, M);
    return psi;
}

/// Variant dividing the first two terms by D instead of D^2. Kept for comparison only; it
/// drops the Phase I leakage term to almost nothing at realistic noise levels.
inline CMatrix phase3_noise_covariance_single_power(double beta, double p, double sigma2, int tau1,
                                               const CMatrix& bs_correlation, int repeats = 1)
{
    require(repeats >= 1, ErrorKind::invalid_argument, "phase3_noise_covariance_single_power: repeats must be >= 1");
    const double d = beta * p * tau1 + sigma2;
    const auto M = bs_correlation.rows();
    CMatrix psi = (beta * p * sigma2 * sigma2 / d) * bs_correlation;
    psi += ((beta * p) * (beta * p) * tau1 * sigma2 / d + sigma2 / repeats) * CMatrix::Identity(M, M);
    return psi;
}

struct RatioEstimate
{
    CVector lambda_hat;
    double mse = 0.0; // conditional on G, closed-form trace
};

/// lambda_hat = sqrt(p) (p G^H Psi^{-1} G + C^{-1})^{-1} G^H Psi^{-1} y,
/// mse = tr((p G^H Psi^{-1} G + C^{-1})^{-1}).
inline RatioEstimate phase3_lmmse(const CVector& y, const CMatrix& g, double p, const CMatrix& psi,
                                  const CMatrix& prior)
{
    require(y.size() == g.rows() && psi.rows() == g.rows() && psi.cols() == g.rows(), ErrorKind::dimension_mismatch,
            "phase3_lmmse: Psi must be M x M");
    require(prior.rows() == g.cols() && prior.cols() == g.cols(), ErrorKind::dimension_mismatch,
            "phase3_lmmse: prior must match the active element count");

    auto psi_llt = hpd_factor(psi, "phase3_lmmse: noise covariance");
    const CMatrix psi_inv_g = psi_llt.solve(g);
    CMatrix inner = p * g.adjoint() * psi_inv_g + hpd_inverse(prior, "phase3_lmmse: ratio prior");
    auto inner_llt = hpd_factor(inner, "phase3_lmmse: inner matrix");

    RatioEstimate out;
    out.lambda_hat = std::sqrt(p) * inner_llt.solve(CVector(psi_inv_g.adjoint() * y));
    out.mse = inner_llt.solve(CMatrix::Identity(inner.rows(), inner.cols())).trace().real();
    return out;
}

/// Empirical E[G_k^H G_k] (N x N) for every user over seeded channel draws.
inline std::vector<CMatrix> estimate_reflected_grams(const ChannelModel& model, int trials, std::uint64_t seed)
{
    require(trials >= 1, ErrorKind::invalid_argument, "estimate_reflected_grams: trials must be >= 1");
    const auto [K, N, M] = model.dims();
    std::vector<CMatrix> acc(K, CMatrix::Zero(N, N));
    Rng rng(seed);
    for (int t = 0; t < trials; ++t)
    {
        const ChannelRealization ch = model.draw(rng);
        for (int k = 0; k < K; ++k)
            acc[k].noalias() += ch.reflected[k].adjoint() * ch.reflected[k];
    }
    for (auto& a : acc)
    {
        a /= static_cast<double>(trials);
        a = (0.5 * (a + a.adjoint())).eval();
    }
    return acc;
}

/// Trimmed empirical second moment of the ratio sub-vectors (lambda_{k,n})_{n in active}.
///
/// The ratio of two complex Gaussians has no finite second moment, so the raw sample moment
/// never settles. Draws with any |lambda| above cap_factor x median|lambda| are dropped;
/// the result is symmetrized and given a 1e-8 * trace / dim ridge.
inline CMatrix estimate_ratio_prior(const ChannelModel& model, int user, std::span<const int> active, int trials,
                                    double cap_factor, std::uint64_t seed)
{
    require(trials >= 1000, ErrorKind::precondition, "estimate_ratio_prior: trials must be >= 1000");
    require(user >= 1 && user < model.dims().K, ErrorKind::invalid_argument,
            "estimate_ratio_prior: user must be a non-typical user");
    const auto dim = static_cast<Eigen::Index>(active.size());
    require(dim >= 1, ErrorKind::invalid_argument, "estimate_ratio_prior: no active elements");

    Rng rng(seed);
    CMatrix samples(dim, trials);
    std::vector<double> moduli;
    moduli.reserve(static_cast<std::size_t>(dim) * trials);
    for (int t = 0; t < trials; ++t)
    {
        const CMatrix irs = model.draw_user_to_irs(rng);
        for (Eigen::Index a = 0; a < dim; ++a)
        {
            samples(a, t) = irs(active[a], user) / irs(active[a], 0);
            moduli.push_back(std::abs(samples(a, t)));
        }
    }

    double cap = std::numeric_limits<double>::infinity();
    if (std::isfinite(cap_factor))
    {
        auto mid = moduli.begin() + static_cast<std::ptrdiff_t>(moduli.size() / 2);
        std::nth_element(moduli.begin(), mid, moduli.end());
        cap = cap_factor * *mid;
    }

    CMatrix acc = CMatrix::Zero(dim, dim);
    int kept = 0;
    for (int t = 0; t < trials; ++t)
    {
        if (samples.col(t).cwiseAbs().maxCoeff() > cap)
            continue;
        acc += samples.col(t) * samples.col(t).adjoint();
        ++kept;
    }
    require(kept > 0, ErrorKind::conditioning, "estimate_ratio_prior: every draw exceeded the cap");
    acc /= static_cast<double>(kept);
    acc = 0.5 * (acc + acc.adjoint());
    const double ridge = 1e-8 * acc.trace().real() / static_cast<double>(dim);
    acc += ridge * CMatrix::Identity(dim, dim);
    return acc;
}

} // namespace irsce

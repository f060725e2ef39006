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

#include <catch2/catch_amalgamated.hpp>

#include <irsce/estimate.hpp>
#include <irsce/selftest.hpp>

#include <cmath>

using namespace irsce;

namespace
{

bool throws_kind(ErrorKind kind, const auto& fn)
{
    try
    {
        fn();
    }
    catch (const Error& e)
    {
        return e.kind() == kind;
    }
    return false;
}

const LinkBudget kBudget = LinkBudget::from_dbm(33.0, 1e6, -169.0);

PathLossSpec desk_geometry()
{
    PathLossSpec spec;
    spec.d_bu = {104.0, 106.0, 103.0, 107.0};
    spec.d_iu = {9.0, 11.0, 8.0, 12.0};
    return spec;
}

ChannelModel desk_model() { return ChannelModel({4, 8, 8}, CorrelationSpec::uniform(0.5), desk_geometry()); }

/// Unit path loss everywhere so tiny noise is a true limit.
ChannelModel unit_model(SystemDims dims, cdouble c = 0.3)
{
    return ChannelModel(dims, CorrelationSpec::uniform(c), PathLossSpec::uniform(dims.K, 1.0, 1.0, 1.0));
}

double rel(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

/// Draw from CN(0, cov).
CVector colored(Rng& rng, const CMatrix& cov)
{
    const Eigen::LLT<CMatrix> llt(cov);
    return llt.matrixL() * rng.complex_normal(cov.rows(), 1, 1.0);
}

} // namespace

TEST_CASE("simulate_received - trivial schedules")
{
    const ChannelModel model = unit_model({3, 4, 5});
    const ChannelRealization ch = model.draw(1);
    const LinkBudget budget{4.0, 0.25};

    const Schedule silent = Schedule::zeros(3, 4, 6);
    CHECK(simulate_received(ch, silent, budget, false, 0).y.isZero());

    const Schedule long_silent = Schedule::zeros(3, 4, 4000);
    const CMatrix noise = simulate_received(ch, long_silent, budget, true, 9).y;
    CHECK(std::abs(noise.squaredNorm() / noise.size() / budget.sigma2 - 1.0) < 0.03);

    Schedule one = Schedule::zeros(3, 4, 1);
    one.pilots(1, 0) = 1.0;
    const CMatrix y = simulate_received(ch, one, budget, false, 0).y;
    CHECK(rel(y, 2.0 * ch.direct.col(1)) < 1e-15);
}

TEST_CASE("simulate_received - matches scalar summation")
{
    const ChannelModel model = unit_model({3, 5, 4}, {0.2, 0.6});
    const ChannelRealization ch = model.draw(17);
    Rng rng(4);
    Schedule s = Schedule::zeros(3, 5, 7);
    for (Eigen::Index i = 0; i < 7; ++i)
    {
        for (Eigen::Index k = 0; k < 3; ++k)
            s.pilots(k, i) = std::polar(1.0, 2.0 * kPi * rng.uniform());
        for (Eigen::Index n = 0; n < 5; ++n)
            s.reflections(n, i) = rng.uniform() < 0.5 ? cdouble{0.0} : std::polar(1.0, 2.0 * kPi * rng.uniform());
    }
    const CMatrix fast = simulate_received(ch, s, {3.0, 1.0}, false, 0).y;
    CHECK((fast - brute_force_received(ch, s, 3.0)).cwiseAbs().maxCoeff() <= 1e-12 * fast.cwiseAbs().maxCoeff());
    CHECK(throws_kind(ErrorKind::dimension_mismatch,
                      [&] { simulate_received(ch, Schedule::zeros(2, 5, 3), {1.0, 1.0}, false, 0); }));
}

TEST_CASE("phase1_recover_noiseless - exact recovery")
{
    const ChannelModel single = unit_model({1, 2, 3});
    const ChannelRealization c1 = single.draw(3);
    const ReceivedBlock y1 = simulate_received(c1, phase1_schedule({1, 2, 3}, 1), {9.0, 1.0}, false, 0);
    CHECK(rel(phase1_recover_noiseless(y1, phase1_pilots(1, 1), 9.0), y1.y / 3.0) < 1e-15);

    const SystemDims dims{3, 2, 4};
    const ChannelRealization ch = unit_model(dims).draw(5);
    for (double p : {1.0, 4.0})
    {
        const ReceivedBlock y = simulate_received(ch, phase1_schedule(dims, 3), {p, 1.0}, false, 0);
        CHECK(rel(phase1_recover_noiseless(y, phase1_pilots(3, 3), p), ch.direct) < 1e-10);
    }

    CMatrix bad = phase1_pilots(3, 3);
    bad(1, 1) = bad(0, 1);
    const ReceivedBlock y = simulate_received(ch, phase1_schedule(dims, 3), {1.0, 1.0}, false, 0);
    CHECK(throws_kind(ErrorKind::precondition, [&] { phase1_recover_noiseless(y, bad, 1.0); }));
}

TEST_CASE("phase1_mmse - closed form and noiseless limit")
{
    CHECK(phase1_mse(1.0, 1.0, 1.0, 1, 1) == Catch::Approx(0.5));

    const SystemDims dims{3, 2, 4};
    const ChannelModel model = unit_model(dims);
    const ChannelRealization ch = model.draw(8);
    const double p = 2.0;
    const LinkBudget quiet{p, 1e-12 * p};
    const ReceivedBlock y = simulate_received(ch, phase1_schedule(dims, 4), quiet, false, 0);
    const std::vector<double> beta(3, model.losses().bu[0]);
    const Phase1Estimate est = phase1_mmse(y, phase1_pilots(3, 4), p, quiet.sigma2, beta);
    CHECK(rel(est.h_hat, phase1_recover_noiseless(y, phase1_pilots(3, 4), p)) < 1e-10);
}

TEST_CASE("phase1_mmse - empirical error matches closed form")
{
    const ChannelModel model = desk_model();
    const SystemDims& dims = model.dims();
    const int trials = 10000;
    const Schedule s = phase1_schedule(dims, dims.K);
    double empirical = 0.0, predicted = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        const ChannelRealization ch = model.draw(stream_seed(1, t, "ch"));
        const ReceivedBlock y = simulate_received(ch, s, kBudget, true, stream_seed(1, t, "noise"));
        const Phase1Estimate est = phase1_mmse(y, s.pilots, kBudget.p, kBudget.sigma2, model.losses().bu);
        empirical += (est.h_hat - ch.direct).squaredNorm();
        for (double e : est.mse)
            predicted += e;
    }
    CHECK(std::abs(empirical / predicted - 1.0) < 0.03);
}

TEST_CASE("cancel_direct - removes the direct term")
{
    const SystemDims dims{3, 4, 5};
    const ChannelRealization ch = unit_model(dims).draw(21);
    const LinkBudget budget{2.0, 1.0};
    const Schedule s2 = phase2_schedule(dims, phase2_reflections_dft(4, 6));
    const ReceivedBlock y = simulate_received(ch, s2, budget, false, 0);

    const ReceivedBlock residual = cancel_direct(y, ch.direct, s2.pilots, budget.p);
    const CMatrix expected = std::sqrt(budget.p) * ch.reflected[0] * s2.reflections;
    CHECK(rel(residual.y, expected) < 1e-13);

    const Schedule silent = Schedule::zeros(3, 4, 6);
    CHECK(cancel_direct(y, ch.direct, silent.pilots, budget.p).y == y.y);

    // user 1 transmits but only the typical user has an estimate
    Schedule two = s2;
    two.pilots(1, 2) = 1.0;
    CHECK(throws_kind(ErrorKind::precondition, [&] { cancel_direct(y, ch.direct.leftCols(1), two.pilots, 1.0); }));
    CHECK_NOTHROW(cancel_direct(y, ch.direct.leftCols(1), s2.pilots, 1.0));
}

TEST_CASE("phase2_recover_noiseless - exact recovery")
{
    {
        const SystemDims dims{1, 1, 3};
        const ChannelRealization ch = unit_model(dims).draw(2);
        const ReceivedBlock y = simulate_received(ch, phase2_schedule(dims, CMatrix::Ones(1, 1)), {4.0, 1.0}, false, 0);
        const ReceivedBlock ybar = cancel_direct(y, ch.direct, CMatrix::Ones(1, 1), 4.0);
        CHECK(rel(phase2_recover_noiseless(ybar, CMatrix::Ones(1, 1), 4.0), ybar.y / 2.0) < 1e-15);
    }

    const SystemDims dims{2, 3, 4};
    const ChannelRealization ch = unit_model(dims).draw(4);
    for (int tau2 : {3, 4, 5})
    {
        const CMatrix phi = phase2_reflections_dft(3, tau2);
        const Schedule s = phase2_schedule(dims, phi);
        const ReceivedBlock ybar = cancel_direct(simulate_received(ch, s, {1.5, 1.0}, false, 0), ch.direct,
                                                 s.pilots, 1.5);
        CHECK(rel(phase2_recover_noiseless(ybar, phi, 1.5), ch.reflected[0]) < 1e-10);
    }

    CMatrix deficient = phase2_reflections_onoff(3, 3);
    deficient(2, 2) = 0.0;
    const ReceivedBlock any{CMatrix::Ones(4, 3)};
    CHECK(throws_kind(ErrorKind::precondition, [&] { phase2_recover_noiseless(any, deficient, 1.0); }));
}

TEST_CASE("phase2_lmmse - scalar prior closed form")
{
    const int N = 4, M = 6, tau2 = 8;
    const double p = 2.0, sigma2 = 0.3, c = 0.7;
    const CMatrix phi = phase2_reflections_dft(N, tau2);
    const CMatrix psi = M * sigma2 * CMatrix::Identity(tau2, tau2);
    const CMatrix prior = c * CMatrix::Identity(N, N);
    const LmmseResult r = phase2_lmmse({CMatrix::Zero(M, tau2)}, phi, p, psi, prior);
    CHECK(r.mse == Catch::Approx(N / (p * tau2 / (M * sigma2) + 1.0 / c)).epsilon(1e-12));
}

TEST_CASE("phase2_lmmse - noiseless limit and conditioning")
{
    const SystemDims dims{2, 3, 4};
    const ChannelRealization ch = unit_model(dims).draw(6);
    const double p = 1.0, sigma2 = 1e-12;
    const CMatrix phi = phase2_reflections_dft(3, 4);
    const Schedule s = phase2_schedule(dims, phi);
    const ReceivedBlock ybar = cancel_direct(simulate_received(ch, s, {p, sigma2}, false, 0), ch.direct, s.pilots, p);
    const CMatrix psi = dims.M * sigma2 * CMatrix::Identity(4, 4);
    const LmmseResult r = phase2_lmmse(ybar, phi, p, psi, 1e6 * CMatrix::Identity(3, 3));
    CHECK(rel(r.estimate, phase2_recover_noiseless(ybar, phi, p)) < 1e-8);

    CHECK(throws_kind(ErrorKind::conditioning,
                      [&] { phase2_lmmse(ybar, phi, p, CMatrix::Zero(4, 4), CMatrix::Identity(3, 3)); }));
    CHECK(throws_kind(ErrorKind::dimension_mismatch,
                      [&] { phase2_lmmse(ybar, phi, p, psi, CMatrix::Identity(2, 2)); }));
}

TEST_CASE("phase2 noise covariance - matches simulated residual")
{
    const ChannelModel model = desk_model();
    const SystemDims& dims = model.dims();
    const int tau1 = 4, tau2 = 8, trials = 10000;
    const CMatrix phi = phase2_reflections_dft(dims.N, tau2);
    const Schedule s = concat(phase1_schedule(dims, tau1), phase2_schedule(dims, phi));
    CMatrix acc = CMatrix::Zero(tau2, tau2);
    for (int t = 0; t < trials; ++t)
    {
        const ChannelRealization ch = model.draw(stream_seed(2, t, "ch"));
        const ReceivedBlock y = simulate_received(ch, s, kBudget, true, stream_seed(2, t, "noise"));
        const Phase1Estimate h = phase1_mmse({y.y.leftCols(tau1)}, s.pilots.leftCols(tau1), kBudget.p, kBudget.sigma2,
                                             model.losses().bu);
        const ReceivedBlock ybar = cancel_direct({y.y.rightCols(tau2)}, h.h_hat, s.pilots.rightCols(tau2), kBudget.p);
        const CMatrix z = ybar.y - std::sqrt(kBudget.p) * ch.reflected[0] * phi;
        acc += z.adjoint() * z;
    }
    acc /= trials;
    const CMatrix psi = phase2_noise_covariance(model.losses().bu[0], kBudget.p, kBudget.sigma2, tau1, dims.M,
                                                CVector::Ones(tau2));
    CHECK(rel(acc, psi) < 0.03);
}

TEST_CASE("phase2_lmmse - empirical error matches closed form")
{
    const ChannelModel model = desk_model();
    const SystemDims& dims = model.dims();
    const int tau1 = dims.K, tau2 = dims.N, trials = 10000;
    const CMatrix phi = phase2_reflections_dft(dims.N, tau2);
    const Schedule s = concat(phase1_schedule(dims, tau1), phase2_schedule(dims, phi));
    const CMatrix gram = estimate_reflected_grams(model, 10000, 77)[0];
    const CMatrix psi = phase2_noise_covariance(model.losses().bu[0], kBudget.p, kBudget.sigma2, tau1, dims.M,
                                                CVector::Ones(tau2));
    double empirical = 0.0, predicted = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        const ChannelRealization ch = model.draw(stream_seed(3, t, "ch"));
        const ReceivedBlock y = simulate_received(ch, s, kBudget, true, stream_seed(3, t, "noise"));
        const Phase1Estimate h = phase1_mmse({y.y.leftCols(tau1)}, s.pilots.leftCols(tau1), kBudget.p, kBudget.sigma2,
                                             model.losses().bu);
        const ReceivedBlock ybar = cancel_direct({y.y.rightCols(tau2)}, h.h_hat, s.pilots.rightCols(tau2), kBudget.p);
        const LmmseResult r = phase2_lmmse(ybar, phi, kBudget.p, psi, gram);
        empirical += (r.estimate - ch.reflected[0]).squaredNorm();
        predicted += r.mse;
    }
    CHECK(std::abs(empirical / predicted - 1.0) < 0.03);
}

TEST_CASE("phase3_recover_noiseless - three users, three elements, two antennas")
{
    const SystemDims dims{3, 3, 2};
    const ChannelRealization ch = unit_model(dims).draw(31);
    const double p = 2.0;
    const Phase3Plan plan = phase3_plan(dims);
    const Schedule s3 = schedule_from_plan(dims, plan);
    const ReceivedBlock ybar = cancel_direct(simulate_received(ch, s3, {p, 1.0}, false, 0), ch.direct, s3.pilots, p);
    const CMatrix lambda = phase3_recover_noiseless(ybar, plan, ch.reflected[0], p);

    // independent slot-by-slot solve with explicit 2x2 inverses
    auto pair = [&](int a, int b) {
        Eigen::Matrix2cd g;
        g.col(0) = ch.g(0, a);
        g.col(1) = ch.g(0, b);
        return g;
    };
    const Eigen::Vector2cd s1 = pair(1, 2).inverse() * ybar.y.col(0) / std::sqrt(p);
    const Eigen::Vector2cd s2 = pair(0, 2).inverse() * ybar.y.col(1) / std::sqrt(p);
    const Eigen::Vector2cd y3 = ybar.y.col(2) - std::sqrt(p) * (s1(0) * ch.g(0, 1) + s2(0) * ch.g(0, 0));
    const Eigen::Vector2cd s3v = pair(0, 1).inverse() * y3 / std::sqrt(p);

    auto close = [](cdouble a, cdouble b) { return std::abs(a - b) <= 1e-10 * std::abs(b); };
    CHECK(close(lambda(0, 1), s1(0)));
    CHECK(close(lambda(0, 2), s1(1)));
    CHECK(close(lambda(1, 0), s2(0)));
    CHECK(close(lambda(1, 2), s2(1)));
    CHECK(close(lambda(0, 0), s3v(0)));
    CHECK(close(lambda(1, 1), s3v(1)));
    CHECK(rel(lambda, ch.lambda) < 1e-10);
}

TEST_CASE("phase3_recover_noiseless - pseudo-inverse when M >= N")
{
    const SystemDims dims{2, 3, 5};
    const ChannelRealization ch = unit_model(dims).draw(12);
    const Phase3Plan plan = phase3_plan(dims);
    const Schedule s3 = schedule_from_plan(dims, plan);
    const ReceivedBlock ybar = cancel_direct(simulate_received(ch, s3, {1.0, 1.0}, false, 0), ch.direct, s3.pilots, 1.0);
    const CVector oracle = ch.reflected[0].completeOrthogonalDecomposition().pseudoInverse() * ybar.y.col(0);
    CHECK(rel(phase3_recover_noiseless(ybar, plan, ch.reflected[0], 1.0).row(0).transpose(), oracle) < 1e-10);
}

TEST_CASE("phase3_recover_noiseless - grid and failure modes")
{
    for (int K = 2; K <= 8; ++K)
        for (int N = 1; N <= 8; ++N)
            for (int M = 1; M <= 8; ++M)
                CHECK(noiseless_recovery_error({K, N, M}, 99) <= 1e-9);

    const SystemDims dims{3, 3, 2};
    const ChannelRealization ch = unit_model(dims).draw(31);
    Phase3Plan plan = phase3_plan(dims);
    const Schedule s3 = schedule_from_plan(dims, plan);
    const ReceivedBlock ybar = cancel_direct(simulate_received(ch, s3, {1.0, 1.0}, false, 0), ch.direct, s3.pilots, 1.0);

    CMatrix twin = ch.reflected[0];
    twin.col(2) = twin.col(1);
    CHECK(throws_kind(ErrorKind::degenerate_channel, [&] { phase3_recover_noiseless(ybar, plan, twin, 1.0); }));

    // solving the shared slot first references ratios that are not yet known
    std::swap(plan.slots[0], plan.slots[2]);
    CHECK(throws_kind(ErrorKind::precondition, [&] { phase3_recover_noiseless(ybar, plan, ch.reflected[0], 1.0); }));
}

TEST_CASE("phase3_lmmse - limits and phase invariance")
{
    Rng rng(14);
    const int M = 6, A = 4;
    const CMatrix g = rng.complex_normal(M, A, 1.0);
    const CVector lambda = rng.complex_normal(A, 1, 1.0);
    const double p = 3.0;
    const CVector y = std::sqrt(p) * g * lambda;

    const RatioEstimate limit = phase3_lmmse(y, g, p, 1e-12 * CMatrix::Identity(M, M), 1e8 * CMatrix::Identity(A, A));
    CHECK(rel(limit.lambda_hat, pseudo_inverse(g, A) * y / std::sqrt(p)) < 1e-8);

    const CMatrix psi = 0.5 * CMatrix::Identity(M, M) + 0.1 * CMatrix::Ones(M, M);
    const CMatrix prior = exp_correlation_matrix(0.4, A);
    const CVector noisy = y + rng.complex_normal(M, 1, 0.5);
    const cdouble turn = std::polar(1.0, 1.1);
    const RatioEstimate a = phase3_lmmse(noisy, g, p, psi, prior);
    const RatioEstimate b = phase3_lmmse(turn * noisy, turn * g, p, psi, prior);
    CHECK(rel(b.lambda_hat, a.lambda_hat) < 1e-12);
    CHECK(b.mse == Catch::Approx(a.mse).epsilon(1e-12));

    CHECK(throws_kind(ErrorKind::conditioning, [&] { phase3_lmmse(noisy, g, p, psi, CMatrix::Zero(A, A)); }));
}

TEST_CASE("phase3_lmmse - empirical error matches trace under a Gaussian prior")
{
    Rng rng(15);
    const int M = 8, A = 5, trials = 10000;
    const double p = 2.0;
    const CMatrix g = rng.complex_normal(M, A, 0.5);
    const CMatrix prior = 0.8 * exp_correlation_matrix(cdouble{0.3, 0.4}, A);
    const CMatrix psi = 0.6 * exp_correlation_matrix(0.5, M) + 0.4 * CMatrix::Identity(M, M);
    double empirical = 0.0;
    double trace = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        const CVector lambda = colored(rng, prior);
        const CVector y = std::sqrt(p) * g * lambda + colored(rng, psi);
        const RatioEstimate r = phase3_lmmse(y, g, p, psi, prior);
        empirical += (r.lambda_hat - lambda).squaredNorm();
        trace = r.mse;
    }
    CHECK(std::abs(empirical / trials / trace - 1.0) < 0.03);
}

TEST_CASE("phase3 noise covariance - exact form matches the simulated residual")
{
    const ChannelModel model = desk_model();
    const SystemDims& dims = model.dims();
    const int tau1 = dims.K, trials = 10000, user = 2;
    const Schedule s1 = phase1_schedule(dims, tau1);
    CMatrix acc = CMatrix::Zero(dims.M, dims.M);
    Rng extra(5);
    for (int t = 0; t < trials; ++t)
    {
        const ChannelRealization ch = model.draw(stream_seed(4, t, "ch"));
        const ReceivedBlock y = simulate_received(ch, s1, kBudget, true, stream_seed(4, t, "noise"));
        const Phase1Estimate h = phase1_mmse(y, s1.pilots, kBudget.p, kBudget.sigma2, model.losses().bu);
        const CVector z = std::sqrt(kBudget.p) * (ch.direct.col(user) - h.h_hat.col(user)) +
                          extra.complex_normal(dims.M, 1, kBudget.sigma2);
        acc += z * z.adjoint();
    }
    acc /= trials;
    const double beta = model.losses().bu[user];
    const CMatrix cb = model.bs_user_correlation(user);
    const CMatrix exact = phase3_noise_covariance(beta, kBudget.p, kBudget.sigma2, tau1, cb);
    const CMatrix single_power = phase3_noise_covariance_single_power(beta, kBudget.p, kBudget.sigma2, tau1, cb);
    CHECK(rel(acc, exact) < 0.03);
    // the D-denominator variant misses most of the Phase I leakage at this noise level
    CHECK(rel(acc, single_power) > 0.15);
    CHECK(std::abs(exact.trace().real() / (dims.M * kBudget.sigma2) - (1.0 + 1.0 / tau1)) < 1e-3);
}

TEST_CASE("phase3 noise covariance - repeats shrink only the fresh noise")
{
    const CMatrix cb = exp_correlation_matrix(0.5, 3);
    const CMatrix one = phase3_noise_covariance(0.2, 1.5, 0.4, 3, cb, 1);
    const CMatrix four = phase3_noise_covariance(0.2, 1.5, 0.4, 3, cb, 4);
    CHECK(rel(one - four, 0.75 * 0.4 * CMatrix::Identity(3, 3)) < 1e-12);
    CHECK(throws_kind(ErrorKind::invalid_argument, [&] { phase3_noise_covariance(0.2, 1.5, 0.4, 3, cb, 0); }));
}

TEST_CASE("estimate_reflected_grams - matches the Kronecker-structure oracle")
{
    const ChannelModel model = desk_model();
    const SystemDims& dims = model.dims();
    const std::vector<CMatrix> grams = estimate_reflected_grams(model, 10000, 3);
    const CMatrix ci = exp_correlation_matrix(0.5, dims.N);
    for (int k = 0; k < dims.K; ++k)
    {
        const CMatrix oracle = model.losses().bi * dims.N * dims.M * model.losses().iu[k] *
                               ci.cwiseProduct(ci.conjugate());
        CHECK(rel(grams[k], oracle) < 0.05);
        CHECK(hermitian_defect(grams[k]) < 1e-14);
    }
}

TEST_CASE("estimate_ratio_prior - structure, determinism, trimming")
{
    CorrelationSpec corr = CorrelationSpec::uniform(0.5);
    corr.irs_user = {0.0};
    const ChannelModel model({3, 6, 6}, corr, PathLossSpec::uniform(3, 105.0, 10.0));
    const std::vector<int> active{0, 1, 2, 3};
    const CMatrix c = estimate_ratio_prior(model, 1, active, 10000, 10.0, 8);
    const double diag = c.diagonal().real().minCoeff();
    CMatrix off = c;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() / diag < 0.1);
    CHECK(hermitian_defect(c) == 0.0);
    CHECK(estimate_ratio_prior(model, 1, active, 10000, 10.0, 8) == c);

    // the untrimmed moment is dominated by a few huge ratios
    const CMatrix raw = estimate_ratio_prior(model, 1, active, 10000, std::numeric_limits<double>::infinity(), 8);
    CHECK(raw.trace().real() > 2.0 * c.trace().real());

    CHECK(throws_kind(ErrorKind::precondition, [&] { estimate_ratio_prior(model, 1, active, 999, 10.0, 8); }));
    CHECK(throws_kind(ErrorKind::invalid_argument, [&] { estimate_ratio_prior(model, 0, active, 1000, 10.0, 8); }));
}

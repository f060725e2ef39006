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

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace irsce
{

/// Slots allotted to each phase.
struct PhasePlan
{
    int tau1 = 0;
    int tau2 = 0;
    int tau3 = 0;

    int total() const { return tau1 + tau2 + tau3; }
    friend bool operator==(const PhasePlan&, const PhasePlan&) = default;
};

/// Per-slot pilot symbols (K x tau) and IRS reflection coefficients (N x tau).
struct Schedule
{
    CMatrix pilots;
    CMatrix reflections;

    int slots() const { return static_cast<int>(pilots.cols()); }
    int users() const { return static_cast<int>(pilots.rows()); }
    int elements() const { return static_cast<int>(reflections.rows()); }

    static Schedule zeros(int users, int elements, int slots)
    {
        return {CMatrix::Zero(users, slots), CMatrix::Zero(elements, slots)};
    }
};

/// Slot-wise concatenation.
inline Schedule concat(const Schedule& a, const Schedule& b)
{
    require(a.users() == b.users() && a.elements() == b.elements(), ErrorKind::dimension_mismatch,
            "concat: schedules have different dimensions");
    Schedule out = Schedule::zeros(a.users(), a.elements(), a.slots() + b.slots());
    out.pilots << a.pilots, b.pilots;
    out.reflections << a.reflections, b.reflections;
    return out;
}

/// Columns [first, first + count).
inline Schedule slice(const Schedule& s, int first, int count)
{
    require(first >= 0 && count >= 0 && first + count <= s.slots(), ErrorKind::dimension_mismatch,
            "slice: range outside schedule");
    return {s.pilots.middleCols(first, count), s.reflections.middleCols(first, count)};
}

/// Every pilot and reflection entry has modulus 0 or 1.
inline bool has_valid_moduli(const Schedule& s, double tol = 1e-12)
{
    auto ok = [tol](const CMatrix& m) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
            {
                const double a = std::abs(m(i, j));
                if (a > tol && std::abs(a - 1.0) > tol)
                    return false;
            }
        return true;
    };
    return ok(s.pilots) && ok(s.reflections);
}

constexpr int ceil_div(int a, int b) { return (a + b - 1) / b; }

/// Minimum Phase III length for exact recovery: max(K-1, ceil((K-1)N/M)); 0 for a single user.
inline int min_tau3(const SystemDims& dims)
{
    dims.validate();
    if (dims.K < 2)
        return 0;
    return std::max(dims.K - 1, ceil_div((dims.K - 1) * dims.N, dims.M));
}

inline int min_total_pilots(const SystemDims& dims) { return dims.K + dims.N + min_tau3(dims); }

/// Without the ratio structure every user needs its own N-slot block: K + K N.
inline int benchmark_total_pilots(const SystemDims& dims)
{
    dims.validate();
    return dims.K + dims.K * dims.N;
}

/// Phase III length of the orthogonal (one user per slot) noisy strategy: (K-1) ceil(N/M).
inline int orthogonal_tau3(const SystemDims& dims)
{
    dims.validate();
    return (dims.K - 1) * ceil_div(dims.N, dims.M);
}

/// Row k is [1, w^k, w^{2k}, ...] with w = exp(-j 2 pi / tau1); rows are mutually orthogonal.
inline CMatrix phase1_pilots(int users, int tau1)
{
    require(users >= 1, ErrorKind::invalid_argument, "phase1_pilots: K must be >= 1");
    require(tau1 >= users, ErrorKind::infeasible_schedule, "phase1_pilots: tau1 must be >= K");
    CMatrix a(users, tau1);
    for (int k = 0; k < users; ++k)
        for (int i = 0; i < tau1; ++i)
            a(k, i) = std::polar(1.0, -2.0 * kPi * static_cast<double>((static_cast<long>(k) * i) % tau1) / tau1);
    return a;
}

/// Entry (n, i) = w^((n + first_frequency) i), w = exp(-j 2 pi / tau2), 0-based; Phi Phi^H = tau2 I.
inline CMatrix phase2_reflections_dft(int elements, int tau2, int first_frequency = 0)
{
    require(elements >= 1, ErrorKind::invalid_argument, "phase2_reflections_dft: N must be >= 1");
    require(tau2 >= elements, ErrorKind::infeasible_schedule, "phase2_reflections_dft: tau2 must be >= N");
    require(first_frequency >= 0 && first_frequency + elements <= tau2, ErrorKind::invalid_argument,
            "phase2_reflections_dft: frequencies must fit in tau2");
    CMatrix phi(elements, tau2);
    for (int n = 0; n < elements; ++n)
    {
        const long f = n + first_frequency;
        for (int i = 0; i < tau2; ++i)
            phi(n, i) = std::polar(1.0, -2.0 * kPi * static_cast<double>((f * i) % tau2) / tau2);
    }
    return phi;
}

/// First DFT frequency used for training: 1 when tau2 > N (skips the constant row), else 0.
inline int training_offset(int elements, int tau2) { return tau2 > elements ? 1 : 0; }

/// One element on per slot, cycling through the array.
inline CMatrix phase2_reflections_onoff(int elements, int tau2)
{
    require(elements >= 1, ErrorKind::invalid_argument, "phase2_reflections_onoff: N must be >= 1");
    require(tau2 >= elements, ErrorKind::infeasible_schedule, "phase2_reflections_onoff: tau2 must be >= N");
    CMatrix phi = CMatrix::Zero(elements, tau2);
    for (int i = 0; i < tau2; ++i)
        phi(i % elements, i) = 1.0;
    return phi;
}

/// Unit-modulus entries with phases uniform in [0, 2 pi), column-major draw order.
inline CMatrix phase2_reflections_random(int elements, int tau2, std::uint64_t seed)
{
    require(elements >= 1, ErrorKind::invalid_argument, "phase2_reflections_random: N must be >= 1");
    require(tau2 >= elements, ErrorKind::infeasible_schedule, "phase2_reflections_random: tau2 must be >= N");
    Rng rng(seed);
    CMatrix phi(elements, tau2);
    for (int i = 0; i < tau2; ++i)
        for (int n = 0; n < elements; ++n)
            phi(n, i) = std::polar(1.0, 2.0 * kPi * rng.uniform());
    return phi;
}

/// Phase I: orthogonal pilots for every user, IRS off.
inline Schedule phase1_schedule(const SystemDims& dims, int tau1)
{
    Schedule s = Schedule::zeros(dims.K, dims.N, tau1);
    s.pilots = phase1_pilots(dims.K, tau1);
    return s;
}

/// Phase II: only the typical user transmits (all-ones pilot) under the given reflection pattern.
inline Schedule phase2_schedule(const SystemDims& dims, const CMatrix& reflections)
{
    require(reflections.rows() == dims.N, ErrorKind::dimension_mismatch, "phase2_schedule: reflections need N rows");
    const int tau2 = static_cast<int>(reflections.cols());
    Schedule s = Schedule::zeros(dims.K, dims.N, tau2);
    s.pilots.row(0).setOnes();
    s.reflections = reflections;
    return s;
}

/// One Phase III slot of the exact-recovery schedule. All indices 0-based
/// (user 0 is the typical user and never transmits in Phase III).
struct Phase3Slot
{
    std::vector<int> users;                      // transmitting users, ascending
    std::vector<int> elements;                   // IRS elements switched on, ascending
    std::vector<std::pair<int, int>> unknowns;   // (user, element) ratios solved in this slot
};

/// Index sets of the exact-recovery Phase III construction.
///
/// For M >= N the construction degenerates (rho = upsilon = 0, no index sets) and `slots`
/// holds the one-user-per-slot, all-elements-on schedule. For M < N the sets follow the
/// two-stage construction: (K-1) rho single-user slots over Omega_i, then slots where
/// the users K_i share elements N_i after cancelling already-known ratios.
///
/// Stored 0-based; `J` keeps the raw counter values (1-based) because they are not indices.
struct Phase3Plan
{
    bool all_on = false;
    int rho = 0;
    int upsilon = 0;
    std::vector<std::vector<int>> T;       // per user, 1-based counter values
    std::vector<std::vector<int>> lambda1; // per user, sorted elements
    std::vector<std::vector<int>> lambda2; // per user, sorted elements
    std::vector<int> kappa;                // per stage-1 slot
    std::vector<std::vector<int>> omega;   // per stage-1 slot
    std::vector<std::vector<int>> J;       // per stage-2 slot, 1-based counters
    std::vector<std::vector<int>> K_set;   // per stage-2 slot, distinct users ascending
    std::vector<std::vector<int>> N_set;   // per stage-2 slot, elements in J order
    std::vector<int> M_i;                  // per stage-2 slot, |N_i|
    std::vector<Phase3Slot> slots;

    int stage1_slots() const { return static_cast<int>(omega.size()); }
};

inline Phase3Plan phase3_plan(const SystemDims& dims)
{
    dims.validate();
    const auto [K, N, M] = dims;
    Phase3Plan plan;
    plan.T.resize(K);
    plan.lambda1.resize(K);
    plan.lambda2.resize(K);
    if (K < 2)
        return plan;

    if (M >= N)
    {
        plan.all_on = true;
        for (int k = 1; k < K; ++k)
        {
            Phase3Slot slot;
            slot.users = {k};
            for (int n = 0; n < N; ++n)
            {
                slot.elements.push_back(n);
                slot.unknowns.emplace_back(k, n);
            }
            plan.slots.push_back(std::move(slot));
        }
        return plan;
    }

    const int rho = N / M;
    const int ups = N - M * rho;
    plan.rho = rho;
    plan.upsilon = ups;

    // Lambda_{k,2}: the k-th run of upsilon consecutive counters, wrapped onto 1..N.
    for (int k = 1; k < K; ++k)
    {
        const int kk = k + 1; // 1-based user number
        std::vector<bool> in_second(N, false);
        for (int m = (kk - 2) * ups + 1; m <= (kk - 1) * ups; ++m)
        {
            plan.T[k].push_back(m);
            const int element = m - (ceil_div(m, N) - 1) * N; // 1-based
            in_second[element - 1] = true;
        }
        for (int n = 0; n < N; ++n)
            (in_second[n] ? plan.lambda2[k] : plan.lambda1[k]).push_back(n);
    }

    // Stage 1: user ceil(i/rho)+1 alone, M consecutive entries of its Lambda_{k,1}.
    for (int i = 1; i <= (K - 1) * rho; ++i)
    {
        const int block = ceil_div(i, rho);
        const int user = block; // 0-based index of 1-based user block+1
        const int kappa = (i - (block - 1) * rho - 1) * M;
        std::vector<int> omega(plan.lambda1[user].begin() + kappa, plan.lambda1[user].begin() + kappa + M);
        plan.kappa.push_back(kappa);

        Phase3Slot slot;
        slot.users = {user};
        slot.elements = omega;
        std::sort(slot.elements.begin(), slot.elements.end());
        for (int n : omega)
            slot.unknowns.emplace_back(user, n);
        plan.omega.push_back(std::move(omega));
        plan.slots.push_back(std::move(slot));
    }

    // Stage 2: the remaining (K-1) upsilon ratios, M per slot.
    const int remaining = (K - 1) * N - (K - 1) * M * rho;
    const int total = min_tau3(dims);
    for (int i = (K - 1) * rho + 1; i <= total; ++i)
    {
        const int offset = i - (K - 1) * rho;
        std::vector<int> J;
        for (int j = (offset - 1) * M + 1; j <= std::min(offset * M, remaining); ++j)
            J.push_back(j);

        Phase3Slot slot;
        std::vector<int> n_set;
        for (int j : J)
        {
            const int block = ceil_div(j, ups);
            const int user = block; // 0-based
            const int pos = j - (block - 1) * ups; // 1-based position
            const int element = plan.lambda2[user].at(pos - 1);
            n_set.push_back(element);
            slot.unknowns.emplace_back(user, element);
            if (std::find(slot.users.begin(), slot.users.end(), user) == slot.users.end())
                slot.users.push_back(user);
        }
        std::sort(slot.users.begin(), slot.users.end());
        slot.elements = n_set;
        std::sort(slot.elements.begin(), slot.elements.end());
        slot.elements.erase(std::unique(slot.elements.begin(), slot.elements.end()), slot.elements.end());

        plan.J.push_back(std::move(J));
        plan.K_set.push_back(slot.users);
        plan.M_i.push_back(static_cast<int>(slot.elements.size()));
        plan.N_set.push_back(std::move(n_set));
        plan.slots.push_back(std::move(slot));
    }
    return plan;
}

/// Pilots/reflections realizing a plan: users of a slot send 1, elements of a slot reflect with 1.
inline Schedule schedule_from_plan(const SystemDims& dims, const Phase3Plan& plan)
{
    Schedule s = Schedule::zeros(dims.K, dims.N, static_cast<int>(plan.slots.size()));
    for (int i = 0; i < s.slots(); ++i)
    {
        for (int k : plan.slots[i].users)
            s.pilots(k, i) = 1.0;
        for (int n : plan.slots[i].elements)
            s.reflections(n, i) = 1.0;
    }
    return s;
}

/// Minimum-length Phase III schedule for exact recovery.
inline Schedule phase3_schedule_noiseless(const SystemDims& dims)
{
    return schedule_from_plan(dims, phase3_plan(dims));
}

/// One-user-per-slot Phase III strategy for the noisy case. Stored for one base cycle of
/// (K-1) ceil(N/M) slots; slot i of a longer phase uses base slot i % cycle.
struct OrthogonalPlan
{
    int cycle = 0;
    std::vector<int> user;                // k_i, 0-based
    std::vector<std::vector<int>> active; // Delta_i, 0-based elements ascending
    std::vector<int> offset;              // varphi_i (only meaningful on full-M slots)

    int base_slot(int i) const { return i % cycle; }
};

inline OrthogonalPlan orthogonal_plan(const SystemDims& dims)
{
    dims.validate();
    const auto [K, N, M] = dims;
    const int L = ceil_div(N, M);
    OrthogonalPlan plan;
    plan.cycle = (K - 1) * L;
    for (int i = 1; i <= plan.cycle; ++i)
    {
        plan.user.push_back(ceil_div(i, L)); // 1-based user ceil(i/L)+1
        const int varphi = (i - (i / L) * L - 1) * M;
        std::vector<int> delta;
        if (i % L != 0)
        {
            for (int n = varphi + 1; n <= varphi + M; ++n)
                delta.push_back(n - 1);
        }
        else
        {
            for (int n = (L - 1) * M + 1; n <= N; ++n)
                delta.push_back(n - 1);
        }
        plan.offset.push_back(varphi);
        plan.active.push_back(std::move(delta));
    }
    return plan;
}

/// Orthogonal noisy Phase III schedule of length tau3 >= (K-1) ceil(N/M).
inline std::pair<Schedule, OrthogonalPlan> phase3_schedule_orthogonal_noisy(const SystemDims& dims, int tau3)
{
    OrthogonalPlan plan = orthogonal_plan(dims);
    require(tau3 >= plan.cycle, ErrorKind::infeasible_schedule,
            "phase3_schedule_orthogonal_noisy: tau3 must be >= (K-1) ceil(N/M) = " + std::to_string(plan.cycle));
    require(plan.cycle > 0 || tau3 == 0, ErrorKind::infeasible_schedule,
            "phase3_schedule_orthogonal_noisy: no Phase III slots with a single user");
    Schedule s = Schedule::zeros(dims.K, dims.N, tau3);
    for (int i = 0; i < tau3; ++i)
    {
        const int b = plan.base_slot(i);
        s.pilots(plan.user[b], i) = 1.0;
        for (int n : plan.active[b])
            s.reflections(n, i) = 1.0;
    }
    return {std::move(s), std::move(plan)};
}

/// Reflection pattern for a benchmark block of `block` slots: the block-point DFT (offset as in
/// training) when block >= N, otherwise the first `block` columns of the N-point DFT.
inline CMatrix benchmark_block_reflections(int elements, int block)
{
    require(block >= 1, ErrorKind::infeasible_schedule, "benchmark block must be >= 1 slot");
    if (block >= elements)
        return phase2_reflections_dft(elements, block, training_offset(elements, block));
    return phase2_reflections_dft(elements, elements).leftCols(block);
}

/// Benchmark Phase III: user k alone for its own block of `block` slots with all-ones
/// pilots, reflections as in Phase II. Total length (K-1) block.
inline Schedule benchmark_phase3_schedule(const SystemDims& dims, int block)
{
    dims.validate();
    const CMatrix phi = benchmark_block_reflections(dims.N, block);
    Schedule s = Schedule::zeros(dims.K, dims.N, (dims.K - 1) * block);
    for (int k = 1; k < dims.K; ++k)
    {
        const int first = (k - 1) * block;
        s.pilots.row(k).segment(first, block).setOnes();
        s.reflections.middleCols(first, block) = phi;
    }
    return s;
}

} // namespace irsce

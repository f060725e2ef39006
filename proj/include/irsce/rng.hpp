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

#include "linalg.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace irsce
{

/// SplitMix64 finalizer. Used to derive independent, reproducible stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a of a label.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stream seed for (master seed, trial index, label):
///   s = splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ fnv1a(label))
/// Streams with different labels or trial indices never share state, so adding a
/// new label leaves every existing stream untouched.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial, std::string_view label) noexcept
{
    return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ fnv1a(label));
}

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Circularly-symmetric complex Gaussian with E|x|^2 = variance
    /// (two independent real normals, each with variance/2).
    cdouble complex_normal(double variance)
    {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {s * re, s * im};
    }

    CMatrix complex_normal(Eigen::Index rows, Eigen::Index cols, double variance)
    {
        CMatrix out(rows, cols);
        // column-major fill order is part of the determinism contract
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                out(i, j) = complex_normal(variance);
        return out;
    }

    double uniform() { return uniform_(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace irsce

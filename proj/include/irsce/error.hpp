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

#include <stdexcept>
#include <string>
#include <string_view>

namespace irsce
{

enum class ErrorKind
{
    invalid_correlation,
    invalid_matrix,
    invalid_geometry,
    invalid_argument,
    infeasible_schedule,
    precondition,
    degenerate_channel,
    conditioning,
    undefined_metric,
    dimension_mismatch,
    parse,
    constraint,
    io,
};

constexpr std::string_view to_string(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::invalid_correlation: return "invalid-correlation";
    case ErrorKind::invalid_matrix: return "invalid-matrix";
    case ErrorKind::invalid_geometry: return "invalid-geometry";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::infeasible_schedule: return "infeasible-schedule";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::degenerate_channel: return "degenerate-channel";
    case ErrorKind::conditioning: return "numerical-conditioning";
    case ErrorKind::undefined_metric: return "undefined-metric";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::parse: return "parse";
    case ErrorKind::constraint: return "constraint-violation";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Single exception type for the library; `kind()` gives the machine-readable category.
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message)
{
    if (!condition)
        throw Error(kind, message);
}

} // namespace irsce

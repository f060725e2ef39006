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
#include "schedule.hpp"

#include <charconv>
#include <istream>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace irsce
{

/// Locale-independent formatting; digits = 0 gives the shortest round-trip form.
inline std::string format_number(double v, int digits = 12)
{
    char buf[64];
    const auto res = digits > 0 ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits)
                                : std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size() && !text.empty())
        return v;
    if (text == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    fail(ErrorKind::parse, "'" + std::string(text) + "' is not a number");
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

/// Phase label per slot of a concatenated schedule.
inline std::vector<int> phase_labels(const PhasePlan& phases)
{
    std::vector<int> out;
    out.insert(out.end(), phases.tau1, 1);
    out.insert(out.end(), phases.tau2, 2);
    out.insert(out.end(), phases.tau3, 3);
    return out;
}

/// Columns: slot, phase, a1_re, a1_im, ..., aK_im, phi1_re, ..., phiN_im. Slots are 1-based.
inline void write_schedule_csv(std::ostream& sink, const Schedule& s, const std::vector<int>& phase)
{
    require(static_cast<int>(phase.size()) == s.slots(), ErrorKind::dimension_mismatch,
            "write_schedule_csv: one phase label per slot required");
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out << "slot,phase";
    for (int k = 1; k <= s.users(); ++k)
        out << ",a" << k << "_re,a" << k << "_im";
    for (int n = 1; n <= s.elements(); ++n)
        out << ",phi" << n << "_re,phi" << n << "_im";
    out << '\n';
    for (int i = 0; i < s.slots(); ++i)
    {
        out << i + 1 << ',' << phase[i];
        for (int k = 0; k < s.users(); ++k)
            out << ',' << format_number(s.pilots(k, i).real(), 0) << ',' << format_number(s.pilots(k, i).imag(), 0);
        for (int n = 0; n < s.elements(); ++n)
            out << ',' << format_number(s.reflections(n, i).real(), 0) << ','
                << format_number(s.reflections(n, i).imag(), 0);
        out << '\n';
    }
    sink << out.str();
}

struct ScheduleTable
{
    Schedule schedule;
    std::vector<int> phase;
};

inline ScheduleTable read_schedule_csv(std::istream& in)
{
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::parse, "schedule csv: missing header");
    const auto header = split_csv_line(line);
    require(header.size() >= 2 && header[0] == "slot" && header[1] == "phase", ErrorKind::parse,
            "schedule csv: unexpected header");
    int users = 0, elements = 0;
    for (std::size_t c = 2; c < header.size(); c += 2)
        (header[c].starts_with("phi") ? elements : users)++;

    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line))
        if (!line.empty())
        {
            rows.push_back(split_csv_line(line));
            require(rows.back().size() == header.size(), ErrorKind::parse, "schedule csv: ragged row");
        }

    ScheduleTable t{Schedule::zeros(users, elements, static_cast<int>(rows.size())), {}};
    for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    {
        const auto& r = rows[i];
        t.phase.push_back(static_cast<int>(parse_number(r[1])));
        for (int k = 0; k < users; ++k)
            t.schedule.pilots(k, i) = {parse_number(r[2 + 2 * k]), parse_number(r[3 + 2 * k])};
        for (int n = 0; n < elements; ++n)
            t.schedule.reflections(n, i) = {parse_number(r[2 + 2 * users + 2 * n]),
                                            parse_number(r[3 + 2 * users + 2 * n])};
    }
    return t;
}

} // namespace irsce

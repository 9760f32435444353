/* Copyright (c) 2026 The MultiID Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "multiid/metrics.hpp"

namespace multiid {

inline constexpr std::uint32_t kReportVersion = 1;

// Numbers in reports are rounded to this many decimals before writing.
inline constexpr int kReportDecimals = 9;

// Value as written to reports: rounded to kReportDecimals, -0 folded to 0.
double round_for_report(double value);

// Versioned JSON document; absent values are null.
std::string report_json(const EvalReport& report);

// One row per evaluated sample; absent values are empty cells.
std::string report_csv(const EvalReport& report);

void print_summary(const EvalReport& report, std::ostream& out);

}  // namespace multiid

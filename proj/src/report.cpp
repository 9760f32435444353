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

#include "multiid/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace multiid {

double round_for_report(double value) {
  static const double scale = std::pow(10.0, kReportDecimals);
  const double r = std::round(value * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

namespace {

using nlohmann::json;

json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_for_report(v);
}

json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", kReportDecimals, *v);
  return buf;
}

json summary_json(const MetricSummary& s) {
  json mean = json::object();
  json present = json::object();
  for (const auto& name : metric_names()) {
    auto it = s.mean.find(name);
    mean[name] = it == s.mean.end() ? json(nullptr) : number(it->second);
    auto pit = s.present.find(name);
    present[name] = pit == s.present.end() ? 0 : pit->second;
  }
  return {{"samples", s.samples}, {"mean", mean}, {"present", present}};
}

}  // namespace

std::string report_json(const EvalReport& report) {
  json samples = json::array();
  for (const auto& m : report.samples) {
    json row = {{"sample_id", m.sample_id},
                {"identity_count", m.identity_count},
                {"subset", subset_of(m.identity_count)},
                {"generated_faces", m.generated_faces},
                {"matched_faces", m.matched_faces}};
    for (const auto& name : metric_names()) row[name] = number(metric_value(m, name));
    json backends = json::object();
    for (const auto& [b, bd] : m.backends) {
      backends[b] = {{"sim_gt", number(bd.sim_gt)},
                     {"sim_ref", number(bd.sim_ref)},
                     {"sim_ref_mean", number(bd.sim_ref_mean)},
                     {"blend", number(bd.blend)}};
    }
    row["backends"] = backends;
    row["flags"] = m.flags;
    samples.push_back(std::move(row));
  }
  json subsets = json::object();
  for (const auto& [name, s] : report.subsets) subsets[name] = summary_json(s);
  json doc = {{"format", "multiid-eval-report"},
              {"version", kReportVersion},
              {"matching_backend", report.matching_backend},
              {"face_backends", report.face_backends},
              {"evaluated", report.samples.size()},
              {"skipped_count", report.skipped.size()},
              {"skipped", report.skipped},
              {"overall", summary_json(report.overall)},
              {"subsets", subsets},
              {"samples", samples}};
  return doc.dump(1) + "\n";
}

std::string report_csv(const EvalReport& report) {
  std::string out = "sample_id,identity_count,subset,generated_faces,matched_faces";
  for (const auto& name : metric_names()) out += "," + name;
  out += ",flags\n";
  for (const auto& m : report.samples) {
    out += m.sample_id + "," + std::to_string(m.identity_count) + "," + subset_of(m.identity_count) + "," +
           std::to_string(m.generated_faces) + "," + std::to_string(m.matched_faces);
    for (const auto& name : metric_names()) out += "," + cell(metric_value(m, name));
    std::string flags;
    for (const auto& f : m.flags) flags += (flags.empty() ? "" : ";") + f;
    out += "," + flags + "\n";
  }
  return out;
}

void print_summary(const EvalReport& report, std::ostream& out) {
  out << "evaluated " << report.samples.size() << " samples, skipped " << report.skipped.size()
      << " (matcher: " << report.matching_backend << ")\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s", "metric", "all");
  out << line;
  for (const auto& [name, s] : report.subsets) {
    std::snprintf(line, sizeof line, " %10s", ("n=" + name).c_str());
    out << line;
  }
  out << "\n";
  auto value = [](const MetricSummary& s, const std::string& name) -> std::string {
    auto it = s.mean.find(name);
    if (it == s.mean.end()) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", it->second);
    return buf;
  };
  for (const auto& name : metric_names()) {
    std::snprintf(line, sizeof line, "%-16s %10s", name.c_str(), value(report.overall, name).c_str());
    out << line;
    for (const auto& [subset, s] : report.subsets) {
      std::snprintf(line, sizeof line, " %10s", value(s, name).c_str());
      out << line;
    }
    out << "\n";
  }
}

}  // namespace multiid

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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multiid/harness/config.hpp"
#include "multiid/metrics.hpp"
#include "multiid/store.hpp"

namespace multiid::harness {

enum class Stage { kCluster, kBuildBank, kAssign, kPair, kSplit, kStats };

std::string_view stage_name(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;
std::span<const Stage> pipeline_stages() noexcept;

struct RunContext {
  RunConfig config;
  std::filesystem::path data_root;
  bool force = false;          // ignore stamps and rerun
  std::ostream* notices = nullptr;  // progress lines; null silences them
};

// Relative data_root and output_dir resolve against the config file's
// directory.
RunContext make_context(RunConfig config, const std::optional<std::filesystem::path>& config_path);

// Files a stage reads and writes, relative to the run.
struct StageFiles {
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

StageFiles stage_files(Stage stage, const RunContext& ctx);

struct StageOutcome {
  Stage stage = Stage::kCluster;
  bool up_to_date = false;
  double wall_seconds = 0.0;
};

// Runs one stage from the artifacts already on disk. A stage whose inputs
// and parameters match its stamp and whose outputs exist is skipped.
// Failures are rethrown with the stage name prefixed, keeping the code.
StageOutcome run_stage(Stage stage, const RunContext& ctx);

// All stages in order; halts at the first failure.
std::vector<StageOutcome> run_pipeline(const RunContext& ctx);

struct EvalInputs {
  std::filesystem::path bench_set;      // bench.json
  CorpusPaths bench_corpus;
  CorpusPaths generated;
  std::filesystem::path output_dir;
};

// Defaults to the split stage artifacts and evaluates the bench corpus
// against itself when no generated corpus is named.
EvalInputs default_eval_inputs(const RunContext& ctx);

// Writes report.json and report.csv into output_dir.
EvalReport run_eval(const RunContext& ctx, const EvalInputs& inputs);

struct ConformanceRow {
  std::string check;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

// Gradient and closed-form checks of the loss oracles on seeded random
// instances.
std::vector<ConformanceRow> losses_check(const RunConfig& config, std::size_t instances);
std::string conformance_json(const RunConfig& config, std::span<const ConformanceRow> rows);
void print_conformance(std::span<const ConformanceRow> rows, std::ostream& out);

}  // namespace multiid::harness

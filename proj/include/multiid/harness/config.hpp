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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "multiid/cluster.hpp"
#include "multiid/losses.hpp"

namespace multiid::harness {

inline constexpr std::uint32_t kConfigVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kDataRootEnv = "MULTIID_DATA_ROOT";

struct RunConfig {
  std::filesystem::path data_root;     // empty: $MULTIID_DATA_ROOT, then the config file's directory
  std::filesystem::path output_dir = "multiid-out";
  std::string single_id_corpus = "single_id";  // <data_root>/<name>.json + .mide
  std::string multi_id_corpus = "multi_id";
  std::vector<std::string> face_backends = {"arcface"};  // first one clusters, retrieves and matches
  std::string clip_backend = "clip";

  ClusterParams cluster;
  double member_floor = 0.5;
  bool multi_centroid = false;
  std::size_t min_secondary_size = 2;

  double threshold = 0.5;
  std::size_t block_size = 1024;

  std::size_t min_references = 2;
  std::optional<double> min_aesthetic;
  std::optional<double> min_face_quality;

  std::size_t bench_identities = 0;
  std::size_t bench_max_samples = 435;
  std::size_t bench_references = 1;
  std::size_t bench_max_identities = 4;

  double paired_fraction = 0.5;
  double id_loss_weight = kDefaultIdWeight;
  double contrastive_loss_weight = kDefaultContrastiveWeight;
  double temperature = kDefaultTemperature;
  FlowReduction flow_reduction = FlowReduction::kSum;

  std::uint64_t seed = 0;
  std::size_t workers = 1;

  bool operator==(const RunConfig&) const = default;
};

// Throws Error(kConfig) naming the offending field.
void validate(const RunConfig& config);

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_json(const RunConfig& config);

// Applies "a.b=value"; the value is read as JSON and falls back to a plain
// string. Unknown keys throw Error(kConfig).
void apply_override(RunConfig& config, const std::string& assignment);

// Data root with the environment and config-directory fallbacks applied.
std::filesystem::path resolve_data_root(const RunConfig& config,
                                        const std::optional<std::filesystem::path>& config_path);

}  // namespace multiid::harness

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

#include "multiid/harness/config.hpp"

#include <cstdlib>

#include <json.hpp>

#include "multiid/error.hpp"
#include "multiid/store.hpp"

namespace multiid::harness {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_doc(const RunConfig& c) {
  return {
      {"format", "multiid-config"},
      {"version", kConfigVersion},
      {"data_root", c.data_root.string()},
      {"output_dir", c.output_dir.string()},
      {"inputs", {{"single_id", c.single_id_corpus}, {"multi_id", c.multi_id_corpus}}},
      {"backends", {{"face", c.face_backends}, {"clip", c.clip_backend}}},
      {"cluster", {{"eps", c.cluster.eps}, {"min_pts", c.cluster.min_pts}}},
      {"bank",
       {{"member_floor", c.member_floor},
        {"multi_centroid", c.multi_centroid},
        {"min_secondary_size", c.min_secondary_size}}},
      {"retrieval", {{"threshold", c.threshold}, {"block_size", c.block_size}}},
      {"pairing",
       {{"min_references", c.min_references},
        {"min_aesthetic", optional_number(c.min_aesthetic)},
        {"min_face_quality", optional_number(c.min_face_quality)}}},
      {"bench",
       {{"identity_count", c.bench_identities},
        {"max_samples", c.bench_max_samples},
        {"references_per_identity", c.bench_references},
        {"max_identities_per_sample", c.bench_max_identities}}},
      {"training",
       {{"paired_fraction", c.paired_fraction},
        {"id_loss_weight", c.id_loss_weight},
        {"contrastive_loss_weight", c.contrastive_loss_weight},
        {"temperature", c.temperature},
        {"flow_reduction", std::string(to_string(c.flow_reduction))}}},
      {"seed", c.seed},
      {"workers", c.workers},
  };
}

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error(Errc::kConfig, "field '" + field + "': " + what);
}

// Every key of `user` must exist in `schema`; objects recurse.
void merge_checked(json& schema, const json& user, const std::string& prefix) {
  if (!user.is_object()) field_error(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) field_error(field, "unknown field");
    json& slot = schema[key];
    if (slot.is_object()) {
      merge_checked(slot, value, field);
    } else {
      slot = value;
    }
  }
}

template <class T>
T get(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    node = &node->at(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!node->is_number_unsigned()) field_error(path, "expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!node->is_number()) field_error(path, "expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!node->is_boolean()) field_error(path, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!node->is_string()) field_error(path, "expected a string");
    }
    return node->get<T>();
  } catch (const json::exception& e) {
    field_error(path, e.what());
  }
}

std::optional<double> get_optional_number(const json& doc, const std::string& path) {
  const auto dot = path.find('.');
  const json& node = doc.at(path.substr(0, dot)).at(path.substr(dot + 1));
  if (node.is_null()) return std::nullopt;
  return get<double>(doc, path);
}

RunConfig from_doc(const json& doc) {
  if (get<std::string>(doc, "format") != "multiid-config") field_error("format", "expected \"multiid-config\"");
  if (get<std::size_t>(doc, "version") != kConfigVersion) {
    field_error("version", "unsupported version, expected " + std::to_string(kConfigVersion));
  }
  RunConfig c;
  c.data_root = get<std::string>(doc, "data_root");
  c.output_dir = get<std::string>(doc, "output_dir");
  c.single_id_corpus = get<std::string>(doc, "inputs.single_id");
  c.multi_id_corpus = get<std::string>(doc, "inputs.multi_id");
  const json& face = doc.at("backends").at("face");
  if (!face.is_array()) field_error("backends.face", "expected a list of backend ids");
  c.face_backends.clear();
  for (const auto& b : face) {
    if (!b.is_string()) field_error("backends.face", "expected a list of backend ids");
    c.face_backends.push_back(b.get<std::string>());
  }
  c.clip_backend = get<std::string>(doc, "backends.clip");
  c.cluster.eps = get<double>(doc, "cluster.eps");
  c.cluster.min_pts = get<std::size_t>(doc, "cluster.min_pts");
  c.member_floor = get<double>(doc, "bank.member_floor");
  c.multi_centroid = get<bool>(doc, "bank.multi_centroid");
  c.min_secondary_size = get<std::size_t>(doc, "bank.min_secondary_size");
  c.threshold = get<double>(doc, "retrieval.threshold");
  c.block_size = get<std::size_t>(doc, "retrieval.block_size");
  c.min_references = get<std::size_t>(doc, "pairing.min_references");
  c.min_aesthetic = get_optional_number(doc, "pairing.min_aesthetic");
  c.min_face_quality = get_optional_number(doc, "pairing.min_face_quality");
  c.bench_identities = get<std::size_t>(doc, "bench.identity_count");
  c.bench_max_samples = get<std::size_t>(doc, "bench.max_samples");
  c.bench_references = get<std::size_t>(doc, "bench.references_per_identity");
  c.bench_max_identities = get<std::size_t>(doc, "bench.max_identities_per_sample");
  c.paired_fraction = get<double>(doc, "training.paired_fraction");
  c.id_loss_weight = get<double>(doc, "training.id_loss_weight");
  c.contrastive_loss_weight = get<double>(doc, "training.contrastive_loss_weight");
  c.temperature = get<double>(doc, "training.temperature");
  const auto reduction = get<std::string>(doc, "training.flow_reduction");
  if (reduction == "sum") {
    c.flow_reduction = FlowReduction::kSum;
  } else if (reduction == "mean") {
    c.flow_reduction = FlowReduction::kMean;
  } else {
    field_error("training.flow_reduction", "expected \"sum\" or \"mean\"");
  }
  c.seed = get<std::uint64_t>(doc, "seed");
  c.workers = get<std::size_t>(doc, "workers");
  validate(c);
  return c;
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.output_dir.empty()) field_error("output_dir", "must not be empty");
  if (c.single_id_corpus.empty()) field_error("inputs.single_id", "must not be empty");
  if (c.multi_id_corpus.empty()) field_error("inputs.multi_id", "must not be empty");
  if (c.face_backends.empty()) field_error("backends.face", "needs at least one backend");
  for (const auto& b : c.face_backends) {
    if (b.empty()) field_error("backends.face", "backend ids must not be empty");
  }
  if (!(c.cluster.eps > 0.0 && c.cluster.eps < 2.0)) field_error("cluster.eps", "must lie in (0, 2)");
  if (c.cluster.min_pts == 0) field_error("cluster.min_pts", "must be positive");
  if (!(c.member_floor >= -1.0 && c.member_floor <= 1.0)) field_error("bank.member_floor", "must lie in [-1, 1]");
  if (!(c.threshold >= -1.0 && c.threshold <= 1.0)) field_error("retrieval.threshold", "must lie in [-1, 1]");
  if (c.block_size == 0) field_error("retrieval.block_size", "must be positive");
  if (c.min_references == 0) field_error("pairing.min_references", "must be positive");
  if (c.bench_references == 0 || c.bench_references > 4) {
    field_error("bench.references_per_identity", "must lie in [1, 4]");
  }
  if (c.bench_max_identities == 0 || c.bench_max_identities > 4) {
    field_error("bench.max_identities_per_sample", "must lie in [1, 4]");
  }
  if (!(c.paired_fraction >= 0.0 && c.paired_fraction <= 1.0)) {
    field_error("training.paired_fraction", "must lie in [0, 1]");
  }
  if (!(c.temperature > 0.0)) field_error("training.temperature", "must be positive");
  if (c.workers == 0) field_error("workers", "must be positive");
}

RunConfig parse_config(const std::string& json_text) {
  json user;
  try {
    user = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  json doc = to_doc(RunConfig{});
  merge_checked(doc, user, "");
  return from_doc(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    throw Error(Errc::kConfig, "can not read config file '" + path.string() + "'");
  }
  try {
    return parse_config(text);
  } catch (const Error& e) {
    throw Error(Errc::kConfig, path.string() + ": " + e.what());
  }
}

std::string config_json(const RunConfig& config) { return to_doc(config).dump(1) + "\n"; }

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(Errc::kConfig, "override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::vector<std::string> parts;
  for (std::size_t start = 0;;) {
    const auto dot = key.find('.', start);
    parts.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};

  json doc = to_doc(config);
  merge_checked(doc, patch, "");
  config = from_doc(doc);
}

std::filesystem::path resolve_data_root(const RunConfig& config,
                                        const std::optional<std::filesystem::path>& config_path) {
  if (!config.data_root.empty()) {
    if (config.data_root.is_relative() && config_path) return config_path->parent_path() / config.data_root;
    return config.data_root;
  }
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') return env;
  if (config_path) return config_path->parent_path().empty() ? "." : config_path->parent_path();
  return ".";
}

}  // namespace multiid::harness

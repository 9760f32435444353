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

#include "multiid/harness/pipeline.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "multiid/bank.hpp"
#include "multiid/cluster.hpp"
#include "multiid/error.hpp"
#include "multiid/gradcheck.hpp"
#include "multiid/injection.hpp"
#include "multiid/losses.hpp"
#include "multiid/pairing.hpp"
#include "multiid/random.hpp"
#include "multiid/report.hpp"
#include "multiid/retrieval.hpp"

namespace multiid::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<Stage, 6> kStages = {Stage::kCluster, Stage::kBuildBank, Stage::kAssign,
                                          Stage::kPair,    Stage::kSplit,     Stage::kStats};

fs::path out_dir(const RunContext& ctx) { return ctx.config.output_dir; }
CorpusPaths single_paths(const RunContext& ctx) { return CorpusPaths::in(ctx.data_root, ctx.config.single_id_corpus); }
CorpusPaths multi_paths(const RunContext& ctx) { return CorpusPaths::in(ctx.data_root, ctx.config.multi_id_corpus); }
CorpusPaths assigned_paths(const RunContext& ctx) { return CorpusPaths::in(out_dir(ctx), "assigned"); }
CorpusPaths bench_corpus_paths(const RunContext& ctx) { return CorpusPaths::in(out_dir(ctx), "bench_corpus"); }
fs::path bank_dir(const RunContext& ctx) { return out_dir(ctx) / "bank"; }

std::vector<fs::path> bank_files(const RunContext& ctx) {
  const fs::path d = bank_dir(ctx);
  return {d / "identities.json", d / "centroids.mide", d / "members.json", d / "members.mide"};
}

void add(std::vector<fs::path>& v, const CorpusPaths& p) {
  v.push_back(p.manifest);
  v.push_back(p.blob);
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kNotFound, "missing input '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

// Parameters a stage's output depends on.
json stage_params(Stage stage, const RunConfig& c) {
  switch (stage) {
    case Stage::kCluster:
      return {{"backend", c.face_backends.front()}, {"eps", c.cluster.eps}, {"min_pts", c.cluster.min_pts}};
    case Stage::kBuildBank:
      return {{"backend", c.face_backends.front()},
              {"member_floor", c.member_floor},
              {"multi_centroid", c.multi_centroid},
              {"min_secondary_size", c.min_secondary_size}};
    case Stage::kAssign:
      return {{"backend", c.face_backends.front()}, {"threshold", c.threshold}};
    case Stage::kPair:
      return {{"seed", derive_seed(c.seed, "pair")},
              {"min_references", c.min_references},
              {"min_aesthetic", c.min_aesthetic ? json(*c.min_aesthetic) : json(nullptr)},
              {"min_face_quality", c.min_face_quality ? json(*c.min_face_quality) : json(nullptr)}};
    case Stage::kSplit:
      return {{"seed", derive_seed(c.seed, "split")},
              {"identity_count", c.bench_identities},
              {"max_samples", c.bench_max_samples},
              {"references_per_identity", c.bench_references},
              {"max_identities_per_sample", c.bench_max_identities}};
    case Stage::kStats:
      return json::object();
  }
  return json::object();
}

std::optional<std::uint64_t> stage_seed(Stage stage, const RunConfig& c) {
  if (stage == Stage::kPair) return derive_seed(c.seed, "pair");
  if (stage == Stage::kSplit) return derive_seed(c.seed, "split");
  return std::nullopt;
}

struct InputDigest {
  std::uint64_t combined = 0;
  json files = json::array();
};

InputDigest digest_inputs(std::string_view name, const StageFiles& files, const json& params) {
  InputDigest d;
  std::string text = std::string(name) + "\n" + kToolVersion + "\n" + params.dump() + "\n";
  for (const auto& p : files.inputs) {
    const auto h = file_hash(p);
    text += p.generic_string() + " " + hex(h) + "\n";
    d.files.push_back({{"path", p.generic_string()}, {"fnv1a64", hex(h)}});
  }
  d.combined = fnv1a64(text);
  return d;
}

fs::path stamp_path(const RunContext& ctx, std::string_view name) {
  return out_dir(ctx) / "stamps" / (std::string(name) + ".json");
}

bool stamp_matches(const RunContext& ctx, std::string_view name, const InputDigest& digest, const StageFiles& files) {
  const fs::path p = stamp_path(ctx, name);
  if (!fs::exists(p)) return false;
  const json stamp = json::parse(read_text_file(p), nullptr, false);
  if (stamp.is_discarded() || !stamp.is_object() || stamp.value("input_hash", "") != hex(digest.combined)) {
    return false;
  }
  for (const auto& o : files.outputs) {
    if (!fs::exists(o)) return false;
  }
  return true;
}

void write_stamp(const RunContext& ctx, std::string_view name, const InputDigest& digest, const StageFiles& files) {
  json outputs = json::array();
  for (const auto& o : files.outputs) outputs.push_back(o.generic_string());
  const json stamp = {{"stage", name},
                      {"version", kToolVersion},
                      {"input_hash", hex(digest.combined)},
                      {"inputs", digest.files},
                      {"outputs", outputs}};
  fs::create_directories(stamp_path(ctx, name).parent_path());
  write_text_file(stamp_path(ctx, name), stamp.dump(1) + "\n");
}

void write_run_log(const RunContext& ctx, std::string_view name, const std::string& status, const json& inputs,
                   std::optional<std::uint64_t> seed, double wall_seconds, const std::string& error = {}) {
  json log = {{"stage", name},
              {"status", status},
              {"version", kToolVersion},
              {"root_seed", ctx.config.seed},
              {"stage_seed", seed ? json(*seed) : json(nullptr)},
              {"inputs", inputs},
              {"wall_time_seconds", wall_seconds},
              {"config", json::parse(config_json(ctx.config))}};
  if (!error.empty()) log["error"] = error;
  const fs::path p = out_dir(ctx) / "logs" / (std::string(name) + ".json");
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  write_text_file(p, log.dump(1) + "\n");
}

void notice(const RunContext& ctx, const std::string& line) {
  if (ctx.notices != nullptr) *ctx.notices << line << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --------------------------------------------------------------------------
// clusters.json

std::string clusters_json(const std::vector<IdentityGroup>& groups, const RunConfig& c) {
  json arr = json::array();
  for (const auto& g : groups) {
    json face_ids = json::array();
    for (const FaceRecord* f : g.faces) face_ids.push_back(f->face_id);
    json core = json::array();
    for (bool b : g.clustering.core) core.push_back(b);
    arr.push_back({{"identity_id", g.identity_id},
                   {"face_ids", face_ids},
                   {"labels", g.clustering.labels},
                   {"core", core},
                   {"cluster_count", g.clustering.cluster_count}});
  }
  json doc = {{"format", "multiid-clusters"},
              {"version", 1},
              {"backend", c.face_backends.front()},
              {"eps", c.cluster.eps},
              {"min_pts", c.cluster.min_pts},
              {"groups", arr}};
  return doc.dump(1) + "\n";
}

std::vector<IdentityGroup> clusters_from_json(const std::string& text, const Corpus& corpus) {
  std::vector<IdentityGroup> groups;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "multiid-clusters") throw Error(Errc::kParse, "not a clusters file");
    if (doc.at("version") != 1) throw Error(Errc::kVersionMismatch, "unsupported clusters version");
    for (const auto& g : doc.at("groups")) {
      IdentityGroup group;
      group.identity_id = g.at("identity_id").get<std::string>();
      for (const auto& id : g.at("face_ids")) {
        const FaceRecord* f = corpus.find_face(id.get<std::string>());
        if (f == nullptr) throw Error(Errc::kNotFound, "clustered face '" + id.get<std::string>() + "' not in corpus");
        group.faces.push_back(f);
      }
      group.clustering.labels = g.at("labels").get<std::vector<int>>();
      group.clustering.core = g.at("core").get<std::vector<bool>>();
      group.clustering.cluster_count = g.at("cluster_count").get<std::size_t>();
      if (group.clustering.labels.size() != group.faces.size() || group.clustering.core.size() != group.faces.size()) {
        throw Error(Errc::kCountMismatch, "cluster labels of '" + group.identity_id + "' do not match its faces");
      }
      for (int label : group.clustering.labels) {
        if (label < kNoise || label >= static_cast<int>(group.clustering.cluster_count)) {
          throw Error(Errc::kParse, "cluster label out of range in '" + group.identity_id + "'");
        }
      }
      groups.push_back(std::move(group));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kParse, std::string("clusters file: ") + e.what());
  }
  return groups;
}

std::string assignments_json(const std::vector<AssignmentResult>& results, const RunConfig& c) {
  json arr = json::array();
  std::size_t assigned = 0;
  for (const auto& r : results) {
    assigned += r.assigned ? 1 : 0;
    arr.push_back({{"face_id", r.face_id},
                   {"identity_id", r.best_identity ? json(*r.best_identity) : json(nullptr)},
                   {"nearest_identity", r.nearest_identity ? json(*r.nearest_identity) : json(nullptr)},
                   {"best_similarity", round_for_report(r.best_similarity)},
                   {"second_best_similarity", round_for_report(r.second_best_similarity)},
                   {"assigned", r.assigned}});
  }
  json doc = {{"format", "multiid-assignments"},
              {"version", 1},
              {"backend", c.face_backends.front()},
              {"threshold", c.threshold},
              {"faces", results.size()},
              {"assigned", assigned},
              {"results", arr}};
  return doc.dump(1) + "\n";
}

// --------------------------------------------------------------------------
// stage bodies

void cluster_stage(const RunContext& ctx) {
  const auto single = ingest(single_paths(ctx));
  const auto groups = cluster_groups(*single, ctx.config.face_backends.front(), ctx.config.cluster, ctx.config.workers);
  write_text_file(out_dir(ctx) / "clusters.json", clusters_json(groups, ctx.config));
}

void build_bank_stage(const RunContext& ctx) {
  const auto single = ingest(single_paths(ctx));
  const auto groups = clusters_from_json(read_text_file(out_dir(ctx) / "clusters.json"), *single);
  BankOptions options;
  options.cluster_backend = ctx.config.face_backends.front();
  options.member_floor = ctx.config.member_floor;
  options.multi_centroid = ctx.config.multi_centroid;
  options.min_secondary_size = ctx.config.min_secondary_size;
  const auto result = build_bank(groups, options);
  save_bank(result.bank, bank_dir(ctx));
  json warnings = json::array();
  for (const auto& w : result.warnings) warnings.push_back({{"identity_id", w.identity_id}, {"message", w.message}});
  const json doc = {{"format", "multiid-bank-report"},
                    {"version", 1},
                    {"identities", result.bank.size()},
                    {"members", result.bank.member_count()},
                    {"warnings", warnings}};
  write_text_file(out_dir(ctx) / "bank_report.json", doc.dump(1) + "\n");
}

void assign_stage(const RunContext& ctx) {
  const ReferenceBank bank = load_bank(bank_dir(ctx));
  const auto multi = ingest(multi_paths(ctx));
  const auto batch = make_face_batch(*multi, ctx.config.face_backends.front());
  const auto results = assign_blocked(batch, bank, ctx.config.threshold,
                                      BlockedOptions{ctx.config.block_size, ctx.config.workers});
  std::unordered_map<std::string, std::optional<std::string>> labels;
  for (const auto& r : results) labels.emplace(r.face_id, r.best_identity);
  export_corpus(multi->with_identities(labels, SplitTag::kMultiId), assigned_paths(ctx));
  write_text_file(out_dir(ctx) / "assignments.json", assignments_json(results, ctx.config));
}

void pair_stage(const RunContext& ctx) {
  const auto assigned = ingest(assigned_paths(ctx));
  const ReferenceBank bank = load_bank(bank_dir(ctx));
  PairingOptions options;
  options.min_references = ctx.config.min_references;
  if (ctx.config.min_aesthetic) options.filters.push_back(min_aesthetic(*ctx.config.min_aesthetic));
  if (ctx.config.min_face_quality) options.filters.push_back(min_face_quality(*ctx.config.min_face_quality));
  const auto result = build_pairs(*assigned, bank, derive_seed(ctx.config.seed, "pair"), options);
  write_text_file(out_dir(ctx) / "pairs.json", pairs_to_json(result));
}

void split_stage(const RunContext& ctx) {
  const auto assigned = ingest(assigned_paths(ctx));
  const auto single = ingest(single_paths(ctx));
  const ReferenceBank bank = load_bank(bank_dir(ctx));
  BenchOptions options;
  options.identity_count = ctx.config.bench_identities;
  options.max_samples = ctx.config.bench_max_samples;
  options.references_per_identity = ctx.config.bench_references;
  options.max_identities_per_sample = ctx.config.bench_max_identities;
  options.seed = derive_seed(ctx.config.seed, "split");
  const BenchSplit split = split_bench(*assigned, bank, options);
  write_text_file(out_dir(ctx) / "bench.json", bench_to_json(split.bench));
  write_text_file(out_dir(ctx) / "splits.json", split_to_json(split));
  export_corpus(bench_corpus(split.bench, *assigned, bank, single.get()), bench_corpus_paths(ctx));
}

void stats_stage(const RunContext& ctx) {
  const auto single = ingest(single_paths(ctx));
  const auto assigned = ingest(assigned_paths(ctx));
  const ReferenceBank bank = load_bank(bank_dir(ctx));
  const PairingResult pairs = pairs_from_json(read_text_file(out_dir(ctx) / "pairs.json"));
  const std::array<const Corpus*, 2> corpora = {single.get(), assigned.get()};
  const CorpusStats stats = corpus_stats(corpora, &bank, &pairs);
  write_text_file(out_dir(ctx) / "stats.json", stats_to_json(stats));
  write_text_file(out_dir(ctx) / "identity_histogram.csv", identity_histogram_csv(stats));
  write_text_file(out_dir(ctx) / "faces_per_image.csv", faces_per_image_csv(stats));
}

void run_body(Stage stage, const RunContext& ctx) {
  switch (stage) {
    case Stage::kCluster: return cluster_stage(ctx);
    case Stage::kBuildBank: return build_bank_stage(ctx);
    case Stage::kAssign: return assign_stage(ctx);
    case Stage::kPair: return pair_stage(ctx);
    case Stage::kSplit: return split_stage(ctx);
    case Stage::kStats: return stats_stage(ctx);
  }
}

}  // namespace

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::kCluster: return "cluster";
    case Stage::kBuildBank: return "build-bank";
    case Stage::kAssign: return "assign";
    case Stage::kPair: return "pair";
    case Stage::kSplit: return "split";
    case Stage::kStats: return "stats";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (Stage s : kStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

std::span<const Stage> pipeline_stages() noexcept { return kStages; }

RunContext make_context(RunConfig config, const std::optional<fs::path>& config_path) {
  validate(config);
  RunContext ctx;
  ctx.data_root = resolve_data_root(config, config_path);
  if (config.output_dir.is_relative() && config_path) config.output_dir = config_path->parent_path() / config.output_dir;
  ctx.config = std::move(config);
  return ctx;
}

StageFiles stage_files(Stage stage, const RunContext& ctx) {
  StageFiles f;
  const fs::path out = out_dir(ctx);
  const auto bank = bank_files(ctx);
  switch (stage) {
    case Stage::kCluster:
      add(f.inputs, single_paths(ctx));
      f.outputs = {out / "clusters.json"};
      break;
    case Stage::kBuildBank:
      add(f.inputs, single_paths(ctx));
      f.inputs.push_back(out / "clusters.json");
      f.outputs = bank;
      f.outputs.push_back(out / "bank_report.json");
      break;
    case Stage::kAssign:
      f.inputs = bank;
      add(f.inputs, multi_paths(ctx));
      add(f.outputs, assigned_paths(ctx));
      f.outputs.push_back(out / "assignments.json");
      break;
    case Stage::kPair:
      add(f.inputs, assigned_paths(ctx));
      f.inputs.insert(f.inputs.end(), bank.begin(), bank.end());
      f.outputs = {out / "pairs.json"};
      break;
    case Stage::kSplit:
      add(f.inputs, assigned_paths(ctx));
      add(f.inputs, single_paths(ctx));
      f.inputs.insert(f.inputs.end(), bank.begin(), bank.end());
      f.outputs = {out / "bench.json", out / "splits.json"};
      add(f.outputs, bench_corpus_paths(ctx));
      break;
    case Stage::kStats:
      add(f.inputs, single_paths(ctx));
      add(f.inputs, assigned_paths(ctx));
      f.inputs.insert(f.inputs.end(), bank.begin(), bank.end());
      f.inputs.push_back(out / "pairs.json");
      f.outputs = {out / "stats.json", out / "identity_histogram.csv", out / "faces_per_image.csv"};
      break;
  }
  return f;
}

StageOutcome run_stage(Stage stage, const RunContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const std::string name(stage_name(stage));
  StageOutcome outcome{stage, false, 0.0};
  json inputs = json::array();
  try {
    std::error_code ec;
    fs::create_directories(out_dir(ctx), ec);
    if (ec) throw Error(Errc::kIo, "can not create output directory '" + out_dir(ctx).string() + "'");
    const StageFiles files = stage_files(stage, ctx);
    const InputDigest digest = digest_inputs(name, files, stage_params(stage, ctx.config));
    inputs = digest.files;
    if (!ctx.force && stamp_matches(ctx, name, digest, files)) {
      outcome.up_to_date = true;
      outcome.wall_seconds = seconds_since(start);
      notice(ctx, name + ": up-to-date");
      write_run_log(ctx, name, "up-to-date", inputs, stage_seed(stage, ctx.config), outcome.wall_seconds);
      return outcome;
    }
    fs::remove(stamp_path(ctx, name), ec);
    run_body(stage, ctx);
    write_stamp(ctx, name, digest, files);
  } catch (const Error& e) {
    write_run_log(ctx, name, "failed", inputs, stage_seed(stage, ctx.config), seconds_since(start), e.what());
    throw Error(e.code(), "stage '" + name + "' failed: " + e.what());
  }
  outcome.wall_seconds = seconds_since(start);
  char buf[64];
  std::snprintf(buf, sizeof buf, ": done in %.3f s", outcome.wall_seconds);
  notice(ctx, name + buf);
  write_run_log(ctx, name, "ran", inputs, stage_seed(stage, ctx.config), outcome.wall_seconds);
  return outcome;
}

std::vector<StageOutcome> run_pipeline(const RunContext& ctx) {
  std::vector<StageOutcome> outcomes;
  for (Stage s : kStages) outcomes.push_back(run_stage(s, ctx));
  return outcomes;
}

EvalInputs default_eval_inputs(const RunContext& ctx) {
  return {out_dir(ctx) / "bench.json", bench_corpus_paths(ctx), bench_corpus_paths(ctx), out_dir(ctx) / "eval"};
}

EvalReport run_eval(const RunContext& ctx, const EvalInputs& in) {
  const auto start = std::chrono::steady_clock::now();
  json inputs = json::array();
  for (const auto& p : {in.bench_set, in.bench_corpus.manifest, in.bench_corpus.blob, in.generated.manifest,
                        in.generated.blob}) {
    inputs.push_back({{"path", p.generic_string()}, {"fnv1a64", hex(file_hash(p))}});
  }
  const BenchSet bench = bench_from_json(read_text_file(in.bench_set));
  const auto bench_corpus = ingest(in.bench_corpus);
  const auto generated = ingest(in.generated);
  EvalOptions options;
  options.face_backends = ctx.config.face_backends;
  options.clip_backend = ctx.config.clip_backend;
  options.workers = ctx.config.workers;
  EvalReport report = evaluate(bench, *bench_corpus, *generated, options);

  std::error_code ec;
  fs::create_directories(in.output_dir, ec);
  if (ec) throw Error(Errc::kIo, "can not create '" + in.output_dir.string() + "'");
  write_text_file(in.output_dir / "report.json", report_json(report));
  write_text_file(in.output_dir / "report.csv", report_csv(report));
  const json log = {{"stage", "eval"},
                    {"status", "ran"},
                    {"version", kToolVersion},
                    {"root_seed", ctx.config.seed},
                    {"inputs", inputs},
                    {"wall_time_seconds", seconds_since(start)},
                    {"config", json::parse(config_json(ctx.config))}};
  write_text_file(in.output_dir / "eval_log.json", log.dump(1) + "\n");
  return report;
}

// --------------------------------------------------------------------------
// losses-check

namespace {

constexpr double kGradTolerance = 1e-4;

std::vector<double> normal_vector(std::size_t dim, Rng& rng, double scale = 1.0) {
  std::vector<double> v(dim);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

std::vector<double> unit_vector(std::size_t dim, Rng& rng) {
  auto v = normal_vector(dim, rng);
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

// g of norm in [0.5, 2], unit r and negatives, temperature in [0.1, 1].
ContrastiveInstance random_contrastive(std::size_t dim, std::size_t negatives, Rng& rng, InfoNceDenominator d) {
  ContrastiveInstance inst;
  inst.g = unit_vector(dim, rng);
  const double scale = rng.uniform(0.5, 2.0);
  for (auto& x : inst.g) x *= scale;
  inst.r = unit_vector(dim, rng);
  for (std::size_t j = 0; j < negatives; ++j) inst.negatives.push_back(unit_vector(dim, rng));
  inst.tau = rng.uniform(0.1, 1.0);
  inst.denominator = d;
  return inst;
}

ConformanceRow grad_row(const std::string& name, const std::vector<LossInput>& inputs, const std::string& note) {
  double worst = 0.0;
  for (const auto& in : inputs) worst = std::max(worst, grad_check(in).max_relative_error);
  return {name, worst, kGradTolerance, worst < kGradTolerance,
          note + ", " + std::to_string(inputs.size()) + " instances"};
}

ConformanceRow value_row(const std::string& name, double value, double expected, double tolerance,
                         const std::string& note) {
  const double err = std::abs(value - expected);
  return {name, err, tolerance, err <= tolerance, note};
}

}  // namespace

std::vector<ConformanceRow> losses_check(const RunConfig& config, std::size_t instances) {
  Rng rng(derive_seed(config.seed, "losses-check"));
  std::vector<ConformanceRow> rows;

  std::vector<LossInput> flow;
  for (std::size_t i = 0; i < instances; ++i) {
    FlowSample s;
    const std::size_t dim = 4 + rng.uniform_index(61);
    s.x0 = normal_vector(dim, rng);
    s.x1 = normal_vector(dim, rng);
    s.prediction = normal_vector(dim, rng);
    s.t = rng.uniform01();
    flow.push_back(FlowLossInput{s, config.flow_reduction});
  }
  rows.push_back(grad_row("flow_loss gradient", flow,
                          "reduction " + std::string(to_string(config.flow_reduction))));

  std::vector<LossInput> id;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::size_t dim = 4 + rng.uniform_index(61);
    auto g = unit_vector(dim, rng);
    const double scale = rng.uniform(0.5, 2.0);
    for (auto& x : g) x *= scale;
    id.push_back(IdLossInput{g, unit_vector(dim, rng)});
  }
  rows.push_back(grad_row("id_loss gradient", id, "w.r.t. unnormalized g"));

  std::vector<LossInput> cl;
  for (std::size_t i = 0; i < instances; ++i) {
    cl.push_back(random_contrastive(4 + rng.uniform_index(29), 16, rng, InfoNceDenominator::kWithPositive));
  }
  rows.push_back(grad_row("contrastive_loss gradient", cl, "16 negatives"));

  std::vector<LossInput> cl_neg;
  for (std::size_t i = 0; i < instances; ++i) {
    cl_neg.push_back(random_contrastive(4 + rng.uniform_index(29), 16, rng, InfoNceDenominator::kNegativesOnly));
  }
  rows.push_back(grad_row("contrastive_loss gradient (negatives-only)", cl_neg, "16 negatives"));

  {
    ContrastiveInstance inst;
    inst.g = {1.0, 0.0};
    inst.r = {1.0, 0.0};
    inst.negatives = {{-1.0, 0.0}};
    inst.tau = 1.0;
    rows.push_back(value_row("contrastive_loss closed form (tau 1)", contrastive_loss(inst),
                             std::log(1.0 + std::exp(-2.0)), 1e-9, "positive cos 1, one negative cos -1"));
    inst.r = {0.5, std::sqrt(0.75)};
    inst.tau = 0.5;
    rows.push_back(value_row("contrastive_loss closed form (logits 1, -2)", contrastive_loss(inst),
                             -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-2.0))), 1e-9,
                             "tau 0.5, positive cos 0.5, one negative cos -1"));
  }
  {
    ContrastiveInstance inst;
    inst.g = unit_vector(8, rng);
    inst.r = inst.g;
    inst.negatives.assign(4096, inst.g);
    inst.tau = config.temperature;
    rows.push_back(value_row("contrastive_loss uniform logits", contrastive_loss(inst), std::log(4097.0), 1e-9,
                             "4096 negatives equal to the positive"));
  }
  rows.push_back(value_row("total_loss weights",
                           total_loss(1.0, 1.0, 1.0, config.id_loss_weight, config.contrastive_loss_weight),
                           1.0 + config.id_loss_weight + config.contrastive_loss_weight, 1e-12,
                           "components (1, 1, 1)"));
  {
    InjectionConfig cfg;
    cfg.hidden = random_matrix(4, 6, rng);
    cfg.face_tokens = random_matrix(8, 6, rng);
    cfg.w_q = random_matrix(6, 3, rng);
    cfg.w_k = random_matrix(6, 3, rng);
    cfg.w_v = random_matrix(6, 6, rng);
    cfg.mask = Eigen::MatrixXd::Constant(4, 8, kMaskedLogit);
    for (int i = 0; i < 3; ++i) cfg.mask(i, i) = 0.0;
    cfg.mask(0, 5) = 0.0;
    const Eigen::MatrixXd w = attention_weights(cfg);
    double row_err = 0.0;
    for (int i = 0; i < 3; ++i) row_err = std::max(row_err, std::abs(w.row(i).sum() - 1.0));
    rows.push_back({"inject softmax rows", row_err, 1e-6, row_err <= 1e-6 && w.row(3).isZero(0.0),
                    "unmasked rows sum to 1, fully masked row is zero"});
    const Eigen::MatrixXd updated = inject(cfg);
    const double masked_update = (updated.row(3) - cfg.hidden.row(3)).cwiseAbs().maxCoeff();
    cfg.lambda_id = 0.0;
    const bool identity = inject(cfg) == cfg.hidden;
    rows.push_back({"inject lambda_id = 0", masked_update, 0.0, identity && masked_update == 0.0,
                    "output equals hidden tokens exactly"});
  }
  return rows;
}

std::string conformance_json(const RunConfig& config, std::span<const ConformanceRow> rows) {
  json arr = json::array();
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.pass;
    arr.push_back({{"check", r.check},
                   {"value", r.value},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass},
                   {"note", r.note}});
  }
  const json doc = {{"format", "multiid-losses-check"},
                    {"version", 1},
                    {"seed", config.seed},
                    {"flow_reduction", std::string(to_string(config.flow_reduction))},
                    {"temperature", config.temperature},
                    {"pass", all},
                    {"checks", arr}};
  return doc.dump(1) + "\n";
}

void print_conformance(std::span<const ConformanceRow> rows, std::ostream& out) {
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-4s %-44s %.3e (tol %.1e)  %s", r.pass ? "PASS" : "FAIL", r.check.c_str(),
                  r.value, r.tolerance, r.note.c_str());
    out << line << "\n";
  }
}

}  // namespace multiid::harness

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

#include "multiid/harness/cli.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "multiid/error.hpp"
#include "multiid/harness/config.hpp"
#include "multiid/harness/pipeline.hpp"
#include "multiid/report.hpp"
#include "multiid/store.hpp"
#include "multiid/synthetic.hpp"

namespace multiid::harness {

namespace fs = std::filesystem;

namespace {

// Options shared by every subcommand that reads a run configuration.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string output;
  std::string data_root;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Run configuration (JSON)");
  cmd->add_option("--set", o.overrides, "Override a config field, e.g. --set cluster.eps=0.4");
  cmd->add_option("--threshold", o.threshold, "retrieval.threshold");
  cmd->add_option("--seed", o.seed, "seed");
  cmd->add_option("--workers", o.workers, "workers");
  cmd->add_option("--output", o.output, "output_dir");
  cmd->add_option("--data-root", o.data_root, "data_root");
  cmd->add_flag("--force", o.force, "Rerun stages even when up to date");
}

RunContext context_from(const CommonOptions& o, std::ostream& notices) {
  std::optional<fs::path> path;
  RunConfig config;
  if (!o.config_path.empty()) {
    path = fs::path(o.config_path);
    config = load_config(*path);
  }
  for (const auto& s : o.overrides) apply_override(config, s);
  if (o.threshold) config.threshold = *o.threshold;
  if (o.seed) config.seed = *o.seed;
  if (o.workers) config.workers = *o.workers;
  if (!o.output.empty()) config.output_dir = fs::absolute(o.output);
  if (!o.data_root.empty()) config.data_root = fs::absolute(o.data_root);
  RunContext ctx = make_context(std::move(config), path);
  ctx.force = o.force;
  ctx.notices = &notices;
  return ctx;
}

CorpusPaths corpus_paths_of(const fs::path& manifest, const std::string& blob) {
  CorpusPaths p{manifest, blob.empty() ? fs::path(manifest).replace_extension(".mide") : fs::path(blob)};
  return p;
}

int code_for(const Error& e) {
  if (e.code() == Errc::kConfig) return kExitConfig;
  if (is_data_error(e.code())) return kExitData;
  return kExitInternal;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identity bank construction, multi-identity pairing and benchmark evaluation", "multiid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions common;
  std::vector<CLI::App*> stage_cmds;
  for (Stage s : pipeline_stages()) {
    auto* cmd = app.add_subcommand(std::string(stage_name(s)), "Run the " + std::string(stage_name(s)) + " stage");
    add_common(cmd, common);
    stage_cmds.push_back(cmd);
  }

  auto* pipeline = app.add_subcommand("pipeline", "Run cluster, build-bank, assign, pair, split and stats in order");
  add_common(pipeline, common);

  std::string ingest_manifest, ingest_blob;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a corpus manifest and blob");
  ingest_cmd->add_option("--manifest", ingest_manifest, "Manifest JSON")->required();
  ingest_cmd->add_option("--blob", ingest_blob, "Embedding blob (default: manifest with .mide)");

  std::string eval_bench, eval_bench_corpus, eval_generated, eval_out;
  auto* eval = app.add_subcommand("eval", "Score generated images against a bench set");
  add_common(eval, common);
  eval->add_option("--bench", eval_bench, "Bench set JSON (default: <output>/bench.json)");
  eval->add_option("--bench-corpus", eval_bench_corpus, "Bench corpus manifest (default: <output>/bench_corpus.json)");
  eval->add_option("--generated", eval_generated, "Generated corpus manifest (default: the bench corpus)");
  eval->add_option("--report-dir", eval_out, "Report directory (default: <output>/eval)");

  std::size_t check_instances = 100;
  std::string check_json;
  auto* losses = app.add_subcommand("losses-check", "Verify loss gradients and closed forms");
  add_common(losses, common);
  losses->add_option("--instances", check_instances, "Random instances per gradient check")
      ->check(CLI::PositiveNumber);
  losses->add_option("--json", check_json, "Also write the table as JSON");

  SyntheticWorldOptions synth_options;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic single-ID and multi-ID corpus");
  synth->add_option("--out", synth_out, "Directory to write into")->required();
  synth->add_option("--identities", synth_options.identities, "Identities")->check(CLI::PositiveNumber);
  synth->add_option("--images-per-identity", synth_options.single_images_per_identity, "Single-ID images each");
  synth->add_option("--multi-images", synth_options.multi_images, "Multi-ID images");
  synth->add_option("--dim", synth_options.dim, "Face embedding dimension")->check(CLI::Range(2, 4096));
  synth->add_option("--backends", synth_options.face_backends, "Face backend ids");
  synth->add_option("--seed", synth_options.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed()) {
        run_stage(pipeline_stages()[i], context_from(common, err));
        return kExitOk;
      }
    }
    if (pipeline->parsed()) {
      run_pipeline(context_from(common, err));
      return kExitOk;
    }
    if (ingest_cmd->parsed()) {
      const auto corpus = ingest(corpus_paths_of(ingest_manifest, ingest_blob));
      nlohmann::json backends = nlohmann::json::array();
      for (const auto& b : corpus->manifest().backends) {
        backends.push_back({{"backend_id", b.backend_id}, {"dimension", b.dimension}, {"scope", to_string(b.scope)}});
      }
      const nlohmann::json summary = {{"corpus_id", corpus->id()},
                                      {"split", to_string(corpus->manifest().split)},
                                      {"images", corpus->images().size()},
                                      {"faces", corpus->faces().size()},
                                      {"backends", backends}};
      out << summary.dump(1) << "\n";
      return kExitOk;
    }
    if (eval->parsed()) {
      const RunContext ctx = context_from(common, err);
      EvalInputs in = default_eval_inputs(ctx);
      if (!eval_bench.empty()) in.bench_set = eval_bench;
      if (!eval_bench_corpus.empty()) {
        in.bench_corpus = corpus_paths_of(eval_bench_corpus, "");
        if (eval_generated.empty()) in.generated = in.bench_corpus;
      }
      if (!eval_generated.empty()) in.generated = corpus_paths_of(eval_generated, "");
      if (!eval_out.empty()) in.output_dir = eval_out;
      print_summary(run_eval(ctx, in), out);
      return kExitOk;
    }
    if (losses->parsed()) {
      const RunContext ctx = context_from(common, err);
      const auto rows = losses_check(ctx.config, check_instances);
      print_conformance(rows, out);
      if (!check_json.empty()) write_text_file(check_json, conformance_json(ctx.config, rows));
      const bool all = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
      return all ? kExitOk : kExitInternal;
    }
    if (synth->parsed()) {
      const fs::path dir = synth_out;
      fs::create_directories(dir);
      const SyntheticWorld world = synthetic_world(synth_options);
      export_corpus(world.single_id, CorpusPaths::in(dir, "single_id"));
      export_corpus(world.multi_id, CorpusPaths::in(dir, "multi_id"));
      write_text_file(dir / "truth.json", nlohmann::json(world.truth).dump(1) + "\n");
      RunConfig config;
      config.output_dir = "out";
      config.face_backends = synth_options.face_backends;
      config.clip_backend = synth_options.clip_backend;
      config.seed = synth_options.seed;
      write_text_file(dir / "config.json", config_json(config));
      out << "wrote " << world.single_id.faces().size() << " single-ID faces and " << world.multi_id.faces().size()
          << " multi-ID faces to " << dir.string() << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return code_for(e);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace multiid::harness

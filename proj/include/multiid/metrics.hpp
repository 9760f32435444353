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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multiid/embedding.hpp"
#include "multiid/matching.hpp"
#include "multiid/pairing.hpp"
#include "multiid/store.hpp"

namespace multiid {

// 1 - sim_gt at or below this counts as a perfect ground-truth match, where
// the normalized copy-paste score is defined as 0.
inline constexpr double kUnitSimilarityTolerance = 1e-6;

// Normalized copy-paste score (sim_ref - sim_gt) / (1 - sim_gt), clipped to
// [-1, 1]: 0 when the output is as close to the ground truth as to the
// references, 1 when it reproduces a reference exactly. Inputs outside
// [-1, 1] (beyond rounding) throw.
double copy_paste(double sim_ref, double sim_gt);

// Unnormalized difference, reported alongside for transparency.
double copy_paste_raw(double sim_ref, double sim_gt);

// Optimal matching of generated to target faces on one backend.
MatchedFaces match_faces(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                         const std::string& backend_id);

struct BackendMean {
  std::optional<double> value;            // unweighted mean over present backends
  std::map<std::string, double> per_backend;
  std::vector<std::string> missing;       // backends absent on some face

  bool operator==(const BackendMean&) const = default;
};

// Mean matched-pair cosine per backend (the diagonal of the aligned
// similarity matrix), then the mean over backends. One matching, computed
// on the designated backend, is reused for every backend.
BackendMean id_similarity(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                          const MatchedFaces& matching, std::span<const std::string> backends);

// Square matrix whose entry (i, j) is cos(gen of pair i, target of pair j);
// the diagonal holds the matched pairs.
SimilarityMatrix aligned_similarity(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                                    const MatchedFaces& matching, const std::string& backend_id);

// Mean of the off-diagonal entries of an aligned square matrix; absent for
// fewer than two identities.
std::optional<double> blend(const SimilarityMatrix& aligned);

std::optional<double> blend(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                            const MatchedFaces& matching, const std::string& backend_id);

struct ClipScores {
  std::optional<double> clip_i;
  std::optional<double> clip_t;
  std::vector<std::string> flags;
};

ClipScores clip_scores(const Embedding* gen_image, const Embedding* gt_image, const Embedding* prompt);

struct BackendBreakdown {
  double sim_gt = 0.0;
  double sim_ref = 0.0;
  double sim_ref_mean = 0.0;
  std::optional<double> blend;
};

struct SampleMetrics {
  std::string sample_id;
  std::size_t identity_count = 0;
  std::size_t generated_faces = 0;
  std::size_t matched_faces = 0;
  std::optional<double> sim_gt;
  std::optional<double> sim_ref;       // max over each identity's references
  std::optional<double> sim_ref_mean;  // mean over each identity's references
  std::optional<double> copy_paste;
  std::optional<double> copy_paste_raw;
  std::optional<double> blend;
  std::optional<double> clip_i;
  std::optional<double> clip_t;
  std::optional<double> aesthetic;
  std::map<std::string, BackendBreakdown> backends;
  std::vector<std::string> flags;
};

struct MetricSummary {
  std::size_t samples = 0;
  std::map<std::string, double> mean;         // metric -> mean over samples where present
  std::map<std::string, std::size_t> present; // metric -> samples contributing
};

struct EvalReport {
  std::string matching_backend;
  std::vector<std::string> face_backends;
  std::vector<SampleMetrics> samples;
  std::vector<std::string> skipped;
  MetricSummary overall;
  std::map<std::string, MetricSummary> subsets;  // "1", "2", "3-4"
};

struct EvalOptions {
  std::vector<std::string> face_backends;  // first is the matcher; empty -> bench corpus order
  std::string clip_backend = "clip";
  std::size_t workers = 1;
};

// Evaluates generated images (generated corpus image_id == sample_id)
// against a bench set whose faces live in `bench`.
EvalReport evaluate(const BenchSet& bench_set, const Corpus& bench, const Corpus& generated,
                    const EvalOptions& options = {});

// Metric names in report order.
std::span<const std::string> metric_names();
std::optional<double> metric_value(const SampleMetrics& m, const std::string& name);
std::string subset_of(std::size_t identity_count);

MetricSummary summarize(std::span<const SampleMetrics> samples);

}  // namespace multiid

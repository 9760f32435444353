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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multiid/bank.hpp"
#include "multiid/random.hpp"
#include "multiid/store.hpp"

namespace multiid {

// ---------------------------------------------------------------------------
// Paired samples
// ---------------------------------------------------------------------------

struct PairedIdentity {
  std::string identity_id;
  std::string target_face_id;
  std::string reference_face_id;
  std::string reference_image_id;

  bool operator==(const PairedIdentity&) const = default;
};

// One multi-ID target image with, per identified face, a reference photo of
// the same identity taken from a different image.
struct PairedSample {
  std::string target_image_id;
  std::vector<PairedIdentity> identities;

  bool operator==(const PairedSample&) const = default;
};

// Returns true to keep the image. Filtering models run elsewhere; hooks
// only read the scores and tags they left on the records.
using ImageFilter = std::function<bool(const ImageRecord&, std::span<const FaceRecord* const>)>;

ImageFilter min_aesthetic(double threshold);
ImageFilter min_face_quality(double threshold);
ImageFilter exclude_tags(std::vector<std::string> tags);

struct PairingOptions {
  std::size_t min_references = 2;
  std::vector<ImageFilter> filters;
};

struct PairingResult {
  std::vector<PairedSample> paired;
  std::vector<std::string> unpaired_image_ids;
  std::vector<std::string> filtered_image_ids;

  bool operator==(const PairingResult&) const = default;
};

// Images whose identified faces all have enough bank references become
// paired samples; everything else is routed to the unpaired split. The
// reference draw is seeded per image, so results do not depend on corpus
// order.
PairingResult build_pairs(const Corpus& multi_id, const ReferenceBank& bank, std::uint64_t seed,
                          const PairingOptions& options = {});

std::string pairs_to_json(const PairingResult& result);
PairingResult pairs_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Benchmark split
// ---------------------------------------------------------------------------

struct BenchReference {
  std::string identity_id;
  std::string gt_face_id;
  std::vector<std::string> reference_face_ids;

  bool operator==(const BenchReference&) const = default;
};

struct BenchSample {
  std::string sample_id;  // equals the ground-truth image id
  std::string gt_image_id;
  std::vector<BenchReference> references;  // 1..4 identities
  std::vector<std::string> gt_face_ids;
  std::string prompt;

  bool operator==(const BenchSample&) const = default;
};

struct BenchSet {
  std::vector<BenchSample> samples;
  std::vector<std::string> identities;  // every identity withheld from training

  bool operator==(const BenchSet&) const = default;
};

struct BenchOptions {
  // Number of least-frequent identities to draw from; 0 walks up the tail
  // until max_samples is reached.
  std::size_t identity_count = 0;
  std::size_t max_samples = 435;
  std::size_t references_per_identity = 1;
  std::size_t max_identities_per_sample = 4;
  std::uint64_t seed = 0;
};

struct BenchSplit {
  BenchSet bench;
  std::vector<std::string> training_image_ids;
  std::vector<std::string> removed_image_ids;  // training images dropped for leakage
  std::vector<std::string> tail_identities;    // identities selected from the long tail

  bool operator==(const BenchSplit&) const = default;
};

// Identity -> number of images it appears in (assigned faces only).
std::map<std::string, std::size_t> identity_appearances(const Corpus& corpus);

// Ascending appearance count, identity_id breaking ties.
std::vector<std::string> least_frequent_identities(const std::map<std::string, std::size_t>& counts);

BenchSplit split_bench(const Corpus& corpus, const ReferenceBank& bank, const BenchOptions& options);

std::string bench_to_json(const BenchSet& bench);
BenchSet bench_from_json(const std::string& text);
std::string split_to_json(const BenchSplit& split);

// Ground-truth images, their faces and every reference face of a bench set,
// packaged as one corpus. Reference records come from `single_id` when given
// (full metadata), otherwise from the bank members.
Corpus bench_corpus(const BenchSet& bench, const Corpus& multi_id, const ReferenceBank& bank,
                    const Corpus* single_id = nullptr);

// ---------------------------------------------------------------------------
// Training batches and negatives
// ---------------------------------------------------------------------------

enum class BatchItemKind { kPaired, kReconstruction };

struct BatchItem {
  BatchItemKind kind = BatchItemKind::kReconstruction;
  std::size_t index = 0;  // into the paired or unpaired pool, per kind

  bool operator==(const BatchItem&) const = default;
};

struct BatchDescriptor {
  std::vector<BatchItem> items;
  std::size_t paired_count = 0;
};

// Seeded stream of mixed batches: each item is paired with probability
// paired_fraction, otherwise a reconstruction item whose reference is its
// own target.
class TrainingBatchSampler {
 public:
  TrainingBatchSampler(std::size_t paired_pool, std::size_t unpaired_pool, double paired_fraction,
                       std::uint64_t seed);

  BatchDescriptor next(std::int64_t batch_size);

 private:
  std::size_t paired_pool_;
  std::size_t unpaired_pool_;
  double paired_fraction_;
  Rng rng_;
};

BatchDescriptor sample_training_batch(std::size_t paired_pool, std::size_t unpaired_pool, double paired_fraction,
                                      std::int64_t batch_size, std::uint64_t seed);

struct NegativeRef {
  std::uint32_t identity = 0;
  std::uint32_t member = 0;

  bool operator==(const NegativeRef&) const = default;
};

struct NegativePool {
  std::optional<std::size_t> anchor;  // bank index of the excluded identity
  std::vector<NegativeRef> members;
  std::size_t requested = 0;
  bool truncated = false;

  std::size_t size() const noexcept { return members.size(); }
  std::vector<Embedding> embeddings(const ReferenceBank& bank, const std::string& backend_id) const;
};

// Draws contrastive negatives from bank members. Build once per bank and
// reuse across pools.
class NegativePoolSampler {
 public:
  explicit NegativePoolSampler(const ReferenceBank& bank);

  // anchor_identity unknown to the bank (or absent) makes every member
  // eligible; a known anchor excludes all of its members. Sampling is
  // uniform without replacement; requests beyond the eligible pool are
  // truncated and flagged, never padded with duplicates.
  NegativePool sample(std::optional<std::string_view> anchor_identity, std::size_t size, Rng& rng) const;

 private:
  const ReferenceBank* bank_;
  std::vector<NegativeRef> flat_;
  std::vector<std::size_t> offsets_;  // identity -> first index into flat_
};

NegativePool build_negative_pool(std::optional<std::string_view> anchor_identity, const ReferenceBank& bank,
                                 std::size_t size, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct CorpusStats {
  std::size_t images = 0;
  std::size_t faces = 0;
  std::size_t assigned_faces = 0;
  std::size_t bank_identities = 0;
  std::size_t bank_members = 0;
  std::map<std::string, std::size_t> identity_images;         // identity -> images containing it
  std::map<std::size_t, std::size_t> appearance_histogram;    // images per identity -> identities
  std::map<std::size_t, std::size_t> faces_per_image;         // faces in image -> images
  std::map<std::string, std::size_t> split_sizes;             // split tag -> images

  bool operator==(const CorpusStats&) const = default;
};

// Identity statistics are taken from non-single-ID corpora; split sizes echo
// each manifest, plus paired/unpaired counts when a pairing is supplied.
CorpusStats corpus_stats(std::span<const Corpus* const> corpora, const ReferenceBank* bank = nullptr,
                         const PairingResult* pairing = nullptr);

std::string stats_to_json(const CorpusStats& stats);
std::string identity_histogram_csv(const CorpusStats& stats);
std::string faces_per_image_csv(const CorpusStats& stats);

}  // namespace multiid

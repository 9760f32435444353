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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "multiid/alignment.hpp"
#include "multiid/embedding.hpp"

namespace multiid {

// ---------------------------------------------------------------------------
// Embedding blob
//
//   "MIDE" | u32 version | block*
//   block := u32 key length | key bytes (UTF-8) | u32 dimension | u64 rows |
//            rows * dimension float32
//
// All integers and floats little-endian. Blocks run to end of file.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kBlobVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;

struct BlobBlock {
  std::string key;
  std::uint32_t dim = 0;
  std::vector<float> data;  // row-major, rows() * dim values

  std::uint64_t rows() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
};

std::vector<BlobBlock> read_blob(const std::filesystem::path& path);
void write_blob(const std::filesystem::path& path, std::span<const BlobBlock> blocks);
std::vector<BlobBlock> decode_blob(std::span<const std::byte> bytes);
std::vector<std::byte> encode_blob(std::span<const BlobBlock> blocks);

// ---------------------------------------------------------------------------
// Corpus records
// ---------------------------------------------------------------------------

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool contains(Point2 p) const noexcept { return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h; }
  bool operator==(const BoundingBox&) const = default;
};

struct FaceRecord {
  std::string face_id;
  std::string image_id;
  BoundingBox bbox;
  Landmarks5 landmarks;
  std::map<std::string, Embedding> embeddings;
  std::optional<double> quality;
  // Filled by retrieval for multi-ID corpora; for single-ID corpora it holds
  // the identity query the image was collected under.
  std::optional<std::string> identity_id;

  const Embedding& embedding(const std::string& backend_id) const;
  bool has(const std::string& backend_id) const { return embeddings.contains(backend_id); }

  bool operator==(const FaceRecord&) const = default;
};

struct ImageRecord {
  std::string image_id;
  std::vector<std::string> tags;
  std::optional<double> aesthetic;
  std::optional<std::string> caption;
  std::map<std::string, Embedding> embeddings;         // image-level (e.g. CLIP image)
  std::map<std::string, Embedding> prompt_embeddings;  // caption embeddings (e.g. CLIP text)

  bool operator==(const ImageRecord&) const = default;
};

enum class SplitTag {
  kSingleId,
  kMultiId,  // multi-ID images before pairing
  kMultiIdPaired,
  kMultiIdUnpaired,
  kBench,
  kGenerated,
};

std::string_view to_string(SplitTag tag) noexcept;
SplitTag parse_split_tag(std::string_view text);

enum class BlockScope { kFace, kImage, kPrompt };

std::string_view to_string(BlockScope scope) noexcept;

struct BackendDescriptor {
  std::string backend_id;
  std::uint32_t dimension = 0;
  BlockScope scope = BlockScope::kFace;

  // Key of the blob block holding this backend's rows.
  std::string block_key() const;

  bool operator==(const BackendDescriptor&) const = default;
};

struct CorpusManifest {
  std::string corpus_id;
  SplitTag split = SplitTag::kSingleId;
  std::vector<BackendDescriptor> backends;
  std::size_t image_count = 0;
  std::size_t face_count = 0;

  bool operator==(const CorpusManifest&) const = default;
};

// Validated, normalized, immutable collection of faces and images.
class Corpus {
 public:
  // Validates records, normalizes embeddings and derives counts. Images
  // referenced by faces but not listed are added in first-reference order.
  static Corpus build(std::string corpus_id, SplitTag split, std::vector<BackendDescriptor> backends,
                      std::vector<ImageRecord> images, std::vector<FaceRecord> faces);

  const CorpusManifest& manifest() const noexcept { return manifest_; }
  const std::string& id() const noexcept { return manifest_.corpus_id; }
  std::span<const FaceRecord> faces() const noexcept { return faces_; }
  std::span<const ImageRecord> images() const noexcept { return images_; }

  const FaceRecord* find_face(std::string_view face_id) const;
  const ImageRecord* find_image(std::string_view image_id) const;
  // Indices into faces(), in corpus order.
  std::span<const std::size_t> faces_of_image(std::string_view image_id) const;

  const BackendDescriptor* backend(std::string_view backend_id, BlockScope scope = BlockScope::kFace) const;
  // Face-level backend ids in manifest order.
  std::vector<std::string> face_backends() const;

  // Face embeddings of one backend as a dense matrix, rows in corpus order.
  EmbeddingMatrix face_matrix(const std::string& backend_id) const;

  // Copy with identity labels replaced; faces not in the map keep theirs.
  Corpus with_identities(const std::unordered_map<std::string, std::optional<std::string>>& labels,
                         std::optional<SplitTag> split = std::nullopt) const;

  bool operator==(const Corpus& other) const {
    return manifest_ == other.manifest_ && faces_ == other.faces_ && images_ == other.images_;
  }

 private:
  Corpus() = default;
  void index();

  CorpusManifest manifest_;
  std::vector<ImageRecord> images_;
  std::vector<FaceRecord> faces_;
  std::unordered_map<std::string, std::size_t> face_index_;
  std::unordered_map<std::string, std::size_t> image_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> image_faces_;
};

using CorpusHandle = std::shared_ptr<const Corpus>;

// Paths of the two files making up a stored corpus.
struct CorpusPaths {
  std::filesystem::path manifest;
  std::filesystem::path blob;

  // <dir>/<name>.json and <dir>/<name>.mide
  static CorpusPaths in(const std::filesystem::path& dir, const std::string& name);
};

CorpusHandle ingest(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path);
inline CorpusHandle ingest(const CorpusPaths& paths) { return ingest(paths.manifest, paths.blob); }

void export_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path,
                   const std::filesystem::path& blob_path);
inline void export_corpus(const Corpus& corpus, const CorpusPaths& paths) {
  export_corpus(corpus, paths.manifest, paths.blob);
}

// Manifest JSON text as written by export_corpus.
std::string manifest_json(const Corpus& corpus);

// Whole-file helpers shared by the writers in this library.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace multiid

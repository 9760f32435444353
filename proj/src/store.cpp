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

#include "multiid/store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "multiid/error.hpp"

namespace multiid {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'I', 'D', 'E'};
constexpr std::string_view kManifestFormat = "multiid-corpus";

template <class T>
void put_le(std::vector<std::byte>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::byte>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  bool done() const noexcept { return pos_ == bytes_.size(); }

  template <class T>
  T get(const char* what) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    need(sizeof(T), what);
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_string(std::size_t n) {
    need(n, "block key");
    std::string out(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return out;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(Errc::kParse, std::string("truncated blob while reading ") + what);
    }
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

Landmarks5 landmarks_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) throw Error(Errc::kParse, "landmarks must be 5 [x, y] pairs");
  Landmarks5 lm;
  for (std::size_t k = 0; k < 5; ++k) lm.points[k] = {j[k].at(0).get<double>(), j[k].at(1).get<double>()};
  return lm;
}

json landmarks_to_json(const Landmarks5& lm) {
  json out = json::array();
  for (const auto& p : lm.points) out.push_back({p.x, p.y});
  return out;
}

void check_finite(std::span<const float> values, const std::string& what) {
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, what + " has a non-finite component");
  }
}

Embedding normalize_checked(const Embedding& e, const std::string& owner) {
  check_finite(e.values(), owner + " backend '" + e.backend_id() + "'");
  if (e.norm() == 0.0) throw Error(Errc::kZeroNorm, owner + " backend '" + e.backend_id() + "' has zero norm");
  return e.normalized();
}

void check_embedding_map(const std::map<std::string, Embedding>& embeddings,
                         const std::vector<BackendDescriptor>& backends, BlockScope scope,
                         const std::string& owner) {
  for (const auto& [id, e] : embeddings) {
    const BackendDescriptor* d = nullptr;
    for (const auto& b : backends) {
      if (b.backend_id == id && b.scope == scope) d = &b;
    }
    if (d == nullptr) {
      throw Error(Errc::kMissingBackend, owner + " carries undeclared " + std::string(to_string(scope)) +
                                             " backend '" + id + "'");
    }
    if (e.backend_id() != id) throw Error(Errc::kBackendMismatch, owner + " embedding keyed '" + id + "'");
    if (e.dim() != d->dimension) {
      throw Error(Errc::kDimensionMismatch, owner + " backend '" + id + "' has dimension " +
                                                std::to_string(e.dim()) + ", declared " +
                                                std::to_string(d->dimension));
    }
  }
}

}  // namespace

// ----------------------------------------------------------------------------
// blob

std::vector<std::byte> encode_blob(std::span<const BlobBlock> blocks) {
  std::vector<std::byte> out;
  std::size_t total = 8;
  for (const auto& b : blocks) total += 16 + b.key.size() + b.data.size() * 4;
  out.reserve(total);
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le(out, kBlobVersion);
  for (const auto& b : blocks) {
    if (b.dim == 0 || b.data.size() % b.dim != 0) {
      throw Error(Errc::kShapeMismatch, "blob block '" + b.key + "' storage does not match its dimension");
    }
    put_le(out, static_cast<std::uint32_t>(b.key.size()));
    for (char c : b.key) out.push_back(static_cast<std::byte>(c));
    put_le(out, b.dim);
    put_le(out, b.rows());
    for (float v : b.data) put_le(out, v);
  }
  return out;
}

std::vector<BlobBlock> decode_blob(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::kBadMagic, "blob does not start with \"MIDE\"");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kBlobVersion) {
    throw Error(Errc::kVersionMismatch, "blob version " + std::to_string(version) + ", expected " +
                                            std::to_string(kBlobVersion));
  }
  std::vector<BlobBlock> blocks;
  while (!r.done()) {
    BlobBlock b;
    const auto key_len = r.get<std::uint32_t>("key length");
    b.key = r.get_string(key_len);
    b.dim = r.get<std::uint32_t>("dimension");
    const auto rows = r.get<std::uint64_t>("row count");
    if (b.dim == 0) throw Error(Errc::kParse, "blob block '" + b.key + "' has dimension 0");
    if (rows > r.remaining() / 4 / b.dim) {
      throw Error(Errc::kParse, "truncated blob: block '" + b.key + "' declares " + std::to_string(rows) + " rows");
    }
    b.data.resize(static_cast<std::size_t>(rows) * b.dim);
    for (float& v : b.data) v = r.get<float>("matrix");
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<BlobBlock> read_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open blob " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_blob(std::as_bytes(std::span(raw)));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()));
  }
}

void write_blob(const fs::path& path, std::span<const BlobBlock> blocks) {
  const auto bytes = encode_blob(blocks);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write blob " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIo, "short write to " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::kIo, "short write to " + path.string());
}

// ----------------------------------------------------------------------------
// records

const Embedding& FaceRecord::embedding(const std::string& backend_id) const {
  auto it = embeddings.find(backend_id);
  if (it == embeddings.end()) {
    throw Error(Errc::kMissingBackend, "face '" + face_id + "' has no '" + backend_id + "' embedding");
  }
  return it->second;
}

std::string_view to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::kSingleId: return "single-id";
    case SplitTag::kMultiId: return "multi-id";
    case SplitTag::kMultiIdPaired: return "multi-id-paired";
    case SplitTag::kMultiIdUnpaired: return "multi-id-unpaired";
    case SplitTag::kBench: return "bench";
    case SplitTag::kGenerated: return "generated";
  }
  return "single-id";
}

SplitTag parse_split_tag(std::string_view text) {
  for (SplitTag t : {SplitTag::kSingleId, SplitTag::kMultiId, SplitTag::kMultiIdPaired, SplitTag::kMultiIdUnpaired,
                     SplitTag::kBench, SplitTag::kGenerated}) {
    if (to_string(t) == text) return t;
  }
  throw Error(Errc::kParse, "unknown split tag '" + std::string(text) + "'");
}

std::string_view to_string(BlockScope scope) noexcept {
  switch (scope) {
    case BlockScope::kFace: return "face";
    case BlockScope::kImage: return "image";
    case BlockScope::kPrompt: return "prompt";
  }
  return "face";
}

namespace {
BlockScope parse_scope(std::string_view text) {
  for (BlockScope s : {BlockScope::kFace, BlockScope::kImage, BlockScope::kPrompt}) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::kParse, "unknown backend scope '" + std::string(text) + "'");
}
}  // namespace

std::string BackendDescriptor::block_key() const {
  if (scope == BlockScope::kFace) return backend_id;
  return std::string(to_string(scope)) + ":" + backend_id;
}

// ----------------------------------------------------------------------------
// corpus

Corpus Corpus::build(std::string corpus_id, SplitTag split, std::vector<BackendDescriptor> backends,
                     std::vector<ImageRecord> images, std::vector<FaceRecord> faces) {
  std::set<std::string> keys;
  for (const auto& b : backends) {
    if (b.backend_id.empty() || b.dimension == 0) {
      throw Error(Errc::kInvalidArgument, "backend descriptors need an id and a positive dimension");
    }
    if (!keys.insert(b.block_key()).second) {
      throw Error(Errc::kDuplicateId, "backend '" + b.block_key() + "' declared twice");
    }
  }

  Corpus c;
  c.manifest_.corpus_id = std::move(corpus_id);
  c.manifest_.split = split;
  c.manifest_.backends = std::move(backends);

  std::set<std::string> image_ids;
  for (auto& img : images) {
    if (img.image_id.empty()) throw Error(Errc::kInvalidArgument, "image with empty id");
    if (!image_ids.insert(img.image_id).second) {
      throw Error(Errc::kDuplicateId, "image_id '" + img.image_id + "' appears twice");
    }
    const std::string owner = "image '" + img.image_id + "'";
    check_embedding_map(img.embeddings, c.manifest_.backends, BlockScope::kImage, owner);
    check_embedding_map(img.prompt_embeddings, c.manifest_.backends, BlockScope::kPrompt, owner + " prompt");
    for (auto& [id, e] : img.embeddings) e = normalize_checked(e, owner);
    for (auto& [id, e] : img.prompt_embeddings) e = normalize_checked(e, owner + " prompt");
  }

  std::set<std::string> face_ids;
  for (auto& f : faces) {
    if (f.face_id.empty()) throw Error(Errc::kInvalidArgument, "face with empty id");
    if (!face_ids.insert(f.face_id).second) {
      throw Error(Errc::kDuplicateId, "face_id '" + f.face_id + "' appears twice");
    }
    const std::string owner = "face '" + f.face_id + "'";
    if (!(f.bbox.w > 0.0) || !(f.bbox.h > 0.0) || !std::isfinite(f.bbox.x) || !std::isfinite(f.bbox.y) ||
        !std::isfinite(f.bbox.w) || !std::isfinite(f.bbox.h)) {
      throw Error(Errc::kInvalidArgument, owner + " has an invalid bounding box");
    }
    if (!f.landmarks.all_finite()) throw Error(Errc::kNonFinite, owner + " has non-finite landmarks");
    if (f.quality && !std::isfinite(*f.quality)) throw Error(Errc::kNonFinite, owner + " has non-finite quality");
    check_embedding_map(f.embeddings, c.manifest_.backends, BlockScope::kFace, owner);
    for (const auto& b : c.manifest_.backends) {
      if (b.scope == BlockScope::kFace && !f.embeddings.contains(b.backend_id)) {
        throw Error(Errc::kMissingBackend, owner + " lacks declared backend '" + b.backend_id + "'");
      }
    }
    for (auto& [id, e] : f.embeddings) e = normalize_checked(e, owner);
    if (!image_ids.contains(f.image_id)) {
      if (f.image_id.empty()) throw Error(Errc::kInvalidArgument, owner + " has an empty image_id");
      image_ids.insert(f.image_id);
      ImageRecord img;
      img.image_id = f.image_id;
      images.push_back(std::move(img));
    }
  }

  c.images_ = std::move(images);
  c.faces_ = std::move(faces);
  c.manifest_.image_count = c.images_.size();
  c.manifest_.face_count = c.faces_.size();
  c.index();
  return c;
}

void Corpus::index() {
  face_index_.clear();
  image_index_.clear();
  image_faces_.clear();
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    face_index_.emplace(faces_[i].face_id, i);
    image_faces_[faces_[i].image_id].push_back(i);
  }
  for (std::size_t i = 0; i < images_.size(); ++i) image_index_.emplace(images_[i].image_id, i);
}

const FaceRecord* Corpus::find_face(std::string_view face_id) const {
  auto it = face_index_.find(std::string(face_id));
  return it == face_index_.end() ? nullptr : &faces_[it->second];
}

const ImageRecord* Corpus::find_image(std::string_view image_id) const {
  auto it = image_index_.find(std::string(image_id));
  return it == image_index_.end() ? nullptr : &images_[it->second];
}

std::span<const std::size_t> Corpus::faces_of_image(std::string_view image_id) const {
  auto it = image_faces_.find(std::string(image_id));
  if (it == image_faces_.end()) return {};
  return it->second;
}

const BackendDescriptor* Corpus::backend(std::string_view backend_id, BlockScope scope) const {
  for (const auto& b : manifest_.backends) {
    if (b.backend_id == backend_id && b.scope == scope) return &b;
  }
  return nullptr;
}

std::vector<std::string> Corpus::face_backends() const {
  std::vector<std::string> out;
  for (const auto& b : manifest_.backends) {
    if (b.scope == BlockScope::kFace) out.push_back(b.backend_id);
  }
  return out;
}

EmbeddingMatrix Corpus::face_matrix(const std::string& backend_id) const {
  const BackendDescriptor* d = backend(backend_id);
  if (d == nullptr) {
    throw Error(Errc::kMissingBackend, "corpus '" + id() + "' has no face backend '" + backend_id + "'");
  }
  EmbeddingMatrix m(backend_id, d->dimension);
  m.reserve_rows(faces_.size());
  for (const auto& f : faces_) m.append(f.embedding(backend_id));
  return m;
}

Corpus Corpus::with_identities(const std::unordered_map<std::string, std::optional<std::string>>& labels,
                               std::optional<SplitTag> split) const {
  Corpus out = *this;
  for (auto& f : out.faces_) {
    auto it = labels.find(f.face_id);
    if (it != labels.end()) f.identity_id = it->second;
  }
  if (split) out.manifest_.split = *split;
  out.index();
  return out;
}

CorpusPaths CorpusPaths::in(const fs::path& dir, const std::string& name) {
  return {dir / (name + ".json"), dir / (name + ".mide")};
}

// ----------------------------------------------------------------------------
// ingest / export

std::string manifest_json(const Corpus& corpus) {
  const auto& m = corpus.manifest();
  json doc;
  doc["format"] = kManifestFormat;
  doc["version"] = kManifestVersion;
  doc["corpus_id"] = m.corpus_id;
  doc["split"] = to_string(m.split);
  json backends = json::array();
  for (const auto& b : m.backends) {
    backends.push_back({{"backend_id", b.backend_id}, {"dimension", b.dimension}, {"scope", to_string(b.scope)}});
  }
  doc["backends"] = std::move(backends);
  doc["counts"] = {{"images", m.image_count}, {"faces", m.face_count}};

  json images = json::array();
  for (const auto& img : corpus.images()) {
    json j;
    j["image_id"] = img.image_id;
    if (!img.tags.empty()) j["tags"] = img.tags;
    if (img.aesthetic) j["aesthetic"] = *img.aesthetic;
    if (img.caption) j["caption"] = *img.caption;
    if (!img.embeddings.empty()) {
      json ids = json::array();
      for (const auto& [id, e] : img.embeddings) ids.push_back(id);
      j["embeddings"] = std::move(ids);
    }
    if (!img.prompt_embeddings.empty()) {
      json ids = json::array();
      for (const auto& [id, e] : img.prompt_embeddings) ids.push_back(id);
      j["prompt_embeddings"] = std::move(ids);
    }
    images.push_back(std::move(j));
  }
  doc["images"] = std::move(images);

  json faces = json::array();
  for (const auto& f : corpus.faces()) {
    json j;
    j["face_id"] = f.face_id;
    j["image_id"] = f.image_id;
    j["bbox"] = {f.bbox.x, f.bbox.y, f.bbox.w, f.bbox.h};
    j["landmarks"] = landmarks_to_json(f.landmarks);
    if (f.quality) j["quality"] = *f.quality;
    if (f.identity_id) j["identity_id"] = *f.identity_id;
    json norms = json::object();
    for (const auto& [id, e] : f.embeddings) norms[id] = e.raw_norm();
    j["raw_norms"] = std::move(norms);
    faces.push_back(std::move(j));
  }
  doc["faces"] = std::move(faces);
  return doc.dump(1) + "\n";
}

void export_corpus(const Corpus& corpus, const fs::path& manifest_path, const fs::path& blob_path) {
  std::vector<BlobBlock> blocks;
  for (const auto& b : corpus.manifest().backends) {
    BlobBlock block;
    block.key = b.block_key();
    block.dim = b.dimension;
    auto append = [&](const std::map<std::string, Embedding>& m) {
      auto it = m.find(b.backend_id);
      if (it != m.end()) block.data.insert(block.data.end(), it->second.values().begin(), it->second.values().end());
    };
    switch (b.scope) {
      case BlockScope::kFace:
        for (const auto& f : corpus.faces()) append(f.embeddings);
        break;
      case BlockScope::kImage:
        for (const auto& img : corpus.images()) append(img.embeddings);
        break;
      case BlockScope::kPrompt:
        for (const auto& img : corpus.images()) append(img.prompt_embeddings);
        break;
    }
    blocks.push_back(std::move(block));
  }
  write_blob(blob_path, blocks);
  write_text_file(manifest_path, manifest_json(corpus));
}

CorpusHandle ingest(const fs::path& manifest_path, const fs::path& blob_path) {
  const std::string text = read_text_file(manifest_path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kParse, manifest_path.string() + ": " + e.what());
  }
  const auto blocks = read_blob(blob_path);

  try {
    if (doc.value("format", "") != kManifestFormat) {
      throw Error(Errc::kParse, manifest_path.string() + " is not a multiid corpus manifest");
    }
    const auto version = doc.at("version").get<std::uint32_t>();
    if (version != kManifestVersion) {
      throw Error(Errc::kVersionMismatch, "manifest version " + std::to_string(version) + ", expected " +
                                              std::to_string(kManifestVersion));
    }

    std::vector<BackendDescriptor> backends;
    for (const auto& b : doc.at("backends")) {
      backends.push_back({b.at("backend_id").get<std::string>(), b.at("dimension").get<std::uint32_t>(),
                          parse_scope(b.value("scope", "face"))});
    }

    std::vector<ImageRecord> images;
    std::vector<std::vector<std::string>> image_backends, prompt_backends;
    for (const auto& j : doc.value("images", json::array())) {
      ImageRecord img;
      img.image_id = j.at("image_id").get<std::string>();
      img.tags = j.value("tags", std::vector<std::string>{});
      if (j.contains("aesthetic")) img.aesthetic = j.at("aesthetic").get<double>();
      if (j.contains("caption")) img.caption = j.at("caption").get<std::string>();
      image_backends.push_back(j.value("embeddings", std::vector<std::string>{}));
      prompt_backends.push_back(j.value("prompt_embeddings", std::vector<std::string>{}));
      images.push_back(std::move(img));
    }

    std::vector<FaceRecord> faces;
    std::vector<std::map<std::string, double>> raw_norms;
    for (const auto& j : doc.at("faces")) {
      FaceRecord f;
      f.face_id = j.at("face_id").get<std::string>();
      f.image_id = j.at("image_id").get<std::string>();
      const auto& bb = j.at("bbox");
      if (!bb.is_array() || bb.size() != 4) throw Error(Errc::kParse, "face '" + f.face_id + "': bbox must be [x, y, w, h]");
      f.bbox = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
      f.landmarks = landmarks_from_json(j.at("landmarks"));
      if (j.contains("quality")) f.quality = j.at("quality").get<double>();
      if (j.contains("identity_id")) f.identity_id = j.at("identity_id").get<std::string>();
      raw_norms.push_back(j.value("raw_norms", std::map<std::string, double>{}));
      faces.push_back(std::move(f));
    }

    std::set<std::string> used_blocks;
    for (const auto& b : backends) {
      const std::string key = b.block_key();
      const BlobBlock* block = nullptr;
      for (const auto& blk : blocks) {
        if (blk.key == key) block = &blk;
      }
      if (block == nullptr) throw Error(Errc::kMissingBackend, "blob has no block for backend '" + key + "'");
      used_blocks.insert(key);
      if (block->dim != b.dimension) {
        throw Error(Errc::kDimensionMismatch, "block '" + key + "' has dimension " + std::to_string(block->dim) +
                                                  ", manifest declares " + std::to_string(b.dimension));
      }
      auto row = [&](std::size_t r) {
        return std::vector<float>(block->data.begin() + static_cast<std::ptrdiff_t>(r * b.dimension),
                                  block->data.begin() + static_cast<std::ptrdiff_t>((r + 1) * b.dimension));
      };
      auto expect_rows = [&](std::size_t n) {
        if (block->rows() != n) {
          throw Error(Errc::kCountMismatch, "block '" + key + "' has " + std::to_string(block->rows()) +
                                                " rows, manifest implies " + std::to_string(n));
        }
      };
      if (b.scope == BlockScope::kFace) {
        expect_rows(faces.size());
        for (std::size_t i = 0; i < faces.size(); ++i) {
          auto values = row(i);
          check_finite(values, "face '" + faces[i].face_id + "' backend '" + b.backend_id + "'");
          faces[i].embeddings.emplace(b.backend_id, Embedding(b.backend_id, std::move(values)));
        }
      } else {
        auto& lists = b.scope == BlockScope::kImage ? image_backends : prompt_backends;
        std::size_t r = 0;
        std::vector<std::size_t> owners;
        for (std::size_t i = 0; i < images.size(); ++i) {
          for (const auto& id : lists[i]) {
            if (id == b.backend_id) owners.push_back(i);
          }
        }
        expect_rows(owners.size());
        for (std::size_t i : owners) {
          auto values = row(r++);
          check_finite(values, "image '" + images[i].image_id + "' backend '" + key + "'");
          auto& target = b.scope == BlockScope::kImage ? images[i].embeddings : images[i].prompt_embeddings;
          target.emplace(b.backend_id, Embedding(b.backend_id, std::move(values)));
        }
      }
    }
    for (const auto& blk : blocks) {
      if (!used_blocks.contains(blk.key)) {
        throw Error(Errc::kMissingBackend, "blob block '" + blk.key + "' is not declared in the manifest");
      }
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
      for (const auto& id : image_backends[i]) {
        if (!images[i].embeddings.contains(id)) {
          throw Error(Errc::kMissingBackend, "image '" + images[i].image_id + "' lists undeclared backend '" + id + "'");
        }
      }
      for (const auto& id : prompt_backends[i]) {
        if (!images[i].prompt_embeddings.contains(id)) {
          throw Error(Errc::kMissingBackend, "image '" + images[i].image_id + "' lists undeclared prompt backend '" + id + "'");
        }
      }
    }

    const auto& counts = doc.at("counts");
    const auto declared_images = counts.at("images").get<std::size_t>();
    const auto declared_faces = counts.at("faces").get<std::size_t>();

    Corpus corpus = Corpus::build(doc.at("corpus_id").get<std::string>(),
                                  parse_split_tag(doc.at("split").get<std::string>()), std::move(backends),
                                  std::move(images), std::move(faces));
    if (corpus.manifest().face_count != declared_faces || corpus.manifest().image_count != declared_images) {
      throw Error(Errc::kCountMismatch, "manifest declares " + std::to_string(declared_images) + " images / " +
                                            std::to_string(declared_faces) + " faces, records hold " +
                                            std::to_string(corpus.manifest().image_count) + " / " +
                                            std::to_string(corpus.manifest().face_count));
    }

    // Raw norms recorded by an earlier export survive the round trip.
    auto faces_copy = std::vector<FaceRecord>(corpus.faces().begin(), corpus.faces().end());
    bool changed = false;
    for (std::size_t i = 0; i < faces_copy.size(); ++i) {
      for (const auto& [id, norm] : raw_norms[i]) {
        auto it = faces_copy[i].embeddings.find(id);
        if (it != faces_copy[i].embeddings.end() && it->second.raw_norm() != norm) {
          it->second.set_raw_norm(norm);
          changed = true;
        }
      }
    }
    if (changed) {
      corpus = Corpus::build(corpus.id(), corpus.manifest().split, corpus.manifest().backends,
                             std::vector<ImageRecord>(corpus.images().begin(), corpus.images().end()),
                             std::move(faces_copy));
    }
    return std::make_shared<const Corpus>(std::move(corpus));
  } catch (const json::exception& e) {
    throw Error(Errc::kParse, manifest_path.string() + ": " + e.what());
  }
}

}  // namespace multiid

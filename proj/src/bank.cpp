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

#include "multiid/bank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "multiid/error.hpp"

namespace multiid {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr std::string_view kIdentityTableFormat = "multiid-bank";
constexpr std::uint32_t kIdentityTableVersion = 1;
}  // namespace

ReferenceBank::ReferenceBank(std::vector<BankIdentity> identities) : identities_(std::move(identities)) {
  std::sort(identities_.begin(), identities_.end(),
            [](const BankIdentity& a, const BankIdentity& b) { return a.identity_id < b.identity_id; });
  std::set<std::string> member_ids;
  for (std::size_t i = 0; i < identities_.size(); ++i) {
    const auto& id = identities_[i];
    if (i > 0 && identities_[i - 1].identity_id == id.identity_id) {
      throw Error(Errc::kDuplicateId, "identity '" + id.identity_id + "' appears twice in the bank");
    }
    if (id.centroids.empty()) throw Error(Errc::kInvalidArgument, "identity '" + id.identity_id + "' has no centroid");
    for (const auto& c : id.centroids) {
      for (const auto& [backend, e] : c.embeddings) {
        if (!e.is_normalized()) {
          throw Error(Errc::kInvalidArgument, "identity '" + id.identity_id + "' has an unnormalized centroid");
        }
      }
    }
    for (const auto& m : id.members) {
      if (!member_ids.insert(m.face_id).second) {
        throw Error(Errc::kDuplicateId, "face '" + m.face_id + "' is a member of two identities");
      }
    }
  }
}

std::optional<std::size_t> ReferenceBank::find(std::string_view identity_id) const {
  auto it = std::lower_bound(identities_.begin(), identities_.end(), identity_id,
                             [](const BankIdentity& a, std::string_view id) { return a.identity_id < id; });
  if (it == identities_.end() || it->identity_id != identity_id) return std::nullopt;
  return static_cast<std::size_t>(it - identities_.begin());
}

std::size_t ReferenceBank::member_count() const noexcept {
  std::size_t n = 0;
  for (const auto& id : identities_) n += id.members.size();
  return n;
}

std::vector<std::string> ReferenceBank::backends() const {
  std::set<std::string> out;
  for (const auto& id : identities_) {
    for (const auto& c : id.centroids) {
      for (const auto& [b, e] : c.embeddings) out.insert(b);
    }
  }
  return {out.begin(), out.end()};
}

CentroidIndex ReferenceBank::centroid_index(const std::string& backend_id) const {
  if (identities_.empty()) throw Error(Errc::kEmptyBank, "reference bank has no identities");
  std::optional<std::size_t> dim;
  CentroidIndex out;
  for (std::size_t i = 0; i < identities_.size(); ++i) {
    for (const auto& c : identities_[i].centroids) {
      auto it = c.embeddings.find(backend_id);
      if (it == c.embeddings.end()) continue;
      if (!dim) {
        dim = it->second.dim();
        out.centroids = EmbeddingMatrix(backend_id, *dim);
      }
      out.centroids.append(it->second);
      out.owner.push_back(static_cast<std::uint32_t>(i));
      out.norms.push_back(std::sqrt(squared_norm(it->second.values())));
    }
  }
  if (!dim) throw Error(Errc::kMissingBackend, "reference bank has no centroids for backend '" + backend_id + "'");
  return out;
}

void save_bank(const ReferenceBank& bank, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());

  const auto backends = bank.backends();
  std::map<std::string, BlobBlock> blocks;
  json table = json::array();
  std::vector<FaceRecord> member_faces;
  std::map<std::string, std::uint32_t> member_dims;

  for (const auto& id : bank.identities()) {
    json centroids = json::array();
    for (const auto& c : id.centroids) {
      json backends_json = json::array();
      for (const auto& [b, e] : c.embeddings) {
        auto& block = blocks[b];
        block.key = b;
        block.dim = static_cast<std::uint32_t>(e.dim());
        block.data.insert(block.data.end(), e.values().begin(), e.values().end());
        backends_json.push_back(b);
      }
      centroids.push_back({{"support", c.support}, {"secondary", c.secondary}, {"backends", backends_json}});
    }
    json members = json::array();
    for (const auto& m : id.members) {
      members.push_back(m.face_id);
      FaceRecord f;
      f.face_id = m.face_id;
      f.image_id = m.image_id;
      f.bbox = {0.0, 0.0, 1.0, 1.0};
      f.embeddings = m.embeddings;
      f.identity_id = id.identity_id;
      for (const auto& [b, e] : m.embeddings) member_dims[b] = static_cast<std::uint32_t>(e.dim());
      member_faces.push_back(std::move(f));
    }
    table.push_back({{"identity_id", id.identity_id}, {"centroids", centroids}, {"members", members}});
  }

  std::vector<BlobBlock> ordered;
  for (auto& [b, block] : blocks) ordered.push_back(std::move(block));
  write_blob(dir / "centroids.mide", ordered);

  std::vector<BackendDescriptor> descriptors;
  for (const auto& [b, d] : member_dims) descriptors.push_back({b, d, BlockScope::kFace});
  export_corpus(Corpus::build("bank-members", SplitTag::kSingleId, descriptors, {}, std::move(member_faces)),
                CorpusPaths::in(dir, "members"));

  json doc;
  doc["format"] = kIdentityTableFormat;
  doc["version"] = kIdentityTableVersion;
  doc["backends"] = backends;
  doc["identities"] = std::move(table);
  write_text_file(dir / "identities.json", doc.dump(1) + "\n");
}

ReferenceBank load_bank(const fs::path& dir) {
  const fs::path table_path = dir / "identities.json";
  json doc;
  try {
    doc = json::parse(read_text_file(table_path));
  } catch (const json::exception& e) {
    throw Error(Errc::kParse, table_path.string() + ": " + e.what());
  }
  const auto blocks = read_blob(dir / "centroids.mide");
  const auto members = ingest(CorpusPaths::in(dir, "members"));

  try {
    if (doc.value("format", "") != kIdentityTableFormat) {
      throw Error(Errc::kParse, table_path.string() + " is not a bank identity table");
    }
    if (doc.at("version").get<std::uint32_t>() != kIdentityTableVersion) {
      throw Error(Errc::kVersionMismatch, table_path.string() + ": unsupported version");
    }
    std::map<std::string, std::pair<const BlobBlock*, std::size_t>> cursor;
    for (const auto& b : blocks) cursor[b.key] = {&b, 0};

    std::vector<BankIdentity> identities;
    for (const auto& j : doc.at("identities")) {
      BankIdentity id;
      id.identity_id = j.at("identity_id").get<std::string>();
      for (const auto& cj : j.at("centroids")) {
        Centroid c;
        c.support = cj.at("support").get<std::size_t>();
        c.secondary = cj.at("secondary").get<bool>();
        for (const auto& bj : cj.at("backends")) {
          const auto b = bj.get<std::string>();
          auto it = cursor.find(b);
          if (it == cursor.end()) throw Error(Errc::kMissingBackend, "centroid blob lacks backend '" + b + "'");
          auto& [block, row] = it->second;
          if (row >= block->rows()) {
            throw Error(Errc::kCountMismatch, "centroid blob block '" + b + "' has too few rows");
          }
          const auto begin = block->data.begin() + static_cast<std::ptrdiff_t>(row * block->dim);
          std::vector<float> values(begin, begin + block->dim);
          for (float v : values) {
            if (!std::isfinite(v)) {
              throw Error(Errc::kNonFinite, "centroid of identity '" + id.identity_id + "' is non-finite");
            }
          }
          Embedding e(b, std::move(values));
          if (!e.is_normalized()) {
            throw Error(Errc::kParse, "centroid of identity '" + id.identity_id + "' is not normalized");
          }
          c.embeddings.emplace(b, std::move(e));
          ++row;
        }
        id.centroids.push_back(std::move(c));
      }
      for (const auto& mj : j.at("members")) {
        const auto face_id = mj.get<std::string>();
        const FaceRecord* f = members->find_face(face_id);
        if (f == nullptr) throw Error(Errc::kNotFound, "bank member '" + face_id + "' missing from members corpus");
        id.members.push_back({f->face_id, f->image_id, f->embeddings});
      }
      identities.push_back(std::move(id));
    }
    for (const auto& [b, cur] : cursor) {
      if (cur.second != cur.first->rows()) {
        throw Error(Errc::kCountMismatch, "centroid blob block '" + b + "' has unreferenced rows");
      }
    }
    return ReferenceBank(std::move(identities));
  } catch (const json::exception& e) {
    throw Error(Errc::kParse, table_path.string() + ": " + e.what());
  }
}

}  // namespace multiid

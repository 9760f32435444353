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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multiid/embedding.hpp"
#include "multiid/store.hpp"

namespace multiid {

struct Centroid {
  std::map<std::string, Embedding> embeddings;  // one normalized vector per backend
  std::size_t support = 0;                       // members of the cluster it summarizes
  bool secondary = false;                        // from a cluster other than the largest

  bool operator==(const Centroid&) const = default;
};

struct BankMember {
  std::string face_id;
  std::string image_id;
  std::map<std::string, Embedding> embeddings;

  bool operator==(const BankMember&) const = default;
};

struct BankIdentity {
  std::string identity_id;
  std::vector<Centroid> centroids;
  std::vector<BankMember> members;

  bool operator==(const BankIdentity&) const = default;
};

// Centroids of one backend stacked row-wise, with the owning identity of
// each row. This is the retrieval index.
struct CentroidIndex {
  EmbeddingMatrix centroids;
  std::vector<std::uint32_t> owner;  // row -> identity index
  std::vector<double> norms;         // row norms, accumulated in double
};

// identity -> centroids + member references. Identities are kept sorted by
// identity_id, so identity index order is lexicographic order.
class ReferenceBank {
 public:
  ReferenceBank() = default;
  explicit ReferenceBank(std::vector<BankIdentity> identities);

  std::size_t size() const noexcept { return identities_.size(); }
  bool empty() const noexcept { return identities_.empty(); }
  std::span<const BankIdentity> identities() const noexcept { return identities_; }
  const BankIdentity& identity(std::size_t i) const { return identities_[i]; }
  std::optional<std::size_t> find(std::string_view identity_id) const;

  std::size_t member_count() const noexcept;
  std::vector<std::string> backends() const;

  CentroidIndex centroid_index(const std::string& backend_id) const;

  bool operator==(const ReferenceBank& other) const { return identities_ == other.identities_; }

 private:
  std::vector<BankIdentity> identities_;
};

// Layout on disk:
//   identities.json  identity table (centroid flags, member face ids)
//   centroids.mide   one block per backend, rows in identity-table order
//   members.json / members.mide   member faces in the corpus format
void save_bank(const ReferenceBank& bank, const std::filesystem::path& dir);
ReferenceBank load_bank(const std::filesystem::path& dir);

}  // namespace multiid

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
#include <span>
#include <string>
#include <vector>

#include "multiid/bank.hpp"
#include "multiid/embedding.hpp"
#include "multiid/store.hpp"

namespace multiid {

// DBSCAN over cosine distance 1 - cos(a, b).
struct ClusterParams {
  double eps = 0.5;
  std::size_t min_pts = 4;

  void validate() const;

  bool operator==(const ClusterParams&) const = default;
};

inline constexpr int kNoise = -1;

struct DbscanResult {
  std::vector<int> labels;  // cluster id per point, kNoise for outliers
  std::vector<bool> core;
  std::size_t cluster_count = 0;

  std::vector<std::vector<std::size_t>> clusters() const;
  std::vector<std::size_t> noise() const;
};

// Deterministic DBSCAN. A point is core when at least min_pts points
// (itself included) lie within eps. Clusters are the connected components
// of core points, numbered by their lowest core index; a border point joins
// the cluster of its lowest-indexed core neighbor.
DbscanResult dbscan(std::span<const Embedding> points, const ClusterParams& params);
DbscanResult dbscan(const EmbeddingMatrix& points, const ClusterParams& params);

// Faces collected under one identity query, with their clustering.
struct IdentityGroup {
  std::string identity_id;
  std::vector<const FaceRecord*> faces;
  DbscanResult clustering;
};

// Groups faces by FaceRecord::identity_id (the collection query) and runs
// dbscan on each group. Groups are independent and processed by up to
// `workers` threads; output is sorted by identity_id.
std::vector<IdentityGroup> cluster_groups(const Corpus& corpus, const std::string& backend_id,
                                          const ClusterParams& params, std::size_t workers = 1);

struct BankOptions {
  std::string cluster_backend;  // backend the clustering used; empty -> first backend of each face
  double member_floor = 0.5;    // members less similar than this to the centroid are dropped
  bool multi_centroid = false;  // keep secondary clusters as extra centroids
  std::size_t min_secondary_size = 2;
};

struct BankWarning {
  std::string identity_id;
  std::string message;
};

struct BankBuildResult {
  ReferenceBank bank;
  std::vector<BankWarning> warnings;
};

// Normalized mean of the given embeddings.
Embedding centroid_of(std::span<const Embedding* const> members);

BankBuildResult build_bank(std::span<const IdentityGroup> groups, const BankOptions& options = {});

}  // namespace multiid

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
#include <optional>
#include <string>
#include <vector>

#include "multiid/bank.hpp"
#include "multiid/embedding.hpp"
#include "multiid/store.hpp"

namespace multiid {

inline constexpr double kDefaultAssignThreshold = 0.5;

// Faces to identify: ids plus one backend's embeddings, row i <-> face_ids[i].
struct FaceBatch {
  std::vector<std::string> face_ids;
  EmbeddingMatrix embeddings;
};

FaceBatch make_face_batch(const Corpus& corpus, const std::string& backend_id);

struct AssignmentResult {
  std::string face_id;
  std::optional<std::string> best_identity;  // set only when assigned
  std::optional<std::string> nearest_identity;  // argmax regardless of threshold
  double best_similarity = -1.0;
  // Best similarity among the other identities; -1 when the bank has one.
  double second_best_similarity = -1.0;
  bool assigned = false;

  bool operator==(const AssignmentResult&) const = default;
};

// Reference path: per face, a scalar loop over every centroid. An identity
// scores the max over its centroids; the best identity wins (ties to the
// lexicographically smaller id) and is assigned when strictly above
// threshold.
std::vector<AssignmentResult> assign(const FaceBatch& faces, const ReferenceBank& bank,
                                     double threshold = kDefaultAssignThreshold);

struct BlockedOptions {
  std::size_t block_size = 1024;
  std::size_t workers = 1;
};

// Same decisions as assign(), using single-precision dense products over
// blocks of faces. Identities whose product score lies within a rounding
// margin of the runner-up are rescored with the scalar path, so argmax,
// threshold and tie decisions match assign() exactly.
std::vector<AssignmentResult> assign_blocked(const FaceBatch& faces, const ReferenceBank& bank,
                                             double threshold = kDefaultAssignThreshold,
                                             const BlockedOptions& options = {});

}  // namespace multiid

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
#include <utility>
#include <vector>

#include "multiid/embedding.hpp"

namespace multiid {

// Maximum-weight bipartite assignment between generated faces (rows) and
// target faces (columns).
struct MatchedFaces {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gen, tgt), ascending by gen
  std::vector<double> similarity;                          // per pair
  double total = 0.0;
  std::vector<std::size_t> unmatched_gen;
  std::vector<std::size_t> unmatched_tgt;

  // Target matched to gen index g, if any.
  std::optional<std::size_t> target_of(std::size_t g) const;
};

// Hungarian algorithm (shortest augmenting paths with potentials),
// O(n^2 m) for n = min(rows, cols). Exactly min(rows, cols) pairs are
// matched.
MatchedFaces solve_assignment(const SimilarityMatrix& similarity);

// Row-by-row greedy matching; a lower bound used for diagnostics.
MatchedFaces greedy_assignment(const SimilarityMatrix& similarity);

}  // namespace multiid

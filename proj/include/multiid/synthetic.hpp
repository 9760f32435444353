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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "multiid/bank.hpp"
#include "multiid/random.hpp"
#include "multiid/store.hpp"

namespace multiid {

// Seeded generators of embedding-level fixtures: banks, labeled single-ID
// corpora and unlabeled multi-ID corpora with known ground truth.

std::vector<float> random_unit(std::size_t dim, Rng& rng);

// Unit vector x with cos(x, direction) == cosine: cosine * u + sqrt(1 - c^2) w
// for a random unit w orthogonal to u. direction must be unit length.
std::vector<float> unit_at_cosine(std::span<const float> direction, double cosine, Rng& rng);

// n unit vectors whose pairwise cosines all stay below max_cross.
std::vector<std::vector<float>> separated_directions(std::size_t n, std::size_t dim, double max_cross, Rng& rng);

// "id00042" style ids that sort in numeric order.
std::string synthetic_identity_id(std::size_t index);

struct SyntheticBankOptions {
  std::size_t identities = 1000;
  std::size_t members_per_identity = 2;
  std::size_t dim = 512;
  std::string backend = "arcface";
  double member_cosine = 0.8;       // member to centroid
  double max_cross_cosine = 1.0;    // between centroids; 1.0 leaves them unconstrained
  std::uint64_t seed = 1;
};

ReferenceBank synthetic_bank(const SyntheticBankOptions& options);

struct SyntheticWorldOptions {
  std::size_t identities = 40;
  std::size_t single_images_per_identity = 6;
  std::size_t outliers_per_identity = 1;  // wrong-person results under the identity's query
  std::size_t multi_images = 80;
  std::size_t max_faces_per_image = 4;
  double unknown_face_rate = 0.1;
  std::vector<std::string> face_backends = {"arcface", "adaface", "curricularface"};
  std::size_t dim = 64;
  std::string clip_backend = "clip";
  std::size_t clip_dim = 32;
  double member_cosine = 0.8;
  double max_cross_cosine = 0.3;
  std::uint64_t seed = 1;
};

struct SyntheticWorld {
  Corpus single_id;
  Corpus multi_id;
  std::map<std::string, std::string> truth;  // multi-ID face_id -> identity; unknown faces absent
};

SyntheticWorld synthetic_world(const SyntheticWorldOptions& options);

}  // namespace multiid

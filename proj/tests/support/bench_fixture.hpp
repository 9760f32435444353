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

#include <string>
#include <unordered_map>
#include <vector>

#include "multiid/cluster.hpp"
#include "multiid/pairing.hpp"
#include "multiid/synthetic.hpp"

namespace testing {

// Synthetic world with ground-truth labels applied, its reference bank and a
// benchmark split packaged as a bench corpus.
struct BenchFixture {
  multiid::SyntheticWorld world;
  multiid::Corpus labeled;
  multiid::ReferenceBank bank;
  multiid::BenchSplit split;
  multiid::Corpus bench;
};

inline BenchFixture make_bench_fixture(std::size_t identities, std::size_t multi_images, std::size_t max_samples,
                                       std::uint64_t seed, std::size_t references_per_identity = 1) {
  using namespace multiid;
  SyntheticWorldOptions o;
  o.identities = identities;
  o.single_images_per_identity = 6;
  o.outliers_per_identity = 1;
  o.multi_images = multi_images;
  o.dim = 64;
  o.clip_dim = 16;
  o.member_cosine = 0.85;
  o.seed = seed;
  auto world = synthetic_world(o);
  std::unordered_map<std::string, std::optional<std::string>> labels;
  for (const auto& [face, id] : world.truth) labels.emplace(face, id);
  auto labeled = world.multi_id.with_identities(labels);
  BankOptions bank_options;
  bank_options.cluster_backend = o.face_backends.front();
  auto bank = build_bank(cluster_groups(world.single_id, o.face_backends.front(), {0.5, 3}), bank_options).bank;
  BenchOptions bench_options;
  bench_options.max_samples = max_samples;
  bench_options.references_per_identity = references_per_identity;
  bench_options.seed = seed;
  auto split = split_bench(labeled, bank, bench_options);
  auto bench = bench_corpus(split.bench, labeled, bank, &world.single_id);
  return {std::move(world), std::move(labeled), std::move(bank), std::move(split), std::move(bench)};
}

// Generated corpus: image sample_id holds one face per entry of faces_per_sample,
// each a copy of a source face with its embeddings replaced by the given rule.
template <typename MakeFace>
multiid::Corpus generated_corpus(const multiid::Corpus& like, const std::vector<std::string>& sample_ids,
                                 MakeFace&& make_faces, const std::string& clip_backend = "clip") {
  using namespace multiid;
  std::vector<ImageRecord> images;
  std::vector<FaceRecord> faces;
  for (const auto& id : sample_ids) {
    ImageRecord img;
    img.image_id = id;
    if (const ImageRecord* src = like.find_image(id); src != nullptr) {
      img.aesthetic = src->aesthetic;
      if (auto it = src->embeddings.find(clip_backend); it != src->embeddings.end()) img.embeddings.emplace(*it);
    }
    std::vector<FaceRecord> made = make_faces(id);
    for (std::size_t k = 0; k < made.size(); ++k) {
      made[k].image_id = id;
      made[k].face_id = id + "_gen" + std::to_string(k);
      made[k].identity_id.reset();
      faces.push_back(std::move(made[k]));
    }
    images.push_back(std::move(img));
  }
  std::vector<BackendDescriptor> backends;
  for (const auto& b : like.manifest().backends) {
    if (b.scope != BlockScope::kPrompt) backends.push_back(b);
  }
  return Corpus::build("generated", SplitTag::kGenerated, backends, std::move(images), std::move(faces));
}

}  // namespace testing

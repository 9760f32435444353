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

#include "multiid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "multiid/embedding.hpp"
#include "multiid/error.hpp"

namespace multiid {

std::vector<float> random_unit(std::size_t dim, Rng& rng) {
  if (dim == 0) throw Error(Errc::kInvalidArgument, "dimension must be positive");
  std::vector<double> v(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

std::vector<float> unit_at_cosine(std::span<const float> direction, double cosine, Rng& rng) {
  if (!(cosine >= -1.0 && cosine <= 1.0)) throw Error(Errc::kInvalidArgument, "cosine must lie in [-1, 1]");
  const std::size_t dim = direction.size();
  if (dim < 2) throw Error(Errc::kInvalidArgument, "need at least two dimensions");
  std::vector<double> u(direction.begin(), direction.end());
  double un = 0.0;
  for (double x : u) un += x * x;
  un = std::sqrt(un);
  for (auto& x : u) x /= un;
  std::vector<double> w(dim);
  double wn = 0.0;
  do {
    double proj = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      w[i] = rng.normal();
      proj += w[i] * u[i];
    }
    wn = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      w[i] -= proj * u[i];
      wn += w[i] * w[i];
    }
    wn = std::sqrt(wn);
  } while (wn < 1e-6);
  const double s = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(cosine * u[i] + s * w[i] / wn);
  return out;
}

std::vector<std::vector<float>> separated_directions(std::size_t n, std::size_t dim, double max_cross, Rng& rng) {
  std::vector<std::vector<float>> out;
  out.reserve(n);
  constexpr int kAttempts = 1000;
  while (out.size() < n) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      auto v = random_unit(dim, rng);
      placed = max_cross >= 1.0 || std::all_of(out.begin(), out.end(), [&](const auto& o) {
                 return cosine(std::span<const float>(v), std::span<const float>(o)) < max_cross;
               });
      if (placed) out.push_back(std::move(v));
    }
    if (!placed) {
      throw Error(Errc::kInvalidArgument, "can not place " + std::to_string(n) + " directions in " +
                                              std::to_string(dim) + " dimensions below the cross cosine");
    }
  }
  return out;
}

std::string synthetic_identity_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "id%05zu", index);
  return buf;
}

ReferenceBank synthetic_bank(const SyntheticBankOptions& options) {
  Rng rng(derive_seed(options.seed, "synthetic-bank"));
  const auto centers = separated_directions(options.identities, options.dim, options.max_cross_cosine, rng);
  std::vector<BankIdentity> identities;
  identities.reserve(options.identities);
  for (std::size_t i = 0; i < options.identities; ++i) {
    BankIdentity id;
    id.identity_id = synthetic_identity_id(i);
    Centroid c;
    c.embeddings.emplace(options.backend, Embedding(options.backend, centers[i]));
    c.support = options.members_per_identity;
    id.centroids.push_back(std::move(c));
    for (std::size_t m = 0; m < options.members_per_identity; ++m) {
      BankMember member;
      member.face_id = id.identity_id + "_m" + std::to_string(m);
      member.image_id = id.identity_id + "_img" + std::to_string(m);
      member.embeddings.emplace(options.backend,
                                Embedding(options.backend, unit_at_cosine(centers[i], options.member_cosine, rng)));
      id.members.push_back(std::move(member));
    }
    identities.push_back(std::move(id));
  }
  return ReferenceBank(std::move(identities));
}

namespace {

Landmarks5 landmarks_in(const BoundingBox& b) {
  // Canonical frontal layout scaled into the box.
  static constexpr double kRel[5][2] = {{0.34, 0.46}, {0.66, 0.46}, {0.50, 0.64}, {0.37, 0.82}, {0.63, 0.82}};
  Landmarks5 l;
  for (int k = 0; k < 5; ++k) l.points[k] = {b.x + kRel[k][0] * b.w, b.y + kRel[k][1] * b.h};
  return l;
}

}  // namespace

SyntheticWorld synthetic_world(const SyntheticWorldOptions& o) {
  if (o.identities == 0 || o.face_backends.empty() || o.max_faces_per_image == 0) {
    throw Error(Errc::kInvalidArgument, "synthetic world needs identities, backends and faces per image");
  }
  Rng rng(derive_seed(o.seed, "synthetic-world"));
  std::map<std::string, std::vector<std::vector<float>>> centers;
  for (const auto& b : o.face_backends) centers[b] = separated_directions(o.identities, o.dim, o.max_cross_cosine, rng);

  std::vector<BackendDescriptor> face_backends;
  for (const auto& b : o.face_backends) face_backends.push_back({b, static_cast<std::uint32_t>(o.dim), BlockScope::kFace});

  auto make_face = [&](const std::string& face_id, const std::string& image_id, std::optional<std::size_t> identity,
                       BoundingBox box) {
    FaceRecord f;
    f.face_id = face_id;
    f.image_id = image_id;
    f.bbox = box;
    f.landmarks = landmarks_in(box);
    f.quality = rng.uniform(0.5, 1.0);
    for (const auto& b : o.face_backends) {
      auto v = identity ? unit_at_cosine(centers[b][*identity], o.member_cosine, rng) : random_unit(o.dim, rng);
      f.embeddings.emplace(b, Embedding(b, std::move(v)));
    }
    return f;
  };

  // Single-ID corpus: every image holds one face collected under an identity query.
  std::vector<ImageRecord> single_images;
  std::vector<FaceRecord> single_faces;
  for (std::size_t i = 0; i < o.identities; ++i) {
    const std::string id = synthetic_identity_id(i);
    const std::size_t total = o.single_images_per_identity + o.outliers_per_identity;
    for (std::size_t k = 0; k < total; ++k) {
      const std::string image_id = "s_" + id + "_" + std::to_string(k);
      ImageRecord img;
      img.image_id = image_id;
      img.tags = {"single-id"};
      img.aesthetic = rng.uniform(4.0, 7.0);
      single_images.push_back(std::move(img));
      const bool outlier = k >= o.single_images_per_identity;
      FaceRecord f = make_face(image_id + "_f0", image_id, outlier ? std::nullopt : std::optional(i),
                               {64.0, 48.0, 128.0, 160.0});
      f.identity_id = id;
      single_faces.push_back(std::move(f));
    }
  }

  SyntheticWorld world{
      Corpus::build("synthetic-single", SplitTag::kSingleId, face_backends, std::move(single_images),
                    std::move(single_faces)),
      Corpus::build("synthetic-empty", SplitTag::kMultiId, face_backends, {}, {}),
      {}};

  // Multi-ID corpus with a long-tailed identity frequency.
  std::vector<double> weights(o.identities);
  for (std::size_t i = 0; i < o.identities; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  auto draw_identity = [&](const std::vector<bool>& taken) -> std::optional<std::size_t> {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!taken[i]) total += weights[i];
    }
    if (total <= 0.0) return std::nullopt;
    double x = rng.uniform01() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (taken[i]) continue;
      if (x < weights[i]) return i;
      x -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (!taken[i]) return i;
    }
    return std::nullopt;
  };

  std::vector<BackendDescriptor> multi_backends = face_backends;
  multi_backends.push_back({o.clip_backend, static_cast<std::uint32_t>(o.clip_dim), BlockScope::kImage});
  multi_backends.push_back({o.clip_backend, static_cast<std::uint32_t>(o.clip_dim), BlockScope::kPrompt});

  std::vector<ImageRecord> multi_images;
  std::vector<FaceRecord> multi_faces;
  for (std::size_t m = 0; m < o.multi_images; ++m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%05zu", m);
    const std::string image_id = buf;
    ImageRecord img;
    img.image_id = image_id;
    img.tags = {"multi-id"};
    img.aesthetic = rng.uniform(4.0, 7.0);
    const auto prompt = random_unit(o.clip_dim, rng);
    img.prompt_embeddings.emplace(o.clip_backend, Embedding(o.clip_backend, prompt));
    img.embeddings.emplace(o.clip_backend, Embedding(o.clip_backend, unit_at_cosine(prompt, 0.3, rng)));

    const std::size_t faces = 1 + rng.uniform_index(std::min(o.max_faces_per_image, o.identities));
    img.caption = std::to_string(faces) + " people in a synthetic scene";
    multi_images.push_back(std::move(img));
    std::vector<bool> taken(o.identities, false);
    for (std::size_t k = 0; k < faces; ++k) {
      std::optional<std::size_t> identity;
      if (!rng.bernoulli(o.unknown_face_rate)) {
        identity = draw_identity(taken);
        if (identity) taken[*identity] = true;
      }
      const BoundingBox box{40.0 + 200.0 * static_cast<double>(k), 60.0, 120.0, 150.0};
      FaceRecord f = make_face(image_id + "_f" + std::to_string(k), image_id, identity, box);
      if (identity) world.truth.emplace(f.face_id, synthetic_identity_id(*identity));
      multi_faces.push_back(std::move(f));
    }
  }
  world.multi_id = Corpus::build("synthetic-multi", SplitTag::kMultiId, std::move(multi_backends),
                                 std::move(multi_images), std::move(multi_faces));
  return world;
}

}  // namespace multiid

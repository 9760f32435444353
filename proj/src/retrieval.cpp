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

#include "multiid/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <Eigen/Core>

#include "multiid/error.hpp"

namespace multiid {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shared by both paths so rescored similarities are bitwise identical to
// the reference loop.
double exact_similarity(std::span<const float> face, double face_norm, std::span<const float> centroid,
                        double centroid_norm) {
  double acc = 0.0;
  for (std::size_t k = 0; k < face.size(); ++k) acc += static_cast<double>(face[k]) * centroid[k];
  return std::clamp(acc / (face_norm * centroid_norm), -1.0, 1.0);
}

struct Prepared {
  CentroidIndex index;
  std::vector<std::vector<std::size_t>> rows_of_identity;
};

Prepared prepare(const FaceBatch& faces, const ReferenceBank& bank) {
  if (bank.empty()) throw Error(Errc::kEmptyBank, "cannot assign identities against an empty bank");
  if (faces.face_ids.size() != faces.embeddings.rows()) {
    throw Error(Errc::kShapeMismatch, "face ids and embedding rows disagree");
  }
  Prepared p{bank.centroid_index(faces.embeddings.backend_id()), {}};
  if (p.index.centroids.dim() != faces.embeddings.dim()) {
    throw Error(Errc::kDimensionMismatch, "faces have dimension " + std::to_string(faces.embeddings.dim()) +
                                              ", centroids " + std::to_string(p.index.centroids.dim()));
  }
  p.rows_of_identity.resize(bank.size());
  for (std::size_t r = 0; r < p.index.owner.size(); ++r) p.rows_of_identity[p.index.owner[r]].push_back(r);
  return p;
}

double face_norm(std::span<const float> row, const std::string& face_id) {
  const double n = std::sqrt(squared_norm(row));
  if (n == 0.0 || !std::isfinite(n)) throw Error(Errc::kZeroNorm, "face '" + face_id + "' has a zero or non-finite norm");
  return n;
}

// Exact score of identity i for one face: max over its centroids.
double identity_score(const Prepared& p, std::size_t identity, std::span<const float> face, double norm) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t r : p.rows_of_identity[identity]) {
    best = std::max(best, exact_similarity(face, norm, p.index.centroids.row(r), p.index.norms[r]));
  }
  return best;
}

// Folds one identity into the running best / runner-up. Identities must be
// visited in ascending index order so ties keep the smaller id.
struct Top2 {
  double best = -std::numeric_limits<double>::infinity();
  double second = -std::numeric_limits<double>::infinity();
  std::size_t best_identity = 0;
  bool any = false;

  void offer(std::size_t identity, double score) {
    if (!any || score > best) {
      if (any) second = std::max(second, best);
      best = score;
      best_identity = identity;
      any = true;
    } else {
      second = std::max(second, score);
    }
  }
};

AssignmentResult finish(const std::string& face_id, const Top2& top, const ReferenceBank& bank, double threshold) {
  AssignmentResult r;
  r.face_id = face_id;
  r.best_similarity = top.best;
  r.second_best_similarity = std::isfinite(top.second) ? top.second : -1.0;
  r.nearest_identity = bank.identity(top.best_identity).identity_id;
  r.assigned = top.best > threshold;
  if (r.assigned) r.best_identity = r.nearest_identity;
  return r;
}

void check_threshold(double threshold) {
  if (!std::isfinite(threshold)) throw Error(Errc::kInvalidArgument, "threshold must be finite");
}

}  // namespace

FaceBatch make_face_batch(const Corpus& corpus, const std::string& backend_id) {
  FaceBatch out;
  out.embeddings = corpus.face_matrix(backend_id);
  out.face_ids.reserve(corpus.faces().size());
  for (const auto& f : corpus.faces()) out.face_ids.push_back(f.face_id);
  return out;
}

std::vector<AssignmentResult> assign(const FaceBatch& faces, const ReferenceBank& bank, double threshold) {
  check_threshold(threshold);
  const Prepared p = prepare(faces, bank);
  std::vector<AssignmentResult> out;
  out.reserve(faces.face_ids.size());
  for (std::size_t f = 0; f < faces.face_ids.size(); ++f) {
    const auto row = faces.embeddings.row(f);
    const double norm = face_norm(row, faces.face_ids[f]);
    Top2 top;
    for (std::size_t i = 0; i < bank.size(); ++i) {
      if (p.rows_of_identity[i].empty()) continue;
      top.offer(i, identity_score(p, i, row, norm));
    }
    out.push_back(finish(faces.face_ids[f], top, bank, threshold));
  }
  return out;
}

std::vector<AssignmentResult> assign_blocked(const FaceBatch& faces, const ReferenceBank& bank, double threshold,
                                             const BlockedOptions& options) {
  check_threshold(threshold);
  if (options.block_size == 0) throw Error(Errc::kInvalidArgument, "block_size must be > 0");
  const Prepared p = prepare(faces, bank);
  const std::size_t n = faces.face_ids.size();
  const std::size_t dim = faces.embeddings.dim();
  const std::size_t centroid_rows = p.index.centroids.rows();
  const std::size_t identities = bank.size();

  // Bound on |float product score - exact cosine| for the normalized inputs
  // the corpus stores, with generous slack for the norm correction.
  const double margin = std::max(1e-3, 8.0 * static_cast<double>(dim) * 0x1.0p-24);

  const Eigen::Map<const RowMatrix> centroids(p.index.centroids.data().data(),
                                              static_cast<Eigen::Index>(centroid_rows),
                                              static_cast<Eigen::Index>(dim));
  std::vector<float> inv_centroid_norm(centroid_rows);
  for (std::size_t r = 0; r < centroid_rows; ++r) inv_centroid_norm[r] = static_cast<float>(1.0 / p.index.norms[r]);
  bool one_per_identity = centroid_rows == identities;
  for (std::size_t r = 0; one_per_identity && r < centroid_rows; ++r) one_per_identity = p.index.owner[r] == r;

  std::vector<AssignmentResult> out(n);
  const std::size_t blocks = (n + options.block_size - 1) / options.block_size;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    RowMatrix scores;
    std::vector<float> identity_best(identities);
    std::vector<std::size_t> candidates;
    for (std::size_t b = next++; b < blocks; b = next++) {
      const std::size_t begin = b * options.block_size;
      const std::size_t rows = std::min(options.block_size, n - begin);
      const Eigen::Map<const RowMatrix> block(faces.embeddings.row(begin).data(), static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(dim));
      scores.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(centroid_rows));
      scores.noalias() = block * centroids.transpose();

      for (std::size_t q = 0; q < rows; ++q) {
        const std::size_t f = begin + q;
        const auto face = faces.embeddings.row(f);
        const double norm = face_norm(face, faces.face_ids[f]);
        const float inv_norm = static_cast<float>(1.0 / norm);
        const float* s = scores.data() + q * centroid_rows;

        if (one_per_identity) {
          for (std::size_t r = 0; r < centroid_rows; ++r) identity_best[r] = s[r] * inv_norm * inv_centroid_norm[r];
        } else {
          std::fill(identity_best.begin(), identity_best.end(), -std::numeric_limits<float>::infinity());
          for (std::size_t r = 0; r < centroid_rows; ++r) {
            float& slot = identity_best[p.index.owner[r]];
            slot = std::max(slot, s[r] * inv_norm * inv_centroid_norm[r]);
          }
        }
        const std::span<const float> per_identity = identity_best;

        float top1 = -std::numeric_limits<float>::infinity();
        float top2 = -std::numeric_limits<float>::infinity();
        for (float v : per_identity) {
          if (v > top1) {
            top2 = top1;
            top1 = v;
          } else if (v > top2) {
            top2 = v;
          }
        }
        // The exact best and runner-up both score at least (runner-up - margin)
        // in the product; everything below cannot affect the result.
        const double cutoff = (std::isfinite(top2) ? static_cast<double>(top2) : static_cast<double>(top1)) - margin;
        candidates.clear();
        for (std::size_t i = 0; i < identities; ++i) {
          if (static_cast<double>(per_identity[i]) >= cutoff) candidates.push_back(i);
        }
        Top2 top;
        for (std::size_t i : candidates) top.offer(i, identity_score(p, i, face, norm));
        out[f] = finish(faces.face_ids[f], top, bank, threshold);
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, blocks));
  if (workers == 1) {
    work();
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = blocks;
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace multiid

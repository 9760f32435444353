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

#include "multiid/cluster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "multiid/error.hpp"

namespace multiid {

void ClusterParams::validate() const {
  if (!(eps > 0.0 && eps < 2.0)) throw Error(Errc::kInvalidArgument, "eps must lie in (0, 2)");
  if (min_pts < 1) throw Error(Errc::kInvalidArgument, "min_pts must be >= 1");
}

std::vector<std::vector<std::size_t>> DbscanResult::clusters() const {
  std::vector<std::vector<std::size_t>> out(cluster_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

std::vector<std::size_t> DbscanResult::noise() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) out.push_back(i);
  }
  return out;
}

namespace {

DbscanResult run_dbscan(std::size_t n, const ClusterParams& params,
                        const std::function<std::span<const float>(std::size_t)>& row) {
  params.validate();
  if (n == 0) throw Error(Errc::kEmptyInput, "dbscan needs at least one point");

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = std::sqrt(squared_norm(row(i)));
    if (norms[i] == 0.0) throw Error(Errc::kZeroNorm, "dbscan point " + std::to_string(i) + " has zero norm");
  }

  // Neighborhoods (self included), ascending by index.
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i].push_back(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = dot(row(i), row(j)) / (norms[i] * norms[j]);
      if (1.0 - c <= params.eps) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());

  DbscanResult out;
  out.labels.assign(n, kNoise);
  out.core.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) out.core[i] = neighbors[i].size() >= params.min_pts;

  // Core components, discovered in index order.
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.core[i] || out.labels[i] != kNoise) continue;
    const int label = next++;
    out.labels[i] = label;
    stack.push_back(i);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (std::size_t q : neighbors[p]) {
        if (out.core[q] && out.labels[q] == kNoise) {
          out.labels[q] = label;
          stack.push_back(q);
        }
      }
    }
  }
  // Border points take the label of their lowest-indexed core neighbor.
  for (std::size_t i = 0; i < n; ++i) {
    if (out.core[i]) continue;
    for (std::size_t q : neighbors[i]) {
      if (out.core[q]) {
        out.labels[i] = out.labels[q];
        break;
      }
    }
  }
  out.cluster_count = static_cast<std::size_t>(next);
  return out;
}

}  // namespace

DbscanResult dbscan(std::span<const Embedding> points, const ClusterParams& params) {
  for (const auto& p : points) {
    if (p.backend_id() != points.front().backend_id() || p.dim() != points.front().dim()) {
      throw Error(Errc::kBackendMismatch, "dbscan points must share one backend and dimension");
    }
  }
  return run_dbscan(points.size(), params, [&](std::size_t i) { return points[i].values(); });
}

DbscanResult dbscan(const EmbeddingMatrix& points, const ClusterParams& params) {
  return run_dbscan(points.rows(), params, [&](std::size_t i) { return points.row(i); });
}

std::vector<IdentityGroup> cluster_groups(const Corpus& corpus, const std::string& backend_id,
                                          const ClusterParams& params, std::size_t workers) {
  params.validate();
  std::map<std::string, std::vector<const FaceRecord*>> by_query;
  for (const auto& f : corpus.faces()) {
    if (!f.identity_id) {
      throw Error(Errc::kInvalidArgument, "single-ID face '" + f.face_id + "' has no identity query label");
    }
    by_query[*f.identity_id].push_back(&f);
  }
  if (by_query.empty()) throw Error(Errc::kEmptyInput, "corpus '" + corpus.id() + "' has no faces to cluster");

  std::vector<IdentityGroup> groups;
  for (auto& [id, faces] : by_query) groups.push_back({id, std::move(faces), {}});

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      EmbeddingMatrix m;
      bool first = true;
      for (const FaceRecord* f : groups[g].faces) {
        const Embedding& e = f->embedding(backend_id);
        if (first) {
          m = EmbeddingMatrix(backend_id, e.dim());
          m.reserve_rows(groups[g].faces.size());
          first = false;
        }
        m.append(e);
      }
      groups[g].clustering = dbscan(m, params);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, groups.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = groups.size();
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }
  return groups;
}

Embedding centroid_of(std::span<const Embedding* const> members) {
  if (members.empty()) throw Error(Errc::kEmptyInput, "centroid of an empty set");
  const std::size_t dim = members.front()->dim();
  std::vector<double> sum(dim, 0.0);
  for (const Embedding* e : members) {
    if (e->dim() != dim || e->backend_id() != members.front()->backend_id()) {
      throw Error(Errc::kBackendMismatch, "centroid members disagree on backend or dimension");
    }
    const auto v = e->values();
    for (std::size_t k = 0; k < dim; ++k) sum[k] += v[k];
  }
  double norm = 0.0;
  for (double s : sum) norm += s * s;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(Errc::kZeroNorm, "centroid members cancel out");
  std::vector<float> values(dim);
  for (std::size_t k = 0; k < dim; ++k) values[k] = static_cast<float>(sum[k] / norm);
  return Embedding(members.front()->backend_id(), std::move(values));
}

namespace {

Centroid make_centroid(const std::vector<const FaceRecord*>& faces, bool secondary) {
  Centroid c;
  c.secondary = secondary;
  c.support = faces.size();
  for (const auto& [backend, e] : faces.front()->embeddings) {
    std::vector<const Embedding*> vs;
    bool everywhere = true;
    for (const FaceRecord* f : faces) {
      auto it = f->embeddings.find(backend);
      if (it == f->embeddings.end()) {
        everywhere = false;
        break;
      }
      vs.push_back(&it->second);
    }
    if (everywhere) c.embeddings.emplace(backend, centroid_of(vs));
  }
  return c;
}

}  // namespace

BankBuildResult build_bank(std::span<const IdentityGroup> groups, const BankOptions& options) {
  BankBuildResult out;
  std::vector<BankIdentity> identities;
  for (const auto& group : groups) {
    auto clusters = group.clustering.clusters();
    if (group.faces.size() != group.clustering.labels.size()) {
      throw Error(Errc::kShapeMismatch, "identity '" + group.identity_id + "' clustering does not match its faces");
    }
    // Largest first; ties keep discovery order.
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    if (clusters.empty() || clusters.front().empty()) {
      out.warnings.push_back({group.identity_id, "no cluster survived outlier removal; identity skipped"});
      continue;
    }

    BankIdentity identity;
    identity.identity_id = group.identity_id;
    const std::size_t kept = options.multi_centroid ? clusters.size() : 1;
    for (std::size_t k = 0; k < kept; ++k) {
      if (k > 0 && clusters[k].size() < options.min_secondary_size) break;
      std::vector<const FaceRecord*> faces;
      for (std::size_t i : clusters[k]) faces.push_back(group.faces[i]);
      Centroid c = make_centroid(faces, k > 0);
      const std::string backend =
          options.cluster_backend.empty() ? faces.front()->embeddings.begin()->first : options.cluster_backend;
      const auto cit = c.embeddings.find(backend);
      if (cit == c.embeddings.end()) {
        throw Error(Errc::kMissingBackend, "identity '" + group.identity_id + "' lacks backend '" + backend + "'");
      }
      std::size_t dropped = 0;
      for (const FaceRecord* f : faces) {
        if (cosine(f->embedding(backend), cit->second) < options.member_floor) {
          ++dropped;
          continue;
        }
        identity.members.push_back({f->face_id, f->image_id, f->embeddings});
      }
      if (dropped > 0) {
        out.warnings.push_back({group.identity_id, std::to_string(dropped) + " member(s) below the centroid floor dropped"});
      }
      identity.centroids.push_back(std::move(c));
    }
    identities.push_back(std::move(identity));
  }
  out.bank = ReferenceBank(std::move(identities));
  return out;
}

}  // namespace multiid

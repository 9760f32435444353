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

#include "multiid/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "multiid/error.hpp"

namespace multiid {

double copy_paste(double sim_ref, double sim_gt) {
  constexpr double kSlack = 1e-9;
  if (!std::isfinite(sim_ref) || !std::isfinite(sim_gt) || std::abs(sim_ref) > 1.0 + kSlack ||
      std::abs(sim_gt) > 1.0 + kSlack) {
    throw Error(Errc::kInvalidArgument, "copy_paste inputs must be similarities in [-1, 1]");
  }
  sim_ref = std::clamp(sim_ref, -1.0, 1.0);
  sim_gt = std::clamp(sim_gt, -1.0, 1.0);
  if (1.0 - sim_gt <= kUnitSimilarityTolerance) return 0.0;
  return std::clamp((sim_ref - sim_gt) / (1.0 - sim_gt), -1.0, 1.0);
}

double copy_paste_raw(double sim_ref, double sim_gt) { return sim_ref - sim_gt; }

namespace {

std::vector<Embedding> embeddings_of(std::span<const FaceRecord* const> faces, const std::string& backend) {
  std::vector<Embedding> out;
  out.reserve(faces.size());
  for (const FaceRecord* f : faces) out.push_back(f->embedding(backend));
  return out;
}

bool all_have(std::span<const FaceRecord* const> faces, const std::string& backend) {
  return std::all_of(faces.begin(), faces.end(), [&](const FaceRecord* f) { return f->has(backend); });
}

}  // namespace

MatchedFaces match_faces(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                         const std::string& backend_id) {
  if (gen.empty() || tgt.empty()) throw Error(Errc::kEmptyInput, "matching needs at least one face per side");
  const auto g = embeddings_of(gen, backend_id);
  const auto t = embeddings_of(tgt, backend_id);
  return solve_assignment(similarity_matrix(g, t));
}

BackendMean id_similarity(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                          const MatchedFaces& matching, std::span<const std::string> backends) {
  BackendMean out;
  if (matching.pairs.empty()) return out;
  double sum = 0.0;
  for (const auto& b : backends) {
    if (!all_have(gen, b) || !all_have(tgt, b)) {
      out.missing.push_back(b);
      continue;
    }
    double acc = 0.0;
    for (const auto& [gi, ti] : matching.pairs) acc += cosine(gen[gi]->embedding(b), tgt[ti]->embedding(b));
    const double v = acc / static_cast<double>(matching.pairs.size());
    out.per_backend[b] = v;
    sum += v;
  }
  if (!out.per_backend.empty()) out.value = sum / static_cast<double>(out.per_backend.size());
  return out;
}

SimilarityMatrix aligned_similarity(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                                    const MatchedFaces& matching, const std::string& backend_id) {
  const std::size_t n = matching.pairs.size();
  SimilarityMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = cosine(gen[matching.pairs[i].first]->embedding(backend_id),
                         tgt[matching.pairs[j].second]->embedding(backend_id));
    }
  }
  return out;
}

std::optional<double> blend(const SimilarityMatrix& aligned) {
  if (aligned.rows() != aligned.cols()) throw Error(Errc::kShapeMismatch, "blend needs a square matrix");
  const std::size_t n = aligned.rows();
  if (n < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sum += aligned(i, j);
    }
  }
  return sum / static_cast<double>(n * n - n);
}

std::optional<double> blend(std::span<const FaceRecord* const> gen, std::span<const FaceRecord* const> tgt,
                            const MatchedFaces& matching, const std::string& backend_id) {
  return blend(aligned_similarity(gen, tgt, matching, backend_id));
}

ClipScores clip_scores(const Embedding* gen_image, const Embedding* gt_image, const Embedding* prompt) {
  ClipScores out;
  if (gen_image == nullptr) {
    out.flags.push_back("missing-generated-clip");
    return out;
  }
  if (gt_image != nullptr) {
    out.clip_i = cosine(*gen_image, *gt_image);
  } else {
    out.flags.push_back("missing-gt-clip");
  }
  if (prompt != nullptr) {
    out.clip_t = cosine(*gen_image, *prompt);
  } else {
    out.flags.push_back("missing-prompt-clip");
  }
  return out;
}

std::span<const std::string> metric_names() {
  static const std::vector<std::string> names = {"sim_gt",         "sim_ref", "sim_ref_mean", "copy_paste",
                                                 "copy_paste_raw", "blend",   "clip_i",       "clip_t",
                                                 "aesthetic"};
  return names;
}

std::optional<double> metric_value(const SampleMetrics& m, const std::string& name) {
  if (name == "sim_gt") return m.sim_gt;
  if (name == "sim_ref") return m.sim_ref;
  if (name == "sim_ref_mean") return m.sim_ref_mean;
  if (name == "copy_paste") return m.copy_paste;
  if (name == "copy_paste_raw") return m.copy_paste_raw;
  if (name == "blend") return m.blend;
  if (name == "clip_i") return m.clip_i;
  if (name == "clip_t") return m.clip_t;
  if (name == "aesthetic") return m.aesthetic;
  throw Error(Errc::kInvalidArgument, "unknown metric '" + name + "'");
}

std::string subset_of(std::size_t identity_count) {
  if (identity_count <= 1) return "1";
  if (identity_count == 2) return "2";
  return "3-4";
}

MetricSummary summarize(std::span<const SampleMetrics> samples) {
  MetricSummary out;
  out.samples = samples.size();
  for (const auto& name : metric_names()) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      if (auto v = metric_value(s, name)) {
        sum += *v;
        ++n;
      }
    }
    out.present[name] = n;
    if (n > 0) out.mean[name] = sum / static_cast<double>(n);
  }
  return out;
}

namespace {

const Embedding* image_embedding(const Corpus& c, const std::string& image_id, const std::string& backend,
                                 bool prompt) {
  const ImageRecord* img = c.find_image(image_id);
  if (img == nullptr) return nullptr;
  const auto& m = prompt ? img->prompt_embeddings : img->embeddings;
  auto it = m.find(backend);
  return it == m.end() ? nullptr : &it->second;
}

SampleMetrics evaluate_sample(const BenchSample& sample, const Corpus& bench, const Corpus& generated,
                              const std::vector<std::string>& backends, const EvalOptions& options) {
  SampleMetrics m;
  m.sample_id = sample.sample_id;
  m.identity_count = sample.references.size();

  std::vector<const FaceRecord*> gen;
  for (std::size_t i : generated.faces_of_image(sample.sample_id)) gen.push_back(&generated.faces()[i]);
  m.generated_faces = gen.size();

  std::vector<const FaceRecord*> tgt;
  std::vector<std::vector<const FaceRecord*>> refs;
  for (const auto& r : sample.references) {
    const FaceRecord* t = bench.find_face(r.gt_face_id);
    if (t == nullptr) throw Error(Errc::kNotFound, "ground-truth face '" + r.gt_face_id + "' not in bench corpus");
    tgt.push_back(t);
    std::vector<const FaceRecord*> rs;
    for (const auto& fid : r.reference_face_ids) {
      const FaceRecord* f = bench.find_face(fid);
      if (f == nullptr) throw Error(Errc::kNotFound, "reference face '" + fid + "' not in bench corpus");
      rs.push_back(f);
    }
    refs.push_back(std::move(rs));
  }

  const MatchedFaces matching = match_faces(gen, tgt, backends.front());
  m.matched_faces = matching.pairs.size();
  if (gen.size() != tgt.size()) m.flags.push_back("face-count-mismatch");

  double sim_gt = 0.0, sim_ref = 0.0, sim_ref_mean = 0.0, blend_sum = 0.0;
  std::size_t present = 0, blend_present = 0;
  for (const auto& b : backends) {
    if (!all_have(gen, b) || !all_have(tgt, b) ||
        !std::all_of(refs.begin(), refs.end(), [&](const auto& rs) { return all_have(rs, b); })) {
      m.flags.push_back("missing-backend:" + b);
      continue;
    }
    BackendBreakdown bd;
    for (const auto& [gi, ti] : matching.pairs) {
      bd.sim_gt += cosine(gen[gi]->embedding(b), tgt[ti]->embedding(b));
      double best = -1.0, mean = 0.0;
      for (const FaceRecord* r : refs[ti]) {
        const double c = cosine(gen[gi]->embedding(b), r->embedding(b));
        best = std::max(best, c);
        mean += c;
      }
      bd.sim_ref += best;
      bd.sim_ref_mean += mean / static_cast<double>(refs[ti].size());
    }
    const auto n = static_cast<double>(matching.pairs.size());
    bd.sim_gt /= n;
    bd.sim_ref /= n;
    bd.sim_ref_mean /= n;
    bd.blend = blend(gen, tgt, matching, b);
    sim_gt += bd.sim_gt;
    sim_ref += bd.sim_ref;
    sim_ref_mean += bd.sim_ref_mean;
    if (bd.blend) {
      blend_sum += *bd.blend;
      ++blend_present;
    }
    ++present;
    m.backends.emplace(b, bd);
  }
  if (present > 0) {
    const auto n = static_cast<double>(present);
    m.sim_gt = sim_gt / n;
    m.sim_ref = sim_ref / n;
    m.sim_ref_mean = sim_ref_mean / n;
    m.copy_paste = copy_paste(*m.sim_ref, *m.sim_gt);
    m.copy_paste_raw = copy_paste_raw(*m.sim_ref, *m.sim_gt);
  }
  if (blend_present > 0) m.blend = blend_sum / static_cast<double>(blend_present);

  const auto clip = clip_scores(image_embedding(generated, sample.sample_id, options.clip_backend, false),
                                image_embedding(bench, sample.gt_image_id, options.clip_backend, false),
                                image_embedding(bench, sample.gt_image_id, options.clip_backend, true));
  m.clip_i = clip.clip_i;
  m.clip_t = clip.clip_t;
  m.flags.insert(m.flags.end(), clip.flags.begin(), clip.flags.end());

  if (const ImageRecord* img = generated.find_image(sample.sample_id); img != nullptr) m.aesthetic = img->aesthetic;
  return m;
}

}  // namespace

EvalReport evaluate(const BenchSet& bench_set, const Corpus& bench, const Corpus& generated,
                    const EvalOptions& options) {
  EvalReport report;
  report.face_backends = options.face_backends.empty() ? bench.face_backends() : options.face_backends;
  if (report.face_backends.empty()) throw Error(Errc::kMissingBackend, "no face backend to evaluate");
  report.matching_backend = report.face_backends.front();
  if (generated.backend(report.matching_backend) == nullptr) {
    throw Error(Errc::kMissingBackend, "generated corpus lacks the matching backend '" + report.matching_backend + "'");
  }

  std::vector<const BenchSample*> present;
  for (const auto& sample : bench_set.samples) {
    if (generated.faces_of_image(sample.sample_id).empty()) {
      report.skipped.push_back(sample.sample_id);
    } else {
      present.push_back(&sample);
    }
  }
  report.samples.resize(present.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < present.size(); i = next++) {
      try {
        report.samples[i] = evaluate_sample(*present[i], bench, generated, report.face_backends, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = present.size();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(present.size(), 1));
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
  report.overall = summarize(report.samples);
  std::map<std::string, std::vector<SampleMetrics>> by_subset;
  for (const auto& s : report.samples) by_subset[subset_of(s.identity_count)].push_back(s);
  for (const auto& [name, samples] : by_subset) report.subsets[name] = summarize(samples);
  return report;
}

}  // namespace multiid

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

#include "multiid/pairing.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "multiid/error.hpp"

namespace multiid {
using nlohmann::json;

namespace {

std::vector<const FaceRecord*> faces_of(const Corpus& corpus, std::string_view image_id) {
  std::vector<const FaceRecord*> out;
  for (std::size_t i : corpus.faces_of_image(image_id)) out.push_back(&corpus.faces()[i]);
  return out;
}

template <class F>
auto parse_guard(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw Error(Errc::kParse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ----------------------------------------------------------------------------
// filters

ImageFilter min_aesthetic(double threshold) {
  return [threshold](const ImageRecord& img, std::span<const FaceRecord* const>) {
    return !img.aesthetic || *img.aesthetic >= threshold;
  };
}

ImageFilter min_face_quality(double threshold) {
  return [threshold](const ImageRecord&, std::span<const FaceRecord* const> faces) {
    return std::all_of(faces.begin(), faces.end(),
                       [&](const FaceRecord* f) { return !f->quality || *f->quality >= threshold; });
  };
}

ImageFilter exclude_tags(std::vector<std::string> tags) {
  return [tags = std::move(tags)](const ImageRecord& img, std::span<const FaceRecord* const>) {
    return std::none_of(img.tags.begin(), img.tags.end(),
                        [&](const std::string& t) { return std::find(tags.begin(), tags.end(), t) != tags.end(); });
  };
}

// ----------------------------------------------------------------------------
// pairs

PairingResult build_pairs(const Corpus& multi_id, const ReferenceBank& bank, std::uint64_t seed,
                          const PairingOptions& options) {
  PairingResult out;
  for (const auto& img : multi_id.images()) {
    const auto faces = faces_of(multi_id, img.image_id);
    const bool keep = std::all_of(options.filters.begin(), options.filters.end(),
                                  [&](const ImageFilter& f) { return f(img, faces); });
    if (!keep) {
      out.filtered_image_ids.push_back(img.image_id);
      continue;
    }

    Rng rng(derive_seed(seed, img.image_id));
    PairedSample sample;
    sample.target_image_id = img.image_id;
    bool ok = false;
    for (const FaceRecord* f : faces) {
      if (!f->identity_id) continue;
      const auto idx = bank.find(*f->identity_id);
      if (!idx) {
        ok = false;
        break;
      }
      const auto& members = bank.identity(*idx).members;
      std::vector<const BankMember*> eligible;
      for (const auto& m : members) {
        if (m.image_id != img.image_id) eligible.push_back(&m);
      }
      if (members.size() < options.min_references || eligible.empty()) {
        ok = false;
        break;
      }
      const BankMember* pick = eligible[rng.uniform_index(eligible.size())];
      sample.identities.push_back({*f->identity_id, f->face_id, pick->face_id, pick->image_id});
      ok = true;
    }
    if (ok) {
      out.paired.push_back(std::move(sample));
    } else {
      out.unpaired_image_ids.push_back(img.image_id);
    }
  }
  return out;
}

std::string pairs_to_json(const PairingResult& result) {
  json paired = json::array();
  for (const auto& s : result.paired) {
    json ids = json::array();
    for (const auto& p : s.identities) {
      ids.push_back({{"identity_id", p.identity_id},
                     {"target_face_id", p.target_face_id},
                     {"reference_face_id", p.reference_face_id},
                     {"reference_image_id", p.reference_image_id}});
    }
    paired.push_back({{"target_image_id", s.target_image_id}, {"identities", ids}});
  }
  json doc;
  doc["format"] = "multiid-pairs";
  doc["version"] = 1;
  doc["paired"] = std::move(paired);
  doc["unpaired"] = result.unpaired_image_ids;
  doc["filtered"] = result.filtered_image_ids;
  return doc.dump(1) + "\n";
}

PairingResult pairs_from_json(const std::string& text) {
  return parse_guard("pairs file", [&] {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "multiid-pairs") throw Error(Errc::kParse, "not a pairs file");
    PairingResult out;
    for (const auto& s : doc.at("paired")) {
      PairedSample ps;
      ps.target_image_id = s.at("target_image_id").get<std::string>();
      for (const auto& p : s.at("identities")) {
        ps.identities.push_back({p.at("identity_id").get<std::string>(), p.at("target_face_id").get<std::string>(),
                                 p.at("reference_face_id").get<std::string>(),
                                 p.at("reference_image_id").get<std::string>()});
      }
      out.paired.push_back(std::move(ps));
    }
    out.unpaired_image_ids = doc.at("unpaired").get<std::vector<std::string>>();
    out.filtered_image_ids = doc.value("filtered", std::vector<std::string>{});
    return out;
  });
}

// ----------------------------------------------------------------------------
// bench split

std::map<std::string, std::size_t> identity_appearances(const Corpus& corpus) {
  std::map<std::string, std::size_t> out;
  for (const auto& img : corpus.images()) {
    std::set<std::string> ids;
    for (std::size_t i : corpus.faces_of_image(img.image_id)) {
      if (corpus.faces()[i].identity_id) ids.insert(*corpus.faces()[i].identity_id);
    }
    for (const auto& id : ids) ++out[id];
  }
  return out;
}

std::vector<std::string> least_frequent_identities(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::size_t, std::string>> order;
  for (const auto& [id, n] : counts) order.emplace_back(n, id);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  for (auto& [n, id] : order) out.push_back(std::move(id));
  return out;
}

BenchSplit split_bench(const Corpus& corpus, const ReferenceBank& bank, const BenchOptions& options) {
  if (options.max_samples == 0) throw Error(Errc::kInvalidArgument, "bench max_samples must be > 0");
  if (options.max_identities_per_sample == 0 || options.references_per_identity == 0) {
    throw Error(Errc::kInvalidArgument, "bench needs at least one identity and one reference per sample");
  }
  const auto counts = identity_appearances(corpus);
  const auto tail = least_frequent_identities(counts);
  if (tail.empty()) throw Error(Errc::kInsufficientIdentities, "corpus has no identified faces");
  if (options.identity_count > tail.size()) {
    throw Error(Errc::kInsufficientIdentities, "requested " + std::to_string(options.identity_count) +
                                                   " bench identities, corpus has " + std::to_string(tail.size()));
  }

  // identity -> images containing it, in corpus order
  std::map<std::string, std::vector<std::string>> images_of;
  std::map<std::string, std::vector<const FaceRecord*>> identified;
  for (const auto& img : corpus.images()) {
    std::set<std::string> seen;
    for (std::size_t i : corpus.faces_of_image(img.image_id)) {
      const auto& f = corpus.faces()[i];
      if (!f.identity_id) continue;
      identified[img.image_id].push_back(&f);
      if (seen.insert(*f.identity_id).second) images_of[*f.identity_id].push_back(img.image_id);
    }
  }

  BenchSplit out;
  std::set<std::string> used_images;
  std::set<std::string> bench_ids;
  Rng rng(derive_seed(options.seed, "bench"));

  auto try_image = [&](const std::string& image_id) -> bool {
    if (used_images.contains(image_id)) return false;
    const auto& faces = identified[image_id];
    std::vector<const FaceRecord*> per_identity;
    std::set<std::string> ids;
    for (const FaceRecord* f : faces) {
      if (ids.insert(*f->identity_id).second) per_identity.push_back(f);
    }
    if (per_identity.empty() || per_identity.size() > options.max_identities_per_sample) return false;

    BenchSample s;
    s.sample_id = image_id;
    s.gt_image_id = image_id;
    Rng sample_rng(derive_seed(options.seed, image_id));
    for (const FaceRecord* f : per_identity) {
      const auto idx = bank.find(*f->identity_id);
      if (!idx) return false;
      std::vector<const BankMember*> eligible;
      for (const auto& m : bank.identity(*idx).members) {
        if (m.image_id != image_id) eligible.push_back(&m);
      }
      if (eligible.empty()) return false;
      BenchReference ref;
      ref.identity_id = *f->identity_id;
      ref.gt_face_id = f->face_id;
      for (std::size_t k : sample_rng.sample_without_replacement(eligible.size(), options.references_per_identity)) {
        ref.reference_face_ids.push_back(eligible[k]->face_id);
      }
      s.references.push_back(std::move(ref));
    }
    for (std::size_t i : corpus.faces_of_image(image_id)) s.gt_face_ids.push_back(corpus.faces()[i].face_id);
    const ImageRecord* img = corpus.find_image(image_id);
    s.prompt = img != nullptr && img->caption ? *img->caption : std::string{};
    for (const auto& id : ids) bench_ids.insert(id);
    used_images.insert(image_id);
    out.bench.samples.push_back(std::move(s));
    return true;
  };

  for (const auto& identity : tail) {
    const bool fixed = options.identity_count > 0;
    if (fixed && out.tail_identities.size() == options.identity_count) break;
    if (!fixed && out.bench.samples.size() >= options.max_samples) break;
    out.tail_identities.push_back(identity);
    bench_ids.insert(identity);
    auto candidates = images_of[identity];
    rng.shuffle(candidates);
    for (const auto& image_id : candidates) {
      if (out.bench.samples.size() >= options.max_samples) break;
      try_image(image_id);
    }
  }
  if (out.bench.samples.empty()) {
    throw Error(Errc::kInsufficientIdentities, "no long-tail image could be turned into a bench sample");
  }
  std::sort(out.bench.samples.begin(), out.bench.samples.end(),
            [](const BenchSample& a, const BenchSample& b) { return a.sample_id < b.sample_id; });
  out.bench.identities.assign(bench_ids.begin(), bench_ids.end());

  for (const auto& img : corpus.images()) {
    if (used_images.contains(img.image_id)) continue;
    bool leaks = false;
    for (std::size_t i : corpus.faces_of_image(img.image_id)) {
      const auto& f = corpus.faces()[i];
      if (f.identity_id && bench_ids.contains(*f.identity_id)) leaks = true;
    }
    (leaks ? out.removed_image_ids : out.training_image_ids).push_back(img.image_id);
  }
  return out;
}

std::string bench_to_json(const BenchSet& bench) {
  json samples = json::array();
  for (const auto& s : bench.samples) {
    json refs = json::array();
    for (const auto& r : s.references) {
      refs.push_back({{"identity_id", r.identity_id},
                      {"gt_face_id", r.gt_face_id},
                      {"reference_face_ids", r.reference_face_ids}});
    }
    samples.push_back({{"sample_id", s.sample_id},
                       {"gt_image_id", s.gt_image_id},
                       {"references", refs},
                       {"gt_face_ids", s.gt_face_ids},
                       {"prompt", s.prompt}});
  }
  json doc;
  doc["format"] = "multiid-bench";
  doc["version"] = 1;
  doc["identities"] = bench.identities;
  doc["samples"] = std::move(samples);
  return doc.dump(1) + "\n";
}

BenchSet bench_from_json(const std::string& text) {
  return parse_guard("bench file", [&] {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "multiid-bench") throw Error(Errc::kParse, "not a bench file");
    BenchSet out;
    out.identities = doc.at("identities").get<std::vector<std::string>>();
    for (const auto& j : doc.at("samples")) {
      BenchSample s;
      s.sample_id = j.at("sample_id").get<std::string>();
      s.gt_image_id = j.at("gt_image_id").get<std::string>();
      s.gt_face_ids = j.at("gt_face_ids").get<std::vector<std::string>>();
      s.prompt = j.value("prompt", "");
      for (const auto& r : j.at("references")) {
        s.references.push_back({r.at("identity_id").get<std::string>(), r.at("gt_face_id").get<std::string>(),
                                r.at("reference_face_ids").get<std::vector<std::string>>()});
      }
      if (s.references.empty() || s.references.size() > 4) {
        throw Error(Errc::kParse, "bench sample '" + s.sample_id + "' must have 1-4 reference identities");
      }
      out.samples.push_back(std::move(s));
    }
    return out;
  });
}

std::string split_to_json(const BenchSplit& split) {
  json samples = json::array();
  for (const auto& s : split.bench.samples) samples.push_back(s.sample_id);
  json doc;
  doc["format"] = "multiid-splits";
  doc["version"] = 1;
  doc["bench"] = std::move(samples);
  doc["training"] = split.training_image_ids;
  doc["removed_for_leakage"] = split.removed_image_ids;
  doc["tail_identities"] = split.tail_identities;
  doc["bench_identities"] = split.bench.identities;
  return doc.dump(1) + "\n";
}

Corpus bench_corpus(const BenchSet& bench, const Corpus& multi_id, const ReferenceBank& bank,
                    const Corpus* single_id) {
  std::vector<ImageRecord> images;
  std::vector<FaceRecord> faces;
  std::set<std::string> face_ids;
  std::set<std::string> image_ids;

  for (const auto& s : bench.samples) {
    const ImageRecord* img = multi_id.find_image(s.gt_image_id);
    if (img == nullptr) throw Error(Errc::kNotFound, "bench image '" + s.gt_image_id + "' not in corpus");
    if (image_ids.insert(img->image_id).second) images.push_back(*img);
    for (const auto& fid : s.gt_face_ids) {
      const FaceRecord* f = multi_id.find_face(fid);
      if (f == nullptr) throw Error(Errc::kNotFound, "bench face '" + fid + "' not in corpus");
      if (face_ids.insert(fid).second) faces.push_back(*f);
    }
  }
  for (const auto& s : bench.samples) {
    for (const auto& r : s.references) {
      const auto idx = bank.find(r.identity_id);
      if (!idx) throw Error(Errc::kNotFound, "bench identity '" + r.identity_id + "' not in bank");
      for (const auto& fid : r.reference_face_ids) {
        if (face_ids.contains(fid)) continue;
        const FaceRecord* full = single_id != nullptr ? single_id->find_face(fid) : nullptr;
        if (full != nullptr) {
          faces.push_back(*full);
        } else {
          const auto& members = bank.identity(*idx).members;
          auto it = std::find_if(members.begin(), members.end(), [&](const BankMember& m) { return m.face_id == fid; });
          if (it == members.end()) throw Error(Errc::kNotFound, "reference face '" + fid + "' not in bank");
          FaceRecord f;
          f.face_id = it->face_id;
          f.image_id = it->image_id;
          f.bbox = {0.0, 0.0, 1.0, 1.0};
          f.embeddings = it->embeddings;
          f.identity_id = r.identity_id;
          faces.push_back(std::move(f));
        }
        face_ids.insert(fid);
      }
    }
  }

  std::vector<BackendDescriptor> backends;
  for (const auto& b : multi_id.manifest().backends) backends.push_back(b);
  // Reference faces must carry every face backend the ground truth does.
  for (auto& f : faces) {
    for (const auto& b : backends) {
      if (b.scope == BlockScope::kFace && !f.embeddings.contains(b.backend_id)) {
        throw Error(Errc::kMissingBackend, "reference face '" + f.face_id + "' lacks backend '" + b.backend_id + "'");
      }
    }
    std::erase_if(f.embeddings, [&](const auto& kv) {
      return std::none_of(backends.begin(), backends.end(), [&](const BackendDescriptor& b) {
        return b.scope == BlockScope::kFace && b.backend_id == kv.first;
      });
    });
  }
  return Corpus::build(multi_id.id() + "-bench", SplitTag::kBench, std::move(backends), std::move(images),
                       std::move(faces));
}

// ----------------------------------------------------------------------------
// batches

TrainingBatchSampler::TrainingBatchSampler(std::size_t paired_pool, std::size_t unpaired_pool,
                                           double paired_fraction, std::uint64_t seed)
    : paired_pool_(paired_pool), unpaired_pool_(unpaired_pool), paired_fraction_(paired_fraction), rng_(seed) {
  if (!(paired_fraction >= 0.0 && paired_fraction <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "paired_fraction must lie in [0, 1]");
  }
  if (paired_fraction > 0.0 && paired_pool == 0) throw Error(Errc::kEmptyInput, "paired pool is empty");
  if (paired_fraction < 1.0 && unpaired_pool == 0) throw Error(Errc::kEmptyInput, "reconstruction pool is empty");
}

BatchDescriptor TrainingBatchSampler::next(std::int64_t batch_size) {
  if (batch_size <= 0) throw Error(Errc::kInvalidArgument, "batch_size must be > 0");
  BatchDescriptor out;
  out.items.reserve(static_cast<std::size_t>(batch_size));
  for (std::int64_t i = 0; i < batch_size; ++i) {
    if (rng_.bernoulli(paired_fraction_)) {
      out.items.push_back({BatchItemKind::kPaired, rng_.uniform_index(paired_pool_)});
      ++out.paired_count;
    } else {
      out.items.push_back({BatchItemKind::kReconstruction, rng_.uniform_index(unpaired_pool_)});
    }
  }
  return out;
}

BatchDescriptor sample_training_batch(std::size_t paired_pool, std::size_t unpaired_pool, double paired_fraction,
                                      std::int64_t batch_size, std::uint64_t seed) {
  return TrainingBatchSampler(paired_pool, unpaired_pool, paired_fraction, seed).next(batch_size);
}

// ----------------------------------------------------------------------------
// negatives

std::vector<Embedding> NegativePool::embeddings(const ReferenceBank& bank, const std::string& backend_id) const {
  std::vector<Embedding> out;
  out.reserve(members.size());
  for (const auto& ref : members) {
    const auto& m = bank.identity(ref.identity).members.at(ref.member);
    auto it = m.embeddings.find(backend_id);
    if (it == m.embeddings.end()) {
      throw Error(Errc::kMissingBackend, "bank member '" + m.face_id + "' lacks backend '" + backend_id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

NegativePoolSampler::NegativePoolSampler(const ReferenceBank& bank) : bank_(&bank) {
  if (bank.empty()) throw Error(Errc::kEmptyBank, "negative pools need a non-empty bank");
  offsets_.reserve(bank.size() + 1);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    offsets_.push_back(flat_.size());
    for (std::size_t m = 0; m < bank.identity(i).members.size(); ++m) {
      flat_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(m)});
    }
  }
  offsets_.push_back(flat_.size());
}

NegativePool NegativePoolSampler::sample(std::optional<std::string_view> anchor_identity, std::size_t size,
                                         Rng& rng) const {
  NegativePool pool;
  pool.requested = size;
  std::size_t lo = 0, hi = 0;  // excluded range of flat_
  if (anchor_identity) {
    pool.anchor = bank_->find(*anchor_identity);
    if (pool.anchor) {
      lo = offsets_[*pool.anchor];
      hi = offsets_[*pool.anchor + 1];
    }
  }
  const std::size_t eligible = flat_.size() - (hi - lo);
  const std::size_t take = std::min(size, eligible);
  pool.truncated = take < size;
  auto map_index = [&](std::size_t e) { return e < lo ? e : e + (hi - lo); };

  pool.members.reserve(take);
  if (take * 4 >= eligible) {
    for (std::size_t e : rng.sample_without_replacement(eligible, take)) pool.members.push_back(flat_[map_index(e)]);
  } else {
    // Floyd's algorithm: O(take) memory for pools much smaller than the bank.
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(take * 2);
    std::vector<std::size_t> order;
    order.reserve(take);
    for (std::size_t j = eligible - take; j < eligible; ++j) {
      const std::size_t t = rng.uniform_index(j + 1);
      const std::size_t pick = chosen.insert(t).second ? t : j;
      if (pick == j) chosen.insert(j);
      order.push_back(pick);
    }
    for (std::size_t e : order) pool.members.push_back(flat_[map_index(e)]);
  }
  return pool;
}

NegativePool build_negative_pool(std::optional<std::string_view> anchor_identity, const ReferenceBank& bank,
                                 std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  return NegativePoolSampler(bank).sample(anchor_identity, size, rng);
}

// ----------------------------------------------------------------------------
// statistics

CorpusStats corpus_stats(std::span<const Corpus* const> corpora, const ReferenceBank* bank,
                         const PairingResult* pairing) {
  CorpusStats out;
  for (const Corpus* c : corpora) {
    out.split_sizes[std::string(to_string(c->manifest().split))] += c->manifest().image_count;
    out.images += c->manifest().image_count;
    out.faces += c->manifest().face_count;
    if (c->manifest().split == SplitTag::kSingleId) continue;
    for (const auto& img : c->images()) ++out.faces_per_image[c->faces_of_image(img.image_id).size()];
    for (const auto& f : c->faces()) {
      if (f.identity_id) ++out.assigned_faces;
    }
    for (const auto& [id, n] : identity_appearances(*c)) out.identity_images[id] += n;
  }
  for (const auto& [id, n] : out.identity_images) ++out.appearance_histogram[n];
  if (bank != nullptr) {
    out.bank_identities = bank->size();
    out.bank_members = bank->member_count();
  }
  if (pairing != nullptr) {
    out.split_sizes[std::string(to_string(SplitTag::kMultiIdPaired))] += pairing->paired.size();
    out.split_sizes[std::string(to_string(SplitTag::kMultiIdUnpaired))] += pairing->unpaired_image_ids.size();
  }
  return out;
}

std::string stats_to_json(const CorpusStats& stats) {
  json doc;
  doc["format"] = "multiid-stats";
  doc["version"] = 1;
  doc["images"] = stats.images;
  doc["faces"] = stats.faces;
  doc["assigned_faces"] = stats.assigned_faces;
  doc["bank_identities"] = stats.bank_identities;
  doc["bank_members"] = stats.bank_members;
  doc["identity_images"] = stats.identity_images;
  json hist = json::object();
  for (const auto& [k, v] : stats.appearance_histogram) hist[std::to_string(k)] = v;
  doc["appearance_histogram"] = std::move(hist);
  json fpi = json::object();
  for (const auto& [k, v] : stats.faces_per_image) fpi[std::to_string(k)] = v;
  doc["faces_per_image"] = std::move(fpi);
  doc["split_sizes"] = stats.split_sizes;
  return doc.dump(1) + "\n";
}

std::string identity_histogram_csv(const CorpusStats& stats) {
  std::ostringstream out;
  out << "identity_id,images\n";
  for (const auto& [id, n] : stats.identity_images) out << id << ',' << n << '\n';
  return out.str();
}

std::string faces_per_image_csv(const CorpusStats& stats) {
  std::ostringstream out;
  out << "faces_per_image,images\n";
  for (const auto& [k, n] : stats.faces_per_image) out << k << ',' << n << '\n';
  return out.str();
}

}  // namespace multiid

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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "error_code.hpp"
#include "multiid/cluster.hpp"
#include "multiid/pairing.hpp"
#include "multiid/synthetic.hpp"

using namespace multiid;
using testing::error_code_of;

namespace {

struct LabeledWorld {
  SyntheticWorld world;
  Corpus multi;
  ReferenceBank bank;
};

LabeledWorld labeled_world(std::size_t identities, std::size_t multi_images, std::uint64_t seed) {
  SyntheticWorldOptions o;
  o.identities = identities;
  o.single_images_per_identity = 5;
  o.outliers_per_identity = 0;
  o.multi_images = multi_images;
  o.face_backends = {"arcface"};
  o.dim = 64;
  o.clip_dim = 8;
  o.member_cosine = 0.9;
  o.seed = seed;
  auto world = synthetic_world(o);
  std::unordered_map<std::string, std::optional<std::string>> labels;
  for (const auto& [face, id] : world.truth) labels.emplace(face, id);
  auto multi = world.multi_id.with_identities(labels);
  auto bank = build_bank(cluster_groups(world.single_id, "arcface", {0.5, 3})).bank;
  return {std::move(world), std::move(multi), std::move(bank)};
}

FaceRecord face(const std::string& id, const std::string& image, std::optional<std::string> identity) {
  FaceRecord f;
  f.face_id = id;
  f.image_id = image;
  f.bbox = {0, 0, 10, 10};
  f.identity_id = std::move(identity);
  f.embeddings.emplace("arcface", Embedding("arcface", {1, 0}));
  return f;
}

BankIdentity bank_identity(const std::string& id, std::vector<std::pair<std::string, std::string>> members) {
  BankIdentity out;
  out.identity_id = id;
  Centroid c;
  c.embeddings.emplace("arcface", Embedding("arcface", {1, 0}));
  c.support = members.size();
  out.centroids.push_back(c);
  for (auto& [face_id, image_id] : members) {
    out.members.push_back({face_id, image_id, {{"arcface", Embedding("arcface", {1, 0})}}});
  }
  return out;
}

Corpus corpus_of(std::vector<FaceRecord> faces) {
  return Corpus::build("multi", SplitTag::kMultiId, {{"arcface", 2, BlockScope::kFace}}, {}, std::move(faces));
}

}  // namespace

TEST_SUITE("pairing") {
  TEST_CASE("identity with one reference routes the image to unpaired") {
    const ReferenceBank bank({bank_identity("alice", {{"a1", "s1"}})});
    const auto r = build_pairs(corpus_of({face("t0", "img", "alice")}), bank, 7);
    CHECK(r.paired.empty());
    CHECK(r.unpaired_image_ids == std::vector<std::string>{"img"});
  }

  TEST_CASE("the only reference outside the target image is forced") {
    const ReferenceBank bank({bank_identity("alice", {{"a", "img_a"}, {"b", "img_b"}})});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = build_pairs(corpus_of({face("t0", "img_a", "alice")}), bank, seed);
      REQUIRE(r.paired.size() == 1);
      CHECK(r.paired[0].identities[0].reference_face_id == "b");
      CHECK(r.paired[0].identities[0].reference_image_id == "img_b");
    }
  }

  TEST_CASE("unknown identities and unlabeled images stay unpaired") {
    const ReferenceBank bank({bank_identity("alice", {{"a", "x"}, {"b", "y"}})});
    const auto r = build_pairs(corpus_of({face("t0", "i0", "bob"), face("t1", "i1", std::nullopt),
                                          face("t2", "i2", "alice"), face("t3", "i2", std::nullopt)}),
                               bank, 1);
    CHECK(r.unpaired_image_ids == std::vector<std::string>{"i0", "i1"});
    REQUIRE(r.paired.size() == 1);
    CHECK(r.paired[0].identities.size() == 1);
  }

  TEST_CASE("filters route images to the filtered list") {
    auto w = labeled_world(10, 60, 3);
    PairingOptions opts;
    opts.filters.push_back(min_aesthetic(5.5));
    const auto r = build_pairs(w.multi, w.bank, 1, opts);
    CHECK(r.paired.size() + r.unpaired_image_ids.size() + r.filtered_image_ids.size() == w.multi.images().size());
    for (const auto& id : r.filtered_image_ids) CHECK(*w.multi.find_image(id)->aesthetic < 5.5);
    CHECK_FALSE(r.filtered_image_ids.empty());
  }

  TEST_CASE("pairs are deterministic and never reuse the target image") {
    auto w = labeled_world(40, 1000, 5);
    const auto a = build_pairs(w.multi, w.bank, 11);
    const auto b = build_pairs(w.multi, w.bank, 11);
    CHECK(a == b);
    CHECK(pairs_from_json(pairs_to_json(a)) == a);
    REQUIRE(a.paired.size() > 500);
    for (const auto& s : a.paired) {
      for (const auto& p : s.identities) {
        CHECK(p.reference_image_id != s.target_image_id);
        CHECK(*w.multi.find_face(p.target_face_id)->identity_id == p.identity_id);
        const auto& members = w.bank.identity(*w.bank.find(p.identity_id)).members;
        CHECK(std::any_of(members.begin(), members.end(), [&](const BankMember& m) { return m.face_id == p.reference_face_id; }));
      }
    }
    CHECK(build_pairs(w.multi, w.bank, 12) != a);
  }

  TEST_CASE("least frequent identities sort by count then id") {
    const std::map<std::string, std::size_t> counts{{"d", 1}, {"a", 3}, {"c", 1}, {"b", 2}};
    CHECK(least_frequent_identities(counts) == std::vector<std::string>{"c", "d", "b", "a"});
  }

  TEST_CASE("bench split takes the ten least frequent identities") {
    auto w = labeled_world(100, 1200, 9);
    const auto counts = identity_appearances(w.multi);

    std::vector<std::pair<std::size_t, std::string>> order;
    for (const auto& [id, n] : counts) order.emplace_back(n, id);
    std::sort(order.begin(), order.end());
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < 10; ++i) expected.push_back(order[i].second);

    BenchOptions opts;
    opts.identity_count = 10;
    opts.max_samples = 10000;
    opts.seed = 4;
    const auto split = split_bench(w.multi, w.bank, opts);
    CHECK(split.tail_identities == expected);

    std::set<std::string> bench_ids(split.bench.identities.begin(), split.bench.identities.end());
    std::set<std::string> training_ids;
    for (const auto& image_id : split.training_image_ids) {
      for (std::size_t i : w.multi.faces_of_image(image_id)) {
        const auto& f = w.multi.faces()[i];
        if (f.identity_id) training_ids.insert(*f.identity_id);
      }
    }
    for (const auto& id : training_ids) CHECK_FALSE(bench_ids.contains(id));

    for (const auto& s : split.bench.samples) {
      CHECK(s.references.size() >= 1);
      CHECK(s.references.size() <= 4);
      for (const auto& r : s.references) {
        CHECK(std::find(s.gt_face_ids.begin(), s.gt_face_ids.end(), r.gt_face_id) != s.gt_face_ids.end());
      }
    }
    CHECK(split.training_image_ids.size() + split.removed_image_ids.size() + split.bench.samples.size() ==
          w.multi.images().size());
  }

  TEST_CASE("bench split is idempotent and seed-deterministic") {
    auto w = labeled_world(30, 300, 13);
    BenchOptions opts;
    opts.max_samples = 40;
    opts.seed = 2;
    const auto a = split_bench(w.multi, w.bank, opts);
    CHECK(split_bench(w.multi, w.bank, opts) == a);
    CHECK(a.bench.samples.size() == 40);
    CHECK(bench_from_json(bench_to_json(a.bench)) == a.bench);
    std::vector<std::string> sorted_ids;
    for (const auto& s : a.bench.samples) sorted_ids.push_back(s.sample_id);
    CHECK(std::is_sorted(sorted_ids.begin(), sorted_ids.end()));
  }

  TEST_CASE("bench split errors") {
    auto w = labeled_world(10, 50, 17);
    BenchOptions opts;
    opts.identity_count = 11;
    CHECK(error_code_of([&] { (void)split_bench(w.multi, w.bank, opts); }) == Errc::kInsufficientIdentities);
    CHECK(error_code_of([&] { (void)split_bench(w.world.multi_id, w.bank, {}); }) == Errc::kInsufficientIdentities);
    BenchOptions zero;
    zero.max_samples = 0;
    CHECK(error_code_of([&] { (void)split_bench(w.multi, w.bank, zero); }) == Errc::kInvalidArgument);
  }

  TEST_CASE("bench corpus holds ground truth and references") {
    auto w = labeled_world(20, 200, 19);
    BenchOptions opts;
    opts.max_samples = 12;
    const auto split = split_bench(w.multi, w.bank, opts);
    const auto corpus = bench_corpus(split.bench, w.multi, w.bank, &w.world.single_id);
    for (const auto& s : split.bench.samples) {
      CHECK(corpus.find_image(s.gt_image_id) != nullptr);
      for (const auto& id : s.gt_face_ids) CHECK(corpus.find_face(id) != nullptr);
      for (const auto& r : s.references)
        for (const auto& id : r.reference_face_ids) CHECK(corpus.find_face(id) != nullptr);
    }
    const auto from_bank = bench_corpus(split.bench, w.multi, w.bank);
    CHECK(from_bank.faces().size() == corpus.faces().size());
  }

  TEST_CASE("batch sampler fractions") {
    const auto none = sample_training_batch(10, 10, 0.0, 64, 1);
    CHECK(none.paired_count == 0);
    CHECK(std::all_of(none.items.begin(), none.items.end(),
                      [](const BatchItem& i) { return i.kind == BatchItemKind::kReconstruction && i.index < 10; }));
    const auto all = sample_training_batch(10, 0, 1.0, 64, 1);
    CHECK(all.paired_count == 64);

    TrainingBatchSampler sampler(1000, 1000, 0.5, 99);
    std::size_t paired = 0;
    for (int draw = 0; draw < 10000; ++draw) paired += sampler.next(32).paired_count;
    CHECK(static_cast<double>(paired) / (10000.0 * 32) == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(static_cast<double>(paired) / (10000.0 * 32) - 0.5) <= 0.02);

    CHECK(sample_training_batch(5, 5, 0.5, 32, 8).items == sample_training_batch(5, 5, 0.5, 32, 8).items);
  }

  TEST_CASE("batch sampler errors") {
    CHECK(error_code_of([] { (void)sample_training_batch(1, 1, 0.5, 0, 1); }) == Errc::kInvalidArgument);
    CHECK(error_code_of([] { (void)sample_training_batch(1, 1, 0.5, -3, 1); }) == Errc::kInvalidArgument);
    CHECK(error_code_of([] { (void)sample_training_batch(1, 1, 1.5, 4, 1); }) == Errc::kInvalidArgument);
    CHECK(error_code_of([] { (void)sample_training_batch(0, 1, 0.5, 4, 1); }) == Errc::kEmptyInput);
  }

  TEST_CASE("negative pool with two identities excludes the anchor") {
    const ReferenceBank bank({bank_identity("id1", {{"a", "x"}, {"b", "y"}}),
                              bank_identity("id2", {{"c", "z"}, {"d", "w"}, {"e", "v"}})});
    const auto pool = build_negative_pool("id1", bank, 1000, 3);
    CHECK(pool.size() == 3);
    CHECK(pool.truncated);
    CHECK(pool.requested == 1000);
    for (const auto& m : pool.members) CHECK(bank.identity(m.identity).identity_id == "id2");
    std::set<std::uint32_t> distinct;
    for (const auto& m : pool.members) distinct.insert(m.member);
    CHECK(distinct.size() == 3);
  }

  TEST_CASE("unknown anchor makes every identity eligible") {
    const ReferenceBank bank({bank_identity("id1", {{"a", "x"}}), bank_identity("id2", {{"c", "z"}})});
    const auto pool = build_negative_pool("stranger", bank, 2, 3);
    CHECK_FALSE(pool.anchor.has_value());
    CHECK(pool.size() == 2);
    CHECK_FALSE(pool.truncated);
    CHECK(build_negative_pool(std::nullopt, bank, 2, 3).size() == 2);
    CHECK(error_code_of([] { (void)build_negative_pool("x", ReferenceBank(), 1, 1); }) == Errc::kEmptyBank);
  }

  TEST_CASE("4096 negatives from a 3000 identity bank") {
    SyntheticBankOptions o;
    o.identities = 3000;
    o.members_per_identity = 2;
    o.dim = 8;
    const auto bank = synthetic_bank(o);
    const std::string anchor = synthetic_identity_id(17);
    const auto pool = build_negative_pool(anchor, bank, 4096, 5);
    CHECK(pool.size() == 4096);
    CHECK_FALSE(pool.truncated);
    std::set<std::pair<std::uint32_t, std::uint32_t>> distinct;
    for (const auto& m : pool.members) {
      CHECK(bank.identity(m.identity).identity_id != anchor);
      distinct.emplace(m.identity, m.member);
    }
    CHECK(distinct.size() == 4096);
    CHECK(pool.embeddings(bank, "arcface").size() == 4096);
  }

  TEST_CASE("stats of an empty corpus are zero") {
    const auto stats = corpus_stats({});
    CHECK(stats == CorpusStats{});
    const Corpus empty = Corpus::build("e", SplitTag::kMultiId, {}, {}, {});
    const Corpus* corpora[] = {&empty};
    const auto s = corpus_stats(corpora);
    CHECK(s.images == 0);
    CHECK(s.faces == 0);
    CHECK(s.identity_images.empty());
    CHECK(s.appearance_histogram.empty());
  }

  TEST_CASE("stats histogram matches the generator") {
    auto w = labeled_world(25, 400, 21);
    std::map<std::string, std::set<std::string>> images_of;
    for (const auto& [face_id, id] : w.world.truth) images_of[id].insert(w.multi.find_face(face_id)->image_id);
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& [id, images] : images_of) ++histogram[images.size()];
    std::map<std::size_t, std::size_t> per_image;
    for (const auto& img : w.multi.images()) ++per_image[w.multi.faces_of_image(img.image_id).size()];

    const auto pairing = build_pairs(w.multi, w.bank, 1);
    const Corpus* corpora[] = {&w.world.single_id, &w.multi};
    const auto stats = corpus_stats(corpora, &w.bank, &pairing);
    CHECK(stats.appearance_histogram == histogram);
    CHECK(stats.faces_per_image == per_image);
    CHECK(stats.assigned_faces == w.world.truth.size());
    for (const auto& [id, images] : images_of) CHECK(stats.identity_images.at(id) == images.size());
    CHECK(stats.split_sizes.at("single-id") == w.world.single_id.images().size());
    CHECK(stats.split_sizes.at("multi-id") == w.multi.images().size());
    CHECK(stats.split_sizes.at("multi-id-paired") == pairing.paired.size());
    CHECK(stats.split_sizes.at("multi-id-unpaired") == pairing.unpaired_image_ids.size());
    CHECK(stats.bank_identities == w.bank.size());
    CHECK_FALSE(identity_histogram_csv(stats).empty());
    CHECK_FALSE(faces_per_image_csv(stats).empty());
  }
}

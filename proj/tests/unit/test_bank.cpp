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

#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>

#include "multiid/bank.hpp"
#include "multiid/cluster.hpp"
#include "error_code.hpp"
#include "multiid/error.hpp"
#include "multiid/synthetic.hpp"
#include "temp_dir.hpp"

using namespace multiid;
using testing::error_code_of;
namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

namespace {

ReferenceBank small_bank() {
  SyntheticWorldOptions o;
  o.identities = 6;
  o.single_images_per_identity = 8;
  o.multi_images = 0;
  o.face_backends = {"arcface", "adaface"};
  o.dim = 16;
  o.member_cosine = 0.9;
  const auto world = synthetic_world(o);
  BankOptions opts;
  opts.cluster_backend = "arcface";
  return build_bank(cluster_groups(world.single_id, "arcface", {0.5, 4}), opts).bank;
}

Centroid unit_centroid(std::vector<float> v) {
  Centroid c;
  c.embeddings.emplace("arcface", Embedding("arcface", std::move(v)));
  c.support = 1;
  return c;
}

}  // namespace

TEST_SUITE("bank") {
  TEST_CASE("save and load round trip exactly") {
    const auto bank = small_bank();
    REQUIRE(bank.size() == 6);
    TempDir dir("bank");
    save_bank(bank, dir.path / "bank");
    const auto loaded = load_bank(dir.path / "bank");
    CHECK(loaded == bank);
    CHECK(loaded.backends() == std::vector<std::string>{"adaface", "arcface"});
    CHECK(loaded.member_count() == bank.member_count());
  }

  TEST_CASE("lookup and centroid index") {
    const auto bank = small_bank();
    REQUIRE(bank.find("id00003").has_value());
    CHECK(bank.identity(*bank.find("id00003")).identity_id == "id00003");
    CHECK_FALSE(bank.find("nobody").has_value());
    const auto index = bank.centroid_index("arcface");
    CHECK(index.centroids.rows() == 6);
    CHECK(index.owner.size() == 6);
    for (double n : index.norms) CHECK(n == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(error_code_of([&] { (void)bank.centroid_index("curricularface"); }) == Errc::kMissingBackend);
    CHECK(error_code_of([] { (void)ReferenceBank().centroid_index("arcface"); }) == Errc::kEmptyBank);
  }

  TEST_CASE("construction rejects inconsistent identities") {
    BankIdentity a{"a", {unit_centroid({1, 0})}, {}};
    CHECK(error_code_of([&] { ReferenceBank({a, a}); }) == Errc::kDuplicateId);
    BankIdentity none{"b", {}, {}};
    CHECK(error_code_of([&] { ReferenceBank({none}); }) == Errc::kInvalidArgument);
    BankIdentity loose{"c", {unit_centroid({3, 4})}, {}};
    CHECK(error_code_of([&] { ReferenceBank({loose}); }) == Errc::kInvalidArgument);
    BankMember m{"f1", "i1", {}};
    BankIdentity x{"x", {unit_centroid({1, 0})}, {m}};
    BankIdentity y{"y", {unit_centroid({0, 1})}, {m}};
    CHECK(error_code_of([&] { ReferenceBank({x, y}); }) == Errc::kDuplicateId);
  }

  TEST_CASE("corrupted bank files are reported") {
    const auto bank = small_bank();
    TempDir dir("bank");
    const auto root = dir.path / "bank";

    SUBCASE("missing directory") { CHECK_THROWS_AS(load_bank(dir.path / "absent"), Error); }
    SUBCASE("table is not json") {
      save_bank(bank, root);
      std::ofstream(root / "identities.json") << "{ nope";
      CHECK(error_code_of([&] { (void)load_bank(root); }) == Errc::kParse);
    }
    SUBCASE("unsupported table version") {
      save_bank(bank, root);
      auto doc = json::parse(read_text_file(root / "identities.json"));
      doc["version"] = 99;
      write_text_file(root / "identities.json", doc.dump());
      CHECK(error_code_of([&] { (void)load_bank(root); }) == Errc::kVersionMismatch);
    }
    SUBCASE("truncated centroid blob") {
      save_bank(bank, root);
      const auto blob = root / "centroids.mide";
      fs::resize_file(blob, fs::file_size(blob) - 7);
      CHECK_THROWS_AS(load_bank(root), Error);
    }
    SUBCASE("member missing from the members corpus") {
      save_bank(bank, root);
      auto doc = json::parse(read_text_file(root / "identities.json"));
      doc["identities"][0]["members"].push_back("ghost");
      write_text_file(root / "identities.json", doc.dump());
      CHECK(error_code_of([&] { (void)load_bank(root); }) == Errc::kNotFound);
    }
    SUBCASE("extra centroid rows") {
      save_bank(bank, root);
      auto doc = json::parse(read_text_file(root / "identities.json"));
      doc["identities"].erase(doc["identities"].begin());
      write_text_file(root / "identities.json", doc.dump());
      CHECK(error_code_of([&] { (void)load_bank(root); }) == Errc::kCountMismatch);
    }
  }
}

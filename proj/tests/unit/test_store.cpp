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
#include <cmath>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <unistd.h>

#include "multiid/error.hpp"
#include "multiid/store.hpp"
#include "multiid/synthetic.hpp"
#include "temp_dir.hpp"

using namespace multiid;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using testing::TempDir;

FaceRecord face(const std::string& id, const std::string& image, std::vector<float> v) {
  FaceRecord f;
  f.face_id = id;
  f.image_id = image;
  f.bbox = {10, 10, 50, 60};
  for (int k = 0; k < 5; ++k) f.landmarks.points[k] = {20.0 + 5 * k, 30.0 + (k % 2) * 7};
  f.embeddings.emplace("arcface", Embedding("arcface", std::move(v)));
  return f;
}

Corpus two_faces() {
  return Corpus::build("fixture", SplitTag::kSingleId, {{"arcface", 3, BlockScope::kFace}}, {},
                       {face("f1", "img1", {1, 0, 0}), face("f2", "img1", {0, 3, 4})});
}

Errc ingest_code(const CorpusPaths& p) {
  try {
    ingest(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("ingest accepted a malformed corpus");
  return Errc::kInvalidArgument;
}

std::string ingest_message(const CorpusPaths& p) {
  try {
    ingest(p);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("store") {
  TEST_CASE("blob encode and decode round trip") {
    std::vector<BlobBlock> blocks = {{"arcface", 2, {1.0f, 2.0f, 3.0f, 4.0f}}, {"image:clip", 1, {0.5f}}};
    const auto bytes = encode_blob(blocks);
    REQUIRE(bytes.size() > 8);
    CHECK(std::memcmp(bytes.data(), "MIDE", 4) == 0);
    CHECK(std::to_integer<int>(bytes[4]) == 1);
    const auto back = decode_blob(bytes);
    REQUIRE(back.size() == 2);
    CHECK(back[0].key == "arcface");
    CHECK(back[0].rows() == 2);
    CHECK(back[0].data == blocks[0].data);
    CHECK(encode_blob(back) == bytes);
  }

  TEST_CASE("blob header errors are distinct") {
    auto bytes = encode_blob(std::vector<BlobBlock>{{"arcface", 2, {1.0f, 2.0f}}});
    auto code = [](const std::vector<std::byte>& b) {
      try {
        decode_blob(b);
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::kInvalidArgument;
    };
    auto bad_magic = bytes;
    bad_magic[0] = std::byte{'X'};
    CHECK(code(bad_magic) == Errc::kBadMagic);
    auto bad_version = bytes;
    bad_version[4] = std::byte{2};
    CHECK(code(bad_version) == Errc::kVersionMismatch);
    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK(code(truncated) == Errc::kParse);
  }

  TEST_CASE("well-formed fixture ingests with normalized rows and raw norms") {
    TempDir dir;
    const auto paths = CorpusPaths::in(dir.path, "fixture");
    export_corpus(two_faces(), paths);
    const auto c = ingest(paths);
    CHECK(c->faces().size() == 2);
    CHECK(c->images().size() == 1);
    const auto& e = c->find_face("f2")->embedding("arcface");
    CHECK(std::abs(e.norm() - 1.0) < 1e-6);
    CHECK(e.raw_norm() == doctest::Approx(5.0));
    CHECK(c->faces_of_image("img1").size() == 2);
  }

  TEST_CASE("export then ingest is a round trip with a byte-identical blob") {
    TempDir dir;
    SyntheticWorldOptions o;
    o.identities = 10;
    o.multi_images = 30;
    const auto world = synthetic_world(o);
    const auto p1 = CorpusPaths::in(dir.path, "a");
    const auto p2 = CorpusPaths::in(dir.path, "b");
    export_corpus(world.multi_id, p1);
    const auto back = ingest(p1);
    CHECK(*back == world.multi_id);
    export_corpus(*back, p2);
    CHECK(read_text_file(p1.blob) == read_text_file(p2.blob));
    CHECK(read_text_file(p1.manifest) == read_text_file(p2.manifest));
  }

  TEST_CASE("10k-face synthetic corpus round trip") {
    TempDir dir;
    Rng rng(4);
    std::vector<FaceRecord> faces;
    for (int i = 0; i < 10000; ++i) faces.push_back(face("f" + std::to_string(i), "i" + std::to_string(i / 3), random_unit(3, rng)));
    const auto c = Corpus::build("big", SplitTag::kMultiId, {{"arcface", 3, BlockScope::kFace}}, {}, std::move(faces));
    const auto p = CorpusPaths::in(dir.path, "big");
    export_corpus(c, p);
    CHECK(*ingest(p) == c);
  }

  TEST_CASE("lookups do not depend on record order") {
    std::vector<FaceRecord> faces = {face("a", "i", {1, 0, 0}), face("b", "i", {0, 1, 0}), face("c", "j", {0, 0, 1})};
    const auto c1 = Corpus::build("x", SplitTag::kMultiId, {{"arcface", 3, BlockScope::kFace}}, {}, faces);
    std::reverse(faces.begin(), faces.end());
    const auto c2 = Corpus::build("x", SplitTag::kMultiId, {{"arcface", 3, BlockScope::kFace}}, {}, faces);
    for (const char* id : {"a", "b", "c"}) CHECK(*c1.find_face(id) == *c2.find_face(id));
  }

  TEST_CASE("malformed inputs map to distinct codes") {
    TempDir dir;
    const auto good = CorpusPaths::in(dir.path, "good");
    export_corpus(two_faces(), good);
    const json manifest = json::parse(read_text_file(good.manifest));
    const auto blocks = read_blob(good.blob);

    auto variant = [&](const std::string& name, const json& m, const std::vector<BlobBlock>& b) {
      const auto p = CorpusPaths::in(dir.path, name);
      write_text_file(p.manifest, m.dump());
      write_blob(p.blob, b);
      return p;
    };

    SUBCASE("non-finite value names the face") {
      auto b = blocks;
      b[0].data[4] = NAN;
      const auto p = variant("nan", manifest, b);
      CHECK(ingest_code(p) == Errc::kNonFinite);
      CHECK(ingest_message(p).find("f2") != std::string::npos);
    }
    SUBCASE("row count disagreement") {
      auto b = blocks;
      b[0].data.resize(3);
      CHECK(ingest_code(variant("rows", manifest, b)) == Errc::kCountMismatch);
    }
    SUBCASE("dimension disagreement") {
      auto m = manifest;
      m["backends"][0]["dimension"] = 2;
      CHECK(ingest_code(variant("dim", m, blocks)) == Errc::kDimensionMismatch);
    }
    SUBCASE("duplicate face id") {
      auto m = manifest;
      m["faces"][1]["face_id"] = "f1";
      CHECK(ingest_code(variant("dup", m, blocks)) == Errc::kDuplicateId);
    }
    SUBCASE("manifest version") {
      auto m = manifest;
      m["version"] = 9;
      CHECK(ingest_code(variant("ver", m, blocks)) == Errc::kVersionMismatch);
    }
    SUBCASE("declared counts") {
      auto m = manifest;
      m["counts"]["faces"] = 3;
      CHECK(ingest_code(variant("count", m, blocks)) == Errc::kCountMismatch);
    }
    SUBCASE("missing block") {
      CHECK(ingest_code(variant("noblock", manifest, {})) == Errc::kMissingBackend);
    }
    SUBCASE("bad magic in the blob file") {
      const auto p = variant("magic", manifest, blocks);
      auto bytes = read_text_file(p.blob);
      bytes[0] = 'Z';
      write_text_file(p.blob, bytes);
      CHECK(ingest_code(p) == Errc::kBadMagic);
    }
    SUBCASE("missing files") {
      CHECK(ingest_code(CorpusPaths::in(dir.path, "absent")) == Errc::kIo);
    }
  }

  TEST_CASE("export to an unwritable location fails with the path") {
    try {
      export_corpus(two_faces(), CorpusPaths::in("/proc/definitely/not/here", "x"));
      FAIL("export succeeded");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kIo);
      CHECK(std::string(e.what()).find("/proc/definitely/not/here") != std::string::npos);
    }
  }

  TEST_CASE("corpus validation") {
    auto bad = face("f", "i", {1, 0, 0});
    bad.bbox.w = 0;
    CHECK_THROWS_AS(Corpus::build("x", SplitTag::kSingleId, {{"arcface", 3, BlockScope::kFace}}, {}, {bad}), Error);
    auto missing = face("f", "i", {1, 0, 0});
    missing.embeddings.clear();
    CHECK_THROWS_AS(Corpus::build("x", SplitTag::kSingleId, {{"arcface", 3, BlockScope::kFace}}, {}, {missing}), Error);
    CHECK(parse_split_tag("multi-id-paired") == SplitTag::kMultiIdPaired);
    CHECK(to_string(SplitTag::kBench) == "bench");
    CHECK_THROWS_AS(parse_split_tag("nope"), Error);
  }
}

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

#include <cmath>

#include "multiid/embedding.hpp"
#include "multiid/error.hpp"
#include "multiid/random.hpp"
#include "multiid/synthetic.hpp"
#include "oracles.hpp"

using namespace multiid;

namespace {

Embedding emb(std::vector<float> v, std::string backend = "arcface") { return Embedding(std::move(backend), std::move(v)); }

oracle::Vec as_vec(const Embedding& e) { return {e.values().begin(), e.values().end()}; }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kInvalidArgument;
}

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("cosine of self, antipode and orthogonal pair") {
    const auto e = emb({0.3f, -1.2f, 2.0f});
    const auto neg = emb({-0.3f, 1.2f, -2.0f});
    CHECK(cosine(e, e) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(e, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cosine(emb({1, 0}), emb({0, 1})) == 0.0);
  }

  TEST_CASE("cosine errors are typed") {
    CHECK(code_of([] { cosine(emb({1, 0}), emb({1, 0, 0})); }) == Errc::kDimensionMismatch);
    CHECK(code_of([] { cosine(emb({1, 0}), emb({1, 0}, "clip")); }) == Errc::kBackendMismatch);
    CHECK(code_of([] { cosine(emb({0, 0}), emb({1, 0})); }) == Errc::kZeroNorm);
    CHECK(code_of([] { Embedding("arcface", {}); }) == Errc::kEmptyInput);
  }

  TEST_CASE("cosine is symmetric and scale invariant") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const auto a = random_unit(16, rng);
      const auto b = random_unit(16, rng);
      std::vector<float> a2 = a, b2 = b;
      const double alpha = rng.uniform(0.1, 10.0), beta = rng.uniform(0.1, 10.0);
      for (auto& x : a2) x = static_cast<float>(x * alpha);
      for (auto& x : b2) x = static_cast<float>(x * beta);
      const double c = cosine(std::span<const float>(a), std::span<const float>(b));
      CHECK(c == cosine(std::span<const float>(b), std::span<const float>(a)));
      CHECK(cosine(std::span<const float>(a2), std::span<const float>(b2)) == doctest::Approx(c).epsilon(1e-6));
      CHECK(c >= -1.0);
      CHECK(c <= 1.0);
    }
  }

  TEST_CASE("normalization") {
    const auto e = emb({3, 4});
    CHECK(e.raw_norm() == doctest::Approx(5.0));
    const auto n = e.normalized();
    CHECK(std::abs(n.norm() - 1.0) < 1e-6);
    CHECK(n.is_normalized());
    const auto unit = emb({1.0f, 0.0f});
    CHECK(unit.normalized() == unit);
    const auto near = emb({1.00001f, 0.0f});
    CHECK(std::abs(near.normalized().norm() - 1.0) <= 1e-6);
    CHECK(code_of([] { emb({NAN, 1}).normalized(); }) == Errc::kNonFinite);
    CHECK(code_of([] { emb({0, 0}).normalized(); }) == Errc::kZeroNorm);
  }

  TEST_CASE("normalized rows have unit norm within 1e-6") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
      auto v = random_unit(1 + rng.uniform_index(600), rng);
      const double scale = trial % 2 == 0 ? 1.0 + rng.uniform(-1e-4, 1e-4) : std::exp(rng.uniform(-8.0, 8.0));
      for (auto& x : v) x = static_cast<float>(x * scale);
      CHECK(std::abs(Embedding("arcface", v).normalized().norm() - 1.0) <= 1e-6);
    }
  }

  TEST_CASE("similarity matrix examples") {
    const std::vector<Embedding> basis = {emb({1, 0}), emb({0, 1})};
    const auto id = similarity_matrix(basis, basis);
    CHECK(id == SimilarityMatrix(2, 2, {1, 0, 0, 1}));

    const std::vector<Embedding> g = {emb({1, 0})};
    const std::vector<Embedding> t = {emb({1, 0}), emb({-1, 0})};
    CHECK(similarity_matrix(g, t) == SimilarityMatrix(1, 2, {1, -1}));
    CHECK(code_of([&] { similarity_matrix({}, t); }) == Errc::kEmptyInput);
  }

  TEST_CASE("similarity matrix matches a per-pair loop and transposes") {
    Rng rng(11);
    std::vector<Embedding> g, t;
    for (int i = 0; i < 3; ++i) g.push_back(emb(random_unit(8, rng)));
    for (int i = 0; i < 4; ++i) t.push_back(emb(random_unit(8, rng)));
    const auto m = similarity_matrix(g, t);
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 4);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) CHECK(m(i, j) == doctest::Approx(oracle::cosine(as_vec(g[i]), as_vec(t[j]))).epsilon(1e-12));
    CHECK(similarity_matrix(t, g) == m.transposed());
  }

  TEST_CASE("embedding matrix rows") {
    EmbeddingMatrix m("arcface", 2);
    m.append(emb({1, 0}));
    m.append(std::vector<float>{0, 1});
    CHECK(m.rows() == 2);
    CHECK(m.embedding(1) == emb({0, 1}).normalized());
    CHECK(code_of([&] { m.append(emb({1, 0, 0})); }) == Errc::kDimensionMismatch);
  }

  TEST_CASE("unit vector at an exact cosine") {
    Rng rng(3);
    const auto u = random_unit(32, rng);
    for (double c : {-0.9, 0.0, 0.49, 0.51, 0.99}) {
      const auto x = unit_at_cosine(u, c, rng);
      CHECK(cosine(std::span<const float>(x), std::span<const float>(u)) == doctest::Approx(c).epsilon(1e-6));
    }
  }
}

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
#include <numeric>

#include "multiid/error.hpp"
#include "multiid/matching.hpp"
#include "multiid/random.hpp"
#include "oracles.hpp"

using namespace multiid;

namespace {

SimilarityMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  SimilarityMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

oracle::Mat as_mat(const SimilarityMatrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

void check_well_formed(const MatchedFaces& m, const SimilarityMatrix& s) {
  CHECK(m.pairs.size() == std::min(s.rows(), s.cols()));
  CHECK(m.unmatched_gen.size() == s.rows() - m.pairs.size());
  CHECK(m.unmatched_tgt.size() == s.cols() - m.pairs.size());
  std::vector<int> gen_used(s.rows()), tgt_used(s.cols());
  double total = 0.0;
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    const auto [g, t] = m.pairs[k];
    ++gen_used[g];
    ++tgt_used[t];
    CHECK(m.similarity[k] == s(g, t));
    total += s(g, t);
    if (k > 0) CHECK(m.pairs[k - 1].first < g);
  }
  for (auto g : m.unmatched_gen) ++gen_used[g];
  for (auto t : m.unmatched_tgt) ++tgt_used[t];
  CHECK(std::all_of(gen_used.begin(), gen_used.end(), [](int u) { return u == 1; }));
  CHECK(std::all_of(tgt_used.begin(), tgt_used.end(), [](int u) { return u == 1; }));
  CHECK(m.total == doctest::Approx(total));
}

}  // namespace

TEST_SUITE("matching") {
  TEST_CASE("two by two example") {
    const SimilarityMatrix s(2, 2, {0.9, 0.1, 0.2, 0.8});
    const auto m = solve_assignment(s);
    CHECK(m.pairs == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
    CHECK(m.total == doctest::Approx(1.7));
    CHECK(m.target_of(1) == 1u);
    CHECK_FALSE(m.target_of(2).has_value());
  }

  TEST_CASE("permuted identical sets recover the permutation") {
    Rng rng(51);
    for (std::size_t n : {1u, 2u, 3u, 4u, 7u}) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      std::vector<oracle::Vec> tgt;
      for (std::size_t i = 0; i < n; ++i) {
        oracle::Vec v(n, 0.0);
        v[i] = 1.0;
        tgt.push_back(v);
      }
      SimilarityMatrix s(n, n);
      for (std::size_t g = 0; g < n; ++g)
        for (std::size_t t = 0; t < n; ++t) s(g, t) = oracle::cosine(tgt[perm[g]], tgt[t]);
      const auto m = solve_assignment(s);
      CHECK(m.total == doctest::Approx(static_cast<double>(n)));
      for (std::size_t g = 0; g < n; ++g) CHECK(m.target_of(g) == perm[g]);
    }
  }

  TEST_CASE("four by four equals the exhaustive oracle") {
    Rng rng(52);
    for (int trial = 0; trial < 500; ++trial) {
      const auto s = random_matrix(4, 4, rng);
      const auto m = solve_assignment(s);
      check_well_formed(m, s);
      CHECK(m.total == doctest::Approx(oracle::best_assignment_total(as_mat(s))).epsilon(1e-12));
    }
  }

  TEST_CASE("rectangular instances equal the exhaustive oracle") {
    Rng rng(53);
    for (int trial = 0; trial < 300; ++trial) {
      const auto s = random_matrix(1 + rng.uniform_index(6), 1 + rng.uniform_index(6), rng);
      const auto m = solve_assignment(s);
      check_well_formed(m, s);
      CHECK(m.total == doctest::Approx(oracle::best_assignment_total(as_mat(s))).epsilon(1e-12));
    }
  }

  TEST_CASE("optimal total never trails greedy") {
    Rng rng(54);
    for (int trial = 0; trial < 300; ++trial) {
      const auto s = random_matrix(1 + rng.uniform_index(12), 1 + rng.uniform_index(12), rng);
      const auto greedy = greedy_assignment(s);
      check_well_formed(greedy, s);
      CHECK(solve_assignment(s).total >= greedy.total - 1e-12);
    }
  }

  TEST_CASE("ties resolve the same way every time") {
    const SimilarityMatrix s(3, 3, 0.5);
    const auto a = solve_assignment(s);
    CHECK(a.pairs == solve_assignment(s).pairs);
    CHECK(a.total == doctest::Approx(1.5));
  }

  TEST_CASE("empty sides are rejected") {
    CHECK_THROWS_AS(solve_assignment(SimilarityMatrix(0, 3)), Error);
    CHECK_THROWS_AS(solve_assignment(SimilarityMatrix(2, 0)), Error);
  }
}

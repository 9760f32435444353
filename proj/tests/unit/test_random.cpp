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

#include "multiid/random.hpp"

using namespace multiid;

TEST_SUITE("random") {
  TEST_CASE("seeded streams repeat") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  }

  TEST_CASE("stage seeds differ and are stable") {
    CHECK(derive_seed(1, "pair") == derive_seed(1, "pair"));
    CHECK(derive_seed(1, "pair") != derive_seed(1, "split"));
    CHECK(derive_seed(1, "pair") != derive_seed(2, "pair"));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }

  TEST_CASE("draws stay in range") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
      CHECK(rng.uniform_index(7) < 7);
      const double u = rng.uniform01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }

  TEST_CASE("sampling without replacement is distinct") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const auto s = rng.sample_without_replacement(100, 30);
      CHECK(s.size() == 30);
      CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 30);
      CHECK(*std::max_element(s.begin(), s.end()) < 100);
    }
  }

  TEST_CASE("normal draws have unit variance") {
    Rng rng(13);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal();
      sum += x;
      sq += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01).scale(1.0));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
  }
}

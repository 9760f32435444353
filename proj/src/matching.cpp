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

#include "multiid/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multiid/error.hpp"

namespace multiid {

std::optional<std::size_t> MatchedFaces::target_of(std::size_t g) const {
  for (const auto& [gen, tgt] : pairs) {
    if (gen == g) return tgt;
  }
  return std::nullopt;
}

namespace {

MatchedFaces finalize(const SimilarityMatrix& s, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
  MatchedFaces out;
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> gen_used(s.rows(), false), tgt_used(s.cols(), false);
  for (const auto& [g, t] : pairs) {
    out.similarity.push_back(s(g, t));
    out.total += s(g, t);
    gen_used[g] = true;
    tgt_used[t] = true;
  }
  out.pairs = std::move(pairs);
  for (std::size_t g = 0; g < s.rows(); ++g) {
    if (!gen_used[g]) out.unmatched_gen.push_back(g);
  }
  for (std::size_t t = 0; t < s.cols(); ++t) {
    if (!tgt_used[t]) out.unmatched_tgt.push_back(t);
  }
  return out;
}

// Minimum-cost assignment of every row of an n x m cost matrix (n <= m).
// Returns column per row.
std::vector<std::size_t> hungarian(std::size_t n, std::size_t m, const std::vector<double>& cost) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) col_of_row[p[j] - 1] = j - 1;
  }
  return col_of_row;
}

void check(const SimilarityMatrix& s) {
  if (s.rows() == 0 || s.cols() == 0) throw Error(Errc::kEmptyInput, "matching needs at least one face per side");
  for (double v : s.values()) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "similarity matrix has a non-finite entry");
  }
}

}  // namespace

MatchedFaces solve_assignment(const SimilarityMatrix& s) {
  check(s);
  const bool transpose = s.rows() > s.cols();
  const std::size_t n = transpose ? s.cols() : s.rows();
  const std::size_t m = transpose ? s.rows() : s.cols();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = -(transpose ? s(j, i) : s(i, j));
  }
  const auto assignment = hungarian(n, m, cost);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    pairs.emplace_back(transpose ? assignment[i] : i, transpose ? i : assignment[i]);
  }
  return finalize(s, std::move(pairs));
}

MatchedFaces greedy_assignment(const SimilarityMatrix& s) {
  check(s);
  std::vector<bool> taken(s.cols(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t g = 0; g < s.rows() && pairs.size() < s.cols(); ++g) {
    std::size_t best = s.cols();
    for (std::size_t t = 0; t < s.cols(); ++t) {
      if (!taken[t] && (best == s.cols() || s(g, t) > s(g, best))) best = t;
    }
    taken[best] = true;
    pairs.emplace_back(g, best);
  }
  return finalize(s, std::move(pairs));
}

}  // namespace multiid

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

#include "multiid/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "multiid/error.hpp"

namespace multiid {

Embedding::Embedding(std::string backend_id, std::vector<float> values)
    : backend_id_(std::move(backend_id)), values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(Errc::kEmptyInput, "embedding for backend '" + backend_id_ + "' has dimension 0");
  }
  raw_norm_ = norm();
}

double Embedding::norm() const noexcept { return std::sqrt(squared_norm(values_)); }

bool Embedding::is_normalized(double tolerance) const noexcept {
  return std::abs(norm() - 1.0) <= tolerance;
}

Embedding Embedding::normalized() const {
  for (float v : values_) {
    if (!std::isfinite(v)) {
      throw Error(Errc::kNonFinite, "embedding for backend '" + backend_id_ + "' has a non-finite component");
    }
  }
  const double n = norm();
  if (n == 0.0) {
    throw Error(Errc::kZeroNorm, "embedding for backend '" + backend_id_ + "' has zero norm");
  }
  Embedding out = *this;
  if (std::abs(n - 1.0) > kPassthroughTolerance) {
    for (float& v : out.values_) v = static_cast<float>(v / n);
  }
  return out;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kDimensionMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double squared_norm(std::span<const float> a) noexcept {
  double acc = 0.0;
  for (float v : a) acc += static_cast<double>(v) * v;
  return acc;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  const double d = dot(a, b);
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) throw Error(Errc::kZeroNorm, "cosine of a zero vector");
  const double c = d / std::sqrt(na * nb);
  return std::clamp(c, -1.0, 1.0);
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.backend_id() != b.backend_id()) {
    throw Error(Errc::kBackendMismatch, "'" + a.backend_id() + "' vs '" + b.backend_id() + "'");
  }
  return cosine(a.values(), b.values());
}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(Errc::kShapeMismatch, "similarity matrix storage does not match its shape");
  }
}

SimilarityMatrix SimilarityMatrix::transposed() const {
  SimilarityMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

SimilarityMatrix similarity_matrix(std::span<const Embedding> gen, std::span<const Embedding> tgt) {
  if (gen.empty() || tgt.empty()) {
    throw Error(Errc::kEmptyInput, "similarity matrix needs at least one embedding per side");
  }
  SimilarityMatrix out(gen.size(), tgt.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) out(i, j) = cosine(gen[i], tgt[j]);
  }
  return out;
}

EmbeddingMatrix::EmbeddingMatrix(std::string backend_id, std::size_t dim)
    : backend_id_(std::move(backend_id)), dim_(dim) {
  if (dim_ == 0) throw Error(Errc::kInvalidArgument, "embedding matrix dimension must be > 0");
}

EmbeddingMatrix::EmbeddingMatrix(std::string backend_id, std::size_t dim, std::vector<float> data)
    : EmbeddingMatrix(std::move(backend_id), dim) {
  if (data.size() % dim_ != 0) {
    throw Error(Errc::kShapeMismatch, "matrix storage is not a multiple of the dimension");
  }
  data_ = std::move(data);
}

void EmbeddingMatrix::append(std::span<const float> values) {
  if (values.size() != dim_) {
    throw Error(Errc::kDimensionMismatch, "row of dimension " + std::to_string(values.size()) +
                                              " appended to matrix of dimension " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::append(const Embedding& embedding) {
  if (embedding.backend_id() != backend_id_) {
    throw Error(Errc::kBackendMismatch, "'" + embedding.backend_id() + "' appended to '" + backend_id_ + "' matrix");
  }
  append(embedding.values());
}

Embedding EmbeddingMatrix::embedding(std::size_t i) const {
  auto r = row(i);
  return Embedding(backend_id_, std::vector<float>(r.begin(), r.end()));
}

}  // namespace multiid

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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace multiid {

// Norm deviation accepted when validating stored unit vectors.
inline constexpr double kNormalizedTolerance = 1e-4;

// normalized() returns rows within this distance of unit norm unchanged.
inline constexpr double kPassthroughTolerance = 1e-7;

// A real vector produced by one embedding backend (face recognition, CLIP,
// ...). Values are single precision, matching the interchange blob.
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::string backend_id, std::vector<float> values);

  const std::string& backend_id() const noexcept { return backend_id_; }
  std::span<const float> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }

  // Norm of the current values, accumulated in double.
  double norm() const noexcept;

  // Norm observed when the vector entered the system. Kept for diagnostics
  // after normalization.
  double raw_norm() const noexcept { return raw_norm_; }
  void set_raw_norm(double value) noexcept { raw_norm_ = value; }

  bool is_normalized(double tolerance = kNormalizedTolerance) const noexcept;

  // Unit-norm copy; rows already within tolerance are returned unchanged.
  // Throws Errc::kZeroNorm or Errc::kNonFinite.
  Embedding normalized() const;

  bool operator==(const Embedding& other) const = default;

 private:
  std::string backend_id_;
  std::vector<float> values_;
  double raw_norm_ = 0.0;
};

double dot(std::span<const float> a, std::span<const float> b);
double squared_norm(std::span<const float> a) noexcept;

// Cosine of two raw vectors; throws on dimension mismatch or zero norm.
double cosine(std::span<const float> a, std::span<const float> b);

// Cosine of two embeddings; backend ids and dimensions must agree.
double cosine(const Embedding& a, const Embedding& b);

// Dense row-major matrix of cosine similarities.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> values() const noexcept { return values_; }

  SimilarityMatrix transposed() const;

  bool operator==(const SimilarityMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Entry (i, j) = cosine(gen[i], tgt[j]).
SimilarityMatrix similarity_matrix(std::span<const Embedding> gen, std::span<const Embedding> tgt);

// Contiguous row-major block of same-backend vectors; the layout retrieval
// and clustering kernels consume.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::string backend_id, std::size_t dim);
  EmbeddingMatrix(std::string backend_id, std::size_t dim, std::vector<float> data);

  const std::string& backend_id() const noexcept { return backend_id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<const float> data() const noexcept { return data_; }

  void reserve_rows(std::size_t n) { data_.reserve(n * dim_); }
  void append(std::span<const float> values);
  void append(const Embedding& embedding);

  Embedding embedding(std::size_t i) const;

 private:
  std::string backend_id_;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

}  // namespace multiid

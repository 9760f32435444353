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

#include <Eigen/Dense>

#include "multiid/store.hpp"

namespace multiid {

// Additive mask value standing in for -infinity. exp() of it underflows to
// exactly 0 in double precision; -infinity itself is accepted as well.
inline constexpr double kMaskedLogit = -1e30;

inline constexpr std::size_t kIdentityEmbeddingDim = 512;
inline constexpr std::size_t kFaceTokensPerIdentity = 8;
inline constexpr std::size_t kFaceTokenDim = 3072;

inline constexpr double kDefaultInjectionScale = 1.0;

// Masked cross-attention from hidden tokens to face tokens.
struct InjectionConfig {
  Eigen::MatrixXd hidden;       // n_h x d_model
  Eigen::MatrixXd face_tokens;  // n_e x d_model
  Eigen::MatrixXd w_q;          // d_model x d
  Eigen::MatrixXd w_k;          // d_model x d
  Eigen::MatrixXd w_v;          // d_model x d_model, so the update adds onto hidden
  Eigen::MatrixXd mask;         // n_h x n_e, entries 0 or masked; empty means unmasked
  double lambda_id = kDefaultInjectionScale;

  // Throws on inconsistent shapes, non-finite weights or mask entries that
  // are neither 0 nor masked.
  void validate() const;
};

bool is_masked(double mask_entry) noexcept;

// Row-wise softmax((H W_Q)(E W_K)^T / sqrt(d) + M). Masked entries are
// exactly 0 and a row with every entry masked is all zeros.
Eigen::MatrixXd attention_weights(const InjectionConfig& cfg);

// H + lambda_id * attention (E W_V). lambda_id = 0 returns H unchanged.
Eigen::MatrixXd inject(const InjectionConfig& cfg);

// Mask letting the tokens of face k attend only to hidden tokens whose
// patch center lies inside box k. Hidden tokens form a row-major
// grid_w x grid_h patch grid over an image_w x image_h image; face tokens are
// tokens_per_face consecutive columns per box.
Eigen::MatrixXd box_attention_mask(std::size_t grid_w, std::size_t grid_h, double image_w, double image_h,
                                   std::span<const BoundingBox> boxes,
                                   std::size_t tokens_per_face = kFaceTokensPerIdentity);

}  // namespace multiid

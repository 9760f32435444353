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

#include "multiid/injection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "multiid/error.hpp"

namespace multiid {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Error(Errc::kNonFinite, std::string(what) + " has non-finite entries");
}

}  // namespace

bool is_masked(double mask_entry) noexcept { return mask_entry <= kMaskedLogit; }

void InjectionConfig::validate() const {
  const auto d_model = hidden.cols();
  if (hidden.rows() == 0 || face_tokens.rows() == 0 || d_model == 0) {
    throw Error(Errc::kEmptyInput, "injection needs hidden and face tokens");
  }
  if (face_tokens.cols() != d_model) {
    throw Error(Errc::kShapeMismatch, "face tokens " + shape(face_tokens) + " do not match hidden " + shape(hidden));
  }
  if (w_q.rows() != d_model || w_k.rows() != d_model || w_q.cols() != w_k.cols() || w_q.cols() == 0) {
    throw Error(Errc::kShapeMismatch, "query/key projections " + shape(w_q) + ", " + shape(w_k) +
                                          " do not fit d_model " + std::to_string(d_model));
  }
  if (w_v.rows() != d_model || w_v.cols() != d_model) {
    throw Error(Errc::kShapeMismatch, "value projection " + shape(w_v) + " must be d_model x d_model");
  }
  if (mask.size() != 0 && (mask.rows() != hidden.rows() || mask.cols() != face_tokens.rows())) {
    throw Error(Errc::kShapeMismatch, "mask " + shape(mask) + " must be n_h x n_e");
  }
  require_finite(hidden, "hidden tokens");
  require_finite(face_tokens, "face tokens");
  require_finite(w_q, "W_Q");
  require_finite(w_k, "W_K");
  require_finite(w_v, "W_V");
  if (!std::isfinite(lambda_id)) throw Error(Errc::kNonFinite, "lambda_id is not finite");
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    const double v = mask.data()[i];
    if (v != 0.0 && !is_masked(v)) throw Error(Errc::kInvalidArgument, "mask entries must be 0 or masked");
  }
}

Eigen::MatrixXd attention_weights(const InjectionConfig& cfg) {
  cfg.validate();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.w_q.cols()));
  const Eigen::MatrixXd q = cfg.hidden * cfg.w_q;
  const Eigen::MatrixXd k = cfg.face_tokens * cfg.w_k;
  Eigen::MatrixXd logits = (q * k.transpose()) * scale;
  const bool masked = cfg.mask.size() != 0;
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (!masked || !is_masked(cfg.mask(i, j))) m = std::max(m, logits(i, j));
    }
    if (!std::isfinite(m)) continue;  // fully masked row
    double s = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      if (masked && is_masked(cfg.mask(i, j))) continue;
      weights(i, j) = std::exp(logits(i, j) - m);
      s += weights(i, j);
    }
    weights.row(i) /= s;
  }
  return weights;
}

Eigen::MatrixXd inject(const InjectionConfig& cfg) {
  if (cfg.lambda_id == 0.0) {
    cfg.validate();
    return cfg.hidden;
  }
  const Eigen::MatrixXd weights = attention_weights(cfg);
  const Eigen::MatrixXd values = cfg.face_tokens * cfg.w_v;
  return cfg.hidden + cfg.lambda_id * (weights * values);
}

Eigen::MatrixXd box_attention_mask(std::size_t grid_w, std::size_t grid_h, double image_w, double image_h,
                                   std::span<const BoundingBox> boxes, std::size_t tokens_per_face) {
  if (grid_w == 0 || grid_h == 0 || tokens_per_face == 0 || !(image_w > 0.0) || !(image_h > 0.0)) {
    throw Error(Errc::kInvalidArgument, "mask grid, image size and tokens per face must be positive");
  }
  const auto n_h = static_cast<Eigen::Index>(grid_w * grid_h);
  const auto n_e = static_cast<Eigen::Index>(boxes.size() * tokens_per_face);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Constant(n_h, n_e, kMaskedLogit);
  for (std::size_t gy = 0; gy < grid_h; ++gy) {
    for (std::size_t gx = 0; gx < grid_w; ++gx) {
      const Point2 center{(static_cast<double>(gx) + 0.5) * image_w / static_cast<double>(grid_w),
                          (static_cast<double>(gy) + 0.5) * image_h / static_cast<double>(grid_h)};
      const auto row = static_cast<Eigen::Index>(gy * grid_w + gx);
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        if (!boxes[b].contains(center)) continue;
        for (std::size_t k = 0; k < tokens_per_face; ++k) mask(row, static_cast<Eigen::Index>(b * tokens_per_face + k)) = 0.0;
      }
    }
  }
  return mask;
}

}  // namespace multiid

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
#include <limits>

#include "error_code.hpp"
#include "multiid/injection.hpp"
#include "multiid/random.hpp"
#include "oracles.hpp"

using namespace multiid;
using testing::error_code_of;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

oracle::Mat as_mat(const Eigen::MatrixXd& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

InjectionConfig random_config(Eigen::Index n_h, Eigen::Index n_e, Eigen::Index d_model, Eigen::Index d, Rng& rng) {
  InjectionConfig cfg;
  cfg.hidden = random_matrix(n_h, d_model, rng);
  cfg.face_tokens = random_matrix(n_e, d_model, rng);
  cfg.w_q = random_matrix(d_model, d, rng, 0.5);
  cfg.w_k = random_matrix(d_model, d, rng, 0.5);
  cfg.w_v = random_matrix(d_model, d_model, rng, 0.5);
  return cfg;
}

Eigen::MatrixXd random_mask(Eigen::Index n_h, Eigen::Index n_e, Rng& rng) {
  Eigen::MatrixXd mask(n_h, n_e);
  for (Eigen::Index r = 0; r < n_h; ++r)
    for (Eigen::Index c = 0; c < n_e; ++c) mask(r, c) = rng.bernoulli(0.4) ? kMaskedLogit : 0.0;
  return mask;
}

}  // namespace

TEST_SUITE("injection") {
  TEST_CASE("zero scale leaves hidden states unchanged") {
    Rng rng(91);
    auto cfg = random_config(5, 8, 6, 3, rng);
    cfg.lambda_id = 0.0;
    CHECK(inject(cfg) == cfg.hidden);
    cfg.mask = random_mask(5, 8, rng);
    CHECK(inject(cfg) == cfg.hidden);
  }

  TEST_CASE("single open token takes all the weight") {
    Rng rng(92);
    auto cfg = random_config(4, 8, 5, 3, rng);
    cfg.lambda_id = 0.7;
    cfg.mask = Eigen::MatrixXd::Constant(4, 8, kMaskedLogit);
    for (Eigen::Index r = 0; r < 4; ++r) cfg.mask(r, (2 * r + 1) % 8) = 0.0;
    const auto w = attention_weights(cfg);
    const Eigen::MatrixXd values = cfg.face_tokens * cfg.w_v;
    const auto out = inject(cfg);
    for (Eigen::Index r = 0; r < 4; ++r) {
      const Eigen::Index open = (2 * r + 1) % 8;
      CHECK(w(r, open) == 1.0);
      CHECK(w.row(r).sum() == 1.0);
      for (Eigen::Index c = 0; c < 5; ++c)
        CHECK(out(r, c) == doctest::Approx(cfg.hidden(r, c) + 0.7 * values(open, c)).epsilon(1e-12));
    }
  }

  TEST_CASE("small configurations equal the loop oracle") {
    Rng rng(93);
    for (int trial = 0; trial < 50; ++trial) {
      auto cfg = random_config(4, 8, 3 + static_cast<Eigen::Index>(rng.uniform_index(4)), 3, rng);
      cfg.lambda_id = rng.uniform(0.1, 2.0);
      const bool masked = trial % 2 == 1;
      if (masked) cfg.mask = random_mask(4, 8, rng);
      const auto mask = as_mat(cfg.mask);
      const auto expected = oracle::attention(as_mat(cfg.hidden), as_mat(cfg.face_tokens), as_mat(cfg.w_q),
                                              as_mat(cfg.w_k), as_mat(cfg.w_v), masked ? &mask : nullptr, cfg.lambda_id);
      const auto out = inject(cfg);
      for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < out.cols(); ++c) CHECK(std::abs(out(r, c) - expected[r][c]) <= 1e-6);
    }
  }

  TEST_CASE("rows sum to one and masked entries are exactly zero") {
    Rng rng(94);
    for (int trial = 0; trial < 50; ++trial) {
      auto cfg = random_config(6, 16, 8, 4, rng);
      cfg.mask = random_mask(6, 16, rng);
      if (trial % 3 == 0) cfg.mask(0, 0) = -std::numeric_limits<double>::infinity();
      const auto w = attention_weights(cfg);
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        bool any_open = false;
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          if (is_masked(cfg.mask(r, c))) {
            CHECK(w(r, c) == 0.0);
          } else {
            any_open = true;
          }
        }
        CHECK(std::abs(w.row(r).sum() - (any_open ? 1.0 : 0.0)) <= 1e-6);
      }
    }
  }

  TEST_CASE("fully masked row gets no update") {
    Rng rng(95);
    auto cfg = random_config(3, 8, 4, 2, rng);
    cfg.mask = Eigen::MatrixXd::Zero(3, 8);
    cfg.mask.row(1).setConstant(kMaskedLogit);
    const auto out = inject(cfg);
    CHECK(out.row(1) == cfg.hidden.row(1));
    CHECK(out.allFinite());
    CHECK(out.row(0) != cfg.hidden.row(0));
  }

  TEST_CASE("face token shape keeps the hidden shape") {
    Rng rng(96);
    auto cfg = random_config(16, static_cast<Eigen::Index>(kFaceTokensPerIdentity), 64, 8, rng);
    CHECK(inject(cfg).rows() == 16);
    CHECK(inject(cfg).cols() == 64);

    InjectionConfig wide;
    wide.hidden = random_matrix(4, static_cast<Eigen::Index>(kFaceTokenDim), rng, 0.01);
    wide.face_tokens = random_matrix(static_cast<Eigen::Index>(kFaceTokensPerIdentity),
                                     static_cast<Eigen::Index>(kFaceTokenDim), rng, 0.01);
    wide.w_q = random_matrix(static_cast<Eigen::Index>(kFaceTokenDim), 16, rng, 0.01);
    wide.w_k = random_matrix(static_cast<Eigen::Index>(kFaceTokenDim), 16, rng, 0.01);
    wide.w_v = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(kFaceTokenDim), static_cast<Eigen::Index>(kFaceTokenDim));
    const auto out = inject(wide);
    CHECK(out.rows() == 4);
    CHECK(out.cols() == static_cast<Eigen::Index>(kFaceTokenDim));
    CHECK(out.allFinite());
  }

  TEST_CASE("invalid configurations") {
    Rng rng(97);
    auto cfg = random_config(3, 4, 5, 2, rng);
    auto bad = cfg;
    bad.w_k = random_matrix(5, 3, rng);
    CHECK(error_code_of([&] { (void)inject(bad); }) == Errc::kShapeMismatch);
    bad = cfg;
    bad.w_v = random_matrix(5, 4, rng);
    CHECK(error_code_of([&] { (void)inject(bad); }) == Errc::kShapeMismatch);
    bad = cfg;
    bad.mask = Eigen::MatrixXd::Zero(2, 4);
    CHECK(error_code_of([&] { (void)inject(bad); }) == Errc::kShapeMismatch);
    bad = cfg;
    bad.mask = Eigen::MatrixXd::Constant(3, 4, 0.5);
    CHECK(error_code_of([&] { (void)inject(bad); }).has_value());
    bad = cfg;
    bad.w_q(0, 0) = std::nan("");
    CHECK(error_code_of([&] { (void)inject(bad); }) == Errc::kNonFinite);
  }

  TEST_CASE("box mask opens the tokens of the covering face") {
    const BoundingBox boxes[] = {{0, 0, 50, 100}, {50, 0, 50, 50}};
    const auto mask = box_attention_mask(4, 2, 100, 100, boxes, 2);
    REQUIRE(mask.rows() == 8);
    REQUIRE(mask.cols() == 4);
    // patch centers x: 12.5 37.5 62.5 87.5, y: 25 75
    for (Eigen::Index row = 0; row < 8; ++row) {
      const Eigen::Index gx = row % 4, gy = row / 4;
      const bool in_first = gx < 2;
      const bool in_second = gx >= 2 && gy == 0;
      CHECK(is_masked(mask(row, 0)) == !in_first);
      CHECK(is_masked(mask(row, 1)) == !in_first);
      CHECK(is_masked(mask(row, 2)) == !in_second);
      CHECK(is_masked(mask(row, 3)) == !in_second);
    }
    CHECK(error_code_of([&] { (void)box_attention_mask(0, 2, 100, 100, boxes); }) == Errc::kInvalidArgument);
  }
}

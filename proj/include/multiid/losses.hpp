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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multiid/alignment.hpp"
#include "multiid/embedding.hpp"

namespace multiid {

// ---------------------------------------------------------------------------
// Flow matching
// ---------------------------------------------------------------------------

struct FlowSample {
  std::vector<double> x0;          // noise
  std::vector<double> x1;          // data
  double t = 0.0;
  std::string condition;           // opaque handle, carried through
  std::vector<double> prediction;  // model velocity at x_t

  // Throws on shape mismatch, t outside [0, 1] or non-finite values.
  void validate() const;
};

enum class FlowReduction { kSum, kMean };

std::string_view to_string(FlowReduction r) noexcept;

// (1 - t) x0 + t x1
std::vector<double> interpolate(std::span<const double> x0, std::span<const double> x1, double t);

// |prediction - (x1 - x0)|^2, summed or averaged over dimensions.
double flow_loss(const FlowSample& sample, FlowReduction reduction = FlowReduction::kSum);

// Gradient with respect to prediction.
std::vector<double> flow_loss_gradient(const FlowSample& sample, FlowReduction reduction = FlowReduction::kSum);

// ---------------------------------------------------------------------------
// Identity loss
// ---------------------------------------------------------------------------

// 1 - cos(g, t) in [0, 2]; throws on backend mismatch.
double id_loss(const Embedding& g, const Embedding& t);

// Same on raw vectors; g need not be unit length.
double id_loss(std::span<const double> g, std::span<const double> t);

// Gradient with respect to the unnormalized g, including the normalization
// Jacobian: -(t_hat - cos * g_hat) / |g|.
std::vector<double> id_loss_gradient(std::span<const double> g, std::span<const double> t);

// Supplies embeddings of aligned face crops. Implementations wrap an
// external recognizer; the transform maps image pixels onto the crop
// template.
class EmbedProvider {
 public:
  virtual ~EmbedProvider() = default;
  virtual Embedding embed_aligned(const std::string& image_handle, const SimilarityTransform& transform) = 0;
  // Landmarks detected on an image, if the detector finds a face.
  virtual std::optional<Landmarks5> detect_landmarks(const std::string& image_handle) = 0;
};

struct AlignedEmbedding {
  Embedding embedding;
  SimilarityTransform transform;
};

// Crops the generated image with the transform estimated from the ground
// truth landmarks. Nothing is detected on the generated image.
AlignedEmbedding gt_aligned_embed(const std::string& generated_image, const Landmarks5& gt_landmarks,
                                  const CropTemplate& crop, EmbedProvider& provider);

// Baseline that detects landmarks on the generated image; throws
// Errc::kNotFound when detection fails.
AlignedEmbedding detected_aligned_embed(const std::string& generated_image, const CropTemplate& crop,
                                        EmbedProvider& provider);

// id_loss of the GT-aligned generated crop against the ground-truth face.
double gt_aligned_id_loss(const std::string& generated_image, const Landmarks5& gt_landmarks,
                          const Embedding& gt_embedding, const CropTemplate& crop, EmbedProvider& provider);

// ---------------------------------------------------------------------------
// Contrastive loss
// ---------------------------------------------------------------------------

enum class InfoNceDenominator {
  kWithPositive,   // exp(pos) + sum exp(neg); loss >= 0
  kNegativesOnly,  // sum exp(neg) only; may go negative
};

inline constexpr double kDefaultTemperature = 0.07;

struct ContrastiveInstance {
  std::vector<double> g;  // generated embedding
  std::vector<double> r;  // positive reference
  std::vector<std::vector<double>> negatives;
  double tau = kDefaultTemperature;
  InfoNceDenominator denominator = InfoNceDenominator::kWithPositive;

  void validate() const;
};

ContrastiveInstance make_contrastive_instance(const Embedding& g, const Embedding& r,
                                              std::span<const Embedding> negatives,
                                              double tau = kDefaultTemperature);

double contrastive_loss(const ContrastiveInstance& inst);

// Gradient with respect to the unnormalized g.
std::vector<double> contrastive_loss_gradient(const ContrastiveInstance& inst);

// ---------------------------------------------------------------------------
// Total
// ---------------------------------------------------------------------------

inline constexpr double kDefaultIdWeight = 0.1;
inline constexpr double kDefaultContrastiveWeight = 0.1;

double total_loss(double flow, double id, double contrastive, double id_weight = kDefaultIdWeight,
                  double contrastive_weight = kDefaultContrastiveWeight);

}  // namespace multiid

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

#include "multiid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multiid/error.hpp"

namespace multiid {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(Errc::kNonFinite, std::string(what) + " has non-finite entries");
  }
}

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw Error(Errc::kShapeMismatch, std::string(what) + ": length mismatch");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) {
  const double n = std::sqrt(dot(a, a));
  if (n == 0.0) throw Error(Errc::kZeroNorm, "zero-norm vector");
  return n;
}

double cos_of(std::span<const double> a, std::span<const double> b) { return dot(a, b) / (norm(a) * norm(b)); }

// Adds w * d cos(g, x) / d g to grad.
void add_cosine_gradient(std::span<const double> g, double g_norm, std::span<const double> x, double w,
                         std::vector<double>& grad) {
  const double x_norm = norm(x);
  const double c = dot(g, x) / (g_norm * x_norm);
  for (std::size_t i = 0; i < g.size(); ++i) {
    grad[i] += w * (x[i] / x_norm - c * g[i] / g_norm) / g_norm;
  }
}

std::vector<double> to_doubles(const Embedding& e) { return {e.values().begin(), e.values().end()}; }

}  // namespace

void FlowSample::validate() const {
  require_same_size(x0, x1, "flow sample x0/x1");
  require_same_size(x0, prediction, "flow sample prediction");
  if (x0.empty()) throw Error(Errc::kEmptyInput, "flow sample is empty");
  if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::kInvalidArgument, "flow sample t must lie in [0, 1]");
  require_finite(x0, "x0");
  require_finite(x1, "x1");
  require_finite(prediction, "prediction");
}

std::string_view to_string(FlowReduction r) noexcept { return r == FlowReduction::kSum ? "sum" : "mean"; }

std::vector<double> interpolate(std::span<const double> x0, std::span<const double> x1, double t) {
  require_same_size(x0, x1, "interpolate");
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = (1.0 - t) * x0[i] + t * x1[i];
  return out;
}

double flow_loss(const FlowSample& s, FlowReduction reduction) {
  s.validate();
  double acc = 0.0;
  for (std::size_t i = 0; i < s.x0.size(); ++i) {
    const double d = s.prediction[i] - (s.x1[i] - s.x0[i]);
    acc += d * d;
  }
  return reduction == FlowReduction::kSum ? acc : acc / static_cast<double>(s.x0.size());
}

std::vector<double> flow_loss_gradient(const FlowSample& s, FlowReduction reduction) {
  s.validate();
  const double scale = reduction == FlowReduction::kSum ? 2.0 : 2.0 / static_cast<double>(s.x0.size());
  std::vector<double> grad(s.x0.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = scale * (s.prediction[i] - (s.x1[i] - s.x0[i]));
  return grad;
}

double id_loss(const Embedding& g, const Embedding& t) { return 1.0 - cosine(g, t); }

double id_loss(std::span<const double> g, std::span<const double> t) {
  require_same_size(g, t, "id_loss");
  require_finite(g, "g");
  require_finite(t, "t");
  return 1.0 - std::clamp(cos_of(g, t), -1.0, 1.0);
}

std::vector<double> id_loss_gradient(std::span<const double> g, std::span<const double> t) {
  require_same_size(g, t, "id_loss");
  std::vector<double> grad(g.size(), 0.0);
  add_cosine_gradient(g, norm(g), t, -1.0, grad);
  return grad;
}

AlignedEmbedding gt_aligned_embed(const std::string& generated_image, const Landmarks5& gt_landmarks,
                                  const CropTemplate& crop, EmbedProvider& provider) {
  gt_landmarks.validate();
  const SimilarityTransform transform = estimate_alignment(gt_landmarks, crop.landmarks).transform;
  return {provider.embed_aligned(generated_image, transform), transform};
}

AlignedEmbedding detected_aligned_embed(const std::string& generated_image, const CropTemplate& crop,
                                        EmbedProvider& provider) {
  const auto detected = provider.detect_landmarks(generated_image);
  if (!detected) throw Error(Errc::kNotFound, "no face detected in '" + generated_image + "'");
  const SimilarityTransform transform = estimate_alignment(*detected, crop.landmarks).transform;
  return {provider.embed_aligned(generated_image, transform), transform};
}

double gt_aligned_id_loss(const std::string& generated_image, const Landmarks5& gt_landmarks,
                          const Embedding& gt_embedding, const CropTemplate& crop, EmbedProvider& provider) {
  return id_loss(gt_aligned_embed(generated_image, gt_landmarks, crop, provider).embedding, gt_embedding);
}

void ContrastiveInstance::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(Errc::kInvalidArgument, "temperature must be positive");
  if (negatives.empty()) throw Error(Errc::kEmptyInput, "contrastive loss needs at least one negative");
  require_same_size(g, r, "contrastive g/r");
  require_finite(g, "g");
  require_finite(r, "r");
  for (const auto& n : negatives) {
    require_same_size(g, n, "contrastive negative");
    require_finite(n, "negative");
  }
}

ContrastiveInstance make_contrastive_instance(const Embedding& g, const Embedding& r,
                                              std::span<const Embedding> negatives, double tau) {
  ContrastiveInstance inst;
  if (r.backend_id() != g.backend_id()) throw Error(Errc::kBackendMismatch, "reference backend differs");
  inst.g = to_doubles(g);
  inst.r = to_doubles(r);
  for (const auto& n : negatives) {
    if (n.backend_id() != g.backend_id()) throw Error(Errc::kBackendMismatch, "negative backend differs");
    inst.negatives.push_back(to_doubles(n));
  }
  inst.tau = tau;
  return inst;
}

namespace {

struct Logits {
  double positive = 0.0;
  std::vector<double> negatives;
  double lse = 0.0;  // log-sum-exp over the denominator terms
};

Logits logits_of(const ContrastiveInstance& inst) {
  inst.validate();
  Logits l;
  l.positive = cos_of(inst.g, inst.r) / inst.tau;
  l.negatives.reserve(inst.negatives.size());
  for (const auto& n : inst.negatives) l.negatives.push_back(cos_of(inst.g, n) / inst.tau);
  const bool with_positive = inst.denominator == InfoNceDenominator::kWithPositive;
  double m = *std::max_element(l.negatives.begin(), l.negatives.end());
  if (with_positive) m = std::max(m, l.positive);
  double s = with_positive ? std::exp(l.positive - m) : 0.0;
  for (double v : l.negatives) s += std::exp(v - m);
  l.lse = m + std::log(s);
  return l;
}

}  // namespace

double contrastive_loss(const ContrastiveInstance& inst) {
  const Logits l = logits_of(inst);
  const double loss = l.lse - l.positive;
  return inst.denominator == InfoNceDenominator::kWithPositive ? std::max(loss, 0.0) : loss;
}

std::vector<double> contrastive_loss_gradient(const ContrastiveInstance& inst) {
  const Logits l = logits_of(inst);
  const bool with_positive = inst.denominator == InfoNceDenominator::kWithPositive;
  const double g_norm = norm(inst.g);
  std::vector<double> grad(inst.g.size(), 0.0);
  const double pos_weight = (with_positive ? std::exp(l.positive - l.lse) : 0.0) - 1.0;
  add_cosine_gradient(inst.g, g_norm, inst.r, pos_weight / inst.tau, grad);
  for (std::size_t j = 0; j < inst.negatives.size(); ++j) {
    add_cosine_gradient(inst.g, g_norm, inst.negatives[j], std::exp(l.negatives[j] - l.lse) / inst.tau, grad);
  }
  return grad;
}

double total_loss(double flow, double id, double contrastive, double id_weight, double contrastive_weight) {
  if (!std::isfinite(flow) || !std::isfinite(id) || !std::isfinite(contrastive)) {
    throw Error(Errc::kNonFinite, "loss components must be finite");
  }
  return flow + id_weight * id + contrastive_weight * contrastive;
}

}  // namespace multiid

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
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "multiid/losses.hpp"

namespace multiid {

inline constexpr double kDefaultGradStep = 1e-4;

// Components whose analytic and numeric gradients are both below this
// magnitude are compared on an absolute scale.
inline constexpr double kGradMagnitudeFloor = 1e-3;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_component = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Central differences of f around x with step eps.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double eps = kDefaultGradStep);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, kGradMagnitudeFloor)
GradCheckResult compare_gradients(std::vector<double> analytic, std::vector<double> numeric);

struct FlowLossInput {
  FlowSample sample;
  FlowReduction reduction = FlowReduction::kSum;
};

struct IdLossInput {
  std::vector<double> g;
  std::vector<double> t;
};

using LossInput = std::variant<FlowLossInput, IdLossInput, ContrastiveInstance>;

std::string loss_name(const LossInput& input);

// Differentiates flow_loss in the prediction and the other losses in g.
GradCheckResult grad_check(const LossInput& input, double eps = kDefaultGradStep);

}  // namespace multiid

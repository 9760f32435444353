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

#include "multiid/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "multiid/error.hpp"

namespace multiid {

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw Error(Errc::kInvalidArgument, "finite-difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

GradCheckResult compare_gradients(std::vector<double> analytic, std::vector<double> numeric) {
  if (analytic.size() != numeric.size()) throw Error(Errc::kShapeMismatch, "gradient lengths differ");
  GradCheckResult out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), kGradMagnitudeFloor});
    if (!(err <= out.max_relative_error)) {
      out.max_relative_error = err;
      out.worst_component = i;
    }
  }
  out.analytic = std::move(analytic);
  out.numeric = std::move(numeric);
  return out;
}

std::string loss_name(const LossInput& input) {
  struct Visitor {
    std::string operator()(const FlowLossInput&) const { return "flow_loss"; }
    std::string operator()(const IdLossInput&) const { return "id_loss"; }
    std::string operator()(const ContrastiveInstance&) const { return "contrastive_loss"; }
  };
  return std::visit(Visitor{}, input);
}

GradCheckResult grad_check(const LossInput& input, double eps) {
  struct Visitor {
    double eps;
    GradCheckResult operator()(const FlowLossInput& in) const {
      FlowSample probe = in.sample;
      auto f = [&](std::span<const double> p) {
        probe.prediction.assign(p.begin(), p.end());
        return flow_loss(probe, in.reduction);
      };
      return compare_gradients(flow_loss_gradient(in.sample, in.reduction),
                               numeric_gradient(f, in.sample.prediction, eps));
    }
    GradCheckResult operator()(const IdLossInput& in) const {
      auto f = [&](std::span<const double> g) { return id_loss(g, in.t); };
      return compare_gradients(id_loss_gradient(in.g, in.t), numeric_gradient(f, in.g, eps));
    }
    GradCheckResult operator()(const ContrastiveInstance& in) const {
      ContrastiveInstance probe = in;
      auto f = [&](std::span<const double> g) {
        probe.g.assign(g.begin(), g.end());
        return contrastive_loss(probe);
      };
      return compare_gradients(contrastive_loss_gradient(in), numeric_gradient(f, in.g, eps));
    }
  };
  return std::visit(Visitor{eps}, input);
}

}  // namespace multiid

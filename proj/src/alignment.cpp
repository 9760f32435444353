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

#include "multiid/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "multiid/error.hpp"

namespace multiid {
namespace {

using Complex = std::complex<double>;

// Ratio of the scatter-matrix eigenvalues below which the point set is
// considered to lie on a line.
constexpr double kCollinearRatio = 1e-10;

void check_spread(const Landmarks5& lm, const char* which) {
  double mx = 0.0, my = 0.0;
  for (const auto& p : lm.points) {
    mx += p.x;
    my += p.y;
  }
  mx /= 5.0;
  my /= 5.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : lm.points) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  const double trace = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(0.0, trace * trace / 4.0 - det));
  const double largest = trace / 2.0 + disc;
  const double smallest = trace / 2.0 - disc;
  if (!(largest > 0.0)) {
    throw Error(Errc::kDegenerateLandmarks, std::string(which) + " landmarks coincide");
  }
  if (smallest <= kCollinearRatio * largest) {
    throw Error(Errc::kDegenerateLandmarks, std::string(which) + " landmarks are collinear");
  }
}

}  // namespace

bool Landmarks5::all_finite() const noexcept {
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  return true;
}

void Landmarks5::validate() const {
  if (!all_finite()) throw Error(Errc::kDegenerateLandmarks, "landmarks contain a non-finite coordinate");
  check_spread(*this, "input");
}

SimilarityTransform SimilarityTransform::from_parts(double scale, double rotation_rad, double tx, double ty) {
  return {scale * std::cos(rotation_rad), scale * std::sin(rotation_rad), tx, ty};
}

double SimilarityTransform::scale() const noexcept { return std::hypot(a, b); }

double SimilarityTransform::rotation() const noexcept { return std::atan2(b, a); }

Point2 SimilarityTransform::apply(Point2 p) const noexcept {
  return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
}

AlignmentResult estimate_alignment(const Landmarks5& src, const Landmarks5& dst) {
  if (!src.all_finite() || !dst.all_finite()) {
    throw Error(Errc::kDegenerateLandmarks, "landmarks contain a non-finite coordinate");
  }
  check_spread(src, "source");
  check_spread(dst, "destination");

  // Treating points as complex numbers, a similarity without reflection is
  // z -> s*z + t with complex s. The least-squares s over centred points is
  // sum(conj(src) * dst) / sum(|src|^2).
  Complex src_mean, dst_mean;
  for (std::size_t k = 0; k < 5; ++k) {
    src_mean += Complex(src.points[k].x, src.points[k].y);
    dst_mean += Complex(dst.points[k].x, dst.points[k].y);
  }
  src_mean /= 5.0;
  dst_mean /= 5.0;

  Complex num;
  double den = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    const Complex s = Complex(src.points[k].x, src.points[k].y) - src_mean;
    const Complex d = Complex(dst.points[k].x, dst.points[k].y) - dst_mean;
    num += std::conj(s) * d;
    den += std::norm(s);
  }
  const Complex s = num / den;
  if (std::abs(s) <= 1e-12 * std::sqrt(den)) {
    throw Error(Errc::kDegenerateLandmarks, "no orientation-preserving alignment exists");
  }
  const Complex t = dst_mean - s * src_mean;

  AlignmentResult out;
  out.transform = {s.real(), s.imag(), t.real(), t.imag()};
  double sq = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    const Point2 p = out.transform.apply(src.points[k]);
    sq += (p.x - dst.points[k].x) * (p.x - dst.points[k].x) + (p.y - dst.points[k].y) * (p.y - dst.points[k].y);
  }
  out.rms_residual = std::sqrt(sq / 5.0);
  return out;
}

CropTemplate parse_crop_template(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, std::string("crop template: ") + e.what());
  }
  CropTemplate out;
  try {
    out.name = doc.value("name", "");
    out.width = doc.at("width").get<int>();
    out.height = doc.at("height").get<int>();
    const auto& pts = doc.at("points");
    if (!pts.is_array() || pts.size() != 5) throw Error(Errc::kParse, "crop template needs exactly 5 points");
    for (std::size_t k = 0; k < 5; ++k) {
      out.landmarks.points[k] = {pts[k].at(0).get<double>(), pts[k].at(1).get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, std::string("crop template: ") + e.what());
  }
  if (out.width <= 0 || out.height <= 0) throw Error(Errc::kParse, "crop template size must be positive");
  out.landmarks.validate();
  return out;
}

CropTemplate load_crop_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open crop template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_crop_template(ss.str());
}

}  // namespace multiid

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

#include <array>
#include <filesystem>
#include <string>

namespace multiid {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

// Five facial landmarks in pixel coordinates, ordered left eye, right eye,
// nose tip, left mouth corner, right mouth corner.
struct Landmarks5 {
  std::array<Point2, 5> points{};

  bool all_finite() const noexcept;

  // Throws Errc::kDegenerateLandmarks when non-finite, coincident or
  // collinear.
  void validate() const;

  bool operator==(const Landmarks5&) const = default;
};

// p -> [a -b; b a] p + t. Uniform scale sqrt(a^2 + b^2), rotation
// atan2(b, a); the determinant a^2 + b^2 is never negative, so the transform
// can not mirror.
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  static SimilarityTransform from_parts(double scale, double rotation_rad, double tx, double ty);

  double scale() const noexcept;
  double rotation() const noexcept;
  double determinant() const noexcept { return a * a + b * b; }
  Point2 apply(Point2 p) const noexcept;

  // Row-major 2x3 affine matrix, the layout image warpers expect.
  std::array<double, 6> affine() const noexcept { return {a, -b, tx, b, a, ty}; }

  bool operator==(const SimilarityTransform&) const = default;
};

struct AlignmentResult {
  SimilarityTransform transform;
  // Root-mean-square landmark distance after applying the transform.
  double rms_residual = 0.0;
};

// Least-squares similarity transform mapping src onto dst (uniform scale,
// rotation, translation; reflections excluded).
AlignmentResult estimate_alignment(const Landmarks5& src, const Landmarks5& dst);

// Canonical destination landmarks of an aligned face crop.
struct CropTemplate {
  std::string name;
  int width = 0;
  int height = 0;
  Landmarks5 landmarks;
};

CropTemplate load_crop_template(const std::filesystem::path& path);
CropTemplate parse_crop_template(const std::string& json_text);

}  // namespace multiid

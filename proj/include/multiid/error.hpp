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

#include <stdexcept>
#include <string>
#include <string_view>

namespace multiid {

// Every failure the library reports carries one of these codes, so callers
// (notably the CLI) can map them onto exit statuses without parsing text.
enum class Errc {
  kInvalidArgument,
  kDimensionMismatch,
  kBackendMismatch,
  kZeroNorm,
  kNonFinite,
  kEmptyInput,
  kDegenerateLandmarks,
  kShapeMismatch,
  kBadMagic,
  kVersionMismatch,
  kCountMismatch,
  kDuplicateId,
  kMissingBackend,
  kParse,
  kIo,
  kNotFound,
  kEmptyBank,
  kInsufficientIdentities,
  kConfig,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// True for every code describing bad or missing input data (everything but
// configuration errors).
bool is_data_error(Errc code) noexcept;

}  // namespace multiid

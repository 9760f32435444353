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

#include "multiid/error.hpp"

namespace multiid {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kDimensionMismatch: return "dimension-mismatch";
    case Errc::kBackendMismatch: return "backend-mismatch";
    case Errc::kZeroNorm: return "zero-norm";
    case Errc::kNonFinite: return "non-finite-value";
    case Errc::kEmptyInput: return "empty-input";
    case Errc::kDegenerateLandmarks: return "degenerate-landmarks";
    case Errc::kShapeMismatch: return "shape-mismatch";
    case Errc::kBadMagic: return "bad-magic";
    case Errc::kVersionMismatch: return "version-mismatch";
    case Errc::kCountMismatch: return "count-mismatch";
    case Errc::kDuplicateId: return "duplicate-id";
    case Errc::kMissingBackend: return "missing-backend";
    case Errc::kParse: return "parse-error";
    case Errc::kIo: return "io-error";
    case Errc::kNotFound: return "not-found";
    case Errc::kEmptyBank: return "empty-bank";
    case Errc::kInsufficientIdentities: return "insufficient-identities";
    case Errc::kConfig: return "config-error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool is_data_error(Errc code) noexcept {
  switch (code) {
    case Errc::kInvalidArgument:
    case Errc::kDegenerateLandmarks:
    case Errc::kShapeMismatch:
    case Errc::kBadMagic:
    case Errc::kVersionMismatch:
    case Errc::kCountMismatch:
    case Errc::kDuplicateId:
    case Errc::kMissingBackend:
    case Errc::kParse:
    case Errc::kIo:
    case Errc::kNotFound:
    case Errc::kNonFinite:
    case Errc::kZeroNorm:
    case Errc::kDimensionMismatch:
    case Errc::kBackendMismatch:
    case Errc::kEmptyBank:
    case Errc::kEmptyInput:
    case Errc::kInsufficientIdentities:
      return true;
    default:
      return false;
  }
}

}  // namespace multiid

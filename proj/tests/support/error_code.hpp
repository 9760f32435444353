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

#include <doctest.h>

#include <functional>
#include <optional>

#include "multiid/error.hpp"

namespace testing {

// Code of the multiid::Error thrown by fn; empty when fn returns normally.
inline std::optional<multiid::Errc> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const multiid::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing

// Copyright 2026 The pbd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Test-only oracles. Nothing here calls into the code paths it checks.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include <boost/math/distributions/chi_squared.hpp>

#include "pbd/common/error.hpp"

namespace pbd::testing {

// Pearson chi-square goodness-of-fit of byte values against the uniform
// distribution on 256 symbols. Returns the upper-tail p-value.
inline double chi_square_uniform_bytes(std::span<const std::uint8_t> samples) {
  std::array<double, 256> counts{};
  for (std::uint8_t b : samples) counts[b] += 1.0;
  const double expected = static_cast<double>(samples.size()) / 256.0;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(255.0);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Runs `fn` and returns the ErrorCode it threw, or nullopt if it returned.
inline std::optional<ErrorCode> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace pbd::testing
